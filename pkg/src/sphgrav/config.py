"""TOML run configuration with ``SPHGRAV_`` environment overrides.

Example::

    N = 3
    beta = 3.0
    l = 0.02
    T = 0.5
    L_max = 10.0
    snapshot_times = [0.25, 0.5]

    [initial]
    kind = "gaussian_bump"   # floor | gaussian_bump | table
    amplitude = 0.5
    center = 3.0
    width = 1.0
    velocity = 0.0

    [monitor]
    tolerance = 1e-9

Top-level keys can be overridden from the environment, e.g.
``SPHGRAV_L=0.01`` or ``SPHGRAV_SNAPSHOT_TIMES="[0.1, 0.2]"``; values are
parsed as TOML literals and fall back to plain strings.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .scheme import SchemeConfig

__all__ = ["RunConfig", "load_config", "parse_config", "ENV_PREFIX", "build_initial"]

ENV_PREFIX = "SPHGRAV_"

_TOP_KEYS = {"N": int, "beta": float, "l": float, "T": float, "L_max": float,
             "seed": int, "snapshot_times": list}
_MONITOR_KEYS = {"C": float, "alpha0": float, "tolerance": float, "abort": bool,
                 "spot_check_fraction": float}
_DIAG_KEYS = {"consistency": bool, "trace_eps": list, "entropy_tol": float}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: the scheme parameters plus output settings."""

    scheme: SchemeConfig
    initial: dict
    raw: dict
    consistency: bool = True
    trace_eps: tuple[float, ...] | None = None
    entropy_tol: float = 1e-8
    source_path: str | None = None

    def with_level(self, l: float) -> "RunConfig":
        raw = dict(self.raw)
        raw["l"] = l
        return parse_config(raw, base_dir=Path(self.source_path).parent if self.source_path else None,
                            source_path=self.source_path)


def _env_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_env(raw: dict, environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out = dict(raw)
    lookup = {k.upper(): k for k in _TOP_KEYS}
    for name, text in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = lookup.get(name[len(ENV_PREFIX):])
        if key is not None:
            out[key] = _env_value(text)
    return out


def _typed(section: Mapping, schema: Mapping, where: str) -> dict:
    out = {}
    for key, value in section.items():
        if key not in schema:
            raise ConfigError(f"unknown key {where}{key!r}")
        kind = schema[key]
        try:
            if kind is float and not isinstance(value, bool):
                value = float(value)
            elif kind is int and float(value) == int(value) and not isinstance(value, bool):
                value = int(value)
            elif kind is bool and isinstance(value, bool):
                pass
            elif kind is list and isinstance(value, list):
                value = [float(v) for v in value]
            else:
                raise TypeError
        except (TypeError, ValueError):
            raise ConfigError(f"{where}{key} has invalid value {value!r}") from None
        out[key] = value
    return out


def _read_table(path: Path):
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise ConfigError(f"cannot read initial table {path}: {exc}") from None
    if data.dtype.names is None or not {"x", "rho", "m"} <= set(data.dtype.names):
        raise ConfigError(f"initial table {path} needs columns x, rho, m")
    x = np.atleast_1d(data["x"])
    if x.size < 2 or np.any(np.diff(x) <= 0.0):
        raise ConfigError(f"initial table {path} needs strictly increasing x")
    return x, np.atleast_1d(data["rho"]), np.atleast_1d(data["m"])


def build_initial(initial: Mapping, N: int, base_dir: Path | None = None):
    """Return vectorized ``(rho0, m0)`` physical profiles for an ``[initial]`` table."""
    kind = initial.get("kind", "floor")
    if kind == "floor":
        return (lambda x: np.zeros_like(x)), (lambda x: np.zeros_like(x))
    if kind == "gaussian_bump":
        A = float(initial.get("amplitude", 0.5))
        c = float(initial.get("center", 3.0))
        w = float(initial.get("width", 1.0))
        v = float(initial.get("velocity", 0.0))
        if A < 0.0 or w <= 0.0:
            raise ConfigError("gaussian_bump needs amplitude >= 0 and width > 0")

        def rho0(x):
            return A * np.exp(-(((x - c) / w) ** 2)) * x ** (1 - N)

        return rho0, (lambda x: v * rho0(x))
    if kind == "table":
        if "path" not in initial:
            raise ConfigError("initial.kind = 'table' needs initial.path")
        path = Path(initial["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        x, rho, m = _read_table(path)
        if np.any(rho < 0.0):
            raise ConfigError("initial table has negative density")
        # held constant beyond the table ends
        return (lambda q: np.interp(q, x, rho)), (lambda q: np.interp(q, x, m))
    raise ConfigError(f"unknown initial.kind {kind!r}")


def parse_config(raw: Mapping, base_dir: Path | None = None,
                 source_path: str | None = None) -> RunConfig:
    raw = dict(raw)
    sections = {"initial": raw.pop("initial", {}), "monitor": raw.pop("monitor", {}),
                "diagnostics": raw.pop("diagnostics", {})}
    for name, sec in sections.items():
        if not isinstance(sec, Mapping):
            raise ConfigError(f"[{name}] must be a table")
    top = _typed(raw, _TOP_KEYS, "")
    mon = _typed(sections["monitor"], _MONITOR_KEYS, "monitor.")
    diag = _typed(sections["diagnostics"], _DIAG_KEYS, "diagnostics.")
    for key in ("l", "T"):
        if key not in top:
            raise ConfigError(f"missing required key {key!r}")
    N = top.get("N", 3)
    rho0, m0 = build_initial(sections["initial"], N, base_dir)
    scheme = SchemeConfig(
        l=top["l"], T=top["T"], L_max=top.get("L_max", 10.0), N=N,
        beta=top.get("beta", 3.0), rho0=rho0, m0=m0,
        alpha0=mon.get("alpha0"), monitor_C=mon.get("C"),
        monitor_tol=mon.get("tolerance", 1e-9), abort_on_monitor=mon.get("abort", True),
        spot_check_fraction=mon.get("spot_check_fraction", 0.01),
        seed=top.get("seed", 0),
        snapshot_times=tuple(sorted(top.get("snapshot_times", ()))),
    )
    for t in scheme.snapshot_times:
        if not 0.0 <= t <= scheme.T:
            raise ConfigError(f"snapshot time {t} outside [0, T]")
    full = dict(raw)
    full.update({k: v for k, v in sections.items() if v})
    return RunConfig(scheme, dict(sections["initial"]), full,
                     consistency=diag.get("consistency", True),
                     trace_eps=tuple(diag.get("trace_eps", (max(0.1, 2.0 * scheme.l),))),
                     entropy_tol=diag.get("entropy_tol", 1e-8),
                     source_path=source_path)


def load_config(path: str | os.PathLike, environ: Mapping[str, str] | None = None,
                overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a TOML file, then apply environment and explicit overrides (in that order)."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc.strerror or exc}") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {p}: {exc}") from None
    raw = apply_env(raw, environ)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(raw, base_dir=p.parent, source_path=str(p))
