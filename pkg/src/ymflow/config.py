"""INI run configuration: one section per concern, unknown keys rejected.

[run]      FlowConfig fields (group, n, L, T, dt, theta, bc, flow, scheme, epsilon, record_stride, seed)
[initial]  InitialData fields (kind, amplitude, kmax, n_waves, noise, gauge_amplitude)
[output]   snapshot_steps
[compare]  ns, dt_factor, eps_steps, tol
[wilson]   t_eval, loops ("plane i-j-k a b" entries separated by ';')
[check]    n, ns, n_trials, n_bound_runs, gf_n
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .diagnostics import LoopSpec
from .errors import ConfigError
from .fields import InitialData
from .flow import FlowConfig


@dataclass(frozen=True)
class OutputSpec:
    snapshot_steps: tuple = ()


@dataclass(frozen=True)
class CompareSpec:
    ns: tuple = (6, 8, 12)
    dt_factor: float = 1.0 / 24.0
    eps_steps: int = 4
    tol: float = 0.05


@dataclass(frozen=True)
class WilsonSpec:
    t_eval: tuple = (0.0, 0.01, 0.05)
    loops: tuple = ()


@dataclass(frozen=True)
class CheckSpec:
    n: int = 8
    ns: tuple = (8, 16, 32)
    n_trials: int = 100
    n_bound_runs: int = 20
    gf_n: int = 16


@dataclass(frozen=True)
class RunSpec:
    run: FlowConfig = field(default_factory=FlowConfig)
    initial: InitialData = field(default_factory=InitialData)
    output: OutputSpec = field(default_factory=OutputSpec)
    compare: CompareSpec = field(default_factory=CompareSpec)
    wilson: WilsonSpec = field(default_factory=WilsonSpec)
    check: CheckSpec = field(default_factory=CheckSpec)

    def as_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            d = dataclasses.asdict(getattr(self, f.name))
            if f.name == "wilson":
                d["loops"] = [format_loop(lp) for lp in self.wilson.loops]
            out[f.name] = d
        return out

    def with_seed(self, seed: Optional[int]) -> "RunSpec":
        if seed is None:
            return self
        return dataclasses.replace(self, run=self.run.replace(seed=int(seed)))


def parse_loop(text: str) -> LoopSpec:
    parts = text.split()
    if len(parts) != 4:
        raise ConfigError(f"loop entry {text!r} must read 'plane i-j-k a b'")
    plane, anchor, a, b = parts
    try:
        anc = tuple(int(v) for v in anchor.split("-"))
        spec = LoopSpec(plane, anc, int(a), int(b))
    except ValueError:
        raise ConfigError(f"bad loop entry {text!r}") from None
    if len(anc) != 3:
        raise ConfigError(f"loop anchor {anchor!r} needs three indices i-j-k")
    return spec


def format_loop(lp: LoopSpec) -> str:
    return f"{lp.plane} {'-'.join(str(v) for v in lp.anchor)} {lp.a} {lp.b}"


def read_loops_file(path) -> tuple:
    """CSV with header plane,anchor,a,b; anchor written i-j-k."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read loops file {path}: {exc}") from None
    if rows and set(rows[0]) != {"plane", "anchor", "a", "b"}:
        raise ConfigError("loops file header must be plane,anchor,a,b")
    return tuple(parse_loop(f"{r['plane']} {r['anchor']} {r['a']} {r['b']}") for r in rows)


def _float_or_none(s):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


def _ints(s):
    return tuple(int(v) for v in s.replace(",", " ").split())


def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _loops(s):
    return tuple(parse_loop(e.strip()) for e in s.split(";") if e.strip())


_PARSERS = {
    "run": (FlowConfig, {
        "group": str, "n": int, "L": float, "T": float, "dt": _float_or_none, "theta": float,
        "bc": str, "flow": str, "scheme": str, "epsilon": float, "record_stride": int, "seed": int,
    }),
    "initial": (InitialData, {
        "kind": str, "amplitude": float, "kmax": int, "n_waves": int, "noise": float, "gauge_amplitude": float,
    }),
    "output": (OutputSpec, {"snapshot_steps": _ints}),
    "compare": (CompareSpec, {"ns": _ints, "dt_factor": float, "eps_steps": int, "tol": float}),
    "wilson": (WilsonSpec, {"t_eval": _floats, "loops": _loops}),
    "check": (CheckSpec, {"n": int, "ns": _ints, "n_trials": int, "n_bound_runs": int, "gf_n": int}),
}


def parse_config(text: str) -> RunSpec:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    parts = {}
    for sec in cp.sections():
        if sec not in _PARSERS:
            raise ConfigError(f"unknown config section [{sec}]")
        cls, keys = _PARSERS[sec]
        kw = {}
        for k, v in cp[sec].items():
            if k not in keys:
                raise ConfigError(f"unknown key {k!r} in [{sec}]")
            try:
                kw[k] = keys[k](v)
            except (ValueError, TypeError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {sec}.{k}: {v!r}") from None
        try:
            parts[sec] = cls(**kw)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{sec}]: {exc}") from None
    return RunSpec(**parts)


def load_config(path) -> RunSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
