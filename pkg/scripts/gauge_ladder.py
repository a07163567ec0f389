"""Constant and smooth gauge invariance of recorded observables and Wilson traces."""
import argparse

from _common import emit
from ymflow import suites

p = argparse.ArgumentParser()
p.add_argument("--ns", type=int, nargs="+", default=[8, 16, 32])
p.add_argument("--json")
a = p.parse_args()
emit(
    {
        "constant_gauge_defect": {bc: suites.constant_gauge_defect(bc=bc) for bc in ("Dirichlet", "Neumann")},
        "smooth_gauge": suites.smooth_gauge_study(ns=tuple(a.ns)),
        "wilson": suites.wilson_ladder(ns=tuple(a.ns)),
        "pure_gauge": suites.pure_gauge_study(ns=tuple(a.ns)),
    },
    a.json,
)
