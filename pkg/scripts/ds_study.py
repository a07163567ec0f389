"""Donaldson-Sadun reconstruction vs direct flow under joint (h, dt, eps) refinement."""
import argparse

from _common import emit
from ymflow import suites

p = argparse.ArgumentParser()
p.add_argument("--ns", type=int, nargs="+", default=[6, 8, 12])
p.add_argument("--bc", nargs="+", default=["Dirichlet", "Neumann"])
p.add_argument("--json")
a = p.parse_args()

out = {}
for bc in a.bc:
    lv = [suites.ds_compare(n, bc) for n in a.ns]
    gaps = [x["B_gap"] for x in lv]
    out[bc] = {
        "ns": a.ns,
        "rel_error": [x["rel_error"] for x in lv],
        "B_gap": gaps,
        "B_gap_orders": suites.orders(gaps, hs=[1 / n for n in a.ns]),
        "composition_defect": suites.gauge_composition_defect(bc=bc),
    }
emit(out, a.json)
