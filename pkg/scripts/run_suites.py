"""Run the structure, Gaffney and identities suites and print one line per check."""
import argparse

from _common import emit
from ymflow import suites

p = argparse.ArgumentParser()
p.add_argument("--json")
a = p.parse_args()
reports = [suites.structure_suite(), suites.gaffney_suite(), suites.identities_suite()]
for rep in reports:
    print(f"[{rep.name}] {rep.runtime:.1f}s")
    for c in rep.checks:
        print("  " + c.line())
if a.json:
    emit({r.name: r.as_dict() for r in reports}, a.json)
