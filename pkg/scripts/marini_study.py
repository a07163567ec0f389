"""Normal gauge, Neumann flow and back-transform: sup of the normal curvature vs h."""
import argparse

from _common import emit
from ymflow import suites

p = argparse.ArgumentParser()
p.add_argument("--ns", type=int, nargs="+", default=[8, 16, 32])
p.add_argument("--json")
a = p.parse_args()
emit(suites.marini_study(ns=tuple(a.ns)), a.json)
