"""Energy-law defect under dt halving and the U1 field error against the dense oracle."""
import argparse

from _common import emit
from ymflow import suites

p = argparse.ArgumentParser()
p.add_argument("--n", type=int, default=8)
p.add_argument("--json")
a = p.parse_args()
fe5 = suites.fe5_study(n=a.n)
emit(
    {
        "fe5": {k: {"defects": v, "orders": suites.orders(v)} for k, v in fe5.items()},
        "u1_oracle": suites.u1_oracle_study(),
    },
    a.json,
)
