"""Run the desk-scale classical focusing experiment and print the report.

Usage: python3 scripts/relaxed_focusing.py [eps] [n_steps]
"""
import json
import sys

from vpfocus.initial_data import relaxed_vp_plan
from vpfocus.simulation import focusing_experiment


def main():
    eps = float(sys.argv[1]) if len(sys.argv) > 1 else 0.01
    n_steps = int(sys.argv[2]) if len(sys.argv) > 2 else 400
    plan = relaxed_vp_plan(b=1.0, a0=2.0, eps=eps)
    rep = focusing_experiment(plan, "relaxed", n_steps=n_steps, t_factor=1.1)
    d = rep.as_dict()
    print(json.dumps({k: d[k] for k in ("passed", "K", "norms_T", "lemma", "conservation", "notes")}, indent=2))
    for c in rep.checks:
        print(f"{'ok ' if c.passed else 'BAD'} {c.name}: margin {c.margin:.3g}")


if __name__ == "__main__":
    main()
