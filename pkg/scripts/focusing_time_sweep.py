"""Tabulate T(b) for k = 1..8 and report monotonicity and per-b certification."""
from vpfocus.cli_io import DEFAULT_SWEEP_B
from vpfocus.initial_data import FocusingTimeLaw
from vpfocus.simulation import monotonicity_sweep


def main(eta=0.5, N=2.0, eps0=1.0):
    for k in range(1, 9):
        law = FocusingTimeLaw.from_constants(eta, N, eps0, k)
        bs = [b for b in DEFAULT_SWEEP_B if b >= 1 or k <= 5]
        tab = monotonicity_sweep(bs, k, law, certify=True)
        print(f"k={k} n={law.n:.6g} C={law.C:.4g} C~={law.C_tilde:.4g} monotone={tab.monotone}")
        for b, T, cert in tab.rows:
            print(f"   b={b:<5g} T={T:.6e} certified={cert}")


if __name__ == "__main__":
    main()
