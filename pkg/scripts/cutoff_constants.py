"""Print the measured derivative bounds alpha_j of the reference shell cutoff."""
import sys

from vpfocus.initial_data.profile import cutoff_derivative_bounds


def main():
    kmax = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    for j, a in enumerate(cutoff_derivative_bounds(kmax)):
        print(f"alpha_{j} = {a:.10g}")


if __name__ == "__main__":
    main()
