"""Energy gap of the s = e1 recovery field as epsilon shrinks.

Runs the unit square (gap zero to round-off) and a height-0.9 domain whose
last bilayer is cut, for tau in {0, 0.4}.
"""
import argparse

from bilayer_hom.algebra import Rotation, make_slip_system
from bilayer_hom.energetics import convergence_sweep
from bilayer_hom.microstructure import GammaProfile, RectDomain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()
    s = make_slip_system((1, 0))
    eps = [2.0 ** -(3 + k) for k in range(args.levels)]
    for height in (1.0, 0.9):
        dom = RectDomain(0, 1, 0, height)
        prof = GammaProfile.constant(args.gamma, dom)
        for tau in (0.0, 0.4):
            print(f"# height={height} tau={tau}")
            print(f"{'eps':>10} {'E_eps':>14} {'E_hom':>14} {'gap':>12}")
            for row in convergence_sweep("recovery_e1", eps, None, s, args.lam, tau,
                                         Rotation(0), prof, dom):
                print(f"{row.epsilon:10.6f} {row.energy:14.10f} {row.hom_energy:14.10f} "
                      f"{row.gap:12.3e}")


if __name__ == "__main__":
    main()
