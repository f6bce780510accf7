"""Nested-laminate recovery for inclined slip: energy and interface mismatch vs inner period."""
import argparse

import numpy as np

from bilayer_hom.algebra import Rotation, make_slip_system, w_hom, shear_e1
from bilayer_hom.energetics import energy_eps
from bilayer_hom.microstructure import LayerGeometry, RectDomain, build_nested_laminate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slip", type=float, nargs=2, default=(1.0, 1.0))
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--gamma", type=float, default=-0.5)
    ap.add_argument("--eps", type=float, default=0.125)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    s = make_slip_system(args.slip)
    g = LayerGeometry(args.lam, args.eps)
    dom = RectDomain()
    hom = w_hom(shear_e1(Rotation(0), args.gamma), s, args.lam) * dom.area
    print(f"E_hom = {hom:.12f}")
    print(f"{'h':>12} {'h_eff':>12} {'E_eps':>16} {'ledger':>12} {'pieces':>7}")
    hs, ledgers = [], []
    for k in range(args.levels):
        h = args.eps / 16 / 2 ** k
        f = build_nested_laminate(args.gamma, Rotation(0), s, g, h, dom)
        rep = energy_eps(f, s, g)
        hs.append(f.meta["h_effective"])
        ledgers.append(f.ledger_total)
        print(f"{h:12.3e} {hs[-1]:12.3e} {rep.value:16.12f} {f.ledger_total:12.3e} "
              f"{len(f.pieces):7d}")
    if args.levels > 1 and all(x > 0 for x in ledgers):
        print(f"ledger slope {np.polyfit(np.log(hs), np.log(ledgers), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
