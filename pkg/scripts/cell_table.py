"""Compare the layered cell ansatz with the closed-form homogenized density."""
import math

from bilayer_hom.algebra import Rotation, k_interval, make_slip_system, shear_e1
from bilayer_hom.cell_problem import w_cell_ansatz


def main():
    lam = 0.5
    print(f"{'slip':>10} {'theta':>6} {'gamma':>8} {'W_hom':>12} {'ansatz':>12} {'gap':>10}")
    for v in ((1, 0), (1, 1), (1, -2), (0, 1)):
        s = make_slip_system(v)
        K = k_interval(s, lam)
        if K.kind == "full_line":
            gammas = (-1.0, 0.0, 0.3, 1.5)
        else:
            gammas = tuple(K.lo + t * (K.hi - K.lo) for t in (0.0, 0.25, 0.5, 1.0))
        for i, gamma in enumerate(gammas):
            theta = 0.3 * i - 0.4
            r = w_cell_ansatz(shear_e1(Rotation(theta), gamma), s, lam)
            print(f"{str(v):>10} {theta:6.2f} {gamma:8.4f} {r.hom_value:12.8f} "
                  f"{r.ansatz_min:12.8f} {r.gap:10.2e}")
    r = w_cell_ansatz(shear_e1(Rotation(0), 0.5), make_slip_system((1, 1)), lam)
    print(f"outside the domain: W_hom={r.hom_value}, ansatz={r.ansatz_min}",
          "(both infinite)" if math.isinf(r.ansatz_min) else "")


if __name__ == "__main__":
    main()
