"""Layer rotation traces, the 1-D rotation bound and the interpolant comparison."""
import math

import numpy as np

from bilayer_hom.algebra import Rotation
from bilayer_hom.microstructure import LayerGeometry
from bilayer_hom.rigidity import (
    fit_layer_rotations, interpolant_bound, one_d_bound_check, sigma_vs_interpolant,
    synthetic_layer_field,
)


def main():
    rng = np.random.default_rng(7)
    lhs, rhs = one_d_bound_check(1, 1, Rotation(0), Rotation(math.pi))
    print(f"antipodal rotations, L = H = 1: min energy {lhs:.15f}, bound {rhs:.15f}")
    for _ in range(5):
        L, H = rng.uniform(0.2, 3, 2)
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        a, b = one_d_bound_check(L, H, Rotation(t1), Rotation(t2))
        print(f"L={L:.3f} H={H:.3f}: lhs={a:.6e} rhs={b:.6e} ratio={a / b:.12f}")
    eps = 0.1
    g = LayerGeometry(0.5, eps)
    thetas = np.cumsum(rng.normal(0, 0.2, 10))
    trace = fit_layer_rotations(synthetic_layer_field(thetas, g), g)
    print("fitted angles:", np.round(trace.thetas, 6).tolist())
    print(f"total variation {trace.total_variation:.6f}, max gap {trace.max_neighbor_gap:.6f}")
    print(f"|sigma - interpolant|^2 = {sigma_vs_interpolant(trace, eps):.6e} "
          f"<= {interpolant_bound(trace, eps):.6e}")


if __name__ == "__main__":
    main()
