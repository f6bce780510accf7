"""Homogenization toolkit for layered materials with rigid and single-slip soft layers."""
from .algebra import (
    KInterval, MsElement, Rotation, SlipSystem, decompose_Ms, k_interval, make_slip_system,
    membership, slip_deformation, w_heterogeneous, w_hom, w_soft,
)
from .cell_problem import CellProblemResult, lemma61_check, w_cell_ansatz
from .energetics import (
    EnergyReport, HRule, SweepRow, convergence_sweep, energy_eps, energy_hom,
    lower_bound_estimate,
)
from .microstructure import (
    GammaProfile, LayerGeometry, PiecewiseAffineField, RectDomain, build_nested_laminate,
    build_piecewise, build_recovery_e1, build_single_scale, layer_classify, rasterize_gradient,
)
from .rank_one import (
    LaminateSpec, RankOneClass, classify_rank_one, gamma_from_n, horizontal_connection,
    laminate_decompose_Ns, n_from_gamma,
)
from .rigidity import (
    LayerRotationTrace, fit_layer_rotations, one_d_bound_check, sigma_vs_interpolant,
)

__version__ = "0.1.0"
