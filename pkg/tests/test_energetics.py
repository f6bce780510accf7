import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilayer_hom.algebra import Rotation, make_slip_system, mat, shear_e1
from bilayer_hom.energetics import (
    HRule, band_lower_bounds, convergence_sweep, energy_eps, energy_hom, lower_bound_estimate,
)
from bilayer_hom.errors import GeometryError, UnsupportedTau
from bilayer_hom.microstructure import (
    AffinePiece, GammaProfile, LayerGeometry, PiecewiseAffineField, RectDomain,
    build_nested_laminate, build_recovery_e1, build_single_scale,
)

UNIT = RectDomain()
E1SYS = make_slip_system((1, 0))
DIAG = make_slip_system((1, 1))


def test_energy_eps_examples():
    g = LayerGeometry(0.5, 0.125)
    f = build_recovery_e1(GammaProfile.constant(0.0, UNIT), Rotation(0.7), g, UNIT)
    rep = energy_eps(f, E1SYS, g)
    assert rep.value == 0 and rep.admissible
    f = build_recovery_e1(GammaProfile.constant(0.3, UNIT), Rotation(0), g, UNIT)
    assert energy_eps(f, E1SYS, g).value == pytest.approx(0.18, abs=1e-14)
    f = build_single_scale(-0.5, Rotation(0), DIAG, g, UNIT)
    rep = energy_eps(f, DIAG, g)
    assert math.isinf(rep.value) and not rep.admissible
    assert rep.constraint_violation_max > 0.1


def test_energy_eps_rejects_tau_for_inclined_slip():
    g = LayerGeometry(0.5, 0.125)
    f = build_single_scale(0.0, Rotation(0), DIAG, g, UNIT)
    with pytest.raises(UnsupportedTau):
        energy_eps(f, DIAG, g, tau=0.1)


def test_energy_eps_geometry_error_for_mixed_piece():
    g = LayerGeometry(0.5, 0.5)
    piece = AffinePiece(UNIT.rect(), mat(1, 0.2, 0, 1), np.zeros(2), "soft", 0)
    with pytest.raises(GeometryError):
        energy_eps(PiecewiseAffineField([piece], UNIT), E1SYS, g)


def test_energy_hom_examples():
    prof0 = GammaProfile.constant(0.0, UNIT)
    assert energy_hom(Rotation(0), prof0, DIAG, 0.5, 0, UNIT) == 0
    prof = GammaProfile.constant(0.3, UNIT)
    assert energy_hom(Rotation(0), prof, E1SYS, 0.5, 0, UNIT) == pytest.approx(0.18)
    prof = GammaProfile.constant(-0.5, UNIT)
    assert energy_hom(Rotation(0), prof, DIAG, 0.5, 0, UNIT) == pytest.approx(0.75)
    prof = GammaProfile((0, 0.5, 1), (-0.5, 0.2))
    assert math.isinf(energy_hom(Rotation(0), prof, DIAG, 0.5, 0, UNIT))
    with pytest.raises(UnsupportedTau):
        energy_hom(Rotation(0), prof0, DIAG, 0.5, 0.2, UNIT)


def test_lower_bound_examples():
    R = Rotation(0.3)
    assert lower_bound_estimate(R.matrix, R, 0.4, DIAG, 1.0) == pytest.approx(0, abs=1e-15)
    v = lower_bound_estimate(mat(1, 0.6, 0, 1), Rotation(0), 0.5, E1SYS, 1.0)
    assert v == pytest.approx(0.18, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 0.8), st.floats(-math.pi, math.pi), st.floats(0.1, 0.9),
       st.sampled_from([0.125, 0.1, 0.0625]))
def test_recovery_energy_equals_limit_on_whole_bilayers(gamma, tau, theta, lam, eps):
    height = eps * round(1 / eps)
    dom = RectDomain(0, 1, 0, height)
    g = LayerGeometry(lam, eps)
    prof = GammaProfile.constant(gamma, dom)
    f = build_recovery_e1(prof, Rotation(theta), g, dom)
    e = energy_eps(f, E1SYS, g, tau).value
    assert abs(e - energy_hom(Rotation(theta), prof, E1SYS, lam, tau, dom)) <= 1e-12


@pytest.mark.parametrize("v,gamma", [((1, 1), -0.5), ((1, 1), -0.2), ((1, -2), 0.3)])
def test_laminate_phase_energy_density(v, gamma):
    s = make_slip_system(v)
    g = LayerGeometry(0.5, 0.125)
    f = build_nested_laminate(gamma, Rotation(0.1), s, g, g.eps / 16, UNIT)
    N = shear_e1(Rotation(0.1), gamma / g.lam)
    target = np.linalg.norm(N @ s.m_vec) ** 2 - 1
    for p in f.pieces:
        if p.phase == "soft":
            assert abs(np.linalg.norm(p.A @ s.m_vec) ** 2 - 1 - target) <= 1e-10
    rep = energy_eps(f, s, g)
    for energy, bound in band_lower_bounds(rep, Rotation(0.1), 0.5, s).values():
        assert energy >= bound - 1e-9


def test_lower_bound_dominance_piecewise_profile():
    g = LayerGeometry(0.5, 0.125)
    prof = GammaProfile((0, 0.5, 1), (0.4, -0.3))
    f = build_recovery_e1(prof, Rotation(0.2), g, UNIT)
    rep = energy_eps(f, E1SYS, g)
    for energy, bound in band_lower_bounds(rep, Rotation(0.2), 0.5, E1SYS).values():
        assert energy >= bound - 1e-9


def test_hrule():
    assert HRule("fixed", 0.01)(0.5) == 0.01
    assert HRule("eps_over", 16)(0.5) == 0.5 / 16
    assert HRule("eps_squared", 0)(0.5) == 0.25
    with pytest.raises(ValueError):
        HRule("linear", 1)


def test_sweep_rows_and_ordering():
    prof = GammaProfile.constant(0.3, UNIT)
    rows = convergence_sweep("recovery_e1", [1 / 8, 1 / 16, 1 / 32], None, E1SYS, 0.5, 0.0,
                             Rotation(0), prof, UNIT)
    assert [r.epsilon for r in rows] == [1 / 8, 1 / 16, 1 / 32]
    for r in rows:
        assert r.gap == r.energy - r.hom_energy
        assert abs(r.gap) <= 1e-12 and r.inner_h is None
    with pytest.raises(ValueError):
        convergence_sweep("recovery_e1", [1 / 16, 1 / 8], None, E1SYS, 0.5, 0, Rotation(0),
                          prof, UNIT)
    with pytest.raises(ValueError):
        convergence_sweep("recovery_e1", [], None, E1SYS, 0.5, 0, Rotation(0), prof, UNIT)


def test_truncated_domain_gap_bound():
    dom = RectDomain(0, 1, 0, 0.9)
    prof = GammaProfile.constant(0.3, dom)
    rows = convergence_sweep("recovery_e1", [1 / 8, 1 / 16, 1 / 32, 1 / 64], None, E1SYS, 0.5,
                             0.0, Rotation(0), prof, dom)
    for r in rows:
        assert abs(r.gap) <= 2 * r.epsilon * 0.6 ** 2
    # the gap is the excess soft area times (gamma/lambda)^2 (frozen oracle values)
    np.testing.assert_allclose([r.gap for r in rows], [0.0045, 0.0045, 0.001125, 0.001125],
                               atol=1e-12)


def test_nested_sweep_eps_squared():
    prof = GammaProfile.constant(-0.5, UNIT)
    rows = convergence_sweep("nested_laminate", [1 / 8, 1 / 16], HRule("eps_squared", 0), DIAG,
                             0.5, 0.0, Rotation(0), prof, UNIT)
    for r in rows:
        assert abs(r.gap) <= 1e-10 and r.ledger > 0
    assert abs(rows[1].gap) <= 0.75 * abs(rows[0].gap) + 1e-12
