"""Energies of layered deformation fields and their homogenized limits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    MEMBERSHIP_TOL, Rotation, SlipSystem, k_interval, ms_violation, shear_e1,
    so2_violation, w_hom,
)
from .errors import GeometryError, UnsupportedTau
from .microstructure import (
    RIGID, SOFT, GammaProfile, LayerGeometry, PiecewiseAffineField, RectDomain,
    build_piecewise, build_recovery_e1, build_single_scale, clip_band, polygon_area,
    strip_segments,
)


@dataclass
class EnergyReport:
    """Outcome of :func:`energy_eps`.

    ``band_*`` dictionaries are keyed by the profile band index of the pieces.
    ``band_soft_mean`` holds the area-weighted mean soft gradient of each band.
    """

    value: float
    soft_contribution: float
    constraint_violation_max: float
    admissible: bool
    ledger_total: float
    tau_contribution: float = 0.0
    band_energy: dict = field(default_factory=dict)
    band_area: dict = field(default_factory=dict)
    band_soft_area: dict = field(default_factory=dict)
    band_soft_mean: dict = field(default_factory=dict)


def _split_by_strips(piece, geom: LayerGeometry):
    """Yield (polygon, geometric_phase) for the parts of a piece in each strip."""
    ys = piece.polygon[:, 1]
    segs = strip_segments(geom, float(ys.min()), float(ys.max()))
    if len(segs) == 1:
        yield piece.polygon, segs[0][2]
        return
    if piece.phase is not None:
        raise GeometryError(
            f"piece labelled {piece.phase!r} crosses a soft/rigid interface")
    for ya, yb, phase, _k in segs:
        poly = clip_band(piece.polygon, ya, yb)
        if len(poly) >= 3 and polygon_area(poly) > 0.0:
            yield poly, phase


def energy_eps(field_: PiecewiseAffineField, sys: SlipSystem, geom: LayerGeometry,
               tau: float = 0.0, tol: float = MEMBERSHIP_TOL) -> EnergyReport:
    """Layered energy: integral of |grad u m|^2 - 1 (+ tau |gamma|) over soft strips.

    Soft parts must have gradients in Ms and rigid parts in SO(2), each within
    ``tol``; otherwise the value is +inf and the worst violation is reported.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau > 0 and not sys.is_e1:
        raise UnsupportedTau("tau > 0 is only supported for s = e1")
    s, m = sys.s_vec, sys.m_vec
    worst = 0.0
    soft = 0.0
    diss = 0.0
    band_energy, band_area, band_soft_area, band_sum = {}, {}, {}, {}
    for piece in field_.pieces:
        A = piece.A
        Am = A @ m
        for poly, phase in _split_by_strips(piece, geom):
            if piece.phase is not None and piece.phase != phase:
                raise GeometryError(
                    f"piece labelled {piece.phase!r} lies in a {phase} strip")
            area = polygon_area(poly)
            band = piece.band
            band_area[band] = band_area.get(band, 0.0) + area
            if phase == RIGID:
                worst = max(worst, so2_violation(A))
                continue
            worst = max(worst, ms_violation(A, sys))
            e = area * (float(Am @ Am) - 1.0)
            gamma = float((A @ s) @ Am)
            d = tau * area * abs(gamma)
            soft += e
            diss += d
            band_energy[band] = band_energy.get(band, 0.0) + e + d
            band_soft_area[band] = band_soft_area.get(band, 0.0) + area
            band_sum[band] = band_sum.get(band, np.zeros((2, 2))) + area * A
    admissible = worst <= tol
    means = {b: band_sum[b] / band_soft_area[b] for b in band_sum if band_soft_area[b] > 0}
    return EnergyReport(
        value=soft + diss if admissible else math.inf,
        soft_contribution=soft,
        constraint_violation_max=worst,
        admissible=admissible,
        ledger_total=field_.ledger_total,
        tau_contribution=diss,
        band_energy=band_energy,
        band_area=band_area,
        band_soft_area=band_soft_area,
        band_soft_mean=means,
    )


def energy_hom(R: Rotation, profile: GammaProfile, sys: SlipSystem, lam: float,
               tau: float, domain: RectDomain, tol: float = MEMBERSHIP_TOL) -> float:
    """Limit energy: sum over bands of band area times w_hom(R(I + gamma_i e1 (x) e2))."""
    profile.check_spans(domain)
    K = k_interval(sys, lam)
    total = 0.0
    for i, g in enumerate(profile.values):
        t0, t1 = profile.band_interval(i)
        w = w_hom(shear_e1(R, g), sys, lam, tau, tol)
        if math.isinf(w) or not K.contains(g, tol):
            return math.inf
        total += (t1 - t0) * domain.width * w
    return total


def lower_bound_estimate(mean_soft_gradient, R: Rotation, lam: float, sys: SlipSystem,
                         region_area: float) -> float:
    """Jensen lower bound area * ((1/lam)|M m - (1-lam) R m|^2 - lam).

    M = lam * mean_soft_gradient + (1 - lam) R is the implied overall mean.
    """
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    Rm = R.matrix @ sys.m_vec
    M = lam * np.asarray(mean_soft_gradient, dtype=float) + (1.0 - lam) * R.matrix
    v = M @ sys.m_vec - (1.0 - lam) * Rm
    return region_area * (float(v @ v) / lam - lam)


def band_lower_bounds(report: EnergyReport, R: Rotation, lam: float,
                      sys: SlipSystem) -> dict:
    """Per-band (energy, lower bound) pairs from an :class:`EnergyReport`."""
    out = {}
    for band, area in report.band_area.items():
        mean = report.band_soft_mean.get(band, R.matrix)
        out[band] = (report.band_energy.get(band, 0.0),
                     lower_bound_estimate(mean, R, lam, sys, area))
    return out


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class HRule:
    """Inner laminate period as a function of epsilon.

    ``kind`` is ``"fixed"`` (h = value), ``"eps_over"`` (h = eps / value) or
    ``"eps_squared"`` (h = eps^2).
    """

    kind: str = "eps_over"
    value: float = 16.0

    def __post_init__(self):
        if self.kind not in ("fixed", "eps_over", "eps_squared"):
            raise ValueError(f"unknown h rule {self.kind!r}")
        if self.kind != "eps_squared" and not self.value > 0:
            raise ValueError("h rule parameter must be positive")

    def __call__(self, eps: float) -> float:
        if self.kind == "fixed":
            return self.value
        if self.kind == "eps_over":
            return eps / self.value
        return eps * eps


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    inner_h: float | None
    energy: float
    hom_energy: float
    gap: float
    ledger: float


BUILDERS = ("recovery_e1", "single_scale", "nested_laminate", "piecewise")


def build_field(builder: str, profile: GammaProfile, R: Rotation, sys: SlipSystem,
                geom: LayerGeometry, h, domain: RectDomain) -> PiecewiseAffineField:
    if builder == "recovery_e1":
        return build_recovery_e1(profile, R, geom, domain)
    if builder == "single_scale":
        if profile.n_bands != 1:
            raise ValueError("single_scale needs a constant profile")
        return build_single_scale(profile.values[0], R, sys, geom, domain)
    if builder in ("nested_laminate", "piecewise"):
        return build_piecewise(profile, R, sys, geom, h, domain)
    raise ValueError(f"unknown builder {builder!r}; expected one of {BUILDERS}")


def convergence_sweep(builder: str, eps_list, h_rule: HRule | None, sys: SlipSystem,
                      lam: float, tau: float, R: Rotation, profile: GammaProfile,
                      domain: RectDomain, tol: float = MEMBERSHIP_TOL) -> list:
    """One :class:`SweepRow` per epsilon, in the given (decreasing) order."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty epsilon list")
    if any(e <= 0 for e in eps_list):
        raise ValueError("epsilon values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon list must be strictly decreasing")
    hom = energy_hom(R, profile, sys, lam, tau, domain, tol)
    rows = []
    for eps in eps_list:
        geom = LayerGeometry(lam, eps)
        h = h_rule(eps) if (h_rule is not None and builder in ("nested_laminate", "piecewise")) else None
        fld = build_field(builder, profile, R, sys, geom, h, domain)
        rep = energy_eps(fld, sys, geom, tau, tol)
        rows.append(SweepRow(eps, h, rep.value, hom, rep.value - hom, fld.ledger_total))
    return rows
