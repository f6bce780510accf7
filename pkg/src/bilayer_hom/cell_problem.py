"""Cell-formula upper bounds from the layered constructions and a periodic-field checker."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .algebra import (
    MEMBERSHIP_TOL, SlipSystem, decompose_e1, k_interval, me1_violation, membership,
    ms_violation, so2_violation, w_hom,
)
from .errors import NotPeriodic, UnsupportedTau
from .microstructure import LayerGeometry
from .rank_one import laminate_decompose_Ns, laminate_residuals, n_from_gamma

MU_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass
class CellProblemResult:
    F: np.ndarray
    hom_value: float
    ansatz_min: float
    optimizer_params: dict = field(default_factory=dict)
    gap: float = 0.0


def w_cell_ansatz(F, sys: SlipSystem, lam: float, tau: float = 0.0,
                  n_soft_bands: int = 64, tol: float = MEMBERSHIP_TOL) -> CellProblemResult:
    """Minimize the cell energy over the layered construction family.

    For s = e1 the soft layer is split into ``n_soft_bands`` sub-bands with
    independent slips and the constrained quadratic program is solved through
    its scalar Lagrange dual. For s != e1 every soft layer carries a simple
    laminate with volume fraction mu; the family is scanned over ``MU_GRID``
    together with the fraction returned by :func:`laminate_decompose_Ns`.
    Both values are +inf (gap 0) off Me1 cap Ns with the shear in K.
    """
    if n_soft_bands < 1:
        raise ValueError("n_soft_bands must be at least 1")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau > 0 and not sys.is_e1:
        raise UnsupportedTau("tau > 0 is only supported for s = e1")
    F = np.asarray(F, dtype=float)
    if not membership(F, "Me1capNs", sys, lam, tol):
        return CellProblemResult(F, math.inf, math.inf, {"reason": "outside Me1 cap Ns"}, 0.0)
    hom = w_hom(F, sys, lam, tau, tol)
    el = decompose_e1(F)
    if sys.is_e1:
        value, params = _layer_qp(el.gamma, lam, tau, n_soft_bands)
    else:
        K = k_interval(sys, lam)
        gamma = min(max(el.gamma, K.lo), K.hi)
        N = n_from_gamma(el.R, gamma, lam, sys)
        value, params = _laminate_family(N, sys, lam, tol)
    params["gamma"] = el.gamma
    params["theta"] = el.R.theta
    return CellProblemResult(F, hom, value, params, value - hom)


def _layer_qp(gamma: float, lam: float, tau: float, n: int):
    """min sum c (z_k^2 + tau |z_k|) subject to c sum z_k = gamma, c = lam / n."""
    c = lam / n
    weights = np.full(n, c)

    def slips(nu):
        # per-band minimizer of z^2 + tau |z| - nu z
        return np.full(n, math.copysign(max(abs(nu) - tau, 0.0) / 2.0, nu))

    def residual(nu):
        return float(weights @ slips(nu)) - gamma

    if gamma == 0.0:
        nu = 0.0
    else:
        hi = tau + 2.0 * abs(gamma) / lam + 1.0
        nu = brentq(residual, -hi, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    z = slips(nu)
    # the dual optimum can miss the constraint by rounding; project it back
    z = z + (gamma - float(weights @ z)) / lam
    value = float(weights @ (z * z + tau * np.abs(z)))
    return value, {"multiplier": nu, "slip_min": float(z.min()), "slip_max": float(z.max()),
                   "n_soft_bands": n}


def _laminate_energy(Fl, Gl, mu, sys, lam):
    m = sys.m_vec
    fm, gm = Fl @ m, Gl @ m
    return lam * (mu * float(fm @ fm) + (1.0 - mu) * float(gm @ gm) - 1.0)


def laminates_at_fraction(N, mu: float, sys: SlipSystem, n_scan: int = 720) -> list:
    """All simple laminates mu F + (1-mu) G = N with F, G in Ms (normal scan).

    With F - G = a (x) n, the determinant constraints force a = c N n^perp
    and the two |. s| = 1 constraints fix c and leave one scalar equation in
    the normal angle, whose sign changes are refined with brentq.
    """
    N = np.asarray(N, dtype=float)
    s = sys.s_vec
    v = N @ s

    def parts(phi):
        n = np.array([math.cos(phi), math.sin(phi)])
        w = float(n @ s) * (N @ np.array([-n[1], n[0]]))
        return n, w

    def amplitude(phi):
        _, w = parts(phi)
        ww = float(w @ w)
        if ww < 1e-300:
            return None
        if abs(1.0 - 2.0 * mu) < 1e-12:
            return 2.0 * math.sqrt(max(1.0 - float(v @ v), 0.0) / ww)
        return -2.0 * float(v @ w) / (ww * (1.0 - 2.0 * mu))

    def f(phi):
        _, w = parts(phi)
        if abs(1.0 - 2.0 * mu) < 1e-12:
            return float(v @ w)
        c = amplitude(phi)
        if c is None:
            return math.nan
        g = v - mu * c * w
        return float(g @ g) - 1.0

    phis = np.linspace(0.0, math.pi, n_scan + 1)
    vals = [f(p) for p in phis]
    out = []
    for p0, p1, f0, f1 in zip(phis, phis[1:], vals, vals[1:]):
        if not (np.isfinite(f0) and np.isfinite(f1)) or f0 * f1 > 0 or (f0 == 0 and p0 != 0):
            continue
        phi = p0 if f0 == 0 else brentq(f, p0, p1, xtol=1e-15)
        c = amplitude(phi)
        if c is None:
            continue
        n, w = parts(phi)
        a = c * (N @ np.array([-n[1], n[0]]))
        Fl = N + (1.0 - mu) * np.outer(a, n)
        Gl = N - mu * np.outer(a, n)
        if max(ms_violation(Fl, sys), ms_violation(Gl, sys)) <= 1e-8:
            out.append((Fl, Gl, n))
    return out


def _laminate_family(N, sys, lam, tol):
    spec = laminate_decompose_Ns(N, sys, tol)
    res = laminate_residuals(spec, N, sys)
    best = _laminate_energy(spec.F, spec.G, spec.mu, sys, lam)
    best_mu = spec.mu
    scan = {}
    if not spec.degenerate:
        for mu in MU_GRID:
            energies = [_laminate_energy(Fl, Gl, mu, sys, lam)
                        for Fl, Gl, _ in laminates_at_fraction(N, mu, sys)]
            scan[mu] = min(energies, default=math.inf)
            if scan[mu] < best:
                best, best_mu = scan[mu], mu
    params = {"mu_star": spec.mu, "argmin_mu": best_mu, "degenerate": spec.degenerate,
              "scan": scan, "decomposition_residual": max(res.values())}
    return best, params


# ---------------------------------------------------------------------------


@dataclass
class Lemma61Verdict:
    """Outcome of :func:`lemma61_check`.

    ``*_applicable`` says whether the cellwise hypothesis held; a verdict
    passes when it is not applicable or its conclusion holds.
    """

    i_applicable: bool
    i_pass: bool
    i_violations: list
    ii_applicable: bool
    ii_pass: bool
    ii_violations: list
    mean_zeta: float | None = None
    hypothesis_failures: list = field(default_factory=list)


def lemma61_check(F, psi_samples, sys: SlipSystem, geom_unit: LayerGeometry,
                  tol: float = MEMBERSHIP_TOL) -> Lemma61Verdict:
    """Check necessary conditions on F given a periodic perturbation gradient.

    ``psi_samples[j, i]`` is grad psi at the cell centre ((i + 1/2)/n, (j + 1/2)/n)
    of the unit cell. Verdict i: if F + grad psi lies in Ms on soft cells and
    in SO(2) on rigid cells, then det F = 1, |F e1| = 1 and |F s| <= 1.
    Verdict ii: if F and every F + grad psi lie in Me1, all share F's rotation
    and the mean slip over the cell equals F's slip.
    """
    F = np.asarray(F, dtype=float)
    psi = np.asarray(psi_samples, dtype=float)
    if psi.ndim != 4 or psi.shape[2:] != (2, 2) or psi.shape[0] != psi.shape[1]:
        raise ValueError("psi_samples must have shape (n, n, 2, 2)")
    if geom_unit.eps != 1.0:
        raise ValueError("the cell geometry must have epsilon = 1")
    mean = psi.reshape(-1, 2, 2).mean(axis=0)
    if np.abs(mean).max() > tol:
        raise NotPeriodic(f"mean of grad psi is {np.abs(mean).max():.3e} > tol")
    n = psi.shape[0]
    ys = (np.arange(n) + 0.5) / n
    soft_rows = (ys - np.floor(ys)) < geom_unit.lam
    G = F + psi

    failures = []
    for j in range(n):
        for i in range(n):
            A = G[j, i]
            viol = ms_violation(A, sys) if soft_rows[j] else so2_violation(A)
            if viol > tol:
                failures.append((j, i, "Ms" if soft_rows[j] else "SO2", viol))
    i_app = not failures
    i_viol = []
    if i_app:
        t = 10.0 * tol
        if abs(np.linalg.det(F) - 1.0) > t:
            i_viol.append(("det F = 1", float(np.linalg.det(F))))
        if abs(np.linalg.norm(F[:, 0]) - 1.0) > t:
            i_viol.append(("|F e1| = 1", float(np.linalg.norm(F[:, 0]))))
        if np.linalg.norm(F @ sys.s_vec) > 1.0 + t:
            i_viol.append(("|F s| <= 1", float(np.linalg.norm(F @ sys.s_vec))))

    ii_app = bool(me1_violation(F) <= tol) and all(
        me1_violation(G[j, i]) <= tol for j in range(n) for i in range(n))
    ii_viol = []
    mean_zeta = None
    if ii_app:
        base = decompose_e1(F)
        zetas = np.empty((n, n))
        for j in range(n):
            for i in range(n):
                el = decompose_e1(G[j, i])
                zetas[j, i] = el.gamma
                d = abs(math.remainder(el.R.theta - base.R.theta, 2.0 * math.pi))
                if d > 10.0 * tol:
                    ii_viol.append(((j, i), "common rotation", d))
        mean_zeta = float(zetas.mean())
        if abs(mean_zeta - base.gamma) > 10.0 * tol:
            ii_viol.append(("mean slip", mean_zeta, base.gamma))
    return Lemma61Verdict(i_app, not i_viol, i_viol, ii_app, not ii_viol, ii_viol,
                          mean_zeta, failures)
