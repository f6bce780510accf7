"""Rank-one connections inside Ms and the simple laminates built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    MEMBERSHIP_TOL, IDENTITY_TOL, MsElement, Rotation, SlipSystem,
    k_interval, membership, shear_e1, slip_deformation, wrap_angle,
)
from .errors import GammaOutOfRange, IncompatibleRotation, NotInNs, Unconstrained


@dataclass(frozen=True)
class RankOneClass:
    """Outcome of :func:`classify_rank_one`.

    ``kind`` is ``"not_rank_one"``, ``"case_i"`` or ``"case_ii"``. For the
    rank-one kinds F - G = outer(a, n) with ``n`` a unit vector.
    """

    kind: str
    a: np.ndarray | None = None
    n: np.ndarray | None = None
    degenerate: bool = False

    @property
    def is_rank_one(self) -> bool:
        return self.kind != "not_rank_one"

    def jump(self) -> np.ndarray:
        if self.a is None:
            return np.zeros((2, 2))
        return np.outer(self.a, self.n)


@dataclass(frozen=True)
class LaminateSpec:
    """Simple laminate: phase F on volume fraction mu, G on 1 - mu.

    Phase layers are orthogonal to ``normal``; ``period_h`` is the period
    measured along the normal and ``offset`` the phase shift in units of the
    period.
    """

    F: np.ndarray
    G: np.ndarray
    mu: float
    normal: np.ndarray
    period_h: float = 1.0
    offset: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def average(self) -> np.ndarray:
        return self.mu * self.F + (1.0 - self.mu) * self.G

    @property
    def degenerate(self) -> bool:
        return bool(np.array_equal(self.F, self.G))

    @property
    def amplitude(self) -> np.ndarray:
        """Vector a with F - G = outer(a, normal)."""
        return (self.F - self.G) @ self.normal


def classify_rank_one(Fe: MsElement, Ge: MsElement, sys: SlipSystem,
                      tol: float = MEMBERSHIP_TOL) -> RankOneClass:
    gamma, zeta = Fe.gamma, Ge.gamma
    theta = wrap_angle(Fe.R.theta - Ge.R.theta)
    s, m = sys.s_vec, sys.m_vec
    if abs(theta) <= tol:
        if abs(gamma - zeta) <= tol:
            return RankOneClass("not_rank_one")
        return RankOneClass("case_i", a=(gamma - zeta) * (Fe.R.matrix @ s), n=m.copy())
    if math.pi - abs(theta) <= tol:
        return RankOneClass("not_rank_one", degenerate=True)
    d = gamma - zeta
    if abs(d - 2.0 * math.tan(theta / 2.0)) > tol:
        return RankOneClass("not_rank_one")
    n = 2.0 * s + (gamma + zeta) * m
    n_norm = float(np.linalg.norm(n))
    a = (d / (4.0 + d * d)) * n_norm * (Ge.R.matrix @ (-d * s + 2.0 * m))
    return RankOneClass("case_ii", a=a, n=n / n_norm)


def horizontal_connection(gamma: float, sys: SlipSystem) -> tuple[float, Rotation]:
    """Partner slip and relative rotation for a rank-one jump with normal e2."""
    if sys.is_e1:
        raise Unconstrained("for s = e1 any zeta != gamma with equal rotations works")
    s1, s2 = sys.s
    zeta = 2.0 * s1 / s2 - gamma
    return zeta, Rotation(2.0 * math.atan((gamma - zeta) / 2.0))


def laminate_decompose_Ns(N, sys: SlipSystem, tol: float = MEMBERSHIP_TOL) -> LaminateSpec:
    """Split N in Ns \\ Ms into rank-one connected F, G in Ms with |Fm| = |Gm| = |Nm|.

    The laminate normal is s. Both roots of the volume-fraction quadratic are
    tried; the one whose compatible rotation gives Gm = Nm is returned (the
    smaller mu on a tie).
    """
    N = np.asarray(N, dtype=float)
    if not membership(N, "Ns", sys, tol=tol):
        raise NotInNs("matrix is not in N_s")
    s, m = sys.s_vec, sys.m_vec
    if membership(N, "Ms", sys, tol=tol):
        return LaminateSpec(N.copy(), N.copy(), 0.5, s.copy(), extras={"gamma": 0.0})

    Ns, Nm = N @ s, N @ m
    gamma = math.sqrt(max(float(Nm @ Nm) - 1.0, 0.0))
    c = 2.0 * gamma / (1.0 + gamma * gamma)
    # |s + c mu (m - gamma s)|^2 = |Ns|^2  <=>  mu^2 - mu + (1 - |Ns|^2)/(2 c gamma) = 0
    disc = 1.0 - 2.0 * (1.0 - float(Ns @ Ns)) / (c * gamma)
    root = math.sqrt(max(disc, 0.0))
    theta = 2.0 * math.atan(gamma)
    candidates = []
    for mu in sorted({0.5 * (1.0 - root), 0.5 * (1.0 + root)}):
        if not (0.0 < mu < 1.0):
            continue
        v = s + c * mu * (m - gamma * s)
        q = math.atan2(Ns[1], Ns[0]) - math.atan2(v[1], v[0])
        Q = Rotation(wrap_angle(q))
        R = Q @ Rotation(theta)
        G = slip_deformation(Q, -gamma, sys)
        F = slip_deformation(R, gamma, sys)
        err = float(np.linalg.norm(G @ m - Nm))
        candidates.append((err, mu, F, G, R, Q))
    if not candidates:
        raise NotInNs("no admissible volume fraction found")
    matches = [cand for cand in candidates if cand[0] <= 10.0 * tol + 1e-12]
    err, mu, F, G, R, Q = (matches or sorted(candidates, key=lambda c_: c_[0]))[0]
    return LaminateSpec(F, G, mu, s.copy(), extras={
        "gamma": gamma, "zeta": -gamma, "R": R, "Q": Q, "selection_residual": err,
    })


def n_from_gamma(R: Rotation, gamma: float, lam: float, sys: SlipSystem,
                 tol: float = IDENTITY_TOL) -> np.ndarray:
    """Soft-layer gradient N = R(I + (gamma/lambda) e1 (x) e2)."""
    K = k_interval(sys, lam)
    if not K.contains(gamma, tol):
        raise GammaOutOfRange(f"gamma={gamma} not in K_(s,lambda)=[{K.lo}, {K.hi}]")
    return shear_e1(R, gamma / lam)


def gamma_from_n(N, R: Rotation, lam: float, sys: SlipSystem,
                 tol: float = MEMBERSHIP_TOL) -> float:
    N = np.asarray(N, dtype=float)
    if not membership(N, "Ns", sys, tol=tol):
        raise NotInNs("matrix is not in N_s")
    if np.linalg.norm(N[:, 0] - R.matrix[:, 0]) > tol:
        raise IncompatibleRotation("N e1 differs from R e1")
    return lam * float(N[:, 0] @ N[:, 1])


def laminate_residuals(spec: LaminateSpec, N, sys: SlipSystem) -> dict:
    """Verification residuals of a laminate decomposition of N."""
    N = np.asarray(N, dtype=float)
    m = sys.m_vec
    nm = np.linalg.norm(N @ m)
    return {
        "average": float(np.abs(spec.average - N).max()),
        "fm": abs(float(np.linalg.norm(spec.F @ m)) - nm),
        "gm": abs(float(np.linalg.norm(spec.G @ m)) - nm),
        "det_jump": abs(float(np.linalg.det(spec.F - spec.G))),
        "F_in_Ms": _ms_residual(spec.F, sys),
        "G_in_Ms": _ms_residual(spec.G, sys),
        "jump_tangential": float(np.linalg.norm((spec.F - spec.G) @ np.array(
            [-spec.normal[1], spec.normal[0]]))),
    }


def _ms_residual(A, sys):
    return max(abs(float(np.linalg.det(A)) - 1.0),
               abs(float(np.linalg.norm(A @ sys.s_vec)) - 1.0))


__all__ = [
    "RankOneClass", "LaminateSpec", "classify_rank_one", "horizontal_connection",
    "laminate_decompose_Ns", "n_from_gamma", "gamma_from_n", "laminate_residuals",
]
