"""2x2 algebra over the constraint sets of the bilayer model.

Matrices are plain ``numpy`` arrays of shape (2, 2). The extended-real value
+inf is represented by ``math.inf`` and is never fed into further arithmetic;
callers test with ``math.isinf`` first.

Sets handled here (s a unit slip direction, m = s^perp its plane normal):

* SO2       rotations
* Ms        {det F = 1, |Fs| = 1}        single-slip gradients R(I + g s(x)m)
* Ns        {det F = 1, |Fs| <= 1}       quasiconvex hull of Ms
* Me1capNs  Me1 intersected with Ns, optionally with the shear in K_{s,lambda}
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GammaOutOfRange, NotInSet, UnsupportedTau

MEMBERSHIP_TOL = 1e-9
IDENTITY_TOL = 1e-12

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
EYE = np.eye(2)

SET_IDS = ("SO2", "Ms", "Ns", "Me1capNs")


def mat(a11, a12, a21, a22) -> np.ndarray:
    return np.array([[a11, a12], [a21, a22]], dtype=float)


def perp(v) -> np.ndarray:
    """Counterclockwise quarter turn, (a1, a2) -> (-a2, a1)."""
    return np.array([-v[1], v[0]], dtype=float)


def wrap_angle(theta: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    t = math.remainder(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    return t


def rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Rotation:
    theta: float

    @property
    def matrix(self) -> np.ndarray:
        return rot(self.theta)

    @classmethod
    def from_matrix(cls, Q) -> "Rotation":
        # angle of the conformal part; exact for Q in SO(2)
        Q = np.asarray(Q, dtype=float)
        return cls(math.atan2(Q[1, 0] - Q[0, 1], Q[0, 0] + Q[1, 1]))

    def __matmul__(self, other):
        if isinstance(other, Rotation):
            return Rotation(wrap_angle(self.theta + other.theta))
        return self.matrix @ other


@dataclass(frozen=True)
class SlipSystem:
    """Unit slip direction ``s`` and slip-plane normal ``m = s^perp``.

    Build instances with :func:`make_slip_system` so the sign convention
    s2 >= 0 (and s = e1 whenever s2 = 0) is applied.
    """

    s: tuple
    m: tuple

    @property
    def s_vec(self) -> np.ndarray:
        return np.array(self.s, dtype=float)

    @property
    def m_vec(self) -> np.ndarray:
        return np.array(self.m, dtype=float)

    @property
    def is_e1(self) -> bool:
        return self.s[1] == 0.0

    @property
    def is_e2(self) -> bool:
        return self.s[0] == 0.0

    @property
    def S(self) -> np.ndarray:
        """Rotation with columns (s | m)."""
        return np.column_stack([self.s_vec, self.m_vec])

    def slip_tensor(self) -> np.ndarray:
        return np.outer(self.s_vec, self.m_vec)


def make_slip_system(s_raw, snap: float = 1e-14) -> SlipSystem:
    s = np.asarray(s_raw, dtype=float).reshape(2)
    norm = float(np.hypot(s[0], s[1]))
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError(f"slip direction must be a non-zero finite vector, got {s_raw!r}")
    s = s / norm
    if abs(s[1]) <= snap:
        s = np.array([1.0, 0.0])
    elif abs(s[0]) <= snap:
        s = np.array([0.0, 1.0])
    elif s[1] < 0:
        s = -s
    m = perp(s)
    # avoid negative zeros leaking into reprs and sign tests
    s = s + 0.0
    m = m + 0.0
    return SlipSystem(s=(float(s[0]), float(s[1])), m=(float(m[0]), float(m[1])))


@dataclass(frozen=True)
class KInterval:
    """Admissible macroscopic shears K_{s,lambda}.

    ``kind`` is one of ``"singleton_zero"``, ``"closed"``, ``"full_line"``.
    """

    kind: str
    lo: float = 0.0
    hi: float = 0.0

    def contains(self, gamma: float, tol: float = MEMBERSHIP_TOL) -> bool:
        if self.kind == "full_line":
            return math.isfinite(gamma)
        return self.lo - tol <= gamma <= self.hi + tol

    @property
    def length(self) -> float:
        if self.kind == "full_line":
            return math.inf
        return self.hi - self.lo


@dataclass(frozen=True)
class MsElement:
    R: Rotation
    gamma: float

    def to_matrix(self, sys: SlipSystem) -> np.ndarray:
        return slip_deformation(self.R, self.gamma, sys)


def _check_lambda(lam: float) -> None:
    if not (0.0 < lam < 1.0):
        raise ValueError(f"volume fraction lambda must lie in (0, 1), got {lam}")


def slip_deformation(R: Rotation, gamma: float, sys: SlipSystem) -> np.ndarray:
    """R (I + gamma s (x) m)."""
    return R.matrix @ (EYE + gamma * sys.slip_tensor())


def shear_e1(R: Rotation, gamma: float) -> np.ndarray:
    """R (I + gamma e1 (x) e2), the macroscopic gradients of the limit model."""
    return R.matrix @ mat(1.0, gamma, 0.0, 1.0)


def ms_violation(F, sys: SlipSystem) -> float:
    F = np.asarray(F, dtype=float)
    return max(abs(np.linalg.det(F) - 1.0), abs(np.linalg.norm(F @ sys.s_vec) - 1.0))


def so2_violation(F) -> float:
    F = np.asarray(F, dtype=float)
    return max(abs(np.linalg.det(F) - 1.0), float(np.abs(F.T @ F - EYE).max()))


def me1_violation(F) -> float:
    F = np.asarray(F, dtype=float)
    return max(abs(np.linalg.det(F) - 1.0), abs(np.linalg.norm(F[:, 0]) - 1.0))


def decompose_Ms(F, sys: SlipSystem, tol: float = MEMBERSHIP_TOL) -> MsElement:
    """Invert F = R(I + gamma s (x) m); gamma = Fs . Fm."""
    F = np.asarray(F, dtype=float)
    viol = ms_violation(F, sys)
    if viol > tol:
        raise NotInSet(f"matrix not in M_s: violation {viol:.3e} > tol {tol:.1e}")
    s, m = sys.s_vec, sys.m_vec
    gamma = float((F @ s) @ (F @ m))
    R = F @ (EYE - gamma * np.outer(s, m))
    return MsElement(Rotation.from_matrix(R), gamma)


def decompose_e1(F) -> MsElement:
    """Split F in Me1 as R(I + gamma e1 (x) e2) without a membership check."""
    F = np.asarray(F, dtype=float)
    gamma = float(F[:, 0] @ F[:, 1])
    R = F @ mat(1.0, -gamma, 0.0, 1.0)
    return MsElement(Rotation.from_matrix(R), gamma)


def k_interval(sys: SlipSystem, lam: float) -> KInterval:
    _check_lambda(lam)
    s1, s2 = sys.s
    if sys.is_e1:
        return KInterval("full_line", -math.inf, math.inf)
    if sys.is_e2:
        return KInterval("singleton_zero", 0.0, 0.0)
    end = -2.0 * (s1 / s2) * lam
    if s1 * s2 > 0:
        return KInterval("closed", end, 0.0)
    return KInterval("closed", 0.0, end)


def membership(F, set_id: str, sys: SlipSystem, lambda_opt=None,
               tol: float = MEMBERSHIP_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    F = np.asarray(F, dtype=float)
    det_ok = abs(np.linalg.det(F) - 1.0) <= tol
    if set_id == "SO2":
        return so2_violation(F) <= tol
    if set_id == "Ms":
        return det_ok and abs(np.linalg.norm(F @ sys.s_vec) - 1.0) <= tol
    if set_id == "Ns":
        return det_ok and np.linalg.norm(F @ sys.s_vec) <= 1.0 + tol
    if set_id == "Me1capNs":
        if not (det_ok and abs(np.linalg.norm(F[:, 0]) - 1.0) <= tol
                and np.linalg.norm(F @ sys.s_vec) <= 1.0 + tol):
            return False
        if lambda_opt is None:
            return True
        return k_interval(sys, lambda_opt).contains(float(F[:, 0] @ F[:, 1]), tol)
    raise ValueError(f"unknown set id {set_id!r}; expected one of {SET_IDS}")


def w_soft(F, sys: SlipSystem, tau: float = 0.0, tol: float = MEMBERSHIP_TOL) -> float:
    if tau < 0:
        raise ValueError("tau must be non-negative")
    F = np.asarray(F, dtype=float)
    if ms_violation(F, sys) > tol:
        return math.inf
    gamma = float((F @ sys.s_vec) @ (F @ sys.m_vec))
    return gamma * gamma + tau * abs(gamma)


def w_rigid(F, tol: float = MEMBERSHIP_TOL) -> float:
    return 0.0 if so2_violation(F) <= tol else math.inf


def w_heterogeneous(y, F, sys: SlipSystem, lam: float, tau: float = 0.0,
                    tol: float = MEMBERSHIP_TOL) -> float:
    """Y-periodic density: rigid for frac(y2) >= lambda, soft below."""
    _check_lambda(lam)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if y[1] - math.floor(y[1]) >= lam:
        return w_rigid(F, tol)
    return w_soft(F, sys, tau, tol)


def w_hom(F, sys: SlipSystem, lam: float, tau: float = 0.0,
          tol: float = MEMBERSHIP_TOL) -> float:
    """Homogenized density: finite on R(I + g e1 (x) e2) with g in K_{s,lambda}."""
    _check_lambda(lam)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau > 0 and not sys.is_e1:
        raise UnsupportedTau("tau > 0 is only supported for s = e1")
    F = np.asarray(F, dtype=float)
    if me1_violation(F) > tol:
        return math.inf
    gamma = decompose_e1(F).gamma
    if not k_interval(sys, lam).contains(gamma, tol):
        return math.inf
    if sys.is_e1:
        return gamma * gamma / lam + tau * abs(gamma)
    s1, s2 = sys.s
    return (s1 * s1 / lam) * gamma * gamma - 2.0 * s1 * s2 * gamma


def w_hom_relaxed_form(F, sys: SlipSystem, lam: float,
                       tol: float = MEMBERSHIP_TOL) -> float:
    """Second representation (1/lam)|Fm - (1-lam)Rm|^2 - lam (tau = 0)."""
    _check_lambda(lam)
    F = np.asarray(F, dtype=float)
    if me1_violation(F) > tol:
        return math.inf
    el = decompose_e1(F)
    if not k_interval(sys, lam).contains(el.gamma, tol):
        return math.inf
    m = sys.m_vec
    v = F @ m - (1.0 - lam) * (el.R.matrix @ m)
    return float(v @ v) / lam - lam


def require_in_k(gamma: float, sys: SlipSystem, lam: float,
                 tol: float = IDENTITY_TOL) -> None:
    K = k_interval(sys, lam)
    if not K.contains(gamma, tol):
        raise GammaOutOfRange(f"gamma={gamma} not in K_(s,lambda)=[{K.lo}, {K.hi}]")
