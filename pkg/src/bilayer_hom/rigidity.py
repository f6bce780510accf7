"""Rotation diagnostics for rigid layers and the one-dimensional interface estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import E1, Rotation
from .errors import StripNotRigid
from .microstructure import (
    SOFT, GradientRaster, LayerGeometry, PiecewiseAffineField, RectDomain, clip_band,
    layer_classify, polygon_area, whole_rigid_strips,
)

PROCRUSTES_ZERO = 1e-14


@dataclass
class LayerRotationTrace:
    layer_index: list
    rotations: list
    total_variation: float
    max_neighbor_gap: float
    residuals: list

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.rotations])

    def gaps(self) -> list:
        """Frobenius distance of each rotation to its predecessor (0 for the first)."""
        mats = [r.matrix for r in self.rotations]
        return [0.0] + [float(np.linalg.norm(b - a)) for a, b in zip(mats, mats[1:])]


def procrustes_rotation(M) -> Rotation:
    """Closest rotation to M in the Frobenius norm (2x2 closed form)."""
    M = np.asarray(M, dtype=float)
    c = M[0, 0] + M[1, 1]
    s = M[1, 0] - M[0, 1]
    if math.hypot(c, s) <= PROCRUSTES_ZERO:
        raise StripNotRigid("rotation part of the mean gradient vanishes", residual=math.inf)
    return Rotation(math.atan2(s, c))


def make_trace(layers, rotations, residuals=None) -> LayerRotationTrace:
    mats = [r.matrix for r in rotations]
    gaps = [float(np.linalg.norm(b - a)) for a, b in zip(mats, mats[1:])]
    return LayerRotationTrace(list(layers), list(rotations), float(sum(gaps)),
                              max(gaps, default=0.0),
                              list(residuals) if residuals is not None else [0.0] * len(mats))


def fit_layer_rotations(source, geom: LayerGeometry, domain: RectDomain | None = None,
                        threshold: float = 1e-4) -> LayerRotationTrace:
    """One rotation per rigid strip lying wholly inside the domain.

    ``source`` is a :class:`PiecewiseAffineField` or a :class:`GradientRaster`.
    The rotation is the Procrustes fit of the strip-mean gradient; a strip
    whose gradients deviate from it by more than ``threshold`` (max entry for
    fields, RMS Frobenius for rasters) raises :class:`StripNotRigid`.
    """
    if domain is None:
        domain = source.domain
    strips = whole_rigid_strips(geom, domain)
    if len(strips) < 2:
        raise ValueError("need at least two whole rigid strips in the domain")
    layers, rots, res = [], [], []
    for k, ya, yb in strips:
        if isinstance(source, PiecewiseAffineField):
            rot, r = _fit_field_strip(source, ya, yb)
        elif isinstance(source, GradientRaster):
            rot, r = _fit_raster_strip(source, geom, ya, yb)
        else:
            raise TypeError("source must be a PiecewiseAffineField or GradientRaster")
        if r > threshold:
            raise StripNotRigid(f"layer {k}: Procrustes residual {r:.3e} > {threshold:.1e}",
                                residual=r, layer=k)
        layers.append(k)
        rots.append(rot)
        res.append(r)
    return make_trace(layers, rots, res)


def _fit_field_strip(field_: PiecewiseAffineField, ya, yb):
    acc = np.zeros((2, 2))
    grads = []
    for p in field_.pieces:
        if p.phase == SOFT:
            continue
        ys = p.polygon[:, 1]
        if ys.max() <= ya or ys.min() >= yb:
            continue
        area = polygon_area(clip_band(p.polygon, ya, yb)) if p.phase is None else p.area
        if area <= 0.0:
            continue
        acc += area * p.A
        grads.append(p.A)
    if not grads:
        raise StripNotRigid(f"no rigid pieces in strip [{ya}, {yb}]", residual=math.inf)
    rot = procrustes_rotation(acc)
    Q = rot.matrix
    return rot, max(float(np.abs(A - Q).max()) for A in grads)


def _fit_raster_strip(raster: GradientRaster, geom, ya, yb):
    rows = [j for j, y in enumerate(raster.y)
            if ya < y < yb and layer_classify((0.0, y), geom) != SOFT]
    if not rows:
        raise StripNotRigid(f"no raster rows inside strip [{ya}, {yb}]", residual=math.inf)
    block = raster.grad[rows].reshape(-1, 2, 2)
    rot = procrustes_rotation(block.mean(axis=0))
    dev = block - rot.matrix
    return rot, float(np.sqrt((dev ** 2).sum(axis=(1, 2)).mean()))


def one_d_bound_check(L: float, H: float, R1: Rotation, R2: Rotation,
                      n_grid: int = 8) -> tuple[float, float]:
    """Minimal interface energy between two rotated rigid boundaries.

    The lower boundary of (0, L) x (0, H) carries R1 x + b1 and the upper one
    R2 x + b2. Interpolating linearly in x2 leaves
    (1/H) int_0^L |x1 (R2 - R1) e1 + H R2 e2 + b|^2 dx1, minimized over
    b = b2 - b1 with Gauss-Legendre quadrature (exact for n_grid >= 2).
    Returns (lhs_min, L^3/(24 H) |R1 - R2|^2).
    """
    if not (L > 0 and H > 0):
        raise ValueError("L and H must be positive")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    Q1, Q2 = R1.matrix, R2.matrix
    nodes, weights = np.polynomial.legendre.leggauss(int(n_grid))
    x = 0.5 * L * (nodes + 1.0)
    w = 0.5 * L * weights
    v = (Q2 - Q1) @ E1
    f = np.outer(x, v) + H * Q2[:, 1]
    b = -(w @ f) / L
    r = f + b
    lhs = float(w @ (r ** 2).sum(axis=1)) / H
    rhs = L ** 3 / (24.0 * H) * float(np.sum((Q1 - Q2) ** 2))
    return lhs, rhs


def interpolant_bound(trace: LayerRotationTrace, epsilon: float) -> float:
    """Sum of eps |R^i - R^(i-1)|^2 over consecutive layers."""
    return float(sum(epsilon * g * g for g in trace.gaps()[1:]))


def sigma_vs_interpolant(trace: LayerRotationTrace, epsilon: float) -> float:
    """Squared L2 distance between the layer step function and its interpolant.

    The step function equals R^i on [i eps, (i+1) eps); the interpolant is
    linear between the layer midpoints and constant beyond the outer ones.
    Both are functions of x2 only, so the distance is a 1-D integral.
    """
    if len(trace.rotations) < 2:
        raise ValueError("trace needs at least two layers")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    mats = [r.matrix for r in trace.rotations]
    total = 0.0
    for A, B in zip(mats, mats[1:]):
        D = B - A
        # midpoint of A to the jump: Pi - Sigma runs from 0 to D/2;
        # jump to midpoint of B: from -D/2 to 0
        for p, q in ((np.zeros((2, 2)), 0.5 * D), (-0.5 * D, np.zeros((2, 2)))):
            total += 0.5 * epsilon * _linear_sq_integral(p, q)
    bound = interpolant_bound(trace, epsilon)
    if total > bound + 1e-12:
        raise AssertionError(f"interpolant gap {total} exceeds bound {bound}")
    return total


def _linear_sq_integral(p, q) -> float:
    """int_0^1 |p + t (q - p)|^2 dt."""
    return float(np.sum(p * p + p * q + q * q)) / 3.0


def variation_energy_check(field_: PiecewiseAffineField, geom: LayerGeometry,
                           domain: RectDomain | None = None) -> tuple[float, float]:
    """Compare sum |R^i - R^(i-1)|^2 with (24 eps lam / L^3) int_soft |grad u e2|^2.

    Only soft strips between consecutive whole rigid strips are integrated.
    Returns (variation_sum, energy_side).
    """
    domain = field_.domain if domain is None else domain
    trace = fit_layer_rotations(field_, geom, domain)
    L = domain.width
    strips = whole_rigid_strips(geom, domain)
    energy = 0.0
    for (k0, _a0, top0), (k1, bot1, _b1) in zip(strips, strips[1:]):
        if k1 != k0 + 1:
            continue
        for p in field_.pieces:
            if p.phase not in (SOFT, None):
                continue
            poly = clip_band(p.polygon, top0, k1 * geom.eps + geom.lam * geom.eps)
            if len(poly) < 3:
                continue
            col = p.A[:, 1]
            energy += polygon_area(poly) * float(col @ col)
    var = float(sum(g * g for g in trace.gaps()[1:]))
    return var, 24.0 * geom.eps * geom.lam / L ** 3 * energy


def synthetic_layer_field(thetas, geom: LayerGeometry, width: float = 1.0) -> PiecewiseAffineField:
    """Field whose k-th bilayer has identity soft strip and rigid rotation thetas[k].

    Values are not matched across strips; the field only serves rotation fits.
    """
    from .microstructure import AffinePiece

    pieces = []
    for k, th in enumerate(thetas):
        y0, y1, y2 = k * geom.eps, geom.soft_top(k), (k + 1) * geom.eps
        pieces.append(AffinePiece(_rect(width, y0, y1), np.eye(2), np.zeros(2), SOFT, 0))
        pieces.append(AffinePiece(_rect(width, y1, y2), Rotation(th).matrix, np.zeros(2),
                                  "rigid", 0))
    dom = RectDomain(0.0, width, 0.0, len(thetas) * geom.eps)
    return PiecewiseAffineField(pieces, dom, meta={"builder": "synthetic_layers"})


def _rect(width, y0, y1):
    return np.array([[0.0, y0], [width, y0], [width, y1], [0.0, y1]])


def trace_rows(trace: LayerRotationTrace):
    for k, r, g in zip(trace.layer_index, trace.rotations, trace.gaps()):
        yield (k, r.theta, g)
