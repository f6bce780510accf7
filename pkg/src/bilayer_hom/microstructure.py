"""Piecewise-affine deformation fields on layered domains.

Layers are anchored at x2 = 0: the bilayer with index k occupies
[k eps, (k+1) eps), its soft part is [k eps, k eps + lambda eps).

Every builder returns a :class:`PiecewiseAffineField` whose pieces are
convex polygons aligned with the soft/rigid strips. Gradients are constant per
piece, so energies and means are exact polygon integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import E1, Rotation, SlipSystem, k_interval, membership, shear_e1
from .errors import GammaOutOfRange, GeometryError, PeriodTooCoarse
from .rank_one import LaminateSpec, laminate_decompose_Ns, n_from_gamma

SOFT = "soft"
RIGID = "rigid"

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class LayerGeometry:
    lam: float
    eps: float

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.eps > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.eps}")

    def layer_index(self, x2: float) -> int:
        return math.floor(x2 / self.eps)

    def soft_top(self, k: int) -> float:
        return (k + self.lam) * self.eps


@dataclass(frozen=True)
class RectDomain:
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain must have positive area")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def rect(self, y0=None, y1=None) -> np.ndarray:
        y0 = self.y_min if y0 is None else y0
        y1 = self.y_max if y1 is None else y1
        return np.array([[self.x_min, y0], [self.x_max, y0],
                         [self.x_max, y1], [self.x_min, y1]], dtype=float)


@dataclass(frozen=True, eq=False)
class AffinePiece:
    """Map x -> A x + b on a convex polygon (counterclockwise vertices).

    ``phase`` is ``"soft"``, ``"rigid"`` or ``None`` when the piece spans
    both kinds of strip; ``band`` indexes the gamma-profile band.
    """

    polygon: np.ndarray
    A: np.ndarray
    b: np.ndarray
    phase: str | None = None
    band: int | None = None

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    @property
    def centroid(self) -> np.ndarray:
        return polygon_centroid(self.polygon)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.A.T + self.b

    def integral(self) -> np.ndarray:
        """Exact integral of the affine map over the polygon."""
        area = self.area
        return area * (self.A @ self.centroid + self.b)

    def shifted(self, db) -> "AffinePiece":
        return AffinePiece(self.polygon, self.A, self.b - db, self.phase, self.band)


@dataclass(frozen=True)
class LedgerEdge:
    """Horizontal soft/rigid interface segment across which values jump.

    ``jump_sq`` is the integral of |u_soft - u_rigid|^2 along the segment.
    """

    y: float
    x0: float
    x1: float
    jump_sq: float
    max_jump: float

    @property
    def length(self) -> float:
        return self.x1 - self.x0


@dataclass
class PiecewiseAffineField:
    pieces: list
    domain: RectDomain
    mean_value: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ledger: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ledger_total(self) -> float:
        """RMS value jump per unit interface length over the ledger edges."""
        length = sum(e.length for e in self.ledger)
        if length == 0.0:
            return 0.0
        return math.sqrt(sum(e.jump_sq for e in self.ledger) / length)

    def mean_gradient(self, pieces=None) -> np.ndarray:
        pieces = self.pieces if pieces is None else pieces
        areas = np.array([p.area for p in pieces])
        grads = np.array([p.A for p in pieces])
        return np.tensordot(areas, grads, axes=1) / areas.sum()

    def total_area(self) -> float:
        return float(sum(p.area for p in self.pieces))

    def integral(self) -> np.ndarray:
        return sum((p.integral() for p in self.pieces), np.zeros(2))

    def bands(self) -> list:
        return sorted({p.band for p in self.pieces if p.band is not None})


@dataclass(frozen=True)
class GammaProfile:
    """Piecewise-constant shear gamma(x2) = values[i] on (breakpoints[i], breakpoints[i+1])."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(t) for t in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) != len(vals) + 1 or not vals:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, gamma: float, domain: RectDomain) -> "GammaProfile":
        return cls((domain.y_min, domain.y_max), (gamma,))

    @property
    def n_bands(self) -> int:
        return len(self.values)

    def band_of(self, y: float) -> int:
        i = int(np.searchsorted(self.breakpoints, y, side="right")) - 1
        return min(max(i, 0), self.n_bands - 1)

    def band_interval(self, i: int) -> tuple:
        return self.breakpoints[i], self.breakpoints[i + 1]

    def check_spans(self, domain: RectDomain, tol: float = 1e-12) -> None:
        if (abs(self.breakpoints[0] - domain.y_min) > tol
                or abs(self.breakpoints[-1] - domain.y_max) > tol):
            raise GeometryError("profile breakpoints must span [y_min, y_max] of the domain")


# ---------------------------------------------------------------------------
# polygon helpers


def polygon_area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    if a == 0.0:
        return poly.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def clip_halfplane(poly, normal, c) -> np.ndarray:
    """Keep the part of a convex polygon with normal . x <= c."""
    if len(poly) == 0:
        return poly
    d = poly @ np.asarray(normal, dtype=float) - c
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        dp, dq = d[i], d[(i + 1) % n]
        if dp <= 0:
            out.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            out.append(p + (q - p) * (dp / (dp - dq)))
    if len(out) < 3:
        return np.empty((0, 2))
    return np.array(out)


def clip_band(poly, y0, y1) -> np.ndarray:
    poly = clip_halfplane(poly, (0.0, -1.0), -y0)
    return clip_halfplane(poly, (0.0, 1.0), y1)


def points_in_polygon(points, poly, tol: float = 1e-12) -> np.ndarray:
    """Boolean mask of points inside (or on) a counterclockwise convex polygon."""
    inside = np.ones(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        e = q - p
        cross = e[0] * (points[:, 1] - p[1]) - e[1] * (points[:, 0] - p[0])
        inside &= cross >= -tol * max(1.0, float(np.hypot(*e)))
    return inside


# ---------------------------------------------------------------------------
# layer bookkeeping


def layer_classify(x, geom: LayerGeometry) -> str:
    t = x[1] / geom.eps
    return SOFT if t - math.floor(t) < geom.lam else RIGID


def strip_segments(geom: LayerGeometry, y0: float, y1: float, cuts=()) -> list:
    """Split [y0, y1] at strip boundaries and extra cuts.

    Returns (ya, yb, phase, layer_index) tuples in increasing order.
    """
    k0 = math.floor(y0 / geom.eps) - 1
    k1 = math.ceil(y1 / geom.eps) + 1
    marks = {y0, y1}
    for k in range(k0, k1 + 1):
        for y in (k * geom.eps, geom.soft_top(k)):
            if y0 < y < y1:
                marks.add(y)
    marks.update(c for c in cuts if y0 < c < y1)
    ys = sorted(marks)
    merged = [ys[0]]
    for y in ys[1:]:
        if y - merged[-1] > _EDGE_TOL * max(1.0, abs(y)):
            merged.append(y)
    merged[-1] = y1
    out = []
    for ya, yb in zip(merged, merged[1:]):
        mid = 0.5 * (ya + yb)
        out.append((ya, yb, layer_classify((0.0, mid), geom), geom.layer_index(mid)))
    return out


def whole_rigid_strips(geom: LayerGeometry, domain: RectDomain) -> list:
    """(layer_index, y_bottom, y_top) for rigid strips fully inside the domain."""
    out = []
    k0 = math.floor(domain.y_min / geom.eps) - 1
    k1 = math.ceil(domain.y_max / geom.eps) + 1
    for k in range(k0, k1 + 1):
        ya, yb = geom.soft_top(k), (k + 1) * geom.eps
        if ya >= domain.y_min - _EDGE_TOL and yb <= domain.y_max + _EDGE_TOL:
            out.append((k, ya, yb))
    return out


# ---------------------------------------------------------------------------
# builders


def _finish(pieces, domain, ledger=(), meta=None) -> PiecewiseAffineField:
    total = sum((p.integral() for p in pieces), np.zeros(2))
    mean = total / domain.area
    pieces = [p.shifted(mean) for p in pieces]
    return PiecewiseAffineField(pieces, domain, mean, list(ledger), dict(meta or {}))


def _layered_pieces(slopes, R: Rotation, geom, domain, cuts=()):
    """Continuous pieces of u = R x + (int_{y_min}^{x2} g) R e1.

    ``slopes(ya, yb, phase)`` returns (g, band) for a strip segment.
    """
    Re1 = R.matrix @ E1
    pieces = []
    acc = 0.0
    for ya, yb, phase, _k in strip_segments(geom, domain.y_min, domain.y_max, cuts):
        g, band = slopes(ya, yb, phase)
        A = shear_e1(R, g)
        b = (acc - g * ya) * Re1
        pieces.append(AffinePiece(domain.rect(ya, yb), A, b, phase, band))
        acc += g * (yb - ya)
    return pieces


def build_recovery_e1(profile: GammaProfile, R: Rotation, geom: LayerGeometry,
                      domain: RectDomain) -> PiecewiseAffineField:
    """Slip gamma/lambda in every soft strip, rigid rotation R elsewhere."""
    profile.check_spans(domain)
    if all(v == 0.0 for v in profile.values):
        piece = AffinePiece(domain.rect(), R.matrix.copy(), np.zeros(2), None, 0)
        return _finish([piece], domain, meta={"builder": "recovery_e1"})

    def slopes(ya, yb, phase):
        band = profile.band_of(0.5 * (ya + yb))
        g = profile.values[band] / geom.lam if phase == SOFT else 0.0
        return g, band

    pieces = _layered_pieces(slopes, R, geom, domain, profile.breakpoints[1:-1])
    return _finish(pieces, domain, meta={"builder": "recovery_e1"})


def build_single_scale(gamma: float, R: Rotation, sys: SlipSystem, geom: LayerGeometry,
                       domain: RectDomain) -> PiecewiseAffineField:
    """Non-admissible auxiliary field: N on soft strips, R on rigid strips."""
    n_from_gamma(R, gamma, geom.lam, sys)
    profile = GammaProfile.constant(gamma, domain)
    field_ = build_recovery_e1(profile, R, geom, domain)
    field_.meta["builder"] = "single_scale"
    return field_


def effective_period(h: float, sys: SlipSystem, geom: LayerGeometry) -> float:
    """Largest period <= h whose laminate repeats eps/k along x1."""
    s1 = abs(sys.s[0])
    if s1 == 0.0:
        return h
    k = math.ceil(geom.eps * s1 / h - 1e-12)
    return geom.eps * s1 / k


def _laminate_strip(piece: AffinePiece, spec: LaminateSpec, h: float, t0: float) -> list:
    """Replace a soft rectangle carrying N x + b by laminate pieces F / G."""
    s = spec.normal
    mu = spec.mu
    a = spec.amplitude
    d = 0.5 * mu * (1.0 - mu) * h * a
    tvals = piece.polygon @ s
    j0 = math.floor((tvals.min() - t0) / h) - 1
    j1 = math.ceil((tvals.max() - t0) / h) + 1
    out = []
    for j in range(j0, j1):
        base = t0 + j * h
        for lo, hi, A, shift in (
            (base, base + mu * h, spec.F, -(1.0 - mu) * base * a),
            (base + mu * h, base + h, spec.G, mu * (base + h) * a),
        ):
            poly = clip_halfplane(piece.polygon, s, hi)
            poly = clip_halfplane(poly, -s, -lo)
            if len(poly) < 3 or polygon_area(poly) <= 1e-13 * piece.area:
                continue
            out.append(AffinePiece(poly, A, piece.b + shift - d, SOFT, piece.band))
    return out


def _edge_jump(piece_a: AffinePiece, piece_b: AffinePiece, y: float):
    """Integral of |u_a - u_b|^2 along the part of piece_a's boundary on x2 = y."""
    poly = piece_a.polygon
    on = np.abs(poly[:, 1] - y) <= 1e-12 * max(1.0, abs(y))
    if on.sum() < 2:
        return None
    xs = poly[on, 0]
    x0, x1 = float(xs.min()), float(xs.max())
    if x1 - x0 <= 0.0:
        return None
    pts = np.array([[x0, y], [0.5 * (x0 + x1), y], [x1, y]])
    diff = piece_a(pts) - piece_b(pts)
    sq = (diff ** 2).sum(axis=1)
    # Simpson is exact for the quadratic |linear|^2
    jump_sq = (x1 - x0) * (sq[0] + 4.0 * sq[1] + sq[2]) / 6.0
    return LedgerEdge(y, x0, x1, float(jump_sq), float(np.sqrt(sq.max())))


def build_piecewise(profile: GammaProfile, R: Rotation, sys: SlipSystem,
                    geom: LayerGeometry, inner_period_h, domain: RectDomain,
                    tol: float = 1e-9) -> PiecewiseAffineField:
    """Localized recovery construction for piecewise-constant gamma.

    Band i is active only on bilayers inside the snapped interval
    [ceil(t_{i-1}/eps) eps, floor(t_i/eps) eps]; elsewhere the gradient is R.
    With ``inner_period_h=None`` soft strips carry N (single-scale field),
    otherwise N is replaced by a non-stop simple laminate of period <= h.
    """
    profile.check_spans(domain)
    lam, eps = geom.lam, geom.eps
    K = k_interval(sys, lam)
    for g in profile.values:
        if not K.contains(g, 1e-12):
            raise GammaOutOfRange(f"gamma={g} not in K_(s,lambda)=[{K.lo}, {K.hi}]")
    h_eff = None
    if inner_period_h is not None:
        if inner_period_h <= 0:
            raise ValueError("inner period must be positive")
        if inner_period_h > lam * eps / 4.0:
            raise PeriodTooCoarse(
                f"h={inner_period_h} exceeds lambda*eps/4={lam * eps / 4.0}")
        h_eff = effective_period(inner_period_h, sys, geom)

    active = []
    for i in range(profile.n_bands):
        t_lo, t_hi = profile.band_interval(i)
        a_lo = math.ceil(t_lo / eps - 1e-9) * eps
        a_hi = math.floor(t_hi / eps + 1e-9) * eps
        active.append((a_lo, a_hi))
    cuts = {c for iv in active for c in iv} | set(profile.breakpoints[1:-1])

    def active_band(y):
        for i, (a_lo, a_hi) in enumerate(active):
            if a_lo <= y <= a_hi and a_hi > a_lo:
                return i
        return None

    def slopes(ya, yb, phase):
        mid = 0.5 * (ya + yb)
        i = active_band(mid)
        if i is None:
            return 0.0, profile.band_of(mid)
        return (profile.values[i] / lam if phase == SOFT else 0.0), i

    base = _layered_pieces(slopes, R, geom, domain, sorted(cuts))
    meta = {"builder": "piecewise" if inner_period_h is None else "nested_laminate",
            "h_requested": inner_period_h, "h_effective": h_eff,
            "active_intervals": active, "laminates": {}}
    if h_eff is None:
        return _finish(base, domain, meta=meta)

    specs = {}
    pieces = []
    ledger = []
    for idx, piece in enumerate(base):
        spec = None
        if piece.phase == SOFT and active_band(piece.centroid[1]) is not None:
            if piece.band not in specs:
                specs[piece.band] = laminate_decompose_Ns(piece.A, sys, tol)
            spec = specs[piece.band]
        if spec is None or spec.degenerate:
            pieces.append(piece)
            continue
        y_bot = float(piece.polygon[:, 1].min())
        y_top = float(piece.polygon[:, 1].max())
        k = geom.layer_index(0.5 * (y_bot + y_top))
        t0 = float(np.array([domain.x_min, k * eps]) @ spec.normal)
        lam_pieces = _laminate_strip(piece, spec, h_eff, t0)
        pieces.extend(lam_pieces)
        for y, nb in ((y_bot, idx - 1), (y_top, idx + 1)):
            if 0 <= nb < len(base) and base[nb].phase == RIGID:
                for lp in lam_pieces:
                    edge = _edge_jump(lp, base[nb], y)
                    if edge is not None:
                        ledger.append(edge)
    for band, spec in specs.items():
        meta["laminates"][band] = LaminateSpec(
            spec.F, spec.G, spec.mu, spec.normal, h_eff,
            _phase_offset(domain, spec, h_eff), spec.extras)
    out = _finish(pieces, domain, ledger, meta)
    out.meta["ledger_constant"] = out.ledger_total / h_eff if h_eff else 0.0
    return out


def _phase_offset(domain, spec, h):
    t0 = float(np.array([domain.x_min, domain.y_min]) @ spec.normal)
    frac = (t0 / h) % 1.0
    return 0.0 if frac >= 1.0 - 1e-12 else frac


def build_nested_laminate(gamma: float, R: Rotation, sys: SlipSystem, geom: LayerGeometry,
                          inner_period_h: float, domain: RectDomain,
                          tol: float = 1e-9) -> PiecewiseAffineField:
    """Admissible recovery field for constant gamma (laminates in soft strips)."""
    return build_piecewise(GammaProfile.constant(gamma, domain), R, sys, geom,
                           inner_period_h, domain, tol)


# ---------------------------------------------------------------------------
# diagnostics


def hadamard_violations(field_: PiecewiseAffineField, tol: float = 1e-9) -> list:
    """Shared edges where the gradient jump or the values are incompatible.

    Edges recorded in the incompatibility ledger are skipped. Returns a list
    of (piece_i, piece_j, tangential_jump, value_gap) tuples above ``tol``.
    """
    pieces = field_.pieces
    edges = {}
    for i, p in enumerate(pieces):
        poly = p.polygon
        for k in range(len(poly)):
            a, b = poly[k], poly[(k + 1) % len(poly)]
            t = b - a
            L = float(np.hypot(*t))
            if L <= 1e-14:
                continue
            t = t / L
            # undirected line key: direction folded into [0, pi), offset along normal
            ang = math.atan2(t[1], t[0]) % math.pi
            nrm = np.array([-math.sin(ang), math.cos(ang)])
            key = (round(ang, 9), round(float(a @ nrm), 9))
            u = np.array([math.cos(ang), math.sin(ang)])
            s0, s1 = sorted((float(a @ u), float(b @ u)))
            edges.setdefault(key, []).append((i, s0, s1, u, nrm * float(a @ nrm)))
    ledger = field_.ledger
    out = []
    for segs in edges.values():
        segs.sort(key=lambda e: e[1])
        for x in range(len(segs)):
            i, a0, a1, u, off = segs[x]
            for y in range(x + 1, len(segs)):
                j, b0, b1, _, _ = segs[y]
                if b0 >= a1 - 1e-12:
                    break
                if i == j:
                    continue
                lo, hi = max(a0, b0), min(a1, b1)
                if hi - lo <= 1e-12:
                    continue
                mid = off + u * 0.5 * (lo + hi)
                if _on_ledger(ledger, mid):
                    continue
                tj = float(np.linalg.norm((pieces[i].A - pieces[j].A) @ u))
                ends = np.array([off + u * lo, mid, off + u * hi])
                vg = float(np.abs(pieces[i](ends) - pieces[j](ends)).max())
                if tj > tol or vg > tol:
                    out.append((i, j, tj, vg))
    return out


def _on_ledger(ledger, pt) -> bool:
    for e in ledger:
        if abs(pt[1] - e.y) <= 1e-12 and e.x0 - 1e-12 <= pt[0] <= e.x1 + 1e-12:
            return True
    return False


def admissibility_violation(field_: PiecewiseAffineField, sys: SlipSystem, tol=1e-10) -> float:
    """Worst distance of a piece gradient from Ms (soft) or SO(2) (rigid)."""
    from .algebra import ms_violation, so2_violation

    worst = 0.0
    for p in field_.pieces:
        if p.phase == RIGID or membership(p.A, "SO2", sys, tol=tol):
            v = so2_violation(p.A) if p.phase == RIGID else 0.0
        else:
            v = ms_violation(p.A, sys)
        worst = max(worst, v)
    return worst


# ---------------------------------------------------------------------------
# rasters


@dataclass
class GradientRaster:
    """Gradients sampled at cell centres; ``grad[j, i]`` is at (x[i], y[j])."""

    grad: np.ndarray
    x: np.ndarray
    y: np.ndarray
    domain: RectDomain
    piece_index: np.ndarray | None = None

    @property
    def shape(self) -> tuple:
        return self.grad.shape[:2]

    def mean_gradient(self) -> np.ndarray:
        return self.grad.reshape(-1, 2, 2).mean(axis=0)


def rasterize_gradient(field_: PiecewiseAffineField, resolution) -> GradientRaster:
    nx, ny = int(resolution[0]), int(resolution[1])
    if nx < 1 or ny < 1:
        raise ValueError("resolution must be at least (1, 1)")
    dom = field_.domain
    xs = dom.x_min + (np.arange(nx) + 0.5) * dom.width / nx
    ys = dom.y_min + (np.arange(ny) + 0.5) * dom.height / ny
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    owner = np.full(len(pts), -1, dtype=np.int64)
    for idx, p in enumerate(field_.pieces):
        lo, hi = p.polygon.min(axis=0), p.polygon.max(axis=0)
        cand = np.flatnonzero((owner < 0)
                              & (pts[:, 0] >= lo[0] - 1e-12) & (pts[:, 0] <= hi[0] + 1e-12)
                              & (pts[:, 1] >= lo[1] - 1e-12) & (pts[:, 1] <= hi[1] + 1e-12))
        if cand.size == 0:
            continue
        hit = points_in_polygon(pts[cand], p.polygon)
        owner[cand[hit]] = idx
    if (owner < 0).any():
        raise GeometryError(f"{int((owner < 0).sum())} raster cells not covered by any piece")
    grads = np.array([p.A for p in field_.pieces])[owner]
    return GradientRaster(grads.reshape(ny, nx, 2, 2), xs, ys, dom, owner.reshape(ny, nx))
