"""Domains in the Minkowski plane and conformally flat surfaces over them.

Coordinates are ``(t, x)`` with light-cone coordinates ``u = t + x`` and
``v = t - x``.  Every domain sits inside the causal diamond ``D`` of the
Cauchy segment ``(0, b)``, which in light-cone coordinates is the square
``0 < u < b, -b < v < 0``.  All regions used by the toolkit (causal sets,
beams, causal diamonds) are unions of such ``(u, v)`` rectangles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon

from .errors import (
    BoundaryTooClose,
    CornerOutsideDomain,
    IndexOutOfRange,
    InvariantViolation,
    MixedCausalType,
    UnsupportedExact,
)
from .expr import Expression

SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class Point:
    t: float
    x: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.x)):
            raise InvariantViolation("finite point", f"({self.t}, {self.x})")

    @property
    def u(self):
        return self.t + self.x

    @property
    def v(self):
        return self.t - self.x

    @classmethod
    def from_uv(cls, u, v):
        return cls(0.5 * (u + v), 0.5 * (u - v))


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uv_rect_polygon(u0, u1, v0, v1) -> Polygon:
    """Polygon in (x, t) plane coordinates of the light-cone rectangle."""
    corners = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
    return Polygon([(0.5 * (u - v), 0.5 * (u + v)) for u, v in corners])


# ------------------------------------------------------------------ domains

class SimpleDomain:
    """Union of lightlike rectangles over a breakpoint lattice.

    Cell ``(k, l)`` (1-based) collects the points with ``x - t`` in the k-th
    interval and ``x + t`` in the l-th interval; ``k < l`` are cells to the
    future of the Cauchy line, ``k > l`` to its past.
    """

    kind = "simple"

    def __init__(self, breakpoints: Sequence[float], incidence):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.incidence = np.asarray(incidence, dtype=bool)
        self.validated = False
        if self.breakpoints.ndim != 1 or self.breakpoints.size < 2:
            raise InvariantViolation("K >= 1", "need at least two breakpoints")
        K = self.breakpoints.size - 1
        if self.incidence.shape != (K, K):
            raise InvariantViolation("incidence shape", f"expected {(K, K)}, got {self.incidence.shape}")

    @property
    def K(self):
        return self.breakpoints.size - 1

    @property
    def b(self):
        return float(self.breakpoints[-1])

    @property
    def widths(self):
        return np.diff(self.breakpoints)

    def cells(self):
        """Included cells as 0-based ``(k, l)`` pairs."""
        return [tuple(c) for c in np.argwhere(self.incidence)]

    def contains_array(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        p = x - t
        u = x + t
        xb = self.breakpoints
        K = self.K
        klo = np.searchsorted(xb, p, side="left") - 1
        khi = np.searchsorted(xb, p, side="right") - 1
        llo = np.searchsorted(xb, u, side="left") - 1
        lhi = np.searchsorted(xb, u, side="right") - 1
        ok = np.ones(np.broadcast(t, x).shape, dtype=bool)
        for k in (klo, khi):
            for l in (llo, lhi):
                valid = (k >= 0) & (k < K) & (l >= 0) & (l < K)
                kk = np.clip(k, 0, K - 1)
                ll = np.clip(l, 0, K - 1)
                ok &= valid & self.incidence[kk, ll]
        return ok

    def uv_rectangles(self):
        xb = self.breakpoints
        return [(xb[l], xb[l + 1], -xb[k + 1], -xb[k]) for k, l in self.cells()]

    def polygon(self):
        return shapely.unary_union([uv_rect_polygon(*r) for r in self.uv_rectangles()])

    def to_graph(self) -> "GraphDomain":
        """The same set described by its future and past boundary graphs."""
        xb = self.breakpoints
        mids = 0.5 * (xb[:, None] + xb[None, :])
        xs = np.unique(np.concatenate([xb, mids.ravel()]))
        xs = xs[(xs >= 0) & (xs <= self.b)]
        top = np.zeros_like(xs)
        bot = np.zeros_like(xs)
        for k, l in self.cells():
            hi = np.minimum(xs - xb[k], xb[l + 1] - xs)
            lo = np.maximum(xs - xb[k + 1], xb[l] - xs)
            inside = hi >= lo
            top = np.where(inside, np.maximum(top, hi), top)
            bot = np.where(inside, np.minimum(bot, lo), bot)
        top[[0, -1]] = 0.0
        bot[[0, -1]] = 0.0
        return GraphDomain(self.b, np.column_stack([xs, top]), np.column_stack([xs, bot]))

    def __repr__(self):
        return f"SimpleDomain(breakpoints={self.breakpoints.tolist()}, cells={len(self.cells())})"


class GraphDomain:
    """Region between two piecewise-linear graphs ``T-(x) <= 0 <= T+(x)``."""

    kind = "graph"

    def __init__(self, b: float, plus, minus):
        self.b = float(b)
        self.plus = np.asarray(plus, dtype=float)
        self.minus = np.asarray(minus, dtype=float)
        self.validated = False
        for name, arr in (("t_plus", self.plus), ("t_minus", self.minus)):
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
                raise InvariantViolation(f"{name} polyline", "need at least two (x, T) vertices")

    @classmethod
    def diamond(cls, b=1.0):
        return cls(b, [(0, 0), (b / 2, b / 2), (b, 0)], [(0, 0), (b / 2, -b / 2), (b, 0)])

    @classmethod
    def triangle(cls, b=1.0):
        return cls(b, [(0, 0), (b / 2, b / 2), (b, 0)], [(0, 0), (b, 0)])

    def t_plus(self, x):
        return np.interp(x, self.plus[:, 0], self.plus[:, 1])

    def t_minus(self, x):
        return np.interp(x, self.minus[:, 0], self.minus[:, 1])

    def contains_array(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return (x > 0) & (x < self.b) & (t < self.t_plus(x)) & (t > self.t_minus(x))

    def polygon(self):
        upper = [(x, t) for x, t in self.plus]
        lower = [(x, t) for x, t in self.minus[::-1]]
        return Polygon(upper + lower[1:-1])

    def to_graph(self):
        return self

    def total_variation(self):
        """Total variation of T+' and T-' with T' extended by zero outside [0, b]."""
        out = {}
        for name, arr in (("plus", self.plus), ("minus", self.minus)):
            dx = np.diff(arr[:, 0])
            keep = dx > 0
            slopes = np.diff(arr[:, 1])[keep] / dx[keep]
            padded = np.concatenate([[0.0], slopes, [0.0]])
            out[name] = float(np.sum(np.abs(np.diff(padded))))
        return out

    def __repr__(self):
        return f"GraphDomain(b={self.b}, plus={self.plus.tolist()}, minus={self.minus.tolist()})"


class GridField:
    """Samples of a scalar field on a rectangular (t, x) grid, bilinearly interpolated."""

    def __init__(self, t_nodes, x_nodes, values):
        self.t_nodes = np.asarray(t_nodes, dtype=float)
        self.x_nodes = np.asarray(x_nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.t_nodes.size, self.x_nodes.size):
            raise InvariantViolation("grid field shape", "values must be len(t) x len(x)")

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t, x = np.broadcast_arrays(t, x)
        tn, xn = self.t_nodes, self.x_nodes
        i = np.clip(np.searchsorted(tn, t) - 1, 0, tn.size - 2)
        j = np.clip(np.searchsorted(xn, x) - 1, 0, xn.size - 2)
        a = np.clip((t - tn[i]) / (tn[i + 1] - tn[i]), 0, 1)
        c = np.clip((x - xn[j]) / (xn[j + 1] - xn[j]), 0, 1)
        v = self.values
        return ((1 - a) * (1 - c) * v[i, j] + a * (1 - c) * v[i + 1, j]
                + (1 - a) * c * v[i, j + 1] + a * c * v[i + 1, j + 1])

    def spacing(self):
        return float(min(np.min(np.diff(self.t_nodes)), np.min(np.diff(self.x_nodes))))


FieldLike = Union[Expression, GridField, Callable]


class ConformalDomain:
    """Flat base domain carrying the metric ``f(t, x)^2 (dt^2 - dx^2)``."""

    kind = "conformal"

    def __init__(self, base, f: FieldLike):
        if isinstance(base, ConformalDomain):
            raise InvariantViolation("conformal base", "base must be flat")
        self.base = base
        self.f = f
        self.validated = False

    @property
    def b(self):
        return self.base.b

    def contains_array(self, t, x):
        return self.base.contains_array(t, x)

    def f_values(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return np.asarray(self.f(t, x), dtype=float) * np.ones_like(t)

    def polygon(self):
        return self.base.polygon()

    def __repr__(self):
        return f"ConformalDomain(base={self.base!r}, f={self.f!r})"


Domain = Union[SimpleDomain, GraphDomain, ConformalDomain]


def flat_base(d):
    return d.base if isinstance(d, ConformalDomain) else d


def is_flat(d):
    return not isinstance(d, ConformalDomain)


# ------------------------------------------------------------------ validation

def _causal_convexity_holes(inc):
    """Cells missing from the causal hull of the included cells.

    Cell (k, l) lies in the causal past of (k', l') when k >= k' and l <= l';
    every cell sandwiched between two included, causally related cells must
    itself be included.
    """
    K = inc.shape[0]
    cells = np.argwhere(inc)
    holes = set()
    for k, l in cells:
        for k2, l2 in cells:
            if k >= k2 and l <= l2:
                for kk in range(k2, k + 1):
                    for ll in range(l, l2 + 1):
                        if not inc[kk, ll]:
                            holes.add((kk + 1, ll + 1))
    return sorted(holes)


def validate_domain(d):
    """Check all invariants of ``d`` and return it marked as validated."""
    if isinstance(d, SimpleDomain):
        xb = d.breakpoints
        if not np.all(np.isfinite(xb)):
            raise InvariantViolation("finite breakpoints")
        if xb[0] != 0.0:
            raise InvariantViolation("x0 = 0", f"first breakpoint is {xb[0]}")
        if np.any(np.diff(xb) <= 0):
            raise InvariantViolation("strictly increasing breakpoints")
        missing = [k + 1 for k in range(d.K) if not d.incidence[k, k]]
        if missing:
            raise InvariantViolation("missing diagonal cell", f"cells {missing}")
        holes = _causal_convexity_holes(d.incidence)
        if holes:
            raise InvariantViolation("causal convexity", f"missing cells {holes}")
    elif isinstance(d, GraphDomain):
        if not (np.isfinite(d.b) and d.b > 0):
            raise InvariantViolation("b > 0")
        for name, arr, sign in (("t_plus", d.plus, 1.0), ("t_minus", d.minus, -1.0)):
            xs, ts = arr[:, 0], arr[:, 1]
            if not np.all(np.isfinite(arr)):
                raise InvariantViolation(f"finite {name}")
            if xs[0] != 0.0 or xs[-1] != d.b:
                raise InvariantViolation(f"{name} spans [0, b]", f"x range [{xs[0]}, {xs[-1]}]")
            if np.any(np.diff(xs) < 0):
                raise InvariantViolation(f"{name} x increasing")
            if ts[0] != 0.0 or ts[-1] != 0.0:
                raise InvariantViolation(f"{name} pinned to Cauchy endpoints", "T(0) = T(b) = 0 required")
            if np.any(sign * ts < 0):
                raise InvariantViolation(f"{name} sign", "need t_minus <= 0 <= t_plus")
            dx = np.diff(xs)
            dt = np.diff(ts)
            if np.any(np.abs(dt) > (1 + SLOPE_TOL) * dx):
                worst = np.max(np.abs(dt[dx > 0]) / dx[dx > 0]) if np.any(dx > 0) else np.inf
                raise InvariantViolation("non-timelike boundary", f"{name} has slope {worst:.6g}")
    elif isinstance(d, ConformalDomain):
        validate_domain(d.base)
        probe_t, probe_x = _probe_points(d.base, 41)
        try:
            fv = d.f_values(probe_t, probe_x)
        except Exception as exc:  # noqa: BLE001 - surfaced as invariant failure
            raise InvariantViolation("conformal factor evaluable", str(exc)) from exc
        if not np.all(np.isfinite(fv)):
            raise InvariantViolation("bounded conformal factor")
        if np.any(fv <= 0):
            raise InvariantViolation("nonpositive f", f"min f = {np.min(fv):.6g}")
    else:
        raise InvariantViolation("known domain kind", type(d).__name__)
    d.validated = True
    return d


def _probe_points(d, m):
    b = d.b
    u = (np.arange(m) + 0.5) / m * b
    v = -(np.arange(m) + 0.5) / m * b
    U, V = np.meshgrid(u, v)
    t = 0.5 * (U + V).ravel()
    x = 0.5 * (U - V).ravel()
    keep = d.contains_array(t, x)
    return t[keep], x[keep]


def bounding_diamond(d):
    """Light-cone rectangle ``(u0, u1, v0, v1)`` of the diamond over (0, b)."""
    return (0.0, d.b, -d.b, 0.0)


def contains(d, p: Point) -> bool:
    return bool(d.contains_array(p.t, p.x))


# ------------------------------------------------------------------ regions

@dataclass(frozen=True)
class Whole:
    def rects(self, b):
        return [(0.0, b, -b, 0.0)]


@dataclass(frozen=True)
class CausalSet:
    """``J(zeta)``: points joined to ``zeta`` by a causal curve."""
    p: Point

    def rects(self, b):
        u, v = self.p.u, self.p.v
        return [(u, b, v, 0.0), (0.0, u, -b, v)]


@dataclass(frozen=True)
class Beam:
    """``K_L(I) & K_R(J)``: ``x + t`` in ``I`` and ``x - t`` in ``J``."""
    I: tuple
    J: tuple

    def rects(self, b):
        return [(self.I[0], self.I[1], -self.J[1], -self.J[0])]


@dataclass(frozen=True)
class DiamondRegion:
    """Lightlike rectangle spanned by two points."""
    p: Point
    q: Point

    def rects(self, b):
        return [(min(self.p.u, self.q.u), max(self.p.u, self.q.u),
                 min(self.p.v, self.q.v), max(self.p.v, self.q.v))]


RegionSelector = Union[Whole, CausalSet, Beam, DiamondRegion]


def _clip_rect(r, b):
    u0, u1, v0, v1 = r
    u0, u1 = max(u0, 0.0), min(u1, b)
    v0, v1 = max(v0, -b), min(v1, 0.0)
    if u1 <= u0 or v1 <= v0:
        return None
    return (u0, u1, v0, v1)


def region_contains(region, b, t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = t + x
    v = t - x
    out = np.zeros(np.broadcast(t, x).shape, dtype=bool)
    for u0, u1, v0, v1 in region.rects(b):
        out |= (u > u0) & (u < u1) & (v > v0) & (v < v1)
    return out


def sample_diamond(b, samples, seed, stream=0):
    """Uniform samples (t, x) in the causal diamond over (0, b)."""
    g = rng_for(seed, stream)
    uv = g.random((samples, 2))
    u = uv[:, 0] * b
    v = -uv[:, 1] * b
    return 0.5 * (u + v), 0.5 * (u - v)


def _exact_volume(d, region):
    if isinstance(d, ConformalDomain):
        raise UnsupportedExact("conformal measure f^2 dt dx has no closed form here")
    b = d.b
    rects = [r for r in (_clip_rect(r, b) for r in region.rects(b)) if r is not None]
    if not rects:
        return 0.0
    if isinstance(d, SimpleDomain):
        total = 0.0
        for cu0, cu1, cv0, cv1 in d.uv_rectangles():
            for u0, u1, v0, v1 in rects:
                du = min(cu1, u1) - max(cu0, u0)
                dv = min(cv1, v1) - max(cv0, v0)
                if du > 0 and dv > 0:
                    total += 0.5 * du * dv
        return total
    poly = d.polygon()
    shape = shapely.unary_union([uv_rect_polygon(*r) for r in rects])
    return float(poly.intersection(shape).area)


def volume(d, region: RegionSelector = Whole(), method="exact", seed=0, samples=200_000,
           return_error=False):
    """Measure of ``region`` inside the domain (``f^2 dt dx`` for conformal domains)."""
    b = d.b
    if method == "exact":
        val, err = _exact_volume(d, region), 0.0
    elif method == "grid":
        m = max(int(np.sqrt(samples)), 8)
        # cell-centred grid in light-cone coordinates covering D
        c = (np.arange(m) + 0.5) / m * b
        U, V = np.meshgrid(c, -c)
        t = 0.5 * (U + V)
        x = 0.5 * (U - V)
        w = np.where(d.contains_array(t, x) & region_contains(region, b, t, x), 1.0, 0.0)
        if isinstance(d, ConformalDomain):
            w = w * np.where(w > 0, d.f_values(t, x), 1.0) ** 2
        val, err = float(np.sum(w) * 0.5 * (b / m) ** 2), 0.0
    elif method == "montecarlo":
        t, x = sample_diamond(b, samples, seed, stream=1)
        w = np.where(d.contains_array(t, x) & region_contains(region, b, t, x), 1.0, 0.0)
        if isinstance(d, ConformalDomain):
            w = w * np.where(w > 0, d.f_values(t, x), 1.0) ** 2
        area = 0.5 * b * b
        val = float(area * np.mean(w))
        err = float(area * np.std(w, ddof=1) / np.sqrt(samples))
    else:
        raise ValueError(f"unknown volume method {method!r}")
    return (val, err) if return_error else val


# ------------------------------------------------------------------ curves

@dataclass(frozen=True)
class CurveSample:
    vertices: tuple
    kind: str  # "timelike" | "spacelike"

    def __post_init__(self):
        if self.kind not in ("timelike", "spacelike"):
            raise ValueError("kind must be 'timelike' or 'spacelike'")
        object.__setattr__(self, "vertices", tuple(
            p if isinstance(p, Point) else Point(*p) for p in self.vertices))

    def segments(self):
        return list(zip(self.vertices[:-1], self.vertices[1:]))


def curve_length(c: CurveSample, f: FieldLike | None = None) -> float:
    """Minkowski length of a polyline; with ``f`` each segment is weighted by f at its midpoint."""
    total = 0.0
    for p, q in c.segments():
        dt = q.t - p.t
        dx = q.x - p.x
        timelike = abs(dt) > abs(dx)
        spacelike = abs(dt) < abs(dx)
        if (c.kind == "timelike" and not timelike) or (c.kind == "spacelike" and not spacelike):
            raise MixedCausalType(f"segment {p} -> {q} is not {c.kind}")
        seg = np.sqrt(abs(dt * dt - dx * dx))
        if f is not None:
            seg *= float(np.asarray(f(0.5 * (p.t + q.t), 0.5 * (p.x + q.x))))
        total += seg
    return float(total)


def curve_inside(d, c: CurveSample, tol=1e-12) -> bool:
    """True if the polyline lies in the closure of the domain."""
    poly = flat_base(d).polygon().buffer(tol)
    line = LineString([(p.x, p.t) for p in c.vertices])
    return bool(poly.covers(line))


def cell_area(d: SimpleDomain, k: int, l: int) -> float:
    """Area of cell (k, l), 1-based; zero for excluded cells."""
    if not (1 <= k <= d.K and 1 <= l <= d.K):
        raise IndexOutOfRange(f"cell ({k}, {l}) outside 1..{d.K}")
    if not d.incidence[k - 1, l - 1]:
        return 0.0
    w = d.widths
    return float(w[k - 1] * w[l - 1] / 2.0)


# ------------------------------------------------------------------ curvature

def _box_log_f(d: ConformalDomain, t, x):
    f = d.f
    if isinstance(f, Expression):
        ft, fx = f.diff("t"), f.diff("x")
        ftt, fxx = ft.diff("t"), fx.diff("x")
        F = f(t, x)
        return ((ftt(t, x) * F - ft(t, x) ** 2) - (fxx(t, x) * F - fx(t, x) ** 2)) / F ** 2
    if isinstance(f, GridField):
        h = f.spacing()
        if (np.any(t - h < f.t_nodes[0]) or np.any(t + h > f.t_nodes[-1])
                or np.any(x - h < f.x_nodes[0]) or np.any(x + h > f.x_nodes[-1])):
            raise BoundaryTooClose("three-point stencil leaves the sampled grid")
    else:
        h = 1e-4
    lf = lambda tt, xx: np.log(np.asarray(f(tt, xx), dtype=float))  # noqa: E731
    c = lf(t, x)
    return ((lf(t + h, x) - 2 * c + lf(t - h, x)) - (lf(t, x + h) - 2 * c + lf(t, x - h))) / h ** 2


def scalar_curvature(d: ConformalDomain, p: Point) -> float:
    """R = -(2/f^2) box(log f) with box = d_t^2 - d_x^2."""
    t, x = np.float64(p.t), np.float64(p.x)
    f = float(np.asarray(d.f(t, x)))
    return float(-2.0 / f ** 2 * _box_log_f(d, t, x))


def rectangle_corners(p: Point, q: Point):
    """The other two corners of the lightlike rectangle spanned by p and q."""
    return Point.from_uv(p.u, q.v), Point.from_uv(q.u, p.v)


def diamond_curvature_integral(d: ConformalDomain, p: Point, q: Point) -> float:
    """Corner formula -4 (log f(p) + log f(q) - log f(eta) - log f(eta'))."""
    eta, eta2 = rectangle_corners(p, q)
    for c in (p, q, eta, eta2):
        if not contains(d, c):
            raise CornerOutsideDomain(f"corner {c} outside the domain")
    lf = [float(np.log(np.asarray(d.f(np.float64(c.t), np.float64(c.x))))) for c in (p, q, eta, eta2)]
    return -4.0 * ((lf[0] + lf[1]) - (lf[2] + lf[3]))


# ------------------------------------------------------------------ generators

def random_simple_domain(seed: int, K_range=(1, 5), width_range=(0.2, 1.0), p_cell=0.35,
                         stream: int = 7) -> SimpleDomain:
    """Seeded random causally convex simple domain (closure of random off-diagonal cells)."""
    g = rng_for(seed, stream)
    K = int(g.integers(K_range[0], K_range[1] + 1))
    widths = g.uniform(width_range[0], width_range[1], size=K)
    inc = np.eye(K, dtype=bool)
    inc |= g.random((K, K)) < p_cell
    while True:
        holes = _causal_convexity_holes(inc)
        if not holes:
            break
        for k, l in holes:
            inc[k - 1, l - 1] = True
    return SimpleDomain(np.concatenate([[0.0], np.cumsum(widths)]), inc)
