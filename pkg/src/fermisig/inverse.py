"""Geometry from the spectrum: curve-length bounds, isospectral pairs, reconstruction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CurveLeavesDomain, InvariantViolation, MixedCausalType, RootNotFound, WindowTooSmall
from .geometry import (
    ConformalDomain,
    CurveSample,
    Point,
    SimpleDomain,
    curve_inside,
    curve_length,
    flat_base,
)
from .sigop import OperatorMatrix, localized_hs_norm
from .spectral import SpectrumReport

FOUR_PI = 4 * np.pi


# ------------------------------------------------------------------ length bounds

@dataclass(frozen=True)
class BoundCheck:
    spectral_value: float
    length: float
    bound: float
    margin: float

    def holds(self, tol=1e-9) -> bool:
        return self.margin >= -tol


def _checked_length(c: CurveSample, kind: str, d=None, f=None) -> float:
    if c.kind != kind:
        raise MixedCausalType(f"expected a {kind} curve, got {c.kind}")
    if d is not None and not curve_inside(d, c):
        raise CurveLeavesDomain("curve is not contained in the domain")
    return curve_length(c, f)


def bound_timelike(report: SpectrumReport, c: CurveSample, d=None) -> BoundCheck:
    """Largest eigenvalue against length/4pi for a timelike curve in the domain."""
    length = _checked_length(c, "timelike", d)
    lam = float(np.max(report.eigenvalues)) if len(report.eigenvalues) else 0.0
    return BoundCheck(lam, length, length / FOUR_PI, lam - length / FOUR_PI)


def bound_spacelike(report: SpectrumReport, c: CurveSample, d=None) -> BoundCheck:
    """tr S+ against length/4pi for a spacelike curve in the domain."""
    length = _checked_length(c, "spacelike", d)
    tp = report.positive_trace
    return BoundCheck(tp, length, length / FOUR_PI, tp - length / FOUR_PI)


def _cell_corner(d: SimpleDomain, k, l, which):
    """Corner of cell (k, l) (0-based): bottom/top/left/right as a Point."""
    xb = d.breakpoints
    u0, u1 = xb[l], xb[l + 1]
    v0, v1 = -xb[k + 1], -xb[k]
    u, v = {"bottom": (u0, v0), "top": (u1, v1), "left": (u0, v1), "right": (u1, v0)}[which]
    return Point.from_uv(u, v)


def _chains(d: SimpleDomain, step):
    """Maximal runs of included cells (k + j*dk, l + j*dl)."""
    dk, dl = step
    inc = d.incidence
    K = d.K
    runs = []
    for k, l in d.cells():
        pk, pl = k - dk, l - dl
        if 0 <= pk < K and 0 <= pl < K and inc[pk, pl]:
            continue  # not the start of a run
        run = []
        while 0 <= k < K and 0 <= l < K and inc[k, l]:
            run.append((k, l))
            k, l = k + dk, l + dl
        runs.append(run)
    return runs


def timelike_test_curves(d: SimpleDomain):
    """Inextendible chains of cell diagonals (bottom to top corners).

    Moving up a timelike chain goes from cell (k, l) to (k - 1, l + 1).
    """
    curves = []
    for run in _chains(d, (-1, 1)):
        pts = [_cell_corner(d, *run[0], "bottom")] + [_cell_corner(d, k, l, "top") for k, l in run]
        curves.append(CurveSample(tuple(pts), "timelike"))
    return curves


def spacelike_test_curves(d: SimpleDomain):
    """Chains of cell diagonals from left to right corners, (k, l) -> (k + 1, l + 1)."""
    curves = []
    for run in _chains(d, (1, 1)):
        pts = [_cell_corner(d, *run[0], "left")] + [_cell_corner(d, k, l, "right") for k, l in run]
        curves.append(CurveSample(tuple(pts), "spacelike"))
    return curves


def cauchy_curve(d) -> CurveSample:
    """The Cauchy segment t = 0, the longest spacelike curve in the domain."""
    return CurveSample((Point(0.0, 0.0), Point(0.0, d.b)), "spacelike")


# ------------------------------------------------------------------ isospectral pair

@dataclass(frozen=True)
class IsospectralPair:
    delta: float
    params_T: tuple
    params_Ttilde: tuple
    spectra: tuple
    domain_T: SimpleDomain
    domain_Ttilde: SimpleDomain
    spectral_gap: float
    charpoly_gap: float
    asymptotic_a: float
    spacelike_lengths: tuple
    spacelike_lengths_matrix_units: tuple

    @property
    def a_offset(self) -> float:
        return self.params_T[0] - self.asymptotic_a

    @property
    def length_difference(self) -> float:
        return abs(self.spacelike_lengths[0] - self.spacelike_lengths[1])


def pair_matrices(a, b, delta):
    c = delta / (a * b)
    T = np.array([[a, np.sqrt(a * b), 0.0], [0.0, b, np.sqrt(b * c)], [0.0, 0.0, c]])
    Tt = np.array([[1.0, 1.0, np.sqrt(delta)], [0.0, 1.0, np.sqrt(delta)], [0.0, 0.0, delta]])
    return T, Tt


def pair_equations(a, b, delta):
    """Differences of the invariants e2 and e1 of T*T and T~*T~ (det agrees by construction).

    The first value equals half the e2 difference, the second the trace difference.
    """
    d = delta
    eq1 = (-1 + a * a * b * b - d + a * d + b * d - 3 * d * d
           + d * d / a ** 2 + d * d / b ** 2 + d * d / (a * b))
    eq2 = 3 - a * a - a * b - b * b + 2 * d - d / a + d * d - d * d / (a * a * b * b)
    return eq1, eq2


def _b_branch(a, delta):
    """Root of the quadratic in b obtained from a^2 eq2 + eq1 = 0 (times b), nearest 1."""
    d = delta
    q2 = d - a ** 3
    q1 = 3 * a * a - a ** 4 + 2 * d * a * a + d * d * a * a - 1 - d - 3 * d * d + d * d / a ** 2
    q0 = d * d / a
    roots = np.roots([q2, q1, q0])
    roots = roots[np.abs(roots.imag) < 1e-12].real
    roots = roots[roots > 0]
    if roots.size == 0:
        raise RootNotFound(f"no positive b for a = {a}")
    return float(roots[np.argmin(np.abs(roots - 1))])


def _domain_from_widths(widths, incidence):
    return SimpleDomain(np.concatenate([[0.0], np.cumsum(widths)]), np.asarray(incidence, dtype=bool))


def isospectral_pair(delta: float) -> IsospectralPair:
    if not 0 < delta <= 0.05:
        raise InvariantViolation("0 < delta <= 0.05", f"got {delta}")

    def residual(a):
        return pair_equations(a, _b_branch(a, delta), delta)[0]

    lo, hi = 1.0 + 1e-4 * np.sqrt(delta), 1.0 + 2 * np.sqrt(delta)
    try:
        a = brentq(residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError as exc:
        raise RootNotFound(f"no sign change of the invariant equation in [{lo}, {hi}]") from exc
    b = _b_branch(a, delta)
    c = delta / (a * b)
    T, Tt = pair_matrices(a, b, delta)
    ev = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    evt = np.sort(np.linalg.eigvalsh(Tt.T @ Tt))[::-1]
    cp = np.poly(T.T @ T)
    cpt = np.poly(Tt.T @ Tt)
    upper = [[1, 1, 0], [0, 1, 1], [0, 0, 1]]
    full = [[1, 1, 1], [0, 1, 1], [0, 0, 1]]
    wT = np.sqrt(2) * np.array([a, b, c])
    wTt = np.sqrt(2) * np.array([1.0, 1.0, delta])
    return IsospectralPair(
        delta=delta,
        params_T=(a, b, c),
        params_Ttilde=(1.0, 1.0, delta),
        spectra=(ev, evt),
        domain_T=_domain_from_widths(wT, upper),
        domain_Ttilde=_domain_from_widths(wTt, full),
        spectral_gap=float(np.max(np.abs(ev - evt))),
        charpoly_gap=float(np.max(np.abs(cp - cpt))),
        asymptotic_a=1.0 + np.sqrt(5 * delta / 8),
        spacelike_lengths=(float(wT.sum()), float(wTt.sum())),
        spacelike_lengths_matrix_units=(a + b + c, 2.0 + delta),
    )


# ------------------------------------------------------------------ reconstruction

@dataclass(frozen=True)
class ReconstructionField:
    t: np.ndarray
    x: np.ndarray
    values: np.ndarray
    window: int
    truth: np.ndarray | None = None

    @property
    def indicator(self):
        return self.values > 0.5

    @property
    def sup_error(self) -> float | None:
        if self.truth is None:
            return None
        inside = self.truth > 0
        if not np.any(inside):
            return 0.0
        return float(np.max(np.abs(self.values[inside] - self.truth[inside]) / self.truth[inside]))

    def indicator_agreement(self) -> float | None:
        if self.truth is None:
            return None
        return float(np.mean(self.indicator == (self.truth > 0)))

    def total_volume(self, b: float) -> float:
        """Sum of density times beam area (the windows tile the bounding diamond)."""
        P = self.values.shape[0]
        return float(np.sum(self.values) * 0.5 * (b / P) ** 2)


def reconstruct_volume_density(op: OperatorMatrix, window: int = 8, domain=None) -> ReconstructionField:
    """Squared volume density at the centres of window beams.

    Left-handed rows in the window I and right-handed columns in J see the
    beam u in I, -v in J, a lightlike parallelogram of area |I||J|/2; the
    localized HS norm times 8 pi^2 divided by that area estimates f^2 at its
    centre i+(c_I, c_J).  ``domain`` supplies the true field for error reports.
    """
    if window < 2:
        raise WindowTooSmall(f"window of {window} cells is below 2")
    n = op.n
    P = n // window
    if P < 1:
        raise WindowTooSmall(f"window of {window} cells exceeds the grid of {n}")
    h = op.h
    edges = np.arange(P + 1) * window * h
    centres = 0.5 * (edges[1:] + edges[:-1])
    area = 0.5 * (window * h) ** 2
    # same sums as localized_hs_norm over each window pair, in one reduction
    if op.kind in ("massive", "galerkin"):
        localized_hs_norm(op, (edges[0], edges[1]), (edges[0], edges[1]))  # raises NotChiral
    LR = np.abs(op.blocks()[1][:P * window, :P * window]) ** 2
    hs = LR.reshape(P, window, P, window).sum(axis=(1, 3))
    vals = 8 * np.pi ** 2 * hs / area
    CI, CJ = np.meshgrid(centres, centres, indexing="ij")
    t = 0.5 * (CI - CJ)
    x = 0.5 * (CI + CJ)
    truth = None
    if domain is not None:
        inside = flat_base(domain).contains_array(t, x)
        truth = inside.astype(float)
        if isinstance(domain, ConformalDomain):
            truth[inside] = domain.f_values(t[inside], x[inside]) ** 2
    return ReconstructionField(t, x, vals, window, truth)
