"""Builders for the fermionic signature operator.

Matrices are laid out in chirality blocks: indices ``0..n-1`` are the
left-handed components at the grid points ``x_i = (i + 1/2) h`` and indices
``n..2n-1`` the right-handed ones.  ``entries`` hold the Nystrom matrix
``S(x_i, x_j) * weight_j``; :meth:`OperatorMatrix.hermitian` returns the
similar Hermitian matrix ``W^{1/2} M W^{-1/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirac import GAMMA0, GAMMA_U, GAMMA_V, QuadratureSpec, km_coefficients, plane_wave_modes
from .errors import EmptyInterval, InvariantViolation, NotChiral
from .geometry import ConformalDomain, GraphDomain, SimpleDomain, cell_area, flat_base

FOUR_PI = 4 * np.pi


@dataclass(frozen=True)
class OperatorMatrix:
    n: int
    b: float
    m: float
    weights: np.ndarray
    entries: np.ndarray
    kind: str = "flat"
    symmetrization_defect: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def h(self):
        return self.b / self.n

    @property
    def x(self):
        return (np.arange(self.n) + 0.5) * self.h

    def hermitian(self):
        w = np.sqrt(np.concatenate([self.weights, self.weights]))
        H = self.entries * w[:, None] / w[None, :]
        return 0.5 * (H + H.conj().T)

    def blocks(self):
        """(LL, LR, RL, RR) blocks of the Hermitian form."""
        H = self.hermitian()
        n = self.n
        return H[:n, :n], H[:n, n:], H[n:, :n], H[n:, n:]

    def is_chiral(self, tol=1e-12):
        LL, _, _, RR = self.blocks()
        scale = max(np.max(np.abs(self.hermitian())), 1e-300)
        return max(np.max(np.abs(LL)), np.max(np.abs(RR))) <= tol * scale


@dataclass(frozen=True)
class SimpleOperator:
    K: int
    T: np.ndarray
    widths: np.ndarray

    def block_matrix(self):
        """(2K)x(2K) matrix in the basis (L_1..L_K, R_1..R_K)."""
        K = self.K
        Z = np.zeros((K, K))
        return np.block([[Z, self.T.T], [self.T, Z]]) / (2 * np.pi * np.sqrt(2))


def build_simple(d: SimpleDomain) -> SimpleOperator:
    K = d.K
    T = np.array([[np.sqrt(cell_area(d, k, l)) for l in range(1, K + 1)] for k in range(1, K + 1)])
    return SimpleOperator(K, T, d.widths.copy())


def _grid(b, n):
    if n < 8:
        raise InvariantViolation("n >= 8", f"got n = {n}")
    h = b / n
    return h, (np.arange(n) + 0.5) * h


def _indicator_blocks(d, x, f=None):
    """chi (times f) at i+(x_i, x_j) and i-(x_i, x_j)."""
    X, Y = np.meshgrid(x, x, indexing="ij")
    t = 0.5 * (X - Y)
    s = 0.5 * (X + Y)
    plus = d.contains_array(t, s).astype(float)
    minus = d.contains_array(-t, s).astype(float)
    if f is not None:
        plus[plus > 0] *= f(t[plus > 0], s[plus > 0])
        minus[minus > 0] *= f(-t[minus > 0], s[minus > 0])
    return plus, minus


def _assemble_chiral(n, A_lr, A_rl):
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    M[:n, n:] = A_lr
    M[n:, :n] = A_rl
    return M


def build_flat_massless(d, n: int) -> OperatorMatrix:
    """Nystrom matrix of the massless kernel (1/4pi) [[0, chi(i+)], [chi(i-), 0]]."""
    d = flat_base(d)
    h, x = _grid(d.b, n)
    plus, minus = _indicator_blocks(d, x)
    M = _assemble_chiral(n, plus * h / FOUR_PI, minus * h / FOUR_PI)
    return OperatorMatrix(n, d.b, 0.0, np.full(n, h), M, kind="flat")


def build_conformal(d: ConformalDomain, n: int) -> OperatorMatrix:
    """Massless operator on a conformally flat surface, weights f(0, x_j) h."""
    h, x = _grid(d.b, n)
    plus, minus = _indicator_blocks(d.base, x, f=d.f_values)
    f0 = d.f_values(np.zeros_like(x), x)
    scale = 1.0 / np.sqrt(np.outer(f0, f0)) / FOUR_PI
    w = f0 * h
    M = _assemble_chiral(n, plus * scale * w[None, :], minus * scale * w[None, :])
    return OperatorMatrix(n, d.b, 0.0, w, M, kind="conformal")


# ------------------------------------------------------------------ massive kernel

def _ray_extent(g: GraphDomain, x, sign, future):
    """Parameter range of the lightlike ray (t, x + sign*t) inside the domain.

    Returns the sup (future=True, t >= 0) or inf (t <= 0) of the admissible t.
    The boundary graphs are non-timelike, so membership along a lightlike ray
    is monotone and bisection is exact up to rounding.
    """
    b = g.b
    x = np.asarray(x, dtype=float)
    if future:
        limit = np.where(sign < 0, x, b - x)
        lo, hi = np.zeros_like(x), limit.copy()
        inside = lambda t: t < g.t_plus(x + sign * t)  # noqa: E731
    else:
        limit = np.where(sign < 0, -(b - x), -x)
        lo, hi = limit.copy(), np.zeros_like(x)
        inside = lambda t: t > g.t_minus(x + sign * t)  # noqa: E731
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = inside(mid)
        if future:
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        else:
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
    return lo if future else hi


def _R_matrices(m, t, x):
    """Regular part as (..., 2, 2) via its scalar coefficients."""
    a, c0, c1 = km_coefficients(m, t, x)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 1, 1] = a
    out[..., 0, 1] = c0 + c1
    out[..., 1, 0] = c0 - c1
    return out


def _gauss_on(lo, hi, nodes):
    """Gauss-Legendre nodes/weights mapped to [lo, hi] (arrays broadcast)."""
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[..., None] + half[..., None] * xi, half[..., None] * wi


def _ray_terms(m, g, x, quad, left_factor, y=None, chunk_points=1 << 19):
    """delta x regular (left_factor=True) or regular x delta contributions, S(x_i, y_j).

    For the delta x regular term the delta part of k_m(-t, x - z) pins z to
    the rays z = x -+ t through (0, x); the regular factor R(t, z - y) is
    supported on one side of the point where the ray meets the light cone of
    (0, y).  The regular x delta term uses the rays through (0, y) instead.
    On the diagonal x = y the kernel jumps, and the mean of both one-sided
    limits is used.
    """
    y = x if y is None else y
    n = x.size
    total = np.zeros((n, y.size, 2, 2), dtype=complex)
    rows = max(1, chunk_points // (y.size * quad.ray_nodes))
    for sign, gamma in ((-1.0, GAMMA_U), (1.0, GAMMA_V)):
        ext_plus = _ray_extent(g, x if left_factor else y, sign, True)
        ext_minus = _ray_extent(g, x if left_factor else y, sign, False)
        for r0 in range(0, n, rows):
            X, Y = np.meshgrid(x[r0:r0 + rows], y, indexing="ij")
            if left_factor:
                tau_plus = np.broadcast_to(ext_plus[r0:r0 + rows, None], X.shape)
                tau_minus = np.broadcast_to(ext_minus[r0:r0 + rows, None], X.shape)
                t_star = -sign * 0.5 * (X - Y)
            else:
                tau_plus = np.broadcast_to(ext_plus[None, :], X.shape)
                tau_minus = np.broadcast_to(ext_minus[None, :], X.shape)
                t_star = sign * 0.5 * (X - Y)
            diag = t_star == 0
            half = np.where(diag, 0.5, 1.0)
            lo_f = np.maximum(t_star, 0.0)
            hi_f = np.maximum(np.where(t_star >= 0, tau_plus, 0.0), lo_f)
            hi_p = np.minimum(t_star, 0.0)
            lo_p = np.minimum(np.where(t_star <= 0, tau_minus, 0.0), hi_p)
            block = np.zeros(X.shape + (2, 2), dtype=complex)
            for lo, hi in ((lo_f, hi_f), (lo_p, hi_p)):
                tt, ww = _gauss_on(lo, hi, quad.ray_nodes)
                ww = ww * half[..., None]
                if left_factor:
                    # gamma R(t, x + sign t - y)
                    R = _R_matrices(m, tt, (X - Y)[..., None] + sign * tt)
                    block += np.einsum("ab,ijg,ijgbc->ijac", gamma, ww, R)
                else:
                    # R(-t, x - y - sign t) gamma
                    R = _R_matrices(m, -tt, (X - Y)[..., None] - sign * tt)
                    block += np.einsum("ijg,ijgab,bc->ijac", ww, R, gamma)
            total[r0:r0 + rows] += 0.5 * block
    return np.einsum("ijab,bc->ijac", total, GAMMA0)


def _lattice_nodes(g, n, quad):
    """Quadrature nodes (t, z) and weights on a light-cone lattice over the domain.

    Lattice lines sit at u = x_i and v = -x_j (the light cones of all grid
    points) and at u in {0, b}, v in {-b, 0}, so the regular factors are
    smooth on every lattice cell.
    """
    b = g.b
    h = b / n
    ub = np.concatenate([[0.0], (np.arange(n) + 0.5) * h, [b]])
    edges = np.unique(np.concatenate([ub[:-1, None] + (ub[1:, None] - ub[:-1, None])
                                      * np.linspace(0, 1, quad.refine + 1)[None, :]]).ravel())
    xi, wi = np.polynomial.legendre.leggauss(quad.nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    uq = (mid[:, None] + half[:, None] * xi).ravel()
    wq = (half[:, None] * wi).ravel()
    vq = -uq[::-1]
    wv = wq[::-1]
    U, V = np.meshgrid(uq, vq, indexing="ij")
    W = np.outer(wq, wv) * 0.5  # dt dz = du dv / 2
    t = 0.5 * (U + V)
    z = 0.5 * (U - V)
    keep = g.contains_array(t, z)
    return t[keep], z[keep], W[keep]


def _regular_regular(m, g, x, quad, chunk=4096):
    """2 pi int_M R(-t, x - z) R(t, z - y) dt dz gamma0 on a light-cone lattice.

    The left factor follows from the right one through R(-t, -w) = gamma0
    R(t, w)^dagger gamma0, so only one table of Bessel values is needed.
    """
    n = x.size
    t, z, w = _lattice_nodes(g, n, quad)
    G1 = np.zeros((n, n))
    G2 = np.zeros((n, n))
    G3 = np.zeros((n, n))
    G4 = np.zeros((n, n))
    for s in range(0, t.size, chunk):
        tt = t[s:s + chunk, None]
        zz = z[s:s + chunk, None]
        ww = w[s:s + chunk, None]
        a, c0, c1 = km_coefficients(m, tt, zz - x[None, :])
        alpha = np.ascontiguousarray(a.imag)
        bp = c0 + c1
        bm = c0 - c1
        G1 += alpha.T @ (ww * alpha)
        G2 += bp.T @ (ww * bm)
        G3 += alpha.T @ (ww * bp)
        G4 += alpha.T @ (ww * bm)
    AB = np.empty((n, n, 2, 2), dtype=complex)
    AB[..., 0, 0] = G1 + G2
    AB[..., 1, 1] = G2.T + G1
    AB[..., 0, 1] = 1j * (G3.T - G3)
    AB[..., 1, 0] = 1j * (G4.T - G4)
    return 2 * np.pi * np.einsum("ijab,bc->ijac", AB, GAMMA0)


def massive_kernel_parts(d, m: float, n: int, quad: QuadratureSpec | None = None):
    """The four kernel contributions at the grid points, each (n, n, 2, 2)."""
    quad = quad or QuadratureSpec()
    quad.check()
    g = flat_base(d).to_graph()
    h, x = _grid(g.b, n)
    plus, minus = _indicator_blocks(flat_base(d), x)
    dd = np.zeros((n, n, 2, 2), dtype=complex)
    dd[..., 0, 1] = plus / FOUR_PI
    dd[..., 1, 0] = minus / FOUR_PI
    dr = _ray_terms(m, g, x, quad, left_factor=True)
    rd = _ray_terms(m, g, x, quad, left_factor=False)
    rr = _regular_regular(m, g, x, quad)
    return {"delta_delta": dd, "delta_regular": dr, "regular_delta": rd, "regular_regular": rr}


def _kernel_to_matrix(S, h):
    n = S.shape[0]
    M = np.empty((2 * n, 2 * n), dtype=complex)
    M[:n, :n] = S[..., 0, 0]
    M[:n, n:] = S[..., 0, 1]
    M[n:, :n] = S[..., 1, 0]
    M[n:, n:] = S[..., 1, 1]
    return M * h


def build_massive_kernel(d, m: float, n: int, quad: QuadratureSpec | None = None) -> OperatorMatrix:
    if m <= 0:
        raise InvariantViolation("m > 0", "use build_flat_massless for m = 0")
    parts = massive_kernel_parts(d, m, n, quad)
    S = sum(parts.values())
    h = flat_base(d).b / n
    M = _kernel_to_matrix(S, h)
    defect = float(np.max(np.abs(M - M.conj().T)))
    Msym = 0.5 * (M + M.conj().T)
    return OperatorMatrix(n, flat_base(d).b, m, np.full(n, h), Msym, kind="massive",
                          symmetrization_defect=defect)


# ------------------------------------------------------------------ Galerkin

def spacetime_exponential_integral(g: GraphDomain, alpha, beta, extra_nodes=24):
    """int_M exp(i alpha x - i beta t) dt dx for arrays alpha, beta (exact geometry)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    xs = np.unique(np.concatenate([g.plus[:, 0], g.minus[:, 0]]))
    freq = float(np.max(np.abs(alpha)) + np.max(np.abs(beta))) if alpha.size else 0.0
    total = np.zeros(np.broadcast(alpha, beta).shape, dtype=complex)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        if x1 <= x0:
            continue
        nodes = int(freq * (x1 - x0) / 2) + extra_nodes
        xi, wi = np.polynomial.legendre.leggauss(nodes)
        xx = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * xi
        ww = 0.5 * (x1 - x0) * wi
        tp = g.t_plus(xx)
        tm = g.t_minus(xx)
        span = tp - tm
        centre = 0.5 * (tp + tm)
        b_ = beta[..., None]
        inner = span * np.exp(-1j * b_ * centre) * np.sinc(b_ * span / (2 * np.pi))
        total += np.sum(ww * np.exp(1j * alpha[..., None] * xx) * inner, axis=-1)
    return total


def build_massive_galerkin(d, m: float, k_max: int) -> OperatorMatrix:
    """Compression of the operator onto 4 k_max + 2 orthonormal plane-wave solutions."""
    if k_max < 1:
        raise InvariantViolation("k_max >= 1")
    g = flat_base(d).to_graph()
    b = g.b
    p, e, v = plane_wave_modes(b, m, k_max)
    alpha = p[None, :] - p[:, None]
    beta = e[None, :] - e[:, None]
    spin = np.einsum("ai,ij,bj->ab", v.conj(), GAMMA0, v)
    G = spin * spacetime_exponential_integral(g, alpha, beta) / (2 * np.pi * b)
    defect = float(np.max(np.abs(G - G.conj().T)))
    G = 0.5 * (G + G.conj().T)
    nmodes = G.shape[0]
    return OperatorMatrix(nmodes // 2, b, m, np.ones(nmodes // 2), G, kind="galerkin",
                          symmetrization_defect=defect,
                          meta={"momenta": p, "energies": e, "spinors": v})


# ------------------------------------------------------------------ localization

def _mask(x, interval):
    a, c = interval
    if not c > a:
        raise EmptyInterval(f"interval {interval} is empty")
    return (x >= a) & (x < c)


def localized_hs_norm(op: OperatorMatrix, I, J) -> float:
    """Squared HS norm of the block (left-handed rows in I) x (right-handed columns in J)."""
    if op.kind in ("massive", "galerkin"):
        raise NotChiral("localization needs a massless grid operator")
    x = op.x
    rows = _mask(x, I)
    cols = _mask(x, J)
    _, LR, _, _ = op.blocks()
    return float(np.sum(np.abs(LR[np.ix_(rows, cols)]) ** 2))
