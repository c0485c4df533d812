"""Two-component Dirac spinors, the causal fundamental solution and Cauchy evolution.

Spinors are stored as ``(psi_L, psi_R)``.  In this representation

    gamma0 = [[0, 1], [1, 0]],   gamma1 = [[0, 1], [-1, 0]],   Gamma = diag(-1, 1),

so that ``gamma_u = gamma0 + gamma1`` only couples the right-handed to the
left-handed component.  The massless solution transports ``psi_L`` along
``x + t = const`` and ``psi_R`` along ``x - t = const``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bessel import j0_j1, j1_over_z
from .errors import InvariantViolation, QuadratureTooCoarse

GAMMA0 = np.array([[0, 1], [1, 0]], dtype=complex)
GAMMA1 = np.array([[0, 1], [-1, 0]], dtype=complex)
GAMMA_U = GAMMA0 + GAMMA1
GAMMA_V = GAMMA0 - GAMMA1
GAMMA5 = np.diag([-1.0, 1.0]).astype(complex)
CHI_L = np.diag([1.0, 0.0]).astype(complex)
CHI_R = np.diag([0.0, 1.0]).astype(complex)
IDENTITY = np.eye(2, dtype=complex)
METRIC = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class GammaAlgebra:
    gamma0: np.ndarray = field(default_factory=lambda: GAMMA0.copy())
    gamma1: np.ndarray = field(default_factory=lambda: GAMMA1.copy())
    gamma_u: np.ndarray = field(default_factory=lambda: GAMMA_U.copy())
    gamma_v: np.ndarray = field(default_factory=lambda: GAMMA_V.copy())
    Gamma: np.ndarray = field(default_factory=lambda: GAMMA5.copy())


def spin_product(psi, phi):
    """The indefinite inner product psi^dagger gamma0 phi (last axis = spinor index)."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    return np.conj(psi[..., 0]) * phi[..., 1] + np.conj(psi[..., 1]) * phi[..., 0]


def spin_adjoint(A):
    """Adjoint of a 2x2 matrix with respect to the spin product."""
    return GAMMA0 @ np.conj(np.swapaxes(A, -1, -2)) @ GAMMA0


# ------------------------------------------------------------------ fields

@dataclass(frozen=True)
class SpinorField:
    """Spinor values at the cell centres of a uniform grid on (0, b)."""

    b: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 2 or vals.shape[1] != 2 or vals.shape[0] < 2:
            raise InvariantViolation("spinor field shape", "values must be n x 2 with n >= 2")
        if not np.all(np.isfinite(vals)):
            raise InvariantViolation("finite spinor values")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def h(self):
        return self.b / self.n

    @property
    def x(self):
        return (np.arange(self.n) + 0.5) * self.h

    @classmethod
    def from_function(cls, b, n, fn, time=0.0):
        x = (np.arange(n) + 0.5) * b / n
        return cls(b, np.asarray(fn(x), dtype=complex), time)

    def interpolate(self, y):
        """Piecewise-linear interpolant, pinned to zero at 0 and b and zero outside."""
        nodes = np.concatenate([[0.0], self.x, [self.b]])
        out = np.zeros(np.shape(y) + (2,), dtype=complex)
        for c in range(2):
            vals = np.concatenate([[0.0], self.values[:, c], [0.0]])
            out[..., c] = (np.interp(y, nodes, vals.real, left=0.0, right=0.0)
                           + 1j * np.interp(y, nodes, vals.imag, left=0.0, right=0.0))
        return out


def slice_norm(field: SpinorField) -> float:
    """2 pi sum h |psi|^2, the Hilbert-space norm squared on the slice."""
    return float(2 * np.pi * field.h * np.sum(np.abs(field.values) ** 2))


def charge_conjugate(field: SpinorField) -> SpinorField:
    """psi -> Gamma conj(psi) = (-conj psi_L, conj psi_R)."""
    vals = np.conj(field.values) * np.array([-1.0, 1.0])
    return replace(field, values=vals)


def evolve_massless(initial: SpinorField, t: float) -> SpinorField:
    x = initial.x
    left = initial.interpolate(x + t)[:, 0]
    right = initial.interpolate(x - t)[:, 1]
    return SpinorField(initial.b, np.column_stack([left, right]), initial.time + t)


# ------------------------------------------------------------------ propagator

def km_coefficients(m, t, x):
    """Scalar coefficients (a, c0, c1) with regular part = a*1 + c0*gamma0 + c1*gamma1.

    ``a`` is purely imaginary and ``c0``, ``c1`` are real; all vanish outside
    the closed light cone and on the Cauchy line ``t = 0``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    s2 = t * t - x * x
    # points on the light cone often come out a few ulps outside
    inside = (s2 >= -1e-13 * (t * t + x * x)) & (t != 0)
    eps = np.sign(t) * inside
    z = m * np.sqrt(np.where(inside, np.maximum(s2, 0.0), 0.0))
    J0, _ = j0_j1(z)
    J1z = j1_over_z(z)  # J1(z)/z, so J1(m s)/s = m * J1z
    a = -1j * m / (4 * np.pi) * J0 * eps
    c0 = -(m / (4 * np.pi)) * t * m * J1z * eps
    c1 = (m / (4 * np.pi)) * x * m * J1z * eps
    return a, c0, c1


def km_regular(m: float, t, x):
    """Bessel part of the causal fundamental solution as a (..., 2, 2) array."""
    a, c0, c1 = km_coefficients(m, t, x)
    return (a[..., None, None] * IDENTITY + c0[..., None, None] * GAMMA0
            + c1[..., None, None] * GAMMA1)


def km_delta_weights():
    """Matrix weights of delta(t + x) and delta(t - x) in the massless solution."""
    return GAMMA_U / (4 * np.pi), GAMMA_V / (4 * np.pi)


@dataclass(frozen=True)
class PropagatorKernel:
    m: float

    def delta_part(self):
        return km_delta_weights()

    def regular_part(self, t, x):
        if self.m == 0:
            shape = np.broadcast(np.asarray(t), np.asarray(x)).shape
            return np.zeros(shape + (2, 2), dtype=complex)
        return km_regular(self.m, t, x)


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature settings.

    ``rule``     composite rule for Cauchy evolution ("simpson" or "midpoint");
    ``refine``   panels per grid cell (>= 1);
    ``nodes``    Gauss-Legendre points per axis on each light-cone lattice cell
                 for the 2D part of the massive kernel;
    ``ray_nodes`` Gauss-Legendre points on each smooth piece of the 1D ray integrals.
    """

    rule: str = "simpson"
    refine: int = 1
    nodes: int = 1
    ray_nodes: int = 16

    def check(self):
        if self.refine < 1 or self.nodes < 1 or self.ray_nodes < 2:
            raise QuadratureTooCoarse(f"quadrature {self} is coarser than the grid")
        if self.rule not in ("simpson", "midpoint"):
            raise ValueError(f"unknown rule {self.rule!r}")


def _composite_nodes(a, b, panels, rule):
    """Nodes and weights of a composite rule on [a, b]."""
    if rule == "midpoint":
        edges = np.linspace(a, b, panels + 1)
        return 0.5 * (edges[:-1] + edges[1:]), np.full(panels, (b - a) / panels)
    nodes = np.linspace(a, b, 2 * panels + 1)
    w = np.ones(2 * panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return nodes, w * (b - a) / (6 * panels)


def evolve_massive(initial: SpinorField, t: float, m: float, quad: QuadratureSpec | None = None) -> SpinorField:
    """psi(t, x) = 2 pi int k_m(t, x - y) gamma0 psi(0, y) dy on the grid of ``initial``."""
    quad = quad or QuadratureSpec()
    quad.check()
    if m < 0:
        raise InvariantViolation("m >= 0")
    out = evolve_massless(initial, t)
    if m == 0 or t == 0:
        return out
    x = initial.x
    h = initial.h
    b = initial.b
    interp_nodes = np.concatenate([[0.0], x, [b]])
    vals = out.values.copy()
    reach = abs(t)
    for i, xi in enumerate(x):
        lo, hi = max(xi - reach, 0.0), min(xi + reach, b)
        if hi <= lo:
            continue
        inner = interp_nodes[(interp_nodes > lo) & (interp_nodes < hi)]
        cuts = np.concatenate([[lo], inner, [hi]])
        ys, ws = [], []
        for a, c in zip(cuts[:-1], cuts[1:]):
            panels = max(1, int(np.ceil(quad.refine * (c - a) / h - 1e-9)))
            yy, ww = _composite_nodes(a, c, panels, quad.rule)
            ys.append(yy)
            ws.append(ww)
        y = np.concatenate(ys)
        w = np.concatenate(ws)
        R = km_regular(m, t, xi - y)
        psi0 = initial.interpolate(y)
        integrand = np.einsum("nij,jk,nk->ni", R, GAMMA0, psi0)
        vals[i] += 2 * np.pi * np.sum(w[:, None] * integrand, axis=0)
    return SpinorField(b, vals, initial.time + t)


def reference_datum(n: int, b: float = 1.0, center=0.5, radius=0.2) -> SpinorField:
    """Smooth compactly supported test datum with both chiralities populated."""

    def fn(x):
        s = (x / b - center) / radius
        bump = np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
        phase = np.exp(3j * np.pi * x / b)
        return np.column_stack([bump * phase, 0.5j * bump * (1 + s)])

    return SpinorField.from_function(b, n, fn)


def group_property_defect(m: float, t1: float, t2: float, grid: int, b: float = 1.0,
                          quad: QuadratureSpec | None = None) -> float:
    """Max-norm gap between evolving by t1 then t2 and evolving by t1 + t2 at once."""
    if grid < 16:
        raise InvariantViolation("grid >= 16")
    psi0 = reference_datum(grid, b)
    two_step = evolve_massive(evolve_massive(psi0, t1, m, quad), t2, m, quad)
    one_step = evolve_massive(psi0, t1 + t2, m, quad)
    return float(np.max(np.abs(two_step.values - one_step.values)))


def conservation_check(m: float, t: float, grid: int, b: float = 1.0,
                       quad: QuadratureSpec | None = None):
    """Slice-norm drift after evolving the reference datum, with a refinement error estimate.

    Returns ``(drift, error_estimate)`` where the estimate compares the evolved
    norm on ``grid`` with the one on ``2 * grid``.
    """
    coarse0 = reference_datum(grid, b)
    fine0 = reference_datum(2 * grid, b)
    n_coarse = slice_norm(evolve_massive(coarse0, t, m, quad))
    n_fine = slice_norm(evolve_massive(fine0, t, m, quad))
    drift = abs(n_coarse - slice_norm(coarse0))
    return float(drift), float(abs(n_coarse - n_fine))


def dirac_residual(m: float, t: float, grid: int, b: float = 1.0, dt: float | None = None,
                   quad: QuadratureSpec | None = None) -> float:
    """Max of |(i gamma0 d_t + i gamma1 d_x - m) psi| by central differences on the evolved datum."""
    psi0 = reference_datum(grid, b)
    h = b / grid
    dt = dt or h
    ahead = evolve_massive(psi0, t + dt, m, quad).values
    here = evolve_massive(psi0, t, m, quad).values
    back = evolve_massive(psi0, t - dt, m, quad).values
    d_t = (ahead - back) / (2 * dt)
    d_x = np.zeros_like(here)
    d_x[1:-1] = (here[2:] - here[:-2]) / (2 * h)
    res = 1j * d_t @ GAMMA0.T + 1j * d_x @ GAMMA1.T - m * here
    return float(np.max(np.abs(res[2:-2])))


def pointwise_bound(initial: SpinorField, m: float, t: float):
    """Right-hand sides |psi_c(0)|_C0 + 2 sqrt(m t) |psi(0)|_C0 for c = L, R."""
    sup_c = np.max(np.abs(initial.values), axis=0)
    sup = np.max(np.linalg.norm(initial.values, axis=1))
    return sup_c + 2 * np.sqrt(m * abs(t)) * sup


# ------------------------------------------------------------------ plane waves

def plane_wave_modes(b: float, m: float, k_max: int):
    """Orthonormal Dirac plane-wave solutions on (0, b).

    Returns arrays ``(p, energy, spinor)`` over ``4 k_max + 2`` modes with
    momenta ``p = 2 pi k / b`` for ``|k| <= k_max``.  Each mode is
    ``spinor * exp(i p x - i energy t) / sqrt(2 pi b)``.  For ``m = 0`` the
    spinors are the chiral basis vectors so that modes are purely left or
    right handed.
    """
    ps, es, vs = [], [], []
    for k in range(-k_max, k_max + 1):
        p = 2 * np.pi * k / b
        H = np.array([[-p, m], [m, p]], dtype=float)
        if m == 0:
            pairs = [(-p, np.array([1.0, 0.0])), (p, np.array([0.0, 1.0]))]
        else:
            w, vec = np.linalg.eigh(H)
            pairs = [(w[0], vec[:, 0]), (w[1], vec[:, 1])]
        for e, vec in pairs:
            ps.append(p)
            es.append(e)
            vs.append(vec.astype(complex))
    return np.array(ps), np.array(es), np.array(vs)
