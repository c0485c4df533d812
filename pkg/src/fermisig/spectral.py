"""Spectra, traces and spectral bounds of the signature operator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bessel import j0_j1
from .errors import EigensolverFailure, InvariantViolation, NotChiral, OddUnpairedEigenvalue, ZeroAcceptance
from .geometry import ConformalDomain, GraphDomain, flat_base, rng_for, volume
from .sigop import OperatorMatrix, SimpleOperator

PAIR_TOL = 1e-9
RANK_TOL = 1e-10
MC_CHUNK = 1 << 17


# ------------------------------------------------------------------ spectrum

@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    pairing_defect: float
    traces: dict
    positive_trace: float
    index: int | None
    eigenvectors: np.ndarray | None = field(default=None, repr=False, compare=False)
    matrix: np.ndarray | None = field(default=None, repr=False, compare=False)


def _hermitian(op):
    if isinstance(op, SimpleOperator):
        return op.block_matrix().astype(complex)
    if isinstance(op, OperatorMatrix):
        return op.hermitian()
    A = np.asarray(op)
    return 0.5 * (A + A.conj().T)


def order_eigenvalues(ev):
    """Sort by |lambda| descending, ties broken by signed value descending."""
    ev = np.asarray(ev, dtype=float)
    idx = np.lexsort((-ev, -np.abs(ev)))
    return idx


def pairing_defect(eigenvalues) -> float:
    """Largest |lambda_+ + lambda_-| after matching the sorted spectrum end to end.

    Matching the i-th smallest with the i-th largest eigenvalue is the greedy
    pairing by absolute value; clusters of near-equal |lambda| (within
    ``PAIR_TOL * max|lambda|``) are matched consistently because both ends
    are sorted.
    """
    s = np.sort(np.asarray(eigenvalues, dtype=float))
    if s.size % 2:
        raise OddUnpairedEigenvalue(f"{s.size} eigenvalues cannot be paired")
    if s.size == 0:
        return 0.0
    half = s.size // 2
    return float(np.max(np.abs(s[:half] + s[::-1][:half])))


def spectrum(op, vectors: bool = False) -> SpectrumReport:
    H = _hermitian(op)
    try:
        if vectors:
            ev, vec = np.linalg.eigh(H)
        else:
            ev, vec = np.linalg.eigvalsh(H), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigensolverFailure("non-finite eigenvalues")
    order = order_eigenvalues(ev)
    ev = ev[order]
    if vec is not None:
        vec = vec[:, order]
    traces = {2: float(np.sum(ev ** 2)), 4: float(np.sum(ev ** 4))}
    index = None
    if isinstance(op, SimpleOperator) or (isinstance(op, OperatorMatrix) and op.is_chiral()):
        index = chiral_index(op)
    return SpectrumReport(ev, pairing_defect(ev), traces, float(np.sum(ev[ev > 0])), index,
                          eigenvectors=vec, matrix=H if vectors else None)


def _gamma_conjugation(dim):
    """Chirality matrix Gamma in the (L..., R...) layout."""
    half = dim // 2
    return np.concatenate([-np.ones(half), np.ones(half)])


def symmetry_defect(report: SpectrumReport) -> float:
    """Pairing residual; also checks psi -> Gamma conj(psi) flips eigenvalue signs.

    When the report carries eigenvectors the residual
    ``|H Gamma conj(psi) + lambda Gamma conj(psi)|`` is included in the result.
    """
    defect = pairing_defect(report.eigenvalues)
    if report.eigenvectors is None or report.matrix is None:
        return defect
    H = report.matrix
    g = _gamma_conjugation(H.shape[0])
    flipped = g[:, None] * report.eigenvectors.conj()
    resid = H @ flipped + flipped * report.eigenvalues[None, :]
    return float(max(defect, np.max(np.linalg.norm(resid, axis=0))))


@dataclass(frozen=True)
class TracePair:
    """tr S^p from the eigenvalues and from the matrix power."""
    eigen: float
    matrix: float

    def __float__(self):
        return self.eigen


def trace_of_power(op, p: int) -> TracePair:
    """tr(S^p) for any p >= 1 (odd powers are a symmetry diagnostic)."""
    if p < 1:
        raise InvariantViolation("p >= 1")
    H = _hermitian(op)
    ev = np.linalg.eigvalsh(H)
    P = np.eye(H.shape[0], dtype=complex)
    base = H
    k = p
    while k:
        if k & 1:
            P = P @ base
        k >>= 1
        if k:
            base = base @ base
    return TracePair(float(np.sum(ev ** p)), float(np.trace(P).real))


def trace_power(op, q: int) -> TracePair:
    """tr(S^{2q})."""
    if q < 1:
        raise InvariantViolation("q >= 1")
    if q == 1:
        H = _hermitian(op)
        return TracePair(float(np.sum(np.linalg.eigvalsh(H) ** 2)), float(np.sum(np.abs(H) ** 2)))
    return trace_of_power(op, 2 * q)


# ------------------------------------------------------------------ Monte Carlo

@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int
    seed: int
    accepted: int

    def __float__(self):
        return self.value


def _uv_samples(b, count, dims, gen):
    r = gen.random((count, 2 * dims))
    return r[:, 0::2] * b, -r[:, 1::2] * b  # u in (0, b), v in (-b, 0)


def _tx(u, v):
    return 0.5 * (u + v), 0.5 * (u - v)


def _f_at(d, t, x):
    if isinstance(d, ConformalDomain):
        out = np.ones_like(t)
        inside = flat_base(d).contains_array(t, x)
        out[inside] = d.f_values(t[inside], x[inside])
        return out
    return np.ones_like(t)


def _accumulate(weights_fn, b, q, samples, seed, stream):
    """Streamed mean/variance of weights_fn(u, v) over uniform samples in D^q."""
    gen = rng_for(seed, stream)
    total = 0.0
    total_sq = 0.0
    accepted = 0
    done = 0
    while done < samples:
        count = min(MC_CHUNK, samples - done)
        u, v = _uv_samples(b, count, q, gen)
        w = weights_fn(u, v)
        total += float(np.sum(w))
        total_sq += float(np.sum(w * w))
        accepted += int(np.count_nonzero(w))
        done += count
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return mean, np.sqrt(var / samples), accepted


def theta_coefficient(q: int) -> float:
    return 2.0 / (2 * np.pi) ** (2 * q) * 2.0 ** (-q)


def _theta_weights(d, q):
    base = flat_base(d)
    conformal = isinstance(d, ConformalDomain)

    def weights(u, v):
        w = np.ones(u.shape[0])
        for j in range(q):
            zt, zx = _tx(u[:, j], v[:, j])
            et, ex = _tx(u[:, j], v[:, (j + 1) % q])
            inside = base.contains_array(zt, zx) & base.contains_array(et, ex)
            w = w * inside
            if conformal:
                w = w * _f_at(d, zt, zx) * _f_at(d, et, ex)
        return w

    return weights


def trace_theta_mc(d, q: int, samples: int, seed: int) -> MCEstimate:
    """Monte Carlo value of tr S^{2q} from the corner-constrained integral.

    Sample points zeta_j = (u_j, v_j) are drawn uniformly in the bounding
    diamond; the corner points eta_j = (u_j, v_{j+1}) must lie in the domain
    as well.  Conformal domains weight each sample by prod f(zeta_j) f(eta_j).
    """
    if q < 1:
        raise InvariantViolation("q >= 1")
    b = d.b
    mean, se, acc = _accumulate(_theta_weights(d, q), b, q, samples, seed, stream=100 + q)
    if acc == 0:
        raise ZeroAcceptance("no sample satisfied the corner constraint")
    scale = theta_coefficient(q) * (0.5 * b * b) ** q
    return MCEstimate(scale * mean, scale * se, samples, seed, acc)


def _log_f(d, t, x):
    return np.log(_f_at(d, t, x))


def _s4_weights(d, region):
    base = flat_base(d)

    def weights(u, v):
        zt, zx = _tx(u[:, 0], v[:, 0])
        wt, wx = _tx(u[:, 1], v[:, 1])
        et, ex = _tx(u[:, 0], v[:, 1])
        ft, fx = _tx(u[:, 1], v[:, 0])
        ok = (base.contains_array(zt, zx) & base.contains_array(wt, wx)
              & base.contains_array(et, ex) & base.contains_array(ft, fx))
        if region == "causal_only":
            ok &= (u[:, 0] - u[:, 1]) * (v[:, 0] - v[:, 1]) >= 0
        elif region != "theta_rectangle":
            raise ValueError(f"unknown region {region!r}")
        w = np.zeros(u.shape[0])
        if not np.any(ok):
            return w
        lz, lw = _log_f(d, zt[ok], zx[ok]), _log_f(d, wt[ok], wx[ok])
        le, lf = _log_f(d, et[ok], ex[ok]), _log_f(d, ft[ok], fx[ok])
        # corner formula for the curvature integral over the diamond spanned by the pair
        curvature = -4.0 * ((lz + lw) - (le + lf))
        w[ok] = np.exp(2 * lz + 2 * lw) * np.exp(0.25 * curvature)
        return w

    return weights


def trace_s4_curvature(d, samples: int, seed: int, region: str = "theta_rectangle") -> MCEstimate:
    """tr S^4 as the integral of f^2 f'^2 exp(int_D R / 4) over point pairs.

    ``theta_rectangle`` integrates over every pair whose lightlike rectangle
    lies in the domain (the same samples as :func:`trace_theta_mc` with q=2);
    ``causal_only`` keeps only causally related pairs.
    """
    b = d.b
    mean, se, acc = _accumulate(_s4_weights(d, region), b, 2, samples, seed, stream=102)
    if acc == 0:
        raise ZeroAcceptance("no admissible pair sampled")
    scale = theta_coefficient(2) * (0.5 * b * b) ** 2
    return MCEstimate(scale * mean, scale * se, samples, seed, acc)


def trace_s4_candidates(d, samples: int, seed: int) -> dict:
    """The three competing closed forms for tr S^4, evaluated by Monte Carlo.

    * ``theta_full``: coefficient 1/(32 pi^4) over every rectangle-admissible pair
      (reproduces the exact finite-rank value);
    * ``causal_1_over_8pi2``: (1/8 pi^2) int mu(M & J(zeta)) dmu(zeta);
    * ``causal_1_over_8pi4``: (1/8 pi^4) over causal pairs.
    """
    full = trace_s4_curvature(d, samples, seed, "theta_rectangle")
    b = d.b
    base = flat_base(d)

    def causal(u, v):
        zt, zx = _tx(u[:, 0], v[:, 0])
        wt, wx = _tx(u[:, 1], v[:, 1])
        ok = base.contains_array(zt, zx) & base.contains_array(wt, wx)
        ok &= (u[:, 0] - u[:, 1]) * (v[:, 0] - v[:, 1]) >= 0
        return ok * (_f_at(d, zt, zx) * _f_at(d, wt, wx)) ** 2

    mean, se, acc = _accumulate(causal, b, 2, samples, seed, stream=103)
    area2 = (0.5 * b * b) ** 2
    return {
        "theta_full": full,
        "causal_1_over_8pi2": MCEstimate(area2 * mean / (8 * np.pi ** 2), area2 * se / (8 * np.pi ** 2),
                                         samples, seed, acc),
        "causal_1_over_8pi4": MCEstimate(area2 * mean / (8 * np.pi ** 4), area2 * se / (8 * np.pi ** 4),
                                         samples, seed, acc),
    }


@dataclass(frozen=True)
class MassiveTrace:
    value: float
    stderr: float
    volume_term: float
    m2_term: float
    m4_term: float
    large_m_term: float
    samples: int
    seed: int

    def __float__(self):
        return self.value

    @property
    def expansion(self):
        """Small-mass expansion up to and including the m^4 term."""
        return self.volume_term + self.m2_term + self.m4_term

    @property
    def residual_after_m2(self):
        """Full estimate minus the volume and m^2 terms (same samples)."""
        return self.value - self.volume_term - self.m2_term


def trace_s2_massive_mc(d, m: float, samples: int, seed: int) -> MassiveTrace:
    """tr S^2 = mu/4pi^2 + (m^2/8pi^2) iint (J0^2 + J1^2)(m s) Theta(s^2) over pairs.

    All pieces (full integrand, the m^2 and m^4 expansion integrals and the
    large-mass integrand 1/s) are evaluated on the same samples, so
    differences between them carry no independent sampling noise.  The
    expansion of J0^2 + J1^2 = 1 - z^2/4 + O(z^4) gives a negative m^4 term.
    """
    if m < 0:
        raise InvariantViolation("m >= 0")
    b = d.b
    base = flat_base(d)
    mu = volume(base)
    gen = rng_for(seed, 200)
    sums = np.zeros(4)
    sq = 0.0
    done = 0
    while done < samples:
        count = min(MC_CHUNK, samples - done)
        u, v = _uv_samples(b, count, 2, gen)
        zt, zx = _tx(u[:, 0], v[:, 0])
        wt, wx = _tx(u[:, 1], v[:, 1])
        s2 = (u[:, 0] - u[:, 1]) * (v[:, 0] - v[:, 1])
        ok = base.contains_array(zt, zx) & base.contains_array(wt, wx) & (s2 >= 0)
        s = np.sqrt(np.where(ok, s2, 0.0))
        J0, J1 = j0_j1(m * s)
        full = ok * (J0 ** 2 + J1 ** 2)
        with np.errstate(divide="ignore"):
            inv = np.where(ok & (s > 0), 1.0 / np.where(s > 0, s, 1.0), 0.0)
        sums += [full.sum(), ok.sum(), (ok * s2).sum(), inv.sum()]
        sq += float(np.sum(full * full))
        done += count
    area2 = (0.5 * b * b) ** 2
    means = sums / samples
    var = max(sq / samples - means[0] ** 2, 0.0) * samples / max(samples - 1, 1)
    k2 = m * m / (8 * np.pi ** 2) * area2
    return MassiveTrace(
        value=float(mu / (4 * np.pi ** 2) + k2 * means[0]),
        stderr=float(k2 * np.sqrt(var / samples)),
        volume_term=float(mu / (4 * np.pi ** 2)),
        m2_term=float(k2 * means[1]),
        m4_term=float(-m ** 4 / (32 * np.pi ** 2) * area2 * means[2]),
        large_m_term=float(m / (4 * np.pi ** 3) * area2 * means[3]),
        samples=samples,
        seed=seed,
    )


# ------------------------------------------------------------------ positive part, index

def positive_trace(obj) -> float:
    """Sum of the positive eigenvalues; for simple domains cross-checked against the nuclear norm."""
    if isinstance(obj, SpectrumReport):
        return obj.positive_trace
    rep = spectrum(obj)
    if isinstance(obj, SimpleOperator):
        nuclear = float(np.sum(np.linalg.svd(obj.T, compute_uv=False))) / (2 * np.pi * np.sqrt(2))
        if not np.isclose(nuclear, rep.positive_trace, rtol=1e-10, atol=1e-14):
            raise InvariantViolation("tr S+ = nuclear norm", f"{rep.positive_trace} vs {nuclear}")
    return rep.positive_trace


def chiral_index(op) -> int:
    """dim ker S_L - dim ker S_L^* with a relative singular-value threshold."""
    if isinstance(op, SimpleOperator):
        T = op.T
    elif isinstance(op, OperatorMatrix):
        if not op.is_chiral():
            raise NotChiral("operator couples equal chiralities")
        T = op.blocks()[2]
    else:
        T = np.asarray(op)
    if T.size == 0:
        return 0
    sv = np.linalg.svd(T, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * max(sv.max(), 1e-300))) if sv.max() > 0 else 0
    return (T.shape[1] - rank) - (T.shape[0] - rank)


# ------------------------------------------------------------------ decay bound

@dataclass(frozen=True)
class BoundReport:
    c: float
    b: float
    m: float
    total_variation: dict
    margins: np.ndarray
    tolerance: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.margins >= -self.tolerance))

    @property
    def worst(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else 0.0


def decay_constant(d: GraphDomain, m: float) -> tuple:
    tv = d.total_variation()
    c = (1 + m * d.b) * (1 + 4 * (tv["plus"] + tv["minus"]))
    return float(c), tv


def decay_bound_report(report: SpectrumReport, d, m: float, tolerance: float = 1e-12) -> BoundReport:
    """Margins c b / n - |lambda_n| for every computed eigenvalue."""
    g = flat_base(d).to_graph()
    c, tv = decay_constant(g, m)
    lam = np.abs(np.asarray(report.eigenvalues))
    lam = np.sort(lam)[::-1]
    n = np.arange(1, lam.size + 1)
    return BoundReport(c, g.b, m, tv, c * g.b / n - lam, tolerance)


def image_total_variation(op: OperatorMatrix, phi) -> float:
    """Discrete total variation of S phi (both chiralities) on the grid of ``op``.

    ``phi`` is an array of length 2n in the chirality layout.
    """
    H = op.hermitian()
    out = H @ np.asarray(phi, dtype=complex)
    n = op.n
    return float(np.sum(np.abs(np.diff(out[:n]))) + np.sum(np.abs(np.diff(out[n:]))))
