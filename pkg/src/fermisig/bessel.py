"""Bessel functions J0 and J1 of real argument.

Three regimes, all vectorized:

* ``|z| <= 8``: the ascending power series (cancellation stays below 1e-14),
* ``8 < |z| <= 60``: Miller's backward recurrence normalized by
  ``J0 + 2 * sum(J_2k) = 1``,
* ``|z| > 60``: Hankel's asymptotic expansion.
"""
import numpy as np

_SERIES_MAX = 8.0
_ASYMPTOTIC_MIN = 60.0
_SERIES_TERMS = 40


def _series(z):
    # J0 = sum (-1)^k (z/2)^{2k} / (k!)^2,  J1 = (z/2) sum (-1)^k (z/2)^{2k} / (k! (k+1)!)
    q = -(0.5 * z) ** 2
    t0 = np.ones_like(z)
    t1 = np.ones_like(z)
    s0 = t0.copy()
    s1 = t1.copy()
    for k in range(1, _SERIES_TERMS):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        s0 += t0
        s1 += t1
        if k % 4 == 0 and max(np.max(np.abs(t0)), np.max(np.abs(t1))) < 1e-17:
            break
    return s0, 0.5 * z * s1


def _miller(z):
    zmax = float(np.max(z))
    top = int(zmax + 20 + 3.0 * np.sqrt(zmax) * 4)
    top += top % 2
    jp1 = np.zeros_like(z)          # J_{k+1}
    jk = np.full_like(z, 1e-300)     # J_k, arbitrary seed
    norm = np.zeros_like(z)
    j1 = np.zeros_like(z)
    for k in range(top, 0, -1):
        jm1 = 2.0 * k / z * jk - jp1  # J_{k-1}
        jp1, jk = jk, jm1
        if k - 1 == 1:
            j1 = jk.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * jk
        big = np.abs(jk) > 1e250
        if np.any(big):
            for arr in (jp1, jk, norm, j1):
                arr[big] *= 1e-250
    norm += jk
    return jk / norm, j1 / norm


def _hankel(z):
    # P, Q series for nu = 0, 1
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        p = np.ones_like(z)
        q = np.zeros_like(z)
        term = np.ones_like(z)
        for k in range(1, 30):
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
            if k % 2 == 1:
                q += term if (k // 2) % 2 == 0 else -term
            else:
                p += -term if (k // 2) % 2 == 1 else term
        chi = z - (0.5 * nu + 0.25) * np.pi
        out.append(np.sqrt(2.0 / (np.pi * z)) * (p * np.cos(chi) - q * np.sin(chi)))
    return out[0], out[1]


def j0_j1(z):
    """Return ``(J0(z), J1(z))`` for real ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z).ravel()
    r0 = np.empty_like(a)
    r1 = np.empty_like(a)
    small = a <= _SERIES_MAX
    large = a > _ASYMPTOTIC_MIN
    mid = ~small & ~large
    if np.any(small):
        r0[small], r1[small] = _series(a[small])
    if np.any(mid):
        r0[mid], r1[mid] = _miller(a[mid])
    if np.any(large):
        r0[large], r1[large] = _hankel(a[large])
    r1 = np.where(z.ravel() < 0, -r1, r1)
    return r0.reshape(z.shape), r1.reshape(z.shape)


def j0(z):
    return j0_j1(z)[0]


def j1(z):
    return j0_j1(z)[1]


def j1_over_z(z):
    """J1(z)/z with the removable singularity filled in (value 1/2 at z = 0)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    tiny = np.abs(z) < 1e-8
    out[tiny] = 0.5 - z[tiny] ** 2 / 16.0
    if np.any(~tiny):
        out[~tiny] = j1(z[~tiny]) / z[~tiny]
    return out
