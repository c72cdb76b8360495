"""Jacobi elliptic functions and K(m) by arithmetic-geometric mean.

Parameter convention is m = k^2 throughout, with 0 <= m < 1.
"""
from __future__ import annotations

import math

AGM_RTOL = 1e-15
AGM_MAX_ITER = 40


def _check_m(m: float) -> float:
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic parameter m must satisfy 0 <= m < 1, got {m!r}")
    return m


def agm(a: float, b: float) -> float:
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= AGM_RTOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_K(m: float) -> float:
    """K(m) = pi / (2 AGM(1, sqrt(1 - m)))."""
    m = _check_m(m)
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def _descending(u: float, m: float) -> float:
    """Amplitude from the descending Landen recursion with backward phase recovery."""
    a, b, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    ratios = []
    for _ in range(AGM_MAX_ITER):
        if abs(c) <= AGM_RTOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        ratios.append(c / a)
    phi = (2.0 ** len(ratios)) * a * u
    for ratio in reversed(ratios):
        phi = 0.5 * (phi + math.asin(ratio * math.sin(phi)))
    return phi


def jacobi_amplitude(u: float, m: float) -> float:
    """am(u | m), continuous and increasing in u."""
    m = _check_m(m)
    return _descending(float(u), m)


def jacobi_sn_cn_dn(u: float, m: float) -> tuple[float, float, float]:
    m = _check_m(m)
    u = float(u)
    if m == 0.0:
        return math.sin(u), math.cos(u), 1.0
    phi0 = _descending(u, m)
    sn, cn = math.sin(phi0), math.cos(phi0)
    # cn / cos(phi1 - phi0) is 0/0 at cn = 0; the identity form is well conditioned for m < 1
    return sn, cn, math.sqrt(1.0 - m * sn * sn)


def inverse_amplitude(phi: float, m: float, tol: float = 1e-15) -> float:
    """u with am(u | m) = phi, i.e. the incomplete integral F(phi | m).

    Newton on the amplitude, using d am / du = dn.
    """
    m = _check_m(m)
    phi = float(phi)
    K = complete_K(m)
    u = phi * K / (0.5 * math.pi)
    for _ in range(60):
        sn, cn, dn = jacobi_sn_cn_dn(u, m)
        step = (jacobi_amplitude(u, m) - phi) / dn
        u -= step
        if abs(step) <= tol * max(1.0, abs(u)):
            break
    return u
