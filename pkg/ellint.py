"""
Complete Elliptic Integrals
===========================

K(k) and E(k) by the arithmetic-geometric mean, plus the composite kernels
used by the filament inductance formulas:

    Psi(k)         = (1 - k^2/2) K(k) - E(k)
    phi_bracket(k) = (1/k^2) [ (2 - k^2) / (2 (1 - k^2)) E(k) - K(k) ]
                   = d(Psi(k)/k)/dk

All public scalar functions take the modulus k (not the parameter m = k^2).
The vectorized helpers take the pair (m, m1) = (k^2, 1 - k^2) so callers can
supply a complement computed without cancellation.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import EllipticDomainError

AGM_TOL = 1e-15
AGM_MAX_ITER = 40
SINGULAR_GUARD = 1e-12

# Below this parameter m the kernels are summed from their power series;
# the closed forms lose digits to cancellation as k -> 0.
SERIES_SWITCH = 0.1
SERIES_TERMS = 30


def _series_coefficients(n_terms: int) -> np.ndarray:
    """c_n such that Psi(k) = (pi/2) * sum_n c_n k^(2n)."""
    coeffs = np.zeros(n_terms + 1)
    ratio = 1.0       # binom(2n, n) / 4^n
    a_prev = 1.0
    for n in range(1, n_terms + 1):
        ratio *= (2 * n - 1) / (2 * n)
        a_n = ratio * ratio
        coeffs[n] = a_n * (2 * n) / (2 * n - 1) - 0.5 * a_prev
        a_prev = a_n
    return coeffs


_PSI_COEFFS = _series_coefficients(SERIES_TERMS)[2:]
_PHI_COEFFS = _PSI_COEFFS * (2.0 * np.arange(2, SERIES_TERMS + 1) - 1.0)


@dataclass(frozen=True)
class EllipticPair:
    """Complete elliptic integrals of the first (K) and second (E) kind."""
    K: float
    E: float


def elliptic_from_complement(m1) -> Tuple[np.ndarray, np.ndarray]:
    """
    K and E from the complementary parameter m1 = 1 - k^2, elementwise.

    AGM started at (1, sqrt(m1)); E follows from the accumulated squares of
    the half-differences. Raises EllipticDomainError if any entry fails to
    converge (NaN or m1 <= 0).
    """
    m1 = np.asarray(m1, dtype=float)
    a = np.ones_like(m1)
    b = np.sqrt(m1)
    c2_sum = 0.5 * (1.0 - m1)
    weight = 1.0

    with np.errstate(invalid='ignore'):
        for _ in range(AGM_MAX_ITER):
            c = 0.5 * (a - b)
            a, b = 0.5 * (a + b), np.sqrt(a * b)
            c2_sum = c2_sum + weight * c * c
            weight *= 2.0
            if np.all(np.abs(a - b) <= AGM_TOL * a):
                break
        else:
            raise EllipticDomainError("modulus out of range: AGM did not converge")

    K = np.pi / (2.0 * a)
    E = K * (1.0 - c2_sum)
    return K, E


def _check_modulus(k: float) -> float:
    k = float(k)
    if not np.isfinite(k) or k < 0.0:
        raise EllipticDomainError(f"modulus out of range: k={k!r} (expected 0 <= k < 1)")
    if k >= 1.0 or k * k > 1.0 - SINGULAR_GUARD:
        raise EllipticDomainError(f"modulus out of range: k={k!r} is at or too close to 1")
    return k


def complete_elliptic(k: float) -> EllipticPair:
    """Return (K(k), E(k)) for 0 <= k < 1."""
    k = _check_modulus(k)
    K, E = elliptic_from_complement(1.0 - k * k)
    return EllipticPair(K=float(K), E=float(E))


def psi_kernel_scaled(m, m1) -> np.ndarray:
    """Psi(k) / k^4 for m = k^2, m1 = 1 - k^2 (finite at k = 0, limit pi/32)."""
    m = np.asarray(m, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    out = np.empty(np.broadcast(m, m1).shape)
    m, m1 = np.broadcast_arrays(m, m1)

    small = m < SERIES_SWITCH
    if np.any(small):
        out[small] = 0.5 * np.pi * np.polynomial.polynomial.polyval(m[small], _PSI_COEFFS)
    large = ~small
    if np.any(large):
        ml = m[large]
        K, E = elliptic_from_complement(m1[large])
        out[large] = ((1.0 - 0.5 * ml) * K - E) / (ml * ml)
    return out


def phi_bracket_scaled(m, m1) -> np.ndarray:
    """phi_bracket(k) / k^2 for m = k^2, m1 = 1 - k^2 (limit 3*pi/32 at k = 0)."""
    m = np.asarray(m, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    out = np.empty(np.broadcast(m, m1).shape)
    m, m1 = np.broadcast_arrays(m, m1)

    small = m < SERIES_SWITCH
    if np.any(small):
        out[small] = 0.5 * np.pi * np.polynomial.polynomial.polyval(m[small], _PHI_COEFFS)
    large = ~small
    if np.any(large):
        ml = m[large]
        m1l = m1[large]
        K, E = elliptic_from_complement(m1l)
        out[large] = ((2.0 - ml) / (2.0 * m1l) * E - K) / (ml * ml)
    return out


def psi_kernel(k: float) -> float:
    """Psi(k) = (1 - k^2/2) K(k) - E(k)."""
    k = _check_modulus(k)
    m = k * k
    return float(psi_kernel_scaled(m, 1.0 - m) * m * m)


def phi_bracket(k: float) -> float:
    """d(Psi(k)/k)/dk, the factor multiplying dk/dx3 in the axial derivative kernel."""
    k = _check_modulus(k)
    m = k * k
    return float(phi_bracket_scaled(m, 1.0 - m) * m)
