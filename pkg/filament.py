"""
Circular Filament Inductances
=============================

Self inductance of a thin ring, the Maxwell formula for coaxial filaments and
the single-integral (Kalantarov-Zeitlin) form of the mutual inductance between
two parallel circular filaments with arbitrary lateral and axial offset.

Dimensionless convention: the primary filament has radius R_c, the secondary
radius R_e, nu = R_e / R_c, and the secondary centre sits at (x1, x2, x3) * R_e
in the primary's frame. The dimensional mutual inductance is

    M = mu0 * sqrt(R_c * R_e) * Mbar

The angular integrals are written in psi, measured from the point of the
secondary circle closest to the primary axis, so that the integrand depends on
the lateral distance d = hypot(x1, x2) only:

    Mbar = (1/pi) * int_0^{2pi} (1 - d cos psi) / rho^1.5 * Psi(k)/k  dpsi
    rho^2 = (1 - d)^2 + 4 d sin^2(psi/2)
    k^2   = 4 nu rho / ((1 + nu rho)^2 + nu^2 x3^2)
"""

import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from ellint import SINGULAR_GUARD, phi_bracket_scaled, psi_kernel_scaled
from errors import GeometryError, GeometryWarning, SingularGeometryError
from utils import get_logger

MU_0 = 4e-7 * np.pi

EPS_RECOMMENDED = 0.1
EPS_RTOL = 1e-9

N_START = 64
N_MAX = 2 ** 14
RTOL = 1e-11
ATOL = 1e-15
QUADRATURE: Dict[str, float] = {"n_start": N_START, "n_max": N_MAX, "rtol": RTOL}

# Largest (placements x nodes) block evaluated at once.
_MAX_BLOCK = 2 ** 20

# Cache keys drop the low mantissa bits (about 1e-12 relative).
_QUANT_BITS = 12
_QUANT_ROUND = np.int64(1 << (_QUANT_BITS - 1))
_QUANT_MASK = np.int64(~((1 << _QUANT_BITS) - 1))

logger = get_logger("filament")


@dataclass(frozen=True)
class RingGeometry:
    """Thin ring element: radius R_e and layer thickness th (metres)."""
    R_e: float
    th: float

    def __post_init__(self):
        if not (np.isfinite(self.R_e) and self.R_e > 0):
            raise GeometryError(f"element radius must be positive, got {self.R_e!r}")
        if not (np.isfinite(self.th) and self.th > 0):
            raise GeometryError(f"layer thickness must be positive, got {self.th!r}")
        if self.eps >= 1.0:
            raise GeometryError(f"thickness ratio eps = th/(2 R_e) = {self.eps:.4g} must be < 1")
        if self.eps > EPS_RECOMMENDED * (1.0 + EPS_RTOL):
            message = f"thickness ratio eps = {self.eps:.4g} exceeds the recommended {EPS_RECOMMENDED}"
            logger.warning(message)
            warnings.warn(message, GeometryWarning, stacklevel=3)

    @property
    def eps(self) -> float:
        return self.th / (2.0 * self.R_e)


def self_inductance_dimensionless(eps: float) -> float:
    """L / (mu0 R_e) of a ring with circular cross-section, eps = th / (2 R_e)."""
    log_term = np.log(8.0 / eps)
    return float(log_term - 1.75 + (eps * eps / 8.0) * (log_term + 1.0 / 3.0))


def self_inductance_ring(g: RingGeometry) -> float:
    """Self inductance in henries."""
    return MU_0 * g.R_e * self_inductance_dimensionless(g.eps)


@dataclass(frozen=True)
class RelativePlacement:
    """Secondary filament centre in units of R_e, and nu = R_e / R_c."""
    x1: float
    x2: float
    x3: float
    nu: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.x1, self.x2, self.x3, self.nu)):
            raise GeometryError(f"non-finite placement {self}")
        if self.nu <= 0:
            raise GeometryError(f"radius ratio nu must be positive, got {self.nu!r}")

    @property
    def lateral(self) -> float:
        return float(np.hypot(self.x1, self.x2))

    def swapped(self) -> "RelativePlacement":
        """Placement seen from the other filament (roles of primary and secondary exchanged)."""
        return RelativePlacement(-self.x1 * self.nu, -self.x2 * self.nu, -self.x3 * self.nu, 1.0 / self.nu)


def dimensional_mutual(m_bar, R_primary: float, R_secondary: float):
    """M = mu0 sqrt(R_primary R_secondary) Mbar."""
    return MU_0 * np.sqrt(R_primary * R_secondary) * m_bar


def mutual_maxwell_coaxial(R_l: float, s: float, R_2: Optional[float] = None) -> float:
    """
    Mutual inductance (H) of two coaxial circular filaments.

    Args:
        R_l: radius of the first filament (m)
        s: axial separation (m)
        R_2: radius of the second filament; equal to R_l when omitted
    """
    R_2 = R_l if R_2 is None else R_2
    if R_l <= 0 or R_2 <= 0:
        raise GeometryError(f"filament radii must be positive, got {R_l!r}, {R_2!r}")
    if s < 0 or not np.isfinite(s):
        raise GeometryError(f"axial separation must be >= 0, got {s!r}")

    denom = (R_l + R_2) ** 2 + s * s
    m = 4.0 * R_l * R_2 / denom
    m1 = ((R_l - R_2) ** 2 + s * s) / denom
    if m1 < SINGULAR_GUARD:
        raise SingularGeometryError(f"coincident filaments (R={R_l!r}, s={s!r}): K(k) diverges")

    return float(MU_0 * np.sqrt(R_l * R_2) * 2.0 * m ** 1.5 * psi_kernel_scaled(m, m1))


# ---- integrands -------------------------------------------------------------

def _kz_geometry(psi, d, x3, nu):
    s = np.sin(0.5 * psi)
    s2 = s * s
    rho = np.sqrt((1.0 - d) ** 2 + 4.0 * d * s2)
    nu_rho = nu * rho
    nu2 = nu * nu
    # 1 - nu*rho without cancellation near nu*rho = 1
    one_minus = ((1.0 - nu2 * (1.0 - d) ** 2) - 4.0 * nu2 * d * s2) / (1.0 + nu_rho)
    axial = nu2 * x3 * x3
    denom = (1.0 + nu_rho) ** 2 + axial
    m = 4.0 * nu_rho / denom
    m1 = (one_minus * one_minus + axial) / denom
    numer = 1.0 - d * np.cos(psi)
    return numer, m, m1, denom


def _kz_integrand(psi, d, x3, nu):
    numer, m, m1, denom = _kz_geometry(psi, d, x3, nu)
    # Psi(k)/k / rho^1.5 = (Psi/k^4) * (4 nu / denom)^1.5; m1 below the guard is reported, not evaluated
    return numer * psi_kernel_scaled(m, np.maximum(m1, SINGULAR_GUARD)) * (4.0 * nu / denom) ** 1.5, m1


def _kz_derivative_integrand(psi, d, x3, nu):
    numer, m, m1, denom = _kz_geometry(psi, d, x3, nu)
    # phi_bracket(k) * dk/dx3 / rho^1.5, with dk/dx3 = -nu^2 x3 sqrt(4 nu rho) / denom^1.5
    scale = (4.0 * nu / denom) * (-2.0 * nu ** 2.5 * x3) / denom ** 1.5
    return numer * phi_bracket_scaled(m, np.maximum(m1, SINGULAR_GUARD)) * scale, m1


Integrand = Callable[..., Tuple[np.ndarray, np.ndarray]]


def _row_sums(integrand: Integrand, nodes: np.ndarray, d, x3, nu) -> np.ndarray:
    """Sum of the integrand over nodes for each placement, in bounded memory blocks."""
    sums = np.empty(d.size)
    rows = max(1, _MAX_BLOCK // nodes.size)
    for start in range(0, d.size, rows):
        block = slice(start, start + rows)
        f, m1 = integrand(nodes[None, :], d[block, None], x3[block, None], nu[block, None])
        bad = np.any(m1 < SINGULAR_GUARD, axis=1)
        if np.any(bad):
            i = start + int(np.flatnonzero(bad)[0])
            raise SingularGeometryError(
                f"k reaches 1 on the quadrature grid (lateral={d[i]:.6g}, x3={x3[i]:.6g}, nu={nu[i]:.6g}): "
                "touching or intersecting filaments")
        sums[block] = f.sum(axis=1)
    return sums


def _periodic_trapezoid(integrand: Integrand, d, x3, nu, n_start: int = N_START,
                        n_max: int = N_MAX, rtol: float = RTOL) -> np.ndarray:
    """(1/pi) * periodic integral over [0, 2 pi], doubling nodes until converged per placement."""
    n = n_start
    sums = _row_sums(integrand, 2.0 * np.pi * np.arange(n) / n, d, x3, nu)
    estimate = 2.0 * sums / n
    active = np.arange(d.size)

    while active.size:
        if 2 * n > n_max:
            i = int(active[0])
            raise SingularGeometryError(
                f"quadrature did not converge within {n_max} nodes "
                f"(lateral={d[i]:.6g}, x3={x3[i]:.6g}, nu={nu[i]:.6g}): near-singular geometry")
        midpoints = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        sums[active] += _row_sums(integrand, midpoints, d[active], x3[active], nu[active])
        n *= 2
        refined = 2.0 * sums[active] / n
        done = np.abs(refined - estimate[active]) <= rtol * np.abs(refined) + ATOL
        estimate[active] = refined
        active = active[~done]

    logger.debug(f"trapezoid converged for {d.size} placements at <= {n} nodes")
    return estimate


# ---- memo cache -------------------------------------------------------------

def quantize(values) -> np.ndarray:
    """Round to about 12 significant digits by clearing low mantissa bits (sign-symmetric)."""
    bits = np.ascontiguousarray(values, dtype=np.float64).view(np.int64)
    return ((bits + _QUANT_ROUND) & _QUANT_MASK).view(np.float64)


class KernelCache:
    """Bounded LRU map from quantized (kind, lateral, x3, nu) to kernel values; thread-safe."""

    def __init__(self, maxsize: int = 200_000):
        self.maxsize = maxsize
        self._data: "OrderedDict[Tuple, float]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get_many(self, keys) -> Dict[Tuple, float]:
        found = {}
        with self._lock:
            for key in keys:
                value = self._data.get(key)
                if value is not None:
                    self._data.move_to_end(key)
                    found[key] = value
            self.hits += len(found)
            self.misses += len(keys) - len(found)
        return found

    def put_many(self, items: Dict[Tuple, float]):
        with self._lock:
            for key, value in items.items():
                self._data[key] = value
                self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self):
        return len(self._data)


KERNEL_CACHE = KernelCache()


def kz_batch(lateral, x3, nu, derivative: bool = False, use_cache: bool = True,
             n_start: Optional[int] = None, n_max: Optional[int] = None,
             rtol: Optional[float] = None) -> np.ndarray:
    """
    Mbar (or dMbar/dx3) for arrays of placements given by lateral distance, x3 and nu.

    Inputs broadcast against each other; placements are quantized, deduplicated
    and evaluated at the quantized coordinates, so equal inputs always give
    bit-identical outputs.
    """
    lateral, x3, nu = np.broadcast_arrays(np.asarray(lateral, float), np.asarray(x3, float),
                                          np.asarray(nu, float))
    shape = lateral.shape
    if lateral.size == 0:
        return np.zeros(shape)
    if np.any(nu <= 0) or not np.all(np.isfinite(lateral) & np.isfinite(x3) & np.isfinite(nu)):
        raise GeometryError("placements must be finite with nu > 0")

    rows = np.stack([quantize(np.abs(lateral).ravel()), quantize(x3.ravel()), quantize(nu.ravel())], axis=1)
    unique_rows, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)

    kind = "dx3" if derivative else "m"
    keys = [(kind, r[0], r[1], r[2]) for r in unique_rows.tolist()]
    values = np.empty(len(keys))
    cached = KERNEL_CACHE.get_many(keys) if use_cache else {}
    missing = [i for i, key in enumerate(keys) if key not in cached]
    for i, key in enumerate(keys):
        if key in cached:
            values[i] = cached[key]

    if missing:
        idx = np.asarray(missing)
        integrand = _kz_derivative_integrand if derivative else _kz_integrand
        computed = _periodic_trapezoid(integrand, unique_rows[idx, 0], unique_rows[idx, 1],
                                       unique_rows[idx, 2],
                                       n_start=n_start or QUADRATURE["n_start"],
                                       n_max=n_max or QUADRATURE["n_max"],
                                       rtol=rtol or QUADRATURE["rtol"])
        values[idx] = computed
        if use_cache:
            KERNEL_CACHE.put_many({keys[i]: float(v) for i, v in zip(missing, computed)})

    return values[inverse].reshape(shape)


def mutual_kz(p: RelativePlacement, **quadrature) -> float:
    """Dimensionless mutual inductance Mbar of two parallel circular filaments."""
    return float(kz_batch(p.lateral, p.x3, p.nu, **quadrature))


def dmutual_kz_dx3(p: RelativePlacement, **quadrature) -> float:
    """Axial derivative dMbar/dx3 (odd in x3, exactly zero at x3 = 0)."""
    return float(kz_batch(p.lateral, p.x3, p.nu, derivative=True, **quadrature))


def kz_fixed_rule(p: RelativePlacement, n: int, derivative: bool = False) -> float:
    """Trapezoid value with exactly n nodes, for auditing convergence."""
    integrand = _kz_derivative_integrand if derivative else _kz_integrand
    d, x3, nu = (np.array([v]) for v in (p.lateral, p.x3, p.nu))
    return float(2.0 * _row_sums(integrand, 2.0 * np.pi * np.arange(n) / n, d, x3, nu)[0] / n)


def singular_angles(p: RelativePlacement) -> Tuple[float, ...]:
    """Angles psi in [0, 2 pi) where k = 1, i.e. where the two filaments meet in-plane."""
    if p.x3 != 0.0:
        return ()
    d = p.lateral
    target = 1.0 / p.nu
    if d == 0.0:
        if target == 1.0:
            raise SingularGeometryError("coincident filaments: k = 1 for every angle")
        return ()
    s2 = (target * target - (1.0 - d) ** 2) / (4.0 * d)
    if s2 < 0.0 or s2 > 1.0:
        return ()
    psi = 2.0 * float(np.arcsin(np.sqrt(s2)))
    if psi == 0.0:
        return (0.0,)
    if psi >= np.pi:
        return (np.pi,)
    return (psi, 2.0 * np.pi - psi)


def mutual_kz_adaptive(p: RelativePlacement, epsrel: float = 1e-10) -> float:
    """
    Mbar by adaptive Gauss-Kronrod quadrature with breakpoints at the meeting angles.

    Covers touching filaments (lattice neighbours in the disc mesh) where the
    integrand has an integrable logarithmic singularity and the trapezoid rule
    is rejected.
    """
    d, x3, nu = p.lateral, p.x3, p.nu
    breaks = [a for a in singular_angles(p) if 0.0 < a < 2.0 * np.pi]

    def integrand(psi: float) -> float:
        value, _ = _kz_integrand(np.array([psi]), d, x3, nu)
        return float(value[0])

    value, abserr = quad(integrand, 0.0, 2.0 * np.pi, points=breaks or None,
                         epsabs=0.0, epsrel=epsrel, limit=400)
    logger.debug(f"adaptive KZ at lateral={d:.6g}: {value / np.pi:.15g} (abserr {abserr:.2e})")
    return float(value / np.pi)


def clear_kernel_cache():
    KERNEL_CACHE.clear()


def configure_quadrature(n_start: int = N_START, n_max: int = N_MAX, rtol: float = RTOL):
    """Set the default trapezoid schedule; cached kernels are dropped since they depend on it."""
    if n_start < 4 or n_max < n_start or not 0 < rtol < 1:
        raise ValueError(f"invalid quadrature settings n_start={n_start}, n_max={n_max}, rtol={rtol}")
    QUADRATURE.update(n_start=int(n_start), n_max=int(n_max), rtol=float(rtol))
    KERNEL_CACHE.clear()
