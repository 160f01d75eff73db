"""
Eddy-Current Solver
===================

Assembles the element inductance system of the meshed disc and solves for the
induced current amplitude of every element:

    Lbar I = -Mc diag(w) Ic,    w_j = sqrt(R_cj / R_e)

Lbar holds L/(mu0 R_e): ring self inductances on the diagonal and the
coplanar element-element mutual inductances off it. Mc holds the
dimensionless element-coil mutual inductances Mbar; w maps them into element
units. Currents are dimensionless (coil currents relative to I_c1).
"""

import re
import threading
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve

from errors import SingularSystemError
from filament import (MU_0, RelativePlacement, kz_batch, mutual_kz_adaptive,
                      self_inductance_dimensionless)
from geometry import CoilSystem, Mesh, Pose, element_positions, placement_arrays
from utils import get_logger

SIGN_CONVENTION = "I = -L^-1 Mc Ic (induced currents oppose the coil currents)"
RESIDUAL_TOL = 1e-10
MESH_CACHE_SIZE = 2

logger = get_logger("eddy")


class MeshCache:
    """Bounded LRU of per-mesh arrays; a grid_n 71 entry holds a dense 3969 x 3969 matrix."""

    def __init__(self, maxsize: int = MESH_CACHE_SIZE):
        self.maxsize = maxsize
        self._data: "OrderedDict[Tuple, Any]" = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: Tuple) -> Any:
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key: Tuple, value: Any):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                evicted, _ = self._data.popitem(last=False)
                logger.debug(f"Released cached mesh arrays for {evicted}")

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


SELF_MATRIX_CACHE = MeshCache()
FACTOR_CACHE = MeshCache()


@dataclass(frozen=True)
class ImpedanceMode:
    """Ideal (inductive only) or resistive elements with resistance R (ohm) at angular frequency f (rad/s)."""
    kind: str = "ideal"
    resistance: float = 0.0
    frequency: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("ideal", "resistive"):
            raise ValueError(f"unknown impedance mode {self.kind!r}")
        if self.kind == "resistive":
            if self.resistance < 0:
                raise ValueError(f"resistance must be >= 0, got {self.resistance!r}")
            if not self.frequency or self.frequency <= 0:
                raise ValueError("resistive mode needs a positive angular frequency")

    @classmethod
    def ideal(cls) -> "ImpedanceMode":
        return cls()

    @classmethod
    def resistive(cls, resistance: float, frequency: float) -> "ImpedanceMode":
        return cls("resistive", resistance, frequency)

    def diagonal_shift(self, R_e: float) -> complex:
        """R / (j f) in units of mu0 R_e."""
        if self.kind == "ideal":
            return 0.0
        return self.resistance / (1j * self.frequency) / (MU_0 * R_e)

    def describe(self) -> str:
        if self.kind == "ideal":
            return "ideal"
        return f"resistive(R={self.resistance:g} ohm, f={self.frequency:g} rad/s)"


@dataclass(frozen=True, eq=False)
class EddySystem:
    mesh: Mesh
    coils: CoilSystem
    pose: Pose
    impedance: ImpedanceMode
    L: np.ndarray
    Mc: np.ndarray
    coupling_weight: np.ndarray
    factor_kind: str
    factor: Any

    def with_pose(self, pose: Pose) -> "EddySystem":
        """Same mesh, coils and factorized L; couplings recomputed at the new pose."""
        return replace(self, pose=pose, Mc=coupling_matrix(self.mesh, self.coils, pose))


@dataclass(frozen=True, eq=False)
class EddySolution:
    I: np.ndarray
    residual: float
    grid: np.ndarray
    impedance: str
    sign_convention: str = SIGN_CONVENTION

    @property
    def n(self) -> int:
        return int(self.I.size)

    def metadata(self, mesh: Mesh) -> Dict[str, Any]:
        return {
            "n": mesh.n,
            "grid_n": mesh.grid_n,
            "rule": mesh.rule,
            "R_e_m": mesh.R_e,
            "eps": mesh.eps,
            "residual": self.residual,
            "sign_convention": self.sign_convention,
            "impedance_mode": self.impedance,
        }


def element_self_matrix(mesh: Mesh) -> np.ndarray:
    """
    Lbar for the mesh, cached per mesh geometry.

    Off-diagonal entries depend on the squared lattice distance only, so each
    distinct distance is integrated once. Lattice neighbours touch and go
    through the adaptive rule.
    """
    key = mesh.cache_key
    cached = SELF_MATRIX_CACHE.get(key)
    if cached is not None:
        return cached

    lattice = mesh.lattice.astype(np.int32)
    di = lattice[:, 0][:, None] - lattice[:, 0][None, :]
    dj = lattice[:, 1][:, None] - lattice[:, 1][None, :]
    dist2 = di * di + dj * dj
    del di, dj

    distinct = np.unique(dist2)
    distinct = distinct[distinct > 0]
    table = np.zeros(int(dist2.max()) + 1)
    if distinct.size:
        touching = distinct == 1
        if np.any(touching):
            table[1] = mutual_kz_adaptive(RelativePlacement(2.0, 0.0, 0.0, 1.0))
        rest = distinct[~touching]
        if rest.size:
            table[rest] = kz_batch(2.0 * np.sqrt(rest.astype(float)), 0.0, 1.0)

    L = table[dist2]
    np.fill_diagonal(L, self_inductance_dimensionless(mesh.eps))
    L.setflags(write=False)
    logger.info(f"Assembled element matrix: n={mesh.n}, {distinct.size} distinct pair distances")

    SELF_MATRIX_CACHE.put(key, L)
    return L


def _pivot_from_message(message: str) -> Optional[int]:
    match = re.search(r'(\d+)-th leading minor', message)
    return int(match.group(1)) - 1 if match else None


def _factorize(mesh: Mesh, impedance: ImpedanceMode) -> Tuple[str, Any, np.ndarray]:
    key = (mesh.cache_key, impedance)
    cached = FACTOR_CACHE.get(key)
    if cached is not None:
        return cached

    L = element_self_matrix(mesh)
    if impedance.kind == "ideal":
        try:
            factor = cho_factor(L, lower=True, check_finite=True)
        except LinAlgError as e:
            pivot = _pivot_from_message(str(e))
            raise SingularSystemError(
                f"element inductance matrix is not positive definite (pivot index {pivot}): {e}",
                pivot=pivot) from e
        entry = ("cholesky", factor, L)
    else:
        L = L + impedance.diagonal_shift(mesh.R_e) * np.eye(mesh.n)
        lu, piv = lu_factor(L, check_finite=True)
        zero = np.flatnonzero(np.diag(lu) == 0)
        if zero.size:
            raise SingularSystemError(
                f"element impedance matrix is singular (pivot index {int(zero[0])})", pivot=int(zero[0]))
        entry = ("lu", (lu, piv), L)

    FACTOR_CACHE.put(key, entry)
    return entry


def coupling_matrix(mesh: Mesh, coils: CoilSystem, pose: Pose, derivative: bool = False,
                    positions: Optional[np.ndarray] = None) -> np.ndarray:
    """Mbar (or dMbar/dx3) for every (element, coil filament) pair, shape (n, N)."""
    if positions is None:
        positions = element_positions(mesh, pose.q)
    lateral, x3, nu = placement_arrays(mesh, coils, positions)
    return kz_batch(lateral, x3, nu[None, :], derivative=derivative)


def assemble(mesh: Mesh, coils: CoilSystem, pose: Pose,
             impedance_mode: Optional[ImpedanceMode] = None) -> EddySystem:
    """Build (or reuse) the factorized element matrix and the couplings at pose."""
    impedance_mode = impedance_mode or ImpedanceMode.ideal()
    kind, factor, L = _factorize(mesh, impedance_mode)
    return EddySystem(
        mesh=mesh,
        coils=coils,
        pose=pose,
        impedance=impedance_mode,
        L=L,
        Mc=coupling_matrix(mesh, coils, pose),
        coupling_weight=np.sqrt(coils.radii / mesh.R_e),
        factor_kind=kind,
        factor=factor,
    )


def solve(system: EddySystem, coil_currents=None) -> EddySolution:
    """Induced element currents for the given relative coil currents (default: the coils' own)."""
    Ic = system.coils.currents if coil_currents is None else np.asarray(coil_currents, dtype=float)
    if Ic.shape != (system.coils.N,):
        raise ValueError(f"expected {system.coils.N} coil currents, got shape {Ic.shape}")

    rhs = -(system.Mc @ (system.coupling_weight * Ic))
    if system.factor_kind == "cholesky":
        I = cho_solve(system.factor, rhs)
    else:
        I = lu_solve(system.factor, rhs.astype(complex))

    rhs_norm = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(system.L @ I - rhs) / rhs_norm) if rhs_norm > 0 else 0.0
    if residual > RESIDUAL_TOL:
        raise SingularSystemError(f"eddy solve residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")

    return EddySolution(I=I, residual=residual, grid=current_grid(I, system.mesh),
                        impedance=system.impedance.describe())


def current_grid(I: np.ndarray, mesh: Mesh) -> np.ndarray:
    """grid_n x grid_n map of element currents (real part); absent cells are NaN."""
    grid = np.full((mesh.grid_n, mesh.grid_n), np.nan)
    grid[mesh.grid_index[:, 0], mesh.grid_index[:, 1]] = np.real(I)
    return grid


def _axis_gradient(grid: np.ndarray, axis: int) -> np.ndarray:
    """Central differences where both neighbours exist, one-sided where one does, NaN otherwise."""
    prev = np.full_like(grid, np.nan)
    nxt = np.full_like(grid, np.nan)
    if axis == 0:
        prev[1:, :] = grid[:-1, :]
        nxt[:-1, :] = grid[1:, :]
    else:
        prev[:, 1:] = grid[:, :-1]
        nxt[:, :-1] = grid[:, 1:]

    present = ~np.isnan(grid)
    has_prev = present & ~np.isnan(prev)
    has_next = present & ~np.isnan(nxt)

    out = np.full_like(grid, np.nan)
    both = has_prev & has_next
    out[both] = 0.5 * (nxt[both] - prev[both])
    only_next = has_next & ~has_prev
    out[only_next] = nxt[only_next] - grid[only_next]
    only_prev = has_prev & ~has_next
    out[only_prev] = grid[only_prev] - prev[only_prev]
    return out


def current_maps(sol: EddySolution, mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """
    Grid map of element currents and the magnitude of their lattice gradient.

    The element currents act as a stream function: the gradient components
    along columns (X1) and rows (-X2) give the in-plane current density pattern.
    Cells without any neighbour have no magnitude (NaN).
    """
    grid = current_grid(sol.I, mesh)
    d_col = _axis_gradient(grid, axis=1)
    d_row = -_axis_gradient(grid, axis=0)
    defined = ~np.isnan(d_col) | ~np.isnan(d_row)
    magnitude = np.full_like(grid, np.nan)
    magnitude[defined] = np.hypot(np.nan_to_num(d_col[defined]), np.nan_to_num(d_row[defined]))
    return grid, magnitude


def radial_profile(values: np.ndarray, mesh: Mesh) -> Tuple[pd.DataFrame, List[float]]:
    """
    Azimuthal average of a per-element quantity in rings one lattice spacing wide.

    Returns the profile (r_m, mean, count) and the radii of its local maxima,
    which locate the inner and outer eddy-current rings.
    """
    values = np.asarray(values, dtype=float)
    radii = np.hypot(mesh.centers[:, 0], mesh.centers[:, 1])
    bins = np.floor(radii / (2.0 * mesh.R_e) + 0.5).astype(int)
    ok = ~np.isnan(values)
    frame = (pd.DataFrame({"bin": bins[ok], "r": radii[ok], "value": values[ok]})
             .groupby("bin")
             .agg(r_m=("r", "mean"), mean=("value", "mean"), count=("value", "size"))
             .reset_index(drop=True))

    means = frame["mean"].to_numpy()
    peaks: List[float] = []
    for k in range(means.size):
        left = means[k - 1] if k > 0 else -np.inf
        right = means[k + 1] if k + 1 < means.size else -np.inf
        if means[k] > left and means[k] >= right:
            peaks.append(float(frame["r_m"].iloc[k]))
    return frame, peaks


def symmetry_spread(values: np.ndarray, mesh: Mesh) -> Dict[str, float]:
    """
    Largest spread of a per-element quantity, relative to its largest magnitude,
    among elements the lattice makes equivalent.

    "orbit" groups the up to eight sites (+-i, +-j), (+-j, +-i) that the square
    lattice maps onto each other; coaxial coils give equal currents there.
    "equal_radius" groups all sites with the same i^2 + j^2, e.g. (5, 0) and
    (3, 4), which differ by the lattice's anisotropy.
    """
    values = np.real(np.asarray(values))
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    lattice = np.abs(mesh.lattice)
    keys = {
        "orbit": lattice.max(axis=1) * (mesh.grid_n + 1) + lattice.min(axis=1),
        "equal_radius": (lattice ** 2).sum(axis=1),
    }
    spread = {}
    for name, key in keys.items():
        grouped = pd.Series(values).groupby(key)
        worst = float((grouped.max() - grouped.min()).max()) if values.size else 0.0
        spread[name] = worst / scale if scale > 0 else 0.0
    return spread


def element_values(grid: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Per-element values read back from a grid map."""
    return grid[mesh.grid_index[:, 0], mesh.grid_index[:, 1]]


def maps_to_frame(grid: np.ndarray) -> pd.DataFrame:
    """row, col, value for every present cell."""
    rows, cols = np.nonzero(~np.isnan(grid))
    return pd.DataFrame({"row": rows, "col": cols, "value": grid[rows, cols]})


def clear_caches():
    SELF_MATRIX_CACHE.clear()
    FACTOR_CACHE.clear()
