"""
Coil and Disc Geometry
======================

Coil filament stacks, the square-lattice disc mesh of touching circular
elements and the rigid-body kinematics that place mesh elements relative to
coil filaments.

Frames: X3 points up, coil filaments are coaxial with X3, the disc centre of
mass sits at q = (0, 0, h_l + q3) and the electrodes lie below the disc, so
q3 < 0 moves the disc toward them.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import GeometryError
from filament import RelativePlacement, RingGeometry
from utils import get_logger

MESH_RULES = ("center-inside", "fully-inside")
DEFAULT_RULE = "center-inside"
DEFAULT_THICKNESS_RATIO = 0.2   # th / R_e, i.e. eps = 0.1

logger = get_logger("geometry")

Vector3 = Tuple[float, float, float]


def _as_vector3(values: Sequence[float], name: str) -> Vector3:
    vec = tuple(float(v) for v in values)
    if len(vec) != 3 or not all(np.isfinite(vec)):
        raise GeometryError(f"{name} must be three finite numbers, got {values!r}")
    return vec


@dataclass(frozen=True)
class Filament:
    """One circular current loop coaxial with X3."""
    radius: float
    position: Vector3 = (0.0, 0.0, 0.0)
    orientation: Vector3 = (0.0, 0.0, 0.0)
    current: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"filament radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "position", _as_vector3(self.position, "position"))
        object.__setattr__(self, "orientation", _as_vector3(self.orientation, "orientation"))
        if any(self.orientation):
            raise GeometryError("tilted coil filaments are not supported (orientation must be zero)")


@dataclass(frozen=True)
class CoilSystem:
    """Ordered coil filaments; the first one sets the radius and current normalization."""
    filaments: Tuple[Filament, ...]
    reference_current: Optional[float] = None
    frequency: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "filaments", tuple(self.filaments))
        if not self.filaments:
            raise GeometryError("a coil system needs at least one filament")

    @classmethod
    def from_stacks(cls, *stacks: Sequence[Filament], reference_current: Optional[float] = None,
                    frequency: Optional[float] = None) -> "CoilSystem":
        filaments: List[Filament] = []
        for stack in stacks:
            filaments.extend(stack)
        return cls(tuple(filaments), reference_current, frequency)

    @property
    def N(self) -> int:
        return len(self.filaments)

    @property
    def radii(self) -> np.ndarray:
        return np.array([f.radius for f in self.filaments])

    @property
    def positions(self) -> np.ndarray:
        return np.array([f.position for f in self.filaments])

    @property
    def currents(self) -> np.ndarray:
        return np.array([f.current for f in self.filaments])

    @property
    def R_c1(self) -> float:
        return self.filaments[0].radius

    def radius_weights(self) -> np.ndarray:
        """sqrt(R_cj / R_c1) per filament."""
        return np.sqrt(self.radii / self.R_c1)


def build_solenoid(diameter: float, windings: int, pitch: float, z_top: float = 0.0,
                   current: float = 1.0) -> List[Filament]:
    """Stack of identical filaments, the first at z_top and the rest spaced pitch below it."""
    if not diameter > 0:
        raise GeometryError(f"coil diameter must be positive, got {diameter!r}")
    if int(windings) != windings or windings < 1:
        raise GeometryError(f"windings must be a positive integer, got {windings!r}")
    if pitch < 0:
        raise GeometryError(f"pitch must be >= 0, got {pitch!r}")

    radius = 0.5 * diameter
    return [Filament(radius=radius, position=(0.0, 0.0, z_top - j * pitch), current=current)
            for j in range(int(windings))]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Disc discretized into touching circular elements on a square lattice."""
    centers: np.ndarray          # (n, 2) body-frame centres, metres
    grid_index: np.ndarray       # (n, 2) integer (row, col)
    R_e: float
    th: float
    grid_n: int
    disc_radius: float
    rule: str = DEFAULT_RULE
    ring: RingGeometry = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "ring", RingGeometry(self.R_e, self.th))

    @property
    def n(self) -> int:
        return int(self.centers.shape[0])

    @property
    def eps(self) -> float:
        return self.ring.eps

    @property
    def lattice(self) -> np.ndarray:
        """(n, 2) integer lattice offsets (i along X1, j along X2) from the disc centre."""
        c = (self.grid_n - 1) // 2
        return np.column_stack([self.grid_index[:, 1] - c, c - self.grid_index[:, 0]])

    @property
    def cache_key(self) -> Tuple:
        return (self.grid_n, self.rule, float(self.R_e), float(self.th), self.n)


def mesh_disc(disc_radius: float, grid_n: int, th: Optional[float] = None,
              rule: str = DEFAULT_RULE) -> Mesh:
    """
    Mesh a disc of the given radius with grid_n x grid_n lattice sites.

    Args:
        disc_radius: disc radius (m)
        grid_n: odd number of lattice sites across the diameter
        th: layer thickness (m); defaults to 0.2 * R_e
        rule: "center-inside" keeps elements whose centre lies in the disc,
              "fully-inside" keeps elements entirely within it
    """
    if not disc_radius > 0:
        raise GeometryError(f"disc radius must be positive, got {disc_radius!r}")
    if int(grid_n) != grid_n or grid_n < 3 or grid_n % 2 == 0:
        raise GeometryError(f"grid_n must be an odd integer >= 3, got {grid_n!r}")
    if rule not in MESH_RULES:
        raise GeometryError(f"unknown mesh rule {rule!r}; expected one of {MESH_RULES}")

    grid_n = int(grid_n)
    R_e = disc_radius / grid_n
    th = DEFAULT_THICKNESS_RATIO * R_e if th is None else th
    if not th > 0:
        raise GeometryError(f"layer thickness must be positive, got {th!r}")

    c = (grid_n - 1) // 2
    rows, cols = np.meshgrid(np.arange(grid_n), np.arange(grid_n), indexing="ij")
    rows, cols = rows.ravel(), cols.ravel()
    i, j = cols - c, c - rows
    r2 = 4 * (i * i + j * j)     # (2 * lattice radius)^2, exact integers
    limit = grid_n ** 2 if rule == "center-inside" else (grid_n - 1) ** 2
    keep = r2 <= limit

    centers = 2.0 * R_e * np.column_stack([i[keep], j[keep]]).astype(float)
    grid_index = np.column_stack([rows[keep], cols[keep]])
    mesh = Mesh(centers=centers, grid_index=grid_index, R_e=R_e, th=th, grid_n=grid_n,
                disc_radius=disc_radius, rule=rule)
    logger.info(f"Meshed disc r={disc_radius:.4g} m: grid_n={grid_n}, rule={rule}, "
                f"n={mesh.n}, R_e={R_e:.4g} m, eps={mesh.eps:.4g}")
    return mesh


@dataclass(frozen=True)
class Pose:
    """Disc centre-of-mass translation q and Bryan angles phi (zero)."""
    q: Vector3
    phi: Vector3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "q", _as_vector3(self.q, "pose translation"))
        object.__setattr__(self, "phi", _as_vector3(self.phi, "pose angles"))
        if any(self.phi):
            raise GeometryError("non-zero disc rotation angles are not supported")

    @classmethod
    def levitated(cls, h_l: float, q3: float = 0.0) -> "Pose":
        return cls((0.0, 0.0, h_l + q3))

    @classmethod
    def at_lambda(cls, h_l: float, h: float, lam: float) -> "Pose":
        """Pose for the dimensionless displacement lam = q3 / h."""
        return cls.levitated(h_l, lam * h)

    def translated(self, dq: Sequence[float]) -> "Pose":
        return Pose(tuple(a + b for a, b in zip(self.q, dq)))


def rotation_matrix(angles: Sequence[float]) -> np.ndarray:
    """Body-to-fixed rotation for Bryan angles (x, then y, then z)."""
    a1, a2, a3 = angles
    c1, s1 = np.cos(a1), np.sin(a1)
    c2, s2 = np.cos(a2), np.sin(a2)
    c3, s3 = np.cos(a3), np.sin(a3)
    rx = np.array([[1, 0, 0], [0, c1, -s1], [0, s1, c1]])
    ry = np.array([[c2, 0, s2], [0, 1, 0], [-s2, 0, c2]])
    rz = np.array([[c3, -s3, 0], [s3, c3, 0], [0, 0, 1]])
    return rx @ ry @ rz


def element_positions(mesh: Mesh, q: Sequence[float],
                      angles: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """
    Fixed-frame element centres r_cm + R(angles) rho, shape (n, 3).

    Non-zero angles move the centres only; element planes stay parallel to the
    coils. Used for finite-difference torques.
    """
    body = np.column_stack([mesh.centers, np.zeros(mesh.n)])
    if any(angles):
        body = body @ rotation_matrix(angles).T
    return body + np.asarray(q, dtype=float)[None, :]


def relative_placement(element_center: Sequence[float], filament: Filament, pose: Pose,
                       R_e: float) -> RelativePlacement:
    """Placement of one element (body-frame centre rho) relative to one coil filament."""
    rho = np.zeros(3)
    rho[:len(element_center)] = element_center
    r = np.asarray(pose.q) + rho - np.asarray(filament.position)
    return RelativePlacement(r[0] / R_e, r[1] / R_e, r[2] / R_e, R_e / filament.radius)


def placement_arrays(mesh: Mesh, coils: CoilSystem, positions: np.ndarray
                     ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Lateral distance and x3 of every (element, filament) pair in units of R_e.

    Returns (lateral (n, N), x3 (n, N), nu (N,)).
    """
    offsets = positions[:, None, :] - coils.positions[None, :, :]
    lateral = np.hypot(offsets[..., 0], offsets[..., 1]) / mesh.R_e
    x3 = offsets[..., 2] / mesh.R_e
    nu = mesh.R_e / coils.radii
    return lateral, x3, nu


def mesh_to_frame(mesh: Mesh) -> pd.DataFrame:
    """Mesh export: s (1-based), x1_m, x2_m, row, col."""
    return pd.DataFrame({
        "s": np.arange(1, mesh.n + 1),
        "x1_m": mesh.centers[:, 0],
        "x2_m": mesh.centers[:, 1],
        "row": mesh.grid_index[:, 0],
        "col": mesh.grid_index[:, 1],
    })
