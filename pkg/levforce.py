"""
Levitation Forces
=================

Ponderomotive force on the meshed disc from the frozen-current derivative of
the element-coil interaction energy, the dimensionless vertical force function
F_m(lambda) used by the quasi-FEM pull-in model, and loop-field maps.

Reduced units:
    energy  W / (mu0 I_c1^2)  expressed through
            Wbar = sum_s sum_j I_s I_cj sqrt(R_cj / R_c1) Mbar_sj
            so that W / (mu0 I_c1^2) = sqrt(R_c1 R_e) * Wbar   (metres)
    force   F / (mu0 I_c1^2)  (dimensionless), torque in metres
    F_m     = kappa * dWbar/dx3 = (1/chi) dWbar/dlambda with currents frozen
The phasor time-average factor 1/2 is applied only by the dimensional helpers.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from eddy import EddySolution, EddySystem, assemble, coupling_matrix, solve
from ellint import elliptic_from_complement
from errors import GeometryError, SingularGeometryError
from filament import MU_0
from geometry import CoilSystem, Mesh, Pose, element_positions
from utils import get_logger

FD_STEP_TRANSLATION = 1e-4   # in units of R_e
FD_STEP_ROTATION = 1e-5      # rad
FIELD_SINGULAR_TOL = 1e-24   # m^2, squared distance to a filament
RIM_RING_CURRENT = 1.0       # sign of the outer eddy ring under unit levitation-coil current

logger = get_logger("levforce")


@dataclass(frozen=True)
class DimensionlessGroups:
    """kappa = h/h_l, xi = h_l/(2 R_l), chi = h_l/R_e; eta0 once calibrated."""
    kappa: float
    xi: float
    chi: float
    eta0: Optional[float] = None

    def __post_init__(self):
        for name in ("kappa", "xi", "chi"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be positive, got {value!r}")

    @classmethod
    def from_geometry(cls, h_l: float, h: float, R_l: float, R_e: float) -> "DimensionlessGroups":
        return cls(kappa=h / h_l, xi=h_l / (2.0 * R_l), chi=h_l / R_e)

    def x3(self, lam: float) -> float:
        """Axial offset of the disc plane above the first winding, units of R_e."""
        return self.chi * (1.0 + lam * self.kappa)

    def pose(self, lam: float, R_e: float) -> Pose:
        h_l = self.chi * R_e
        return Pose.at_lambda(h_l, self.kappa * h_l, lam)


@dataclass(frozen=True)
class GeneralizedForce:
    """Force (units of mu0 I_c1^2) and torque (mu0 I_c1^2 m) on the disc."""
    F1: float
    F2: float
    F3: float
    T1: float
    T2: float
    T3: float

    def as_tuple(self):
        return (self.F1, self.F2, self.F3, self.T1, self.T2, self.T3)


@dataclass(frozen=True)
class FieldSample:
    position: tuple          # (r, z) metres
    B: tuple                 # (B_r, B_z) tesla per ampere
    grad: tuple              # grad |B|^2 components (r, z)


def _pair_weights(sol: EddySolution, coils: CoilSystem) -> np.ndarray:
    """I_s * I_cj * sqrt(R_cj / R_c1), shape (n, N)."""
    return np.real(sol.I)[:, None] * (coils.currents * coils.radius_weights())[None, :]


def _reduce(terms: np.ndarray) -> float:
    # contiguous pairwise summation keeps the reduction order fixed
    return float(np.sum(np.ascontiguousarray(terms).ravel()))


def stored_interaction_energy(mesh: Mesh, coils: CoilSystem, pose: Pose, sol: EddySolution) -> float:
    """Element-coil cross term Wbar of the stored magnetic energy."""
    if not np.any(sol.I):
        return 0.0
    Mc = coupling_matrix(mesh, coils, pose)
    return _reduce(_pair_weights(sol, coils) * Mc)


def force_sum(sol: EddySolution, dMc_dx3: np.ndarray, coils: CoilSystem, kappa: float) -> float:
    """kappa * sum I_s I_cj sqrt(Rbar_cj) dMbar_sj/dx3."""
    return kappa * _reduce(_pair_weights(sol, coils) * dMc_dx3)


def Fm(lam: float, mesh: Mesh, coils: CoilSystem, groups: DimensionlessGroups,
       system: Optional[EddySystem] = None) -> float:
    """
    Dimensionless vertical force function at displacement lam.

    Eddy currents are re-solved at the pose; the derivative uses
    dx3/dlambda = kappa * chi applied to the full offset chi(1 + lambda kappa) - z_cj/R_e.
    """
    pose = groups.pose(lam, mesh.R_e)
    system = assemble(mesh, coils, pose) if system is None else system.with_pose(pose)
    sol = solve(system)
    dMc = coupling_matrix(mesh, coils, pose, derivative=True)
    return force_sum(sol, dMc, coils, groups.kappa)


def generalized_force(mesh: Mesh, coils: CoilSystem, pose: Pose, sol: EddySolution,
                      axial_method: str = "analytic") -> GeneralizedForce:
    """
    Six generalized force components with currents frozen at sol.

    F3 uses the analytic axial kernel (or central differences when
    axial_method="fd"); F1, F2 and the torques use central differences of Mc.
    Tilts move element centres only.
    """
    weights = _pair_weights(sol, coils) * np.sqrt(coils.R_c1 * mesh.R_e)
    q = np.asarray(pose.q, dtype=float)
    step = FD_STEP_TRANSLATION * mesh.R_e

    def translated(axis: int, sign: float) -> np.ndarray:
        dq = np.zeros(3)
        dq[axis] = sign * step
        return coupling_matrix(mesh, coils, pose, positions=element_positions(mesh, q + dq))

    def rotated(axis: int, sign: float) -> np.ndarray:
        angles = np.zeros(3)
        angles[axis] = sign * FD_STEP_ROTATION
        return coupling_matrix(mesh, coils, pose, positions=element_positions(mesh, q, angles))

    forces = []
    for axis in range(3):
        if axis == 2 and axial_method == "analytic":
            dMc = coupling_matrix(mesh, coils, pose, derivative=True) / mesh.R_e
        else:
            dMc = (translated(axis, 1.0) - translated(axis, -1.0)) / (2.0 * step)
        forces.append(_reduce(weights * dMc))

    torques = []
    for axis in range(3):
        dMc = (rotated(axis, 1.0) - rotated(axis, -1.0)) / (2.0 * FD_STEP_ROTATION)
        torques.append(_reduce(weights * dMc))

    return GeneralizedForce(*forces, *torques)


def dimensional_force(force_reduced: float, I_c1: float) -> float:
    """Time-averaged force in newtons for coil current amplitude I_c1 (A)."""
    return 0.5 * MU_0 * I_c1 * I_c1 * force_reduced


def stored_energy_dimensional(w_bar: float, I_c1: float, R_c1: float, R_e: float) -> float:
    """Time-averaged interaction energy in joules."""
    return 0.5 * MU_0 * I_c1 * I_c1 * np.sqrt(R_c1 * R_e) * w_bar


# ---- loop fields ------------------------------------------------------------

def _single_loop_field(r: np.ndarray, z: np.ndarray, a: float):
    """(B_r, B_z) per unit current of a loop of radius a in the plane z = 0."""
    alpha2 = (a - r) ** 2 + z ** 2
    if np.any(alpha2 < FIELD_SINGULAR_TOL):
        raise SingularGeometryError(f"field sample lies on the filament of radius {a:.6g} m")
    beta2 = (a + r) ** 2 + z ** 2
    beta = np.sqrt(beta2)
    K, E = elliptic_from_complement(alpha2 / beta2)
    prefactor = MU_0 / (2.0 * np.pi * beta)

    B_z = prefactor * (K + (a * a - r * r - z * z) / alpha2 * E)
    B_r = np.zeros_like(r)
    off_axis = r > 0
    bracket = -K + (a * a + r * r + z * z) / alpha2 * E
    B_r[off_axis] = (prefactor * z * bracket)[off_axis] / r[off_axis]
    return B_r, B_z


def loop_field(coils: CoilSystem, r_values: Sequence[float], z_values: Sequence[float]) -> List[FieldSample]:
    """
    Superposed field of all coil filaments (weighted by their relative currents)
    on the rectangular grid r_values x z_values, with grad |B|^2 by central
    differences on that grid.
    """
    r_values = np.asarray(r_values, dtype=float)
    z_values = np.asarray(z_values, dtype=float)
    if np.any(r_values < 0):
        raise GeometryError("radial sample coordinates must be >= 0")
    R, Z = np.meshgrid(r_values, z_values, indexing="ij")

    B_r = np.zeros_like(R)
    B_z = np.zeros_like(R)
    for filament in coils.filaments:
        br, bz = _single_loop_field(R, Z - filament.position[2], filament.radius)
        B_r += filament.current * br
        B_z += filament.current * bz

    B2 = B_r ** 2 + B_z ** 2
    grad_r = np.gradient(B2, r_values, axis=0) if r_values.size > 1 else np.zeros_like(B2)
    grad_z = np.gradient(B2, z_values, axis=1) if z_values.size > 1 else np.zeros_like(B2)

    samples = []
    for i in range(R.shape[0]):
        for k in range(R.shape[1]):
            samples.append(FieldSample(
                position=(float(R[i, k]), float(Z[i, k])),
                B=(float(B_r[i, k]), float(B_z[i, k])),
                grad=(float(grad_r[i, k]), float(grad_z[i, k])),
            ))
    return samples


def field_to_frame(samples: List[FieldSample], ring_current: float = RIM_RING_CURRENT) -> pd.DataFrame:
    """
    Field-map export: r_m, z_m, B_r, B_z, gradmag_r, gradmag_z, push_r, push_z.

    push_r, push_z is the Lorentz force per unit length on an azimuthal ring
    current of the given sign placed at the sample point.
    """
    pushes = [ring_force(s, ring_current) for s in samples]
    return pd.DataFrame({
        "r_m": [s.position[0] for s in samples],
        "z_m": [s.position[1] for s in samples],
        "B_r": [s.B[0] for s in samples],
        "B_z": [s.B[1] for s in samples],
        "gradmag_r": [s.grad[0] for s in samples],
        "gradmag_z": [s.grad[1] for s in samples],
        "push_r": [p[0] for p in pushes],
        "push_z": [p[1] for p in pushes],
    })


def ring_force(sample: FieldSample, ring_current: float = RIM_RING_CURRENT) -> tuple:
    """I phi x B for an azimuthal current I: (I B_z, -I B_r)."""
    B_r, B_z = sample.B
    return (ring_current * B_z, -ring_current * B_r)


def push_direction(sample: FieldSample, ring_current: float = RIM_RING_CURRENT) -> dict:
    """Where an eddy ring at the sample point is pushed, as an inclination from horizontal."""
    fr, fz = ring_force(sample, ring_current)
    inclination = float(np.degrees(np.arctan2(abs(fz), abs(fr))))
    return {"inclination_deg": inclination, "inward": bool(fr < 0), "upward": bool(fz > 0)}
