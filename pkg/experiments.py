"""
Reference Actuators
===================

Measured and published pull-in data for the fabricated micro-actuators and the
preliminary planar-coil design used to validate the models.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from geometry import CoilSystem, Filament, build_solenoid
from pullin import ActuatorScenario

LEVITATION_COIL_RADIUS = 1.0e-3
ELECTRODE_AREA = 8.0e-7           # m^2
COIL_PITCH = 25e-6
CONSISTENCY_TOL = 0.02            # tabulated xi, kappa are rounded to two digits


@dataclass(frozen=True)
class ExperimentRecord:
    """One measured disc with the published model predictions (SI units)."""
    name: str
    disc_diameter: float
    mass: float
    h_l: float
    h: float
    xi: float
    kappa: float
    measured_q: float
    measured_U: float
    analytical_q: float
    analytical_U: float
    quasifem_q: float
    quasifem_U: float

    def __post_init__(self):
        for key, value in self.__dict__.items():
            if key != "name" and not value > 0:
                raise ValueError(f"{self.name}: {key} must be positive, got {value!r}")

    def parameter_deviation(self) -> Dict[str, float]:
        """Relative gap between the tabulated xi, kappa and the geometry."""
        return {
            "xi": abs(self.xi - self.h_l / (2.0 * LEVITATION_COIL_RADIUS)) / self.xi,
            "kappa": abs(self.kappa - self.h / self.h_l) / self.kappa,
        }

    def is_consistent(self, tol: float = CONSISTENCY_TOL) -> bool:
        return all(dev <= tol for dev in self.parameter_deviation().values())

    def measured_normalized(self, u_norm: float) -> Tuple[float, float]:
        """(lambda, sqrt(beta)) of the measured pull-in point."""
        return self.measured_q / self.h, self.measured_U / u_norm

    def to_scenario(self, grid_n: int = 71, rule: str = "center-inside") -> ActuatorScenario:
        return ActuatorScenario(
            name=self.name,
            disc_radius=0.5 * self.disc_diameter,
            mass=self.mass,
            h_l=self.h_l,
            h=self.h,
            electrode_area=ELECTRODE_AREA,
            coils=solenoid_coils(),
            grid_n=grid_n,
            rule=rule,
            levitation_radius=LEVITATION_COIL_RADIUS,
            xi_table=self.xi,
            kappa_table=self.kappa,
        )


def solenoid_coils() -> CoilSystem:
    """Levitation (20 windings, +1) and stabilization (12 windings, -1) solenoids, top windings at z = 0."""
    return CoilSystem.from_stacks(
        build_solenoid(2.0e-3, 20, COIL_PITCH, current=1.0),
        build_solenoid(3.8e-3, 12, COIL_PITCH, current=-1.0),
    )


MEASURED_DISCS: Dict[str, ExperimentRecord] = {
    "disc_2_4mm": ExperimentRecord(
        name="disc_2_4mm", disc_diameter=2.4e-3, mass=0.2e-6, h_l=180e-6, h=100e-6,
        xi=0.09, kappa=0.55, measured_q=35e-6, measured_U=38.0,
        analytical_q=40e-6, analytical_U=43.0, quasifem_q=40e-6, quasifem_U=37.0,
    ),
    "disc_2_8mm": ExperimentRecord(
        name="disc_2_8mm", disc_diameter=2.8e-3, mass=0.3e-6, h_l=200e-6, h=119e-6,
        xi=0.1, kappa=0.6, measured_q=43e-6, measured_U=60.8,
        analytical_q=49e-6, analytical_U=69.0, quasifem_q=48e-6, quasifem_U=60.76,
    ),
    "disc_3_2mm_h64": ExperimentRecord(
        name="disc_3_2mm_h64", disc_diameter=3.2e-3, mass=0.7e-6, h_l=144e-6, h=64e-6,
        xi=0.072, kappa=0.44, measured_q=18e-6, measured_U=32.0,
        analytical_q=24e-6, analytical_U=44.0, quasifem_q=22e-6, quasifem_U=33.0,
    ),
    "disc_3_2mm_h107": ExperimentRecord(
        name="disc_3_2mm_h107", disc_diameter=3.2e-3, mass=0.7e-6, h_l=187e-6, h=107e-6,
        xi=0.0935, kappa=0.57, measured_q=36e-6, measured_U=65.0,
        analytical_q=42e-6, analytical_U=88.0, quasifem_q=37e-6, quasifem_U=69.0,
    ),
}

# Planar coils modelled as single filaments; published (|lambda_p|, sqrt(beta_p)).
PRELIMINARY_DESIGN = {
    "coil_radii": (1.0e-3, 1.9e-3),
    "coil_currents": (1.0, -1.0),
    "h_l": 250e-6,
    "h": 10e-6,
    "default_disc_radius": 1.55e-3,
    "quasifem": {1.2e-3: (0.34, 0.1286), 1.55e-3: (0.34, 0.0995), 1.7e-3: (0.34, 0.0949)},
    "analytical": (0.34, 0.102),
    "simplified": (1.0 / 3.0, 0.1),
}


def preliminary_scenario(disc_radius: float = 1.55e-3, grid_n: int = 71,
                         rule: str = "center-inside") -> ActuatorScenario:
    """Preliminary design rig; the disc mass is unknown so results stay dimensionless."""
    design = PRELIMINARY_DESIGN
    coils = CoilSystem(tuple(Filament(radius=r, current=c)
                             for r, c in zip(design["coil_radii"], design["coil_currents"])))
    return ActuatorScenario(
        name=f"preliminary_r{disc_radius * 1e3:.2f}mm",
        disc_radius=disc_radius,
        h_l=design["h_l"],
        h=design["h"],
        electrode_area=ELECTRODE_AREA,
        coils=coils,
        grid_n=grid_n,
        rule=rule,
    )


def _normalize(name: str) -> str:
    return name.lower().strip().replace("⌀", "").replace(".", "_").replace(" ", "_")


def find_experiment(search_name: str) -> Optional[ExperimentRecord]:
    """Find a measured disc by name (fuzzy: "2.8", "disc_2_8mm", "3.2mm h107")."""
    key = _normalize(search_name)
    if key in MEASURED_DISCS:
        return MEASURED_DISCS[key]

    for name, record in MEASURED_DISCS.items():
        if key in name:
            return record
        parts = [p for p in key.split("_") if p]
        if parts and all(p in name for p in parts):
            return record
    return None


def get_all_experiment_names() -> List[str]:
    return sorted(MEASURED_DISCS)


def measured_discs() -> List[ExperimentRecord]:
    return [MEASURED_DISCS[name] for name in get_all_experiment_names()]
