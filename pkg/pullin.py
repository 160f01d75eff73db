"""
Static Pull-In Models
=====================

Three descriptions of the electrostatic pull-in of the levitated disc, all in
the dimensionless form

    lambda = q3 / h          (negative toward the electrodes)
    beta   = A0 U^2 / (4 m g h^2)

- quasi-FEM:   beta = -(1 + lambda)^2 (1 + eta0 F_m(lambda)),  eta0 = -1/F_m(0)
- analytical:  single eddy circuit of radius R_l facing the levitation coil,
               closed form in K and E, calibrated so that beta(0) = 0
- simplified:  beta = -[(ln(4/xi) - 1)/(ln(4/xi) - 2)] kappa lambda (1 + lambda)^2

Equilibrium curves are sampled on a uniform lambda grid and the pull-in point
is the curve maximum, refined by golden-section search.
"""

import functools
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from tqdm import tqdm

from eddy import MESH_CACHE_SIZE, EddySystem, ImpedanceMode, assemble
from ellint import SINGULAR_GUARD, phi_bracket_scaled, psi_kernel_scaled
from errors import HLMAError, ModelValidityError, NoPullInError, ScenarioError, SingularGeometryError
from geometry import DEFAULT_RULE, CoilSystem, Mesh, mesh_disc
from levforce import DimensionlessGroups, Fm
from utils import get_logger

EPS_0 = 8.854e-12
G = 9.81
MODELS = ("quasi-fem", "analytical", "simplified")
LAMBDA_MIN = -0.9
DEFAULT_SAMPLES = 15
REFINE_XTOL = {"quasi-fem": 1e-4, "analytical": 1e-9, "simplified": 1e-9}

logger = get_logger("pullin")


@dataclass(frozen=True)
class ActuatorScenario:
    """Complete device description; lengths in metres, mass in kilograms."""
    name: str
    disc_radius: float
    h_l: float
    h: float
    electrode_area: float
    coils: CoilSystem
    mass: Optional[float] = None
    thickness: Optional[float] = None
    grid_n: int = 71
    rule: str = DEFAULT_RULE
    levitation_radius: Optional[float] = None
    # Rounded values quoted with measurements; the closed-form models use them when given.
    xi_table: Optional[float] = None
    kappa_table: Optional[float] = None
    impedance: Optional[ImpedanceMode] = None

    def __post_init__(self):
        for label, value in (("disc radius", self.disc_radius), ("h_l", self.h_l), ("h", self.h),
                             ("electrode area", self.electrode_area)):
            if not (np.isfinite(value) and value > 0):
                raise ScenarioError(f"{self.name}: {label} must be positive, got {value!r}")
        if self.mass is not None and not self.mass > 0:
            raise ScenarioError(f"{self.name}: mass must be positive, got {self.mass!r}")

    @property
    def R_l(self) -> float:
        return self.levitation_radius or self.coils.R_c1

    @property
    def kappa(self) -> float:
        return self.h / self.h_l

    @property
    def xi(self) -> float:
        return self.h_l / (2.0 * self.R_l)

    @property
    def A0(self) -> float:
        return EPS_0 * self.electrode_area

    def model_parameters(self) -> Tuple[float, float]:
        """(xi, kappa) for the closed-form models."""
        return (self.xi_table or self.xi, self.kappa_table or self.kappa)

    def mesh(self) -> Mesh:
        return mesh_disc(self.disc_radius, self.grid_n, th=self.thickness, rule=self.rule)

    def with_fidelity(self, grid_n: Optional[int] = None, rule: Optional[str] = None) -> "ActuatorScenario":
        return replace(self, grid_n=grid_n or self.grid_n, rule=rule or self.rule)


@dataclass(frozen=True)
class PullInCurve:
    model: str
    lam: np.ndarray
    beta: np.ndarray
    flagged: Tuple[float, ...] = ()

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.beta))

    @property
    def physical_branch(self) -> Tuple[np.ndarray, np.ndarray]:
        """Samples from lambda = 0 up to the curve maximum (ascending beta)."""
        k = self.peak_index + 1
        return self.lam[:k], self.beta[:k]

    def to_frame(self, scenario: Optional[ActuatorScenario] = None) -> pd.DataFrame:
        """Curve export: lambda_abs, beta, sqrt_beta, U_volts, q3_m."""
        sqrt_beta = np.sqrt(np.clip(self.beta, 0.0, None))
        if scenario is not None and scenario.mass is not None:
            u_volts = u_norm(scenario) * sqrt_beta
        else:
            u_volts = np.full_like(sqrt_beta, np.nan)
        q3 = self.lam * scenario.h if scenario is not None else np.full_like(self.lam, np.nan)
        return pd.DataFrame({
            "lambda_abs": np.abs(self.lam),
            "beta": self.beta,
            "sqrt_beta": sqrt_beta,
            "U_volts": u_volts,
            "q3_m": q3,
        })


@dataclass(frozen=True)
class PullInResult:
    model: str
    lambda_p: float
    beta_p: float
    sqrt_beta_p: float
    U_p: Optional[float] = None
    q_p: Optional[float] = None
    eta0: Optional[float] = None
    runtime_s: Optional[float] = None

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {
            "model": self.model,
            "lambda_p": self.lambda_p,
            "beta_p": self.beta_p,
            "sqrt_beta_p": self.sqrt_beta_p,
            "U_p_V": self.U_p,
            "q_p_m": self.q_p,
            "eta0": self.eta0,
            "runtime_s": self.runtime_s,
        }


# ---- closed-form models -----------------------------------------------------

def beta_simplified(lam, xi: float, kappa: float):
    """Simplified pull-in curve; valid while ln(4/xi) > 2."""
    log_term = np.log(4.0 / xi)
    if log_term <= 2.0:
        raise ModelValidityError(f"simplified model needs ln(4/xi) > 2, got xi={xi!r}")
    lam = np.asarray(lam, dtype=float)
    value = -((log_term - 1.0) / (log_term - 2.0)) * kappa * lam * (1.0 + lam) ** 2
    return float(value) if value.ndim == 0 else value


def _analytical_force_term(lam, xi: float, kappa: float) -> np.ndarray:
    """Vertical force of the single-circuit model up to the calibration constant."""
    u = 1.0 + kappa * np.asarray(lam, dtype=float)
    s2 = (xi * u) ** 2
    m = 1.0 / (1.0 + s2)
    m1 = s2 / (1.0 + s2)
    if np.any(u <= 0) or np.any(m1 < SINGULAR_GUARD):
        raise SingularGeometryError(
            f"eddy circuit reaches the levitation coil plane (xi={xi!r}, kappa={kappa!r})")
    # ((2/k - k)K - (2/k)E) * (2/k^2) [(2 - k^2)/(2(1 - k^2)) E - K] = 4 k^5 (Psi/k^4)(bracket/k^2)
    elliptic = 4.0 * m ** 2.5 * psi_kernel_scaled(m, m1) * phi_bracket_scaled(m, m1)
    return elliptic * kappa * xi * xi * u / (1.0 + s2) ** 1.5


def beta_analytical(lam, xi: float, kappa: float):
    """Analytical pull-in curve calibrated at lambda = 0."""
    if not (xi > 0 and kappa > 0):
        raise ModelValidityError(f"xi and kappa must be positive, got {xi!r}, {kappa!r}")
    lam = np.asarray(lam, dtype=float)
    ratio = _analytical_force_term(lam, xi, kappa) / _analytical_force_term(0.0, xi, kappa)
    value = (1.0 + lam) ** 2 * (ratio - 1.0)
    return float(value) if value.ndim == 0 else value


# ---- quasi-FEM model --------------------------------------------------------

class QuasiFemModel:
    """
    Pull-in curve from the meshed disc; the factorized element matrix and eta0
    are computed once per scenario and shared by every lambda sample.
    """

    def __init__(self, scenario: ActuatorScenario, impedance: Optional[ImpedanceMode] = None):
        self.logger = get_logger("pullin")
        self.scenario = scenario
        self.mesh = scenario.mesh()
        self.coils = scenario.coils
        self.groups = DimensionlessGroups.from_geometry(scenario.h_l, scenario.h, scenario.R_l, self.mesh.R_e)
        self.system: EddySystem = assemble(self.mesh, self.coils, self.groups.pose(0.0, self.mesh.R_e),
                                           impedance or scenario.impedance)
        self._fm_values: Dict[float, float] = {}
        self._eta0: Optional[float] = None
        self.logger.info(f"Quasi-FEM model for {scenario.name}: n={self.mesh.n}, N={self.coils.N}, "
                         f"kappa={self.groups.kappa:.4g}, chi={self.groups.chi:.4g}")

    def Fm(self, lam: float) -> float:
        lam = float(lam)
        if lam not in self._fm_values:
            self._fm_values[lam] = Fm(lam, self.mesh, self.coils, self.groups, system=self.system)
        return self._fm_values[lam]

    @property
    def eta0(self) -> float:
        if self._eta0 is None:
            f0 = self.Fm(0.0)
            if f0 == 0.0:
                raise ModelValidityError(f"{self.scenario.name}: no levitation force at lambda = 0")
            self._eta0 = -1.0 / f0
        return self._eta0

    def force_ratio(self, lam: float) -> float:
        """F_m(lambda) / F_m(0); independent of the element size that scales F_m itself."""
        return -self.eta0 * self.Fm(lam)

    def restoring_force(self, lam: float) -> float:
        """Net dimensionless magnetic-minus-weight force -(1 + eta0 F_m); zero at lambda = 0."""
        return -(1.0 + self.eta0 * self.Fm(lam))

    def beta(self, lam: float) -> float:
        if not lam > -1.0:
            raise ModelValidityError(f"lambda must be > -1 (electrode contact), got {lam!r}")
        return (1.0 + lam) ** 2 * self.restoring_force(lam)


@functools.lru_cache(maxsize=MESH_CACHE_SIZE)
def quasifem_model(scenario: ActuatorScenario) -> QuasiFemModel:
    return QuasiFemModel(scenario)


def beta_quasifem(lam: float, scenario: ActuatorScenario) -> float:
    return quasifem_model(scenario).beta(lam)


def beta_function(model: str, scenario: ActuatorScenario) -> Callable[[float], float]:
    """beta(lambda) closure for one of the three models."""
    if model == "quasi-fem":
        return quasifem_model(scenario).beta
    xi, kappa = scenario.model_parameters()
    if model == "analytical":
        return lambda lam: beta_analytical(lam, xi, kappa)
    if model == "simplified":
        return lambda lam: beta_simplified(lam, xi, kappa)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


# ---- curves and pull-in points ---------------------------------------------

def lambda_grid(n_samples: int = DEFAULT_SAMPLES, lambda_min: float = LAMBDA_MIN) -> np.ndarray:
    """Uniform grid on (lambda_min, 0], starting at 0."""
    return lambda_min * np.arange(n_samples) / n_samples


def trace_curve(model: str, scenario: ActuatorScenario, n_samples: int = DEFAULT_SAMPLES,
                lambda_min: float = LAMBDA_MIN, progress: bool = False,
                beta_fn: Optional[Callable[[float], float]] = None) -> PullInCurve:
    """Sample beta(lambda); samples whose model evaluation fails are flagged and skipped."""
    if n_samples < 5:
        raise ValueError(f"n_samples ≥ 5 required, got {n_samples}")
    beta_fn = beta_fn or beta_function(model, scenario)

    lams, betas, flagged = [], [], []
    for lam in tqdm(lambda_grid(n_samples, lambda_min), desc=f"{model} curve", disable=not progress):
        try:
            betas.append(float(beta_fn(float(lam))))
            lams.append(float(lam))
        except HLMAError as e:
            logger.warning(f"{model}: sample lambda={lam:.4f} skipped: {str(e)}")
            flagged.append(float(lam))

    return PullInCurve(model, np.array(lams), np.array(betas), tuple(flagged))


def _parabola_vertex(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    coeffs = np.polyfit(np.asarray(xs), np.asarray(ys), 2)
    x = -coeffs[1] / (2.0 * coeffs[0])
    return float(x), float(np.polyval(coeffs, x))


def find_pullin(curve: PullInCurve, beta_fn: Optional[Callable[[float], float]] = None,
                xtol: float = 1e-4) -> PullInResult:
    """
    Pull-in point of a sampled curve.

    The coarse maximum must be strictly interior; it is refined by
    golden-section search on -beta when a model closure is supplied, otherwise
    by the vertex of the parabola through the bracketing samples.
    """
    lam, beta = curve.lam, curve.beta
    if lam.size < 3:
        raise NoPullInError("no pull-in detected: fewer than three valid samples")
    k = int(np.argmax(beta))
    if k == 0 or k == lam.size - 1 or not (beta[k] > beta[k - 1] and beta[k] > beta[k + 1]):
        raise NoPullInError(f"no pull-in detected: {curve.model} curve has no interior maximum")

    triple = sorted((lam[k - 1], lam[k], lam[k + 1]))
    if beta_fn is not None:
        scale = max(abs(lam[k]), 1e-3)
        res = minimize_scalar(lambda x: -beta_fn(x), bracket=tuple(triple), method="golden",
                              options={"xtol": xtol / (2.0 * scale)})
        lam_p, beta_p = float(res.x), float(-res.fun)
    else:
        lam_p, beta_p = _parabola_vertex([lam[k - 1], lam[k], lam[k + 1]],
                                         [beta[k - 1], beta[k], beta[k + 1]])

    return PullInResult(model=curve.model, lambda_p=abs(lam_p), beta_p=beta_p,
                        sqrt_beta_p=float(np.sqrt(max(beta_p, 0.0))))


def u_norm(scenario: ActuatorScenario) -> float:
    """Voltage scale sqrt(4 m g h^2 / A0)."""
    if scenario.mass is None:
        raise ScenarioError(f"{scenario.name}: disc mass is required for dimensional voltages")
    return float(np.sqrt(4.0 * scenario.mass * G * scenario.h ** 2 / scenario.A0))


def dimensionalize(result: PullInResult, scenario: ActuatorScenario) -> Tuple[float, float]:
    """(U_p in volts, q_p in metres)."""
    scale = u_norm(scenario)
    return scale * np.sqrt(max(result.beta_p, 0.0)), result.lambda_p * scenario.h


def simplified_pullin(xi: float, kappa: float) -> Tuple[float, float]:
    """Closed-form (lambda_p, beta_p) of the simplified model."""
    log_term = np.log(4.0 / xi)
    if log_term <= 2.0:
        raise ModelValidityError(f"simplified model needs ln(4/xi) > 2, got xi={xi!r}")
    return 1.0 / 3.0, float((log_term - 1.0) / (log_term - 2.0) * kappa * 4.0 / 27.0)


def run_pullin(model: str, scenario: ActuatorScenario, n_samples: int = DEFAULT_SAMPLES,
               progress: bool = False, xtol: Optional[float] = None,
               lambda_min: float = LAMBDA_MIN) -> Tuple[PullInCurve, PullInResult]:
    """Trace the curve, refine the pull-in point and attach dimensional values."""
    start = time.perf_counter()
    beta_fn = beta_function(model, scenario)
    curve = trace_curve(model, scenario, n_samples, lambda_min, progress=progress, beta_fn=beta_fn)
    result = find_pullin(curve, beta_fn, xtol=xtol or REFINE_XTOL[model])

    updates = {"runtime_s": time.perf_counter() - start}
    if model == "quasi-fem":
        updates["eta0"] = quasifem_model(scenario).eta0
    if scenario.mass is not None:
        U_p, q_p = dimensionalize(result, scenario)
        updates.update(U_p=float(U_p), q_p=float(q_p))
    else:
        updates["q_p"] = result.lambda_p * scenario.h
    result = replace(result, **updates)

    logger.info(f"{model} pull-in for {scenario.name}: |lambda_p|={result.lambda_p:.4f}, "
                f"sqrt(beta_p)={result.sqrt_beta_p:.5f}")
    return curve, result


def compare_results(reference: PullInResult, others: List[PullInResult]) -> pd.DataFrame:
    """Relative deviation of each model's lambda_p and sqrt(beta_p) from the reference."""
    rows = []
    for result in [reference] + list(others):
        rows.append({
            "model": result.model,
            "lambda_p": result.lambda_p,
            "sqrt_beta_p": result.sqrt_beta_p,
            "beta_p": result.beta_p,
            "delta_lambda": abs(result.lambda_p - reference.lambda_p) / reference.lambda_p,
            "delta_sqrt_beta": abs(result.sqrt_beta_p - reference.sqrt_beta_p) / reference.sqrt_beta_p,
        })
    return pd.DataFrame(rows)
