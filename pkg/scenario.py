"""
Scenario Loading
================

Cleans raw scenario JSON into an ActuatorScenario. Every field problem is
reported with its dotted path (e.g. ``disc.radius_m``) so a bad file can be
fixed without reading the code.

Schema:
    name?         str
    disc          {radius_m, mass_kg?, thickness_m?}
    mesh?         {grid_n?, rule?}
    coils         [{diameter_m, windings, pitch_m, z_top_m?, current_rel?}, ...]
    electrodes    {area_m2, spacing_h_m}
    levitation    {height_m, coil_radius_m?}
    model_parameters?  {xi?, kappa?}
    impedance?    {resistance_ohm, frequency_rad_s}
"""

import os
from typing import Any, Dict, List, Optional

import json5
import numpy as np

from eddy import ImpedanceMode
from errors import GeometryError, ScenarioError
from geometry import MESH_RULES, CoilSystem, Filament, build_solenoid
from pullin import ActuatorScenario
from utils import get_logger

DEFAULT_GRID_N = 71


def _missing(path: str) -> ScenarioError:
    return ScenarioError(f"{path}: missing required field")


class ScenarioProcessor:
    """Field-wise cleaning of raw scenario dictionaries."""

    def __init__(self, source: str = "<scenario>"):
        self.logger = get_logger("scenario")
        self.source = source

    def clean_scenario(self, raw: Dict[str, Any]) -> ActuatorScenario:
        if not isinstance(raw, dict):
            raise ScenarioError(f"{self.source}: top level must be an object")

        name = str(raw.get("name") or os.path.splitext(os.path.basename(self.source))[0])
        disc = self.clean_disc(self._section(raw, "disc"))
        mesh = self.clean_mesh(raw.get("mesh") or {})
        coils = self.clean_coils(raw.get("coils"))
        electrodes = self.clean_electrodes(self._section(raw, "electrodes"))
        levitation = self.clean_levitation(self._section(raw, "levitation"))
        model_parameters = self.clean_model_parameters(raw.get("model_parameters") or {})
        impedance = self.clean_impedance(raw.get("impedance"))

        try:
            scenario = ActuatorScenario(
                name=name,
                disc_radius=disc["radius"],
                mass=disc["mass"],
                thickness=disc["thickness"],
                h_l=levitation["height"],
                h=electrodes["spacing"],
                electrode_area=electrodes["area"],
                coils=coils,
                grid_n=mesh["grid_n"],
                rule=mesh["rule"],
                levitation_radius=levitation["coil_radius"],
                xi_table=model_parameters.get("xi"),
                kappa_table=model_parameters.get("kappa"),
                impedance=impedance,
            )
        except GeometryError as e:
            raise ScenarioError(f"{self.source}: {str(e)}") from e

        self.logger.info(f"Loaded scenario {name}: disc r={scenario.disc_radius:.4g} m, "
                         f"{coils.N} coil filaments, grid_n={scenario.grid_n}")
        return scenario

    def _section(self, raw: Dict[str, Any], key: str) -> Dict[str, Any]:
        if key not in raw:
            raise _missing(key)
        section = raw[key]
        if not isinstance(section, dict):
            raise ScenarioError(f"{key}: must be an object")
        return section

    def _number(self, section: Dict[str, Any], key: str, path: str, required: bool = True,
                positive: bool = True) -> Optional[float]:
        if key not in section or section[key] is None:
            if required:
                raise _missing(f"{path}.{key}")
            return None
        value = section[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            raise ScenarioError(f"{path}.{key}: must be a finite number, got {value!r}")
        if positive and value <= 0:
            raise ScenarioError(f"{path}.{key}: must be positive, got {value!r}")
        return float(value)

    def clean_disc(self, disc: Dict[str, Any]) -> Dict[str, Optional[float]]:
        return {
            "radius": self._number(disc, "radius_m", "disc"),
            "mass": self._number(disc, "mass_kg", "disc", required=False),
            "thickness": self._number(disc, "thickness_m", "disc", required=False),
        }

    def clean_mesh(self, mesh: Dict[str, Any]) -> Dict[str, Any]:
        grid_n = mesh.get("grid_n", DEFAULT_GRID_N)
        if isinstance(grid_n, bool) or not isinstance(grid_n, int) or grid_n < 3 or grid_n % 2 == 0:
            raise ScenarioError("mesh.grid_n: must be an odd integer >= 3")
        rule = mesh.get("rule", MESH_RULES[0])
        if rule not in MESH_RULES:
            raise ScenarioError(f"mesh.rule: must be one of {', '.join(MESH_RULES)}, got {rule!r}")
        return {"grid_n": grid_n, "rule": rule}

    def clean_coils(self, coils: Any) -> CoilSystem:
        if coils is None:
            raise _missing("coils")
        if not isinstance(coils, list) or not coils:
            raise ScenarioError("coils: must be a non-empty list")

        stacks: List[List[Filament]] = []
        for index, coil in enumerate(coils):
            path = f"coils[{index}]"
            if not isinstance(coil, dict):
                raise ScenarioError(f"{path}: must be an object")
            windings = coil.get("windings", 1)
            if isinstance(windings, bool) or not isinstance(windings, int) or windings < 1:
                raise ScenarioError(f"{path}.windings: must be a positive integer, got {windings!r}")
            pitch = self._number(coil, "pitch_m", path, required=windings > 1, positive=False) or 0.0
            if pitch < 0:
                raise ScenarioError(f"{path}.pitch_m: must be >= 0, got {pitch!r}")
            current = self._number(coil, "current_rel", path, required=False, positive=False)
            stacks.append(build_solenoid(
                diameter=self._number(coil, "diameter_m", path),
                windings=windings,
                pitch=pitch,
                z_top=self._number(coil, "z_top_m", path, required=False, positive=False) or 0.0,
                current=1.0 if current is None else current,
            ))
        return CoilSystem.from_stacks(*stacks)

    def clean_electrodes(self, electrodes: Dict[str, Any]) -> Dict[str, float]:
        return {
            "area": self._number(electrodes, "area_m2", "electrodes"),
            "spacing": self._number(electrodes, "spacing_h_m", "electrodes"),
        }

    def clean_levitation(self, levitation: Dict[str, Any]) -> Dict[str, Optional[float]]:
        return {
            "height": self._number(levitation, "height_m", "levitation"),
            "coil_radius": self._number(levitation, "coil_radius_m", "levitation", required=False),
        }

    def clean_model_parameters(self, params: Dict[str, Any]) -> Dict[str, Optional[float]]:
        return {
            "xi": self._number(params, "xi", "model_parameters", required=False),
            "kappa": self._number(params, "kappa", "model_parameters", required=False),
        }

    def clean_impedance(self, impedance: Optional[Dict[str, Any]]) -> Optional[ImpedanceMode]:
        if impedance is None:
            return None
        resistance = self._number(impedance, "resistance_ohm", "impedance", positive=False)
        frequency = self._number(impedance, "frequency_rad_s", "impedance")
        try:
            return ImpedanceMode.resistive(resistance, frequency)
        except ValueError as e:
            raise ScenarioError(f"impedance: {str(e)}") from e


def load_scenario(path: str) -> ActuatorScenario:
    """Read and clean a scenario file (JSON5 accepted)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json5.load(f)
    except OSError as e:
        raise ScenarioError(f"{path}: cannot read scenario file ({e.strerror})") from e
    except ValueError as e:
        raise ScenarioError(f"{path}: invalid JSON ({str(e)})") from e

    try:
        return ScenarioProcessor(source=path).clean_scenario(raw)
    except ScenarioError as e:
        message = str(e)
        if message.startswith(path):
            raise
        raise ScenarioError(f"{path}: {message}") from e


def _coil_entries(coils: CoilSystem) -> List[Dict[str, Any]]:
    """Regroup consecutive equal filaments into solenoid entries."""
    entries: List[Dict[str, Any]] = []
    for filament in coils.filaments:
        last = entries[-1] if entries else None
        if (last is not None and last["diameter_m"] == 2.0 * filament.radius
                and last["current_rel"] == filament.current):
            pitch = last["_z_last"] - filament.position[2]
            if last["windings"] == 1 and pitch > 0:
                last["pitch_m"] = pitch
            if pitch > 0 and np.isclose(pitch, last["pitch_m"], rtol=1e-9, atol=0.0):
                last["windings"] += 1
                last["_z_last"] = filament.position[2]
                continue
        entries.append({
            "diameter_m": 2.0 * filament.radius,
            "windings": 1,
            "pitch_m": 0.0,
            "z_top_m": filament.position[2],
            "current_rel": filament.current,
            "_z_last": filament.position[2],
        })
    for entry in entries:
        entry.pop("_z_last")
    return entries


def scenario_to_dict(scenario: ActuatorScenario) -> Dict[str, Any]:
    """Canonical dictionary form, loadable by ScenarioProcessor and used for hashing."""
    data: Dict[str, Any] = {
        "name": scenario.name,
        "disc": {"radius_m": scenario.disc_radius},
        "mesh": {"grid_n": scenario.grid_n, "rule": scenario.rule},
        "coils": _coil_entries(scenario.coils),
        "electrodes": {"area_m2": scenario.electrode_area, "spacing_h_m": scenario.h},
        "levitation": {"height_m": scenario.h_l},
    }
    if scenario.mass is not None:
        data["disc"]["mass_kg"] = scenario.mass
    if scenario.thickness is not None:
        data["disc"]["thickness_m"] = scenario.thickness
    if scenario.levitation_radius is not None:
        data["levitation"]["coil_radius_m"] = scenario.levitation_radius
    params = {k: v for k, v in (("xi", scenario.xi_table), ("kappa", scenario.kappa_table)) if v is not None}
    if params:
        data["model_parameters"] = params
    if scenario.impedance is not None and scenario.impedance.kind == "resistive":
        data["impedance"] = {"resistance_ohm": scenario.impedance.resistance,
                             "frequency_rad_s": scenario.impedance.frequency}
    return data
