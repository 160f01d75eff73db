"""
Hybrid Levitation Micro-Actuator Toolkit
========================================

Command-line front end: meshes the levitated disc, solves its eddy currents,
traces static pull-in curves with the quasi-FEM, analytical and simplified
models, samples coil fields and validates the models against measured discs.

Usage:
    python main.py mesh     --scenario scenarios/preliminary_r155.json
    python main.py eddy     --scenario scenarios/disc_2_8mm.json --fast
    python main.py pullin   --scenario scenarios/preliminary_r155.json --model all
    python main.py field    --scenario scenarios/disc_2_8mm.json
    python main.py validate --fast --convergence
"""

import argparse
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from tqdm import tqdm

from eddy import (SIGN_CONVENTION, assemble, clear_caches, current_maps, maps_to_frame, radial_profile, solve,
                  symmetry_spread)
from errors import HLMAError, ScenarioError
from experiments import find_experiment, measured_discs, preliminary_scenario
from filament import configure_quadrature
from geometry import MESH_RULES, mesh_to_frame
from levforce import DimensionlessGroups, field_to_frame, loop_field, push_direction
from pullin import (MODELS, ActuatorScenario, PullInResult, compare_results, quasifem_model,
                    run_pullin, u_norm)
from scenario import load_scenario, scenario_to_dict
from utils import (TOOL_VERSION, create_summary_report, load_config, relative_deviation, save_frame,
                   save_json, scenario_hash, setup_logger)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 2
EXIT_INPUT_ERROR = 3


class ActuatorStudy:
    """Main orchestrator for scenario runs."""

    def __init__(self, config_path: Optional[str] = None, output_dir: Optional[str] = None,
                 grid_n: Optional[int] = None, rule: Optional[str] = None, fast: bool = False):
        load_dotenv()

        self.config = load_config(config_path)
        self.logger = setup_logger(level=self.config["logging"]["level"])
        self.output_dir = output_dir or self.config["output"]["output_directory"]
        self.float_format = self.config["output"]["float_format"]
        self.lambda_min = self.config["simulation"]["lambda_min"]
        self.progress = bool(self.config["logging"]["progress"]) and sys.stderr.isatty()
        self.fast = fast
        self.grid_n = grid_n
        self.rule = rule

        quad = self.config["quadrature"]
        configure_quadrature(quad["n_start"], quad["n_max"], quad["rtol"])

        self.logger.info(f"Actuator study initialized (output: {self.output_dir}, fast={fast})")

    # ---- helpers ------------------------------------------------------------

    def default_grid_n(self) -> int:
        sim = self.config["simulation"]
        return self.grid_n or (sim["fast_grid_n"] if self.fast else sim["grid_n"])

    def prepare(self, scenario: ActuatorScenario) -> ActuatorScenario:
        """Apply command-line fidelity overrides to a loaded scenario."""
        grid_n = self.grid_n or (self.config["simulation"]["fast_grid_n"] if self.fast else None)
        return scenario.with_fidelity(grid_n=grid_n, rule=self.rule)

    def metadata(self, scenario: ActuatorScenario, **extra: Any) -> Dict[str, Any]:
        meta = {
            "scenario": scenario.name,
            "scenario_hash": scenario_hash(scenario_to_dict(scenario)),
            "grid_n": scenario.grid_n,
            "rule": scenario.rule,
            "sign_convention": SIGN_CONVENTION,
            "impedance_mode": scenario.impedance.describe() if scenario.impedance else "ideal",
            "tool_version": TOOL_VERSION,
        }
        meta.update(extra)
        return meta

    def _path(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    def release_caches(self):
        """Drop the per-mesh matrices and factorizations of the scenario just finished."""
        clear_caches()
        quasifem_model.cache_clear()

    # ---- subcommands --------------------------------------------------------

    def run_mesh(self, scenario: ActuatorScenario) -> Dict[str, Any]:
        mesh = scenario.mesh()
        files = [
            save_frame(mesh_to_frame(mesh), self._path(f"{scenario.name}_mesh.csv"), self.float_format),
            save_json(self.metadata(scenario, n=mesh.n, R_e_m=mesh.R_e, eps=mesh.eps),
                      self._path(f"{scenario.name}_mesh_meta.json")),
        ]
        return {"n": mesh.n, "R_e": mesh.R_e, "eps": mesh.eps, "files": files, "errors": []}

    def run_eddy(self, scenario: ActuatorScenario) -> Dict[str, Any]:
        mesh = scenario.mesh()
        groups = DimensionlessGroups.from_geometry(scenario.h_l, scenario.h, scenario.R_l, mesh.R_e)
        system = assemble(mesh, scenario.coils, groups.pose(0.0, mesh.R_e), scenario.impedance)
        sol = solve(system)
        grid, magnitude = current_maps(sol, mesh)
        profile, peaks = radial_profile(np.abs(np.real(sol.I)), mesh)

        meta = self.metadata(scenario, **sol.metadata(mesh))
        meta["ring_peaks_m"] = peaks
        meta["symmetry_spread"] = symmetry_spread(sol.I, mesh)
        files = [
            save_frame(maps_to_frame(grid), self._path(f"{scenario.name}_currents.csv"), self.float_format),
            save_frame(maps_to_frame(magnitude), self._path(f"{scenario.name}_current_magnitude.csv"),
                       self.float_format),
            save_frame(profile, self._path(f"{scenario.name}_radial_profile.csv"), self.float_format),
            save_json(meta, self._path(f"{scenario.name}_eddy_meta.json")),
        ]
        return {"n": mesh.n, "residual": sol.residual, "peaks": peaks, "files": files, "errors": []}

    def run_pullin(self, scenario: ActuatorScenario, model: str = "all", samples: Optional[int] = None,
                   disc_radii: Optional[List[float]] = None) -> Dict[str, Any]:
        samples = samples or self.config["simulation"]["samples"]
        xtol = self.config["simulation"]["refine_xtol"]
        models = list(MODELS) if model == "all" else [model]

        results: Dict[str, PullInResult] = {}
        files: List[str] = []
        errors: List[str] = []
        for name in models:
            try:
                curve, result = run_pullin(name, scenario, samples, progress=self.progress,
                                           xtol=xtol[name], lambda_min=self.lambda_min)
            except HLMAError as e:
                error_msg = f"{name} model failed for {scenario.name}: {str(e)}"
                self.logger.error(error_msg)
                errors.append(error_msg)
                continue
            results[name] = result
            files.append(save_frame(curve.to_frame(scenario), self._path(f"{scenario.name}_curve_{name}.csv"),
                                    self.float_format))
            files.append(save_json(self.metadata(scenario, result=result.to_dict(), flagged=list(curve.flagged)),
                                   self._path(f"{scenario.name}_pullin_{name}.json")))

        if len(results) > 1:
            reference = results.get("quasi-fem") or next(iter(results.values()))
            others = [r for key, r in results.items() if r is not reference]
            files.append(save_frame(compare_results(reference, others),
                                    self._path(f"{scenario.name}_comparison.csv"), self.float_format))

        if disc_radii:
            rows = []
            for radius in tqdm(disc_radii, desc="Disc sweep", disable=not self.progress):
                swept = replace(scenario, disc_radius=radius, name=f"{scenario.name}_r{radius * 1e3:.3f}mm")
                try:
                    _, result = run_pullin("quasi-fem", swept, samples, xtol=xtol["quasi-fem"],
                                           lambda_min=self.lambda_min)
                    rows.append({"disc_radius_m": radius, **result.to_dict()})
                except HLMAError as e:
                    error_msg = f"disc sweep failed at r={radius:g} m: {str(e)}"
                    self.logger.error(error_msg)
                    errors.append(error_msg)
                self.release_caches()
            if rows:
                frame = pd.DataFrame(rows).drop(columns=["runtime_s"])
                files.append(save_frame(frame, self._path(f"{scenario.name}_disc_sweep.csv"), self.float_format))

        return {"results": results, "files": files, "errors": errors}

    def run_field(self, scenario: ActuatorScenario) -> Dict[str, Any]:
        window = self.config["field"]
        r_values = np.linspace(max(scenario.disc_radius - window["half_width_r_m"], 0.0),
                               scenario.disc_radius + window["half_width_r_m"], window["points_r"])
        z_values = np.linspace(scenario.h_l - window["half_height_z_m"],
                               scenario.h_l + window["half_height_z_m"], window["points_z"])
        samples = loop_field(scenario.coils, r_values, z_values)
        centre = samples[(len(r_values) // 2) * len(z_values) + len(z_values) // 2]
        push = push_direction(centre)

        files = [
            save_frame(field_to_frame(samples), self._path(f"{scenario.name}_field.csv"), self.float_format),
            save_json(self.metadata(scenario, push_at_centre=push, centre_m=list(centre.position)),
                      self._path(f"{scenario.name}_field_meta.json")),
        ]
        return {"push": push, "files": files, "errors": []}

    def run_validate(self, convergence: bool = False) -> Dict[str, Any]:
        """Compare both models with the published predictions and the measurements of every disc."""
        tol = self.config["validation"]
        qf_tol = tol["fast_quasi_fem_tol"] if self.fast else tol["quasi_fem_tol"]
        grid_n = self.default_grid_n()
        rule = self.rule or self.config["simulation"]["rule"]
        samples = self.config["simulation"]["samples"]
        xtol = self.config["simulation"]["refine_xtol"]

        rows: List[Dict[str, Any]] = []
        errors: List[str] = []
        failed = 0
        for record in tqdm(measured_discs(), desc="Validating discs", disable=not self.progress):
            scenario = record.to_scenario(grid_n=grid_n, rule=rule)
            measured_lam, measured_sqrt_beta = record.measured_normalized(u_norm(scenario))
            for model, published_q, published_U, model_tol in (
                    ("quasi-fem", record.quasifem_q, record.quasifem_U, qf_tol),
                    ("analytical", record.analytical_q, record.analytical_U, tol["analytical_tol"])):
                try:
                    _, result = run_pullin(model, scenario, samples, xtol=xtol[model], lambda_min=self.lambda_min)
                except HLMAError as e:
                    error_msg = f"{record.name} ({model}): {str(e)}"
                    self.logger.error(error_msg)
                    errors.append(error_msg)
                    failed += 1
                    continue
                dev_q = relative_deviation(result.q_p, published_q)
                dev_U = relative_deviation(result.U_p, published_U)
                passed = dev_q <= model_tol and dev_U <= model_tol
                failed += 0 if passed else 1
                rows.append({
                    "scenario": record.name,
                    "model": model,
                    "q_p_um": result.q_p * 1e6,
                    "U_p_V": result.U_p,
                    "published_q_um": published_q * 1e6,
                    "published_U_V": published_U,
                    "dev_q": dev_q,
                    "dev_U": dev_U,
                    "measured_q_um": record.measured_q * 1e6,
                    "measured_U_V": record.measured_U,
                    "lambda_p": result.lambda_p,
                    "sqrt_beta_p": result.sqrt_beta_p,
                    "measured_lambda": measured_lam,
                    "measured_sqrt_beta": measured_sqrt_beta,
                    "tolerance": model_tol,
                    "passed": passed,
                })
            self.release_caches()

        summary: Dict[str, Any] = {
            "grid_n": grid_n,
            "rule": rule,
            "quasi_fem_tol": qf_tol,
            "analytical_tol": tol["analytical_tol"],
            "scenarios": len(measured_discs()),
        }
        if convergence:
            conv = self.convergence_study(tol["convergence_grids"], rule, samples)
            summary["convergence"] = conv
            if conv["relative_change"] > tol["convergence_tol"]:
                failed += 1
        summary["failed_checks"] = failed

        data = {"rows": rows, "errors": errors, "summary": summary}
        files = [
            save_frame(pd.DataFrame(rows), self._path("validation.csv"), self.float_format),
            save_json({"summary": summary, **self.validation_metadata(grid_n, rule)},
                      self._path("validation_meta.json")),
            create_summary_report(data, self._path("validation_report.txt")),
        ]
        return {"rows": rows, "summary": summary, "files": files, "errors": errors, "failed_checks": failed}

    def convergence_study(self, grids: List[int], rule: str, samples: int) -> Dict[str, Any]:
        record = find_experiment("2.8")
        values = []
        for grid in grids:
            scenario = record.to_scenario(grid_n=grid, rule=rule)
            _, result = run_pullin("quasi-fem", scenario, samples, lambda_min=self.lambda_min)
            values.append(result.sqrt_beta_p)
            self.release_caches()
        return {
            "scenario": record.name,
            "coarse_grid": grids[0],
            "fine_grid": grids[-1],
            "coarse": values[0],
            "fine": values[-1],
            "relative_change": relative_deviation(values[0], values[-1]),
        }

    def validation_metadata(self, grid_n: int, rule: str) -> Dict[str, Any]:
        return {
            "grid_n": grid_n,
            "rule": rule,
            "sign_convention": SIGN_CONVENTION,
            "impedance_mode": "ideal",
            "tool_version": TOOL_VERSION,
            "scenario_hashes": {r.name: scenario_hash(scenario_to_dict(r.to_scenario(grid_n, rule)))
                                for r in measured_discs()},
        }


def _parse_radii(text: str) -> List[float]:
    try:
        radii = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--disc-radii expects comma-separated metres, got {text!r}")
    if not radii or any(r <= 0 for r in radii):
        raise argparse.ArgumentTypeError("--disc-radii values must be positive")
    return radii


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Hybrid levitation micro-actuator simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_scenario: bool = True):
        if needs_scenario:
            p.add_argument("--scenario", help="scenario JSON file (default: preliminary design rig)")
        p.add_argument("--grid-n", type=int, help="lattice sites across the disc diameter (odd)")
        p.add_argument("--rule", choices=MESH_RULES, help="mesh inclusion rule")
        p.add_argument("--fast", action="store_true", help="reduced fidelity for quick runs")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="config file (json5)")

    common(sub.add_parser("mesh", help="mesh the disc and export element centres"))
    common(sub.add_parser("eddy", help="solve eddy currents at the levitation pose"))

    pullin = sub.add_parser("pullin", help="trace pull-in curves")
    common(pullin)
    pullin.add_argument("--model", choices=list(MODELS) + ["all"], default="all")
    pullin.add_argument("--samples", type=int, help="lambda samples on (-0.9, 0]")
    pullin.add_argument("--disc-radii", type=_parse_radii, help="comma-separated disc radii (m) to sweep")

    common(sub.add_parser("field", help="sample the coil field around the disc edge"))

    validate = sub.add_parser("validate", help="compare models with the measured discs")
    common(validate, needs_scenario=False)
    validate.add_argument("--convergence", action="store_true", help="add the grid_n 51/71 convergence check")
    return parser


def _load(study: ActuatorStudy, path: Optional[str]) -> ActuatorScenario:
    if path:
        return study.prepare(load_scenario(path))
    return preliminary_scenario(grid_n=study.default_grid_n(),
                                rule=study.rule or study.config["simulation"]["rule"])


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)

    print("🧲 Hybrid Levitation Micro-Actuator Toolkit")
    print("=" * 60)

    try:
        study = ActuatorStudy(config_path=args.config, output_dir=args.out, grid_n=args.grid_n,
                              rule=args.rule, fast=args.fast)
        if args.command == "validate":
            outcome = study.run_validate(convergence=args.convergence)
        else:
            scenario = _load(study, args.scenario)
            if args.command == "mesh":
                outcome = study.run_mesh(scenario)
            elif args.command == "eddy":
                outcome = study.run_eddy(scenario)
            elif args.command == "pullin":
                if args.samples is not None and args.samples < 5:
                    raise ValueError("n_samples ≥ 5")
                outcome = study.run_pullin(scenario, args.model, args.samples, args.disc_radii)
            else:
                outcome = study.run_field(scenario)
    except (ScenarioError, ValueError) as e:
        print(f"❌ Input error: {str(e)}")
        return EXIT_INPUT_ERROR
    except HLMAError as e:
        print(f"❌ {type(e).__name__}: {str(e)}")
        return EXIT_INPUT_ERROR

    print(f"\n📊 {args.command} summary:")
    if args.command == "mesh":
        print(f"✅ Elements: n={outcome['n']}, R_e={outcome['R_e']:.4g} m, eps={outcome['eps']:.3g}")
    elif args.command == "eddy":
        print(f"✅ Solved {outcome['n']} element currents, residual {outcome['residual']:.2e}")
        print(f"🔍 Current ring radii: {', '.join(f'{r * 1e3:.3f} mm' for r in outcome['peaks'])}")
    elif args.command == "pullin":
        for name, result in outcome["results"].items():
            volts = f", U_p={result.U_p:.2f} V" if result.U_p is not None else ""
            print(f"✅ {name}: |lambda_p|={result.lambda_p:.4f}, sqrt(beta_p)={result.sqrt_beta_p:.5f}{volts}")
    elif args.command == "field":
        push = outcome["push"]
        print(f"✅ Push direction at window centre: {push['inclination_deg']:.1f}° from horizontal, "
              f"{'inward' if push['inward'] else 'outward'}, {'upward' if push['upward'] else 'downward'}")
    else:
        print(f"✅ Scenarios evaluated: {outcome['summary']['scenarios']}")
        print(f"{'❌' if outcome['failed_checks'] else '✅'} Checks failed: {outcome['failed_checks']}")

    if outcome["errors"]:
        print(f"\n⚠️ Errors:")
        for error in outcome["errors"][:5]:
            print(f"  - {error}")

    print(f"\n🎯 Results saved to {study.output_dir}:")
    for path in outcome["files"]:
        print(f"  - {path}")

    if args.command == "validate" and outcome["failed_checks"]:
        return EXIT_VALIDATION_FAILED
    if args.command == "pullin" and not outcome["results"]:
        return EXIT_VALIDATION_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
