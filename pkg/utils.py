"""
Utility Functions
=================

Helper functions for logging, configuration, deterministic file output and
report writing.
"""

import copy
import hashlib
import json
import logging
import math
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

import json5
import numpy as np
import pandas as pd
from dotenv import load_dotenv

TOOL_VERSION = "1.0.0"

LOG_FORMAT_FILE = '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s'
LOG_FORMAT_CONSOLE = '%(asctime)s - %(levelname)s - %(message)s'

DEFAULT_CONFIG: Dict[str, Any] = {
    "simulation": {
        "grid_n": 71,
        "fast_grid_n": 31,
        "rule": "center-inside",
        "samples": 15,
        "lambda_min": -0.9,
        "refine_xtol": {
            "quasi-fem": 1e-4,
            "analytical": 1e-9,
            "simplified": 1e-9
        }
    },
    "quadrature": {
        "n_start": 64,
        "n_max": 16384,
        "rtol": 1e-11
    },
    "validation": {
        "quasi_fem_tol": 0.10,
        "analytical_tol": 0.05,
        "fast_quasi_fem_tol": 0.20,
        "convergence_tol": 0.015,
        "convergence_grids": [51, 71]
    },
    "field": {
        "half_width_r_m": 3.0e-4,
        "half_height_z_m": 2.0e-4,
        "points_r": 21,
        "points_z": 21
    },
    "output": {
        "output_directory": "output",
        "float_format": "%.10e"
    },
    "logging": {
        "level": "INFO",
        "progress": True
    }
}


def setup_logger(name: str = "hlma", level: Optional[Union[int, str]] = None,
                 log_dir: Optional[str] = None) -> logging.Logger:
    """Set up logger with file and console handlers."""
    load_dotenv()

    if level is None:
        level_name = os.getenv("HLMA_LOG_LEVEL", "INFO").upper()
        level = getattr(logging, level_name, logging.INFO)

    # Create logs directory if it doesn't exist
    log_dir = log_dir or os.getenv("HLMA_LOG_DIR", "logs")
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    file_formatter = logging.Formatter(LOG_FORMAT_FILE)
    console_formatter = logging.Formatter(LOG_FORMAT_CONSOLE)

    log_file = os.path.join(log_dir, f"{name}_{datetime.now().strftime('%Y%m%d')}.log")
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setLevel(level)
    file_handler.setFormatter(file_formatter)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(console_formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def get_logger(module: str) -> logging.Logger:
    """Child logger of the toolkit logger; handlers are attached by setup_logger."""
    return logging.getLogger(f"hlma.{module}")


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load run settings.

    The JSON file (json5 syntax, comments allowed) is merged over the built-in
    defaults; HLMA_* environment variables from the process or a .env file
    take precedence over both.
    """
    load_dotenv()
    config = copy.deepcopy(DEFAULT_CONFIG)

    config_path = config_path or os.getenv("HLMA_CONFIG")
    if config_path:
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config = _deep_merge(config, json5.load(f))
        except (OSError, ValueError) as e:
            get_logger("utils").error(f"Error loading config from {config_path}: {str(e)}")

    if os.getenv("HLMA_OUTPUT_DIR"):
        config["output"]["output_directory"] = os.getenv("HLMA_OUTPUT_DIR")
    if os.getenv("HLMA_GRID_N"):
        config["simulation"]["grid_n"] = int(os.getenv("HLMA_GRID_N"))
    if os.getenv("HLMA_LOG_LEVEL"):
        config["logging"]["level"] = os.getenv("HLMA_LOG_LEVEL").upper()

    return config


def ensure_directory(path: str) -> str:
    if not os.path.exists(path):
        os.makedirs(path)
    return path


def _clean_for_json(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and round floats to 12 significant digits."""
    if isinstance(value, dict):
        return {str(k): _clean_for_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean_for_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean_for_json(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.12g}")
    if isinstance(value, complex):
        return {"re": _clean_for_json(value.real), "im": _clean_for_json(value.imag)}
    return value


def to_json_text(data: Dict[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, rounded floats."""
    return json.dumps(_clean_for_json(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_json(data: Dict[str, Any], file_path: str) -> str:
    ensure_directory(os.path.dirname(file_path) or ".")
    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(to_json_text(data))
    return file_path


def save_frame(frame: pd.DataFrame, file_path: str, float_format: str = "%.10e") -> str:
    """Write a DataFrame as CSV with fixed float formatting and no index."""
    ensure_directory(os.path.dirname(file_path) or ".")
    frame.to_csv(file_path, index=False, float_format=float_format, lineterminator='\n')
    return file_path


def scenario_hash(scenario_dict: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a scenario."""
    canonical = json.dumps(_clean_for_json(scenario_dict), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def relative_deviation(value: float, reference: float) -> float:
    if reference == 0:
        return math.inf if value != 0 else 0.0
    return abs(value - reference) / abs(reference)


def create_summary_report(data: Dict[str, Any], file_path: str) -> str:
    """Create a human-readable validation summary report."""
    rows: List[Dict[str, Any]] = data.get('rows', [])
    errors: List[str] = data.get('errors', [])
    summary = data.get('summary', {})

    report_content = f"""
PULL-IN VALIDATION SUMMARY REPORT
=================================

Tool version: {TOOL_VERSION}
Mesh fidelity: grid_n={summary.get('grid_n', '?')}, rule={summary.get('rule', '?')}
Tolerances: quasi-FEM {summary.get('quasi_fem_tol', 0):.0%}, analytical {summary.get('analytical_tol', 0):.0%}

OVERVIEW
--------
Scenarios evaluated: {summary.get('scenarios', 0)}
Checks failed: {summary.get('failed_checks', 0)}
Errors encountered: {len(errors)}

RESULTS
-------
"""
    if rows:
        frame = pd.DataFrame(rows)
        report_content += frame.to_string(index=False, float_format=lambda v: f"{v:.4g}")
        report_content += "\n"

    if summary.get('convergence'):
        conv = summary['convergence']
        report_content += (
            f"\nMESH CONVERGENCE ({conv.get('scenario', '')})\n"
            f"  sqrt(beta_p) at grid_n={conv.get('coarse_grid')}: {conv.get('coarse', float('nan')):.6f}\n"
            f"  sqrt(beta_p) at grid_n={conv.get('fine_grid')}: {conv.get('fine', float('nan')):.6f}\n"
            f"  relative change: {conv.get('relative_change', float('nan')):.4%}\n"
        )

    if errors:
        report_content += f"\nERRORS ENCOUNTERED ({len(errors)}):\n"
        for i, error in enumerate(errors[:10]):
            report_content += f"  {i+1}. {error}\n"

        if len(errors) > 10:
            report_content += f"  ... and {len(errors) - 10} more errors\n"

    report_content += "\n" + "=" * 50 + "\n"

    ensure_directory(os.path.dirname(file_path) or ".")
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(report_content)

    return file_path
