"""
Base API module.

This module provides base functionality and utilities for all API modules:
- Output path handling
- Building models, states and integration settings from a RunConfig
- CSV and JSON writers with lossless number formatting
- The success/error envelope shared by every tool
"""

import io
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from .schemas import RunConfig, OutputSettings
from ..core.base import PhaseState
from ..core.integrator import IntegrationConfig, Trajectory, characteristic_time, integrate
from ..core.models import ForceModel, build_model
from ..utils.constants import DEFAULT_VALUES, SUPPORTED_FORMATS
from ..utils.exceptions import BadParameter, LabError, OutputError

logger = logging.getLogger("lrl-lab.api")

Table = Tuple[List[str], np.ndarray]

# default span, in characteristic orbital times, when the config gives none
DEFAULT_SPAN_TIMES = 3.0


def get_output_path(filename: str, output_path: Optional[str] = None) -> str:
    """Get the full path to an output file.

    Args:
        filename: Name of the output file
        output_path: Optional output directory; defaults to ./lrl_output

    Returns:
        Full path to the output file

    Raises:
        OutputError: If the file name would leave the output directory
    """
    out_dir = os.path.abspath(output_path or "./lrl_output")

    if not os.path.exists(out_dir):
        os.makedirs(out_dir)

    path = os.path.abspath(os.path.join(out_dir, filename))

    if not os.path.dirname(path) == out_dir:
        raise OutputError("Invalid output path", details={"filename": filename})

    return path


@dataclass
class CommandResult:
    """What a command produced: a summary and, for table commands, the rows."""

    message: str
    data: Dict[str, Any]
    table: Optional[Table] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def load_config(config: Any) -> RunConfig:
    """RunConfig from a RunConfig, a dict or a JSON string.

    Raises:
        pydantic.ValidationError: On unknown keys or bad values
    """
    if isinstance(config, RunConfig):
        return config
    if isinstance(config, str):
        return RunConfig.model_validate_json(config)
    return RunConfig.model_validate(config or {})


def require_model(cfg: RunConfig) -> ForceModel:
    if cfg.model is None:
        raise BadParameter("A model specification is required", code="VAL_REQUIRED")
    s0 = initial_state(cfg) if cfg.state is not None else None
    return build_model(cfg.model.family, cfg.model.params, cfg.model.functions, s0)


def initial_state(cfg: RunConfig) -> PhaseState:
    if cfg.state is None:
        raise BadParameter("An initial state (r0, v0) is required", code="VAL_REQUIRED")
    return PhaseState(cfg.state.t0, cfg.state.r0, cfg.state.v0)


def integration_config(cfg: RunConfig, m: ForceModel, s0: PhaseState) -> IntegrationConfig:
    settings = cfg.integration
    span = settings.t if settings.t is not None else DEFAULT_SPAN_TIMES * characteristic_time(m, s0)
    return IntegrationConfig((s0.t, s0.t + span), settings.rel_tol, settings.abs_tol, settings.max_steps)


def simulate_trajectory(cfg: RunConfig) -> Tuple[ForceModel, PhaseState, Trajectory]:
    m = require_model(cfg)
    s0 = initial_state(cfg)
    return m, s0, integrate(m, s0, integration_config(cfg, m, s0))


def format_table(header: List[str], rows: np.ndarray) -> str:
    """CSV text: ',' separator, '.' decimal point, 17 significant digits."""
    fmt = "%" + DEFAULT_VALUES["output"]["precision"]
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(rows), fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def format_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n"


def table_json(header: List[str], rows: np.ndarray) -> Dict[str, Any]:
    return {"columns": list(header), "rows": np.atleast_2d(rows).tolist()}


def render(result: CommandResult, fmt: str) -> str:
    """Text of a result in the requested format."""
    if fmt not in SUPPORTED_FORMATS:
        raise BadParameter(f"Unsupported output format {fmt!r}", details={"supported": list(SUPPORTED_FORMATS)})
    if result.table is not None and fmt == "csv":
        return format_table(*result.table)
    payload = dict(result.data)
    if result.table is not None:
        payload.update(table_json(*result.table))
    return format_json(payload)


def write_output(result: CommandResult, settings: OutputSettings, output_dir: Optional[str] = None) -> Optional[str]:
    """Write the result to settings.path when one is given.

    With output_dir the file name is resolved inside that directory.

    Raises:
        OutputError: If the file cannot be written
    """
    if settings.path is None:
        return None
    path = get_output_path(os.path.basename(settings.path), output_dir) if output_dir else settings.path
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(render(result, settings.format))
    except OSError as e:
        raise OutputError(f"Failed to write {path}: {str(e)}")
    logger.info("wrote %s", path)
    return path


def run_tool(runner: Callable[[RunConfig], CommandResult], config: Any,
             output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Run a command for an API tool, returning the success/error envelope."""
    try:
        cfg = load_config(config)
        result = runner(cfg)
        path = write_output(result, cfg.output, output_dir)
        data = dict(result.data)
        if path is not None:
            data["path"] = path
        elif result.table is not None:
            data.update(table_json(*result.table))
        return {"success": True, "message": result.message, "data": data}
    except LabError as e:
        return e.to_dict()
    except ValidationError as e:
        return BadParameter(f"Invalid configuration: {e.error_count()} error(s)", code="VAL_INVALID",
                            details={"errors": json.loads(e.json())}).to_dict()
