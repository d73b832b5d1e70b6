"""
Simulation API module for the LRL laboratory.

This module provides simulation APIs for the MCP server, including:
- Trajectory integration with invariant columns
- Invariant-drift and relation checks along a trajectory
"""

from typing import Any, Dict, Optional

import numpy as np

from .base import CommandResult, run_tool, simulate_trajectory
from .schemas import RunConfig
from ..core.integrator import Trajectory, drift_report, trajectory_table
from ..core.invariants import evaluate, relations_check
from ..core.models import ForceModel


def run_simulate(cfg: RunConfig) -> CommandResult:
    m, _, traj = simulate_trajectory(cfg)
    return CommandResult(
        "Trajectory integrated successfully",
        {"family": m.family, "samples": len(traj), "t_span": [float(traj.t[0]), float(traj.t[-1])]},
        trajectory_table(traj),
    )


def relation_residuals(m: ForceModel, traj: Trajectory, samples: int = 200) -> Dict[str, float]:
    """Max of each algebraic relation residual over evenly spaced samples."""
    out: Dict[str, float] = {}
    for i in np.unique(np.linspace(0, len(traj) - 1, min(samples, len(traj))).astype(int)):
        s = traj.state(int(i))
        for key, value in relations_check(m, evaluate(m, s, traj.context(int(i))), s).items():
            out[key] = max(out.get(key, 0.0), value)
    return out


def run_verify(cfg: RunConfig) -> CommandResult:
    m, _, traj = simulate_trajectory(cfg)
    data = drift_report(m, traj).to_dict()
    data["samples"] = len(traj)
    data["relations"] = relation_residuals(m, traj)
    return CommandResult("Invariant drift computed successfully", data)


async def simulate(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Integrate a model from an initial state.

    Args:
        config: RunConfig as a dict (model, state, integration, output)
        output_dir: Directory output files are written to

    Returns:
        Dict containing:
            - success: bool
            - message: str
            - data: family, samples, t_span and the table (or its path)
    """
    return run_tool(run_simulate, config, output_dir)


async def verify(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Integrate and report the drift of every invariant of the model's family."""
    return run_tool(run_verify, config, output_dir)
