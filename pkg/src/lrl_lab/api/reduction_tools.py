"""
Reduction API module for the LRL laboratory.

This module provides the reduction-of-order transform for the MCP server.
"""

from typing import Any, Dict, Optional

from .base import CommandResult, run_tool, simulate_trajectory
from .schemas import RunConfig
from ..core.reduction import eb_constants, harmonic_residual, reduce as reduce_trajectory


def run_reduce(cfg: RunConfig) -> CommandResult:
    m, _, traj = simulate_trajectory(cfg)
    rt = reduce_trajectory(m, traj, cfg.reduce.dy)
    data = {
        "family": m.family,
        "variable": rt.variable,
        "samples": len(rt),
        "drift": rt.drift(),
        "harmonic_residual": harmonic_residual(rt),
        "eb": eb_constants(rt).to_dict(),
    }
    return CommandResult("Trajectory reduced successfully", data, rt.table())


async def reduce(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Reduced variables (y, u1, u1', u2 [, u3]) and Ermanno-Bernoulli constants."""
    return run_tool(run_reduce, config, output_dir)
