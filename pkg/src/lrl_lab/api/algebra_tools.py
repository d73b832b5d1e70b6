"""
Algebra API module for the LRL laboratory.

This module provides the Poisson-bracket suite check for the MCP server.
"""

from typing import Any, Dict, Optional

from .base import CommandResult, run_tool
from .schemas import RunConfig
from ..core.poisson import algebra_check


def run_pbcheck(cfg: RunConfig) -> CommandResult:
    opts = cfg.pbcheck
    report = algebra_check(opts.suite, opts.params, opts.points, seed=opts.seed, workers=opts.workers)
    return CommandResult(f"Suite {opts.suite} checked successfully", report.to_dict())


async def pbcheck(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Residual table of one Poisson-bracket suite.

    Args:
        config: RunConfig as a dict; pbcheck options name the suite and its parameters
        output_dir: Directory output files are written to

    Returns:
        Dict containing:
            - success: bool
            - message: str
            - data: suite, points, params, residuals, max_residual
    """
    return run_tool(run_pbcheck, config, output_dir)
