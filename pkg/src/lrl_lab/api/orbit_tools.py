"""
Orbit API module for the LRL laboratory.

This module provides orbit-related APIs for the MCP server, including:
- Closed-form orbit tables r(theta), optionally checked against integration
- Periods and third-law residuals
- Third-law sweeps over (alpha, e) grids
"""

from dataclasses import astuple
from typing import Any, Dict, Optional

import numpy as np

from .base import CommandResult, initial_state, integration_config, require_model, run_tool
from .schemas import RunConfig
from ..core.base import TWO_PI
from ..core.integrator import find_period, integrate
from ..core.models import Kepler, MICZ, PowerLaw
from ..core.orbits import orbit_constants, orbit_residual, orbit_table
from ..core.thirdlaw import lawscan as scan, micz_third_law, period_report
from ..utils.exceptions import UnsupportedFamily


def run_orbit(cfg: RunConfig) -> CommandResult:
    m = require_model(cfg)
    s0 = initial_state(cfg)
    consts = orbit_constants(m, s0)
    opts = cfg.orbit
    start = consts.theta0 if opts.theta_start is None else opts.theta_start
    stop = start + TWO_PI if opts.theta_stop is None else opts.theta_stop
    data: Dict[str, Any] = {"family": m.family, "theta0": consts.theta0,
                            "invariants": consts.invariants.to_dict()}
    if opts.compare:
        traj = integrate(m, s0, integration_config(cfg, m, s0))
        data["orbit_residual"] = orbit_residual(m, consts, traj)
    return CommandResult("Orbit evaluated successfully", data,
                         orbit_table(m, consts, np.linspace(start, stop, opts.count)))


def run_period(cfg: RunConfig) -> CommandResult:
    m = require_model(cfg)
    s0 = initial_state(cfg)
    if isinstance(m, MICZ):
        rep = micz_third_law(integrate(m, s0, integration_config(cfg, m, s0)))
        data = {"family": m.family, "T": rep.T, "R": rep.R, "law_residual": rep.residual,
                "plane_semi_major": rep.plane_semi_major, "plane_residual": rep.plane_residual}
        return CommandResult("MICZ period measured successfully", data)
    if not isinstance(m, (Kepler, PowerLaw)):
        raise UnsupportedFamily(f"No period law for family {m.family!r}")
    data = {"family": m.family, **period_report(m, s0).to_dict()}
    if cfg.integration.t is not None:
        data["T_measured"] = find_period(integrate(m, s0, integration_config(cfg, m, s0)))
    return CommandResult("Period computed successfully", data)


def run_lawscan(cfg: RunConfig) -> CommandResult:
    opts = cfg.lawscan
    rows = scan(opts.alphas, opts.eccentricities, opts.mu, opts.rel_tol, opts.workers)
    header = ["alpha", "e", "T", "R", "residual"]
    table = np.array([astuple(row) for row in rows], dtype=float).reshape(len(rows), len(header))
    return CommandResult("Third-law scan completed successfully", {"count": len(rows)}, (header, table))


async def orbit(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Tabulate the closed-form orbit r(theta) of the orbit through the initial state.

    Args:
        config: RunConfig as a dict; orbit options give the angle range and count
        output_dir: Directory output files are written to

    Returns:
        Dict containing:
            - success: bool
            - message: str
            - data: family, theta0, invariants, optional orbit_residual and the table
    """
    return run_tool(run_orbit, config, output_dir)


async def period(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Period and third-law residual of a Kepler, power-law or MICZ orbit."""
    return run_tool(run_period, config, output_dir)


async def lawscan(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    return run_tool(run_lawscan, config, output_dir)
