"""
LRL laboratory MCP Server.

This module provides the MCP server exposing the laboratory commands as tools.
It handles API registration and server startup.
"""

import os
import sys
import logging
from typing import Any, Dict

from mcp.server.fastmcp import FastMCP

# Import API modules
from lrl_lab.api import (
    simulation_tools,
    orbit_tools,
    algebra_tools,
    reduction_tools,
    expression_tools
)

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout),
        logging.FileHandler("lrl-lab.log")
    ],
    force=True
)
logger = logging.getLogger("lrl-lab")

# Get output path from environment or use default
OUTPUT_PATH = os.environ.get("LRL_LAB_OUTPUT_PATH", "./lrl_output")

# Initialize FastMCP server
mcp = FastMCP(
    "lrl-lab",
    instructions=(
        "Numerical laboratory for Kepler-type systems with Laplace-Runge-Lenz vectors. "
        f"Output files are written to {OUTPUT_PATH} (set LRL_LAB_OUTPUT_PATH to change it)."
    ),
    dependencies=["numpy>=1.24", "scipy>=1.10", "pydantic>=2.0"],
)


def register_tools():
    """Register all API tools with the MCP server."""

    # Simulation tools
    @mcp.tool()
    async def simulate(config: Dict[str, Any]):
        return await simulation_tools.simulate(config, OUTPUT_PATH)

    @mcp.tool()
    async def verify(config: Dict[str, Any]):
        return await simulation_tools.verify(config, OUTPUT_PATH)

    # Orbit tools
    @mcp.tool()
    async def orbit(config: Dict[str, Any]):
        return await orbit_tools.orbit(config, OUTPUT_PATH)

    @mcp.tool()
    async def period(config: Dict[str, Any]):
        return await orbit_tools.period(config, OUTPUT_PATH)

    @mcp.tool()
    async def lawscan(config: Dict[str, Any]):
        return await orbit_tools.lawscan(config, OUTPUT_PATH)

    # Algebra tools
    @mcp.tool()
    async def pbcheck(config: Dict[str, Any]):
        return await algebra_tools.pbcheck(config, OUTPUT_PATH)

    # Reduction tools
    @mcp.tool()
    async def reduce(config: Dict[str, Any]):
        return await reduction_tools.reduce(config, OUTPUT_PATH)

    # Expression tools
    @mcp.tool()
    async def expr(config: Dict[str, Any]):
        return await expression_tools.expr(config, OUTPUT_PATH)


async def run_server():
    """Run the LRL laboratory MCP Server."""
    # Register all tools
    logger.info("Registering API modules...")
    register_tools()
    logger.info("API modules registered successfully")

    try:
        logger.info(f"Starting LRL laboratory MCP Server (output directory: {OUTPUT_PATH})")
        await mcp.run_sse_async()
    except KeyboardInterrupt:
        logger.info("Server stopped by user")
    except Exception as e:
        logger.error(f"Server failed: {e}")
        raise
    finally:
        logger.info("Server shutdown complete")
