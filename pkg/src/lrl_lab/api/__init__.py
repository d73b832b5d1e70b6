"""
LRL laboratory API package.

This package provides the commands shared by the CLI and the MCP server:
- Simulation and invariant verification
- Orbit tables, periods and third-law scans
- Poisson-bracket algebra checks
- Reduction of order
- Function-string debugging
"""

from .base import get_output_path

__all__ = [
    # Base utilities
    "get_output_path",
]
