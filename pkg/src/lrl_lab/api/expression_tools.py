"""
Expression API module for the LRL laboratory.

This module provides parsing, differentiation and evaluation of function strings.
"""

from typing import Any, Dict, Optional

from .base import CommandResult, run_tool
from .schemas import RunConfig
from ..core.exprlang import describe
from ..utils.exceptions import BadParameter


def run_expr(cfg: RunConfig) -> CommandResult:
    opts = cfg.expr
    if not opts.text.strip():
        raise BadParameter("An expression text is required", code="VAL_REQUIRED")
    return CommandResult("Expression parsed successfully", describe(opts.text, opts.var, opts.at, opts.params))


async def expr(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    return run_tool(run_expr, config, output_dir)
