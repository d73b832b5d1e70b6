"""
Exceptions module for the LRL laboratory.

This module provides custom exception classes and error handling utilities.
"""

from typing import Dict, Any, Optional
from .constants import ERROR_CODES

class LabError(Exception):
    """Base exception class for laboratory errors."""

    def __init__(self, message: str, code: str = "SYS_UNKNOWN_ERROR", details: Optional[Dict[str, Any]] = None):
        """Initialize the exception.

        Args:
            message: Error message
            code: Error code from ERROR_CODES
            details: Optional additional error details
        """
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary format.

        Returns:
            Dict containing error information
        """
        return {
            "success": False,
            "message": self.message,
            "error": {
                "code": self.code,
                "type": self.__class__.__name__,
                "details": self.details,
                "suggestion": ERROR_CODES.get(self.code, "Unknown error")
            }
        }

class ZeroRadius(LabError):
    """Exception raised when |r| falls below r_min."""

    def __init__(self, message: str, code: str = "GEO_ZERO_RADIUS", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class ZeroAngularMomentum(LabError):
    """Exception raised when a family that divides by L meets L = 0."""

    def __init__(self, message: str, code: str = "GEO_ZERO_ANGULAR_MOMENTUM", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class ExprSyntaxError(LabError):
    """Exception raised for malformed function strings."""

    def __init__(self, message: str, offset: int, code: str = "EXPR_SYNTAX", details: Optional[Dict[str, Any]] = None):
        """Initialize the exception.

        Args:
            message: Error message
            offset: Byte offset of the offending token
            code: Error code from ERROR_CODES
            details: Optional additional error details
        """
        self.offset = offset
        details = dict(details or {})
        details.setdefault("offset", offset)
        super().__init__(message, code, details)

class UnknownIdentifier(LabError):
    """Exception raised for names other than the variable, constants and functions."""

    def __init__(self, message: str, code: str = "EXPR_UNKNOWN_IDENTIFIER", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class DomainError(LabError):
    """Exception raised when a function is evaluated outside its domain."""

    def __init__(self, message: str, code: str = "EXPR_DOMAIN", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class StepUnderflow(LabError):
    """Exception raised when the adaptive step collapses."""

    def __init__(self, message: str, code: str = "INT_STEP_UNDERFLOW", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class MaxSteps(LabError):
    """Exception raised when the integrator exceeds its step budget."""

    def __init__(self, message: str, code: str = "INT_MAX_STEPS", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class NotPeriodic(LabError):
    """Exception raised when no full revolution is found."""

    def __init__(self, message: str, code: str = "INT_NOT_PERIODIC", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class InsufficientSamples(LabError):

    def __init__(self, message: str, code: str = "INT_INSUFFICIENT_SAMPLES", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class SingularOrbit(LabError):
    """Exception raised when an orbit denominator crosses zero."""

    def __init__(self, message: str, code: str = "ORB_SINGULAR", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class UnboundedOrbit(LabError):
    """Exception raised when the orbit radius is unbounded at the requested angle."""

    def __init__(self, message: str, code: str = "ORB_UNBOUNDED", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class ZoneBoundary(LabError):

    def __init__(self, message: str, code: str = "ORB_ZONE_BOUNDARY", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class NonMonotoneAngle(LabError):

    def __init__(self, message: str, code: str = "ORB_NON_MONOTONE_ANGLE", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class NonConvergent(LabError):
    """Exception raised when adaptive quadrature fails to converge."""

    def __init__(self, message: str, code: str = "NUM_NON_CONVERGENT", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class NumericalBreakdown(LabError):
    """Exception raised when Richardson estimates of a derivative disagree."""

    def __init__(self, message: str, code: str = "NUM_BREAKDOWN", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class RegimeViolation(LabError):

    def __init__(self, message: str, code: str = "NUM_REGIME_VIOLATION", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class BadParameter(LabError):
    """Exception raised for parameters outside an operation's range."""

    def __init__(self, message: str, code: str = "VAL_BAD_PARAMETER", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class UnsupportedFamily(LabError):

    def __init__(self, message: str, code: str = "VAL_UNSUPPORTED_FAMILY", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

class OutputError(LabError):
    """Exception raised when results cannot be written."""

    def __init__(self, message: str, code: str = "SYS_IO_ERROR", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, code, details)

__all__ = [
    'LabError',
    'ZeroRadius',
    'ZeroAngularMomentum',
    'ExprSyntaxError',
    'UnknownIdentifier',
    'DomainError',
    'StepUnderflow',
    'MaxSteps',
    'NotPeriodic',
    'InsufficientSamples',
    'SingularOrbit',
    'UnboundedOrbit',
    'ZoneBoundary',
    'NonMonotoneAngle',
    'NonConvergent',
    'NumericalBreakdown',
    'RegimeViolation',
    'BadParameter',
    'UnsupportedFamily',
    'OutputError'
]
