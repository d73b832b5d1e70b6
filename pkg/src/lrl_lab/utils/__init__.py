"""
Utility package for the LRL laboratory.

This package provides:
- Custom exceptions for error handling
- Global constants and configuration
"""

from .exceptions import (
    LabError,
    ZeroRadius,
    ZeroAngularMomentum,
    ExprSyntaxError,
    UnknownIdentifier,
    DomainError,
    StepUnderflow,
    MaxSteps,
    NotPeriodic,
    InsufficientSamples,
    SingularOrbit,
    UnboundedOrbit,
    ZoneBoundary,
    NonMonotoneAngle,
    NonConvergent,
    NumericalBreakdown,
    RegimeViolation,
    BadParameter,
    UnsupportedFamily,
    OutputError
)

from .constants import (
    SUPPORTED_FORMATS,
    FAMILIES,
    ERROR_CODES,
    DEFAULT_VALUES,
    VALIDATION_RULES
)

__all__ = [
    # Exceptions
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
    'OutputError',

    # Constants
    'SUPPORTED_FORMATS',
    'FAMILIES',
    'ERROR_CODES',
    'DEFAULT_VALUES',
    'VALIDATION_RULES'
]
