"""
Constants module for the LRL laboratory.

This module provides global constants and configuration values used throughout the application.
"""

import numpy as np

# Output formats
SUPPORTED_FORMATS = {
    "csv": "text/csv",
    "json": "application/json"
}

# Model families and the independent variable of each function slot
FAMILIES = {
    "kepler": {"params": ["mu"], "functions": {}, "planar": False},
    "central_angle": {"params": [], "functions": {"v": "th"}, "planar": True},
    "time_dependent": {"params": [], "functions": {"g": "t", "v": "th"}, "planar": True},
    "direction_only": {"params": [], "functions": {"U": "th", "V": "th"}, "planar": True},
    "hamiltonian_angle": {"params": ["mu", "alpha", "beta"], "functions": {}, "planar": True},
    "drag": {"params": ["f_kind", "g_kind", "alpha", "mu", "a", "b", "theta0"],
             "functions": {"w": "th"}, "planar": True},
    "kepler_orbit_family": {"params": [], "functions": {"g": "r"}, "planar": True},
    "power_law": {"params": ["mu", "alpha"], "functions": {}, "planar": True},
    "magnitude_conserved": {"params": ["k"], "functions": {"h": "r"}, "planar": False},
    "flgr": {"params": [], "functions": {"f": "r", "g": "r"}, "planar": False},
    "micz": {"params": ["lambda", "mu"], "functions": {}, "planar": False},
    "monopole": {"params": ["mu"], "functions": {}, "planar": False}
}

DRAG_F_KINDS = ["danby", "angle_linear", "angle_over_l", "exp_cubic"]
DRAG_G_KINDS = ["kepler", "angular"]

# Error codes
ERROR_CODES = {
    # Geometry errors
    "GEO_ZERO_RADIUS": "The state is at (or too close to) the force centre; move r away from the origin",
    "GEO_ZERO_ANGULAR_MOMENTUM": "This family needs L = |r x v| > 0; give the initial state a transverse velocity",

    # Expression errors
    "EXPR_SYNTAX": "Check the function string near the reported offset",
    "EXPR_UNKNOWN_IDENTIFIER": "Only the declared variable, pi, named parameters and sin/cos/tan/exp/log/sqrt/abs are allowed",
    "EXPR_DOMAIN": "A function was evaluated outside its domain",

    # Integration errors
    "INT_STEP_UNDERFLOW": "Step size collapsed; the orbit is probably approaching the centre",
    "INT_MAX_STEPS": "Increase max_steps or shorten the time span",
    "INT_NOT_PERIODIC": "The trajectory does not complete a revolution over the span",
    "INT_INSUFFICIENT_SAMPLES": "Provide more samples",

    # Orbit errors
    "ORB_SINGULAR": "The orbit denominator vanishes in the requested range",
    "ORB_UNBOUNDED": "The orbit escapes to infinity in the requested direction",
    "ORB_ZONE_BOUNDARY": "The angle lies outside the zone accessible to the motion",
    "ORB_NON_MONOTONE_ANGLE": "The reduction needs a monotone angle along the trajectory",

    # Numerical errors
    "NUM_NON_CONVERGENT": "Quadrature did not converge; loosen the tolerance or split the range",
    "NUM_BREAKDOWN": "Finite-difference estimates disagree; the observable may not be smooth here",
    "NUM_REGIME_VIOLATION": "Sample points violate the energy regime of the suite",

    # Validation errors
    "VAL_BAD_PARAMETER": "Parameter out of range",
    "VAL_UNSUPPORTED_FAMILY": "The operation does not support this model family",
    "VAL_REQUIRED": "Required field missing",
    "VAL_INVALID": "Invalid value",

    # System errors
    "SYS_IO_ERROR": "Failed to write output",
    "SYS_UNKNOWN_ERROR": "Unknown error"
}

# Default values
DEFAULT_VALUES = {
    "integration": {
        "rel_tol": 1e-10,
        "abs_tol": 1e-12,
        "max_steps": 1_000_000,
        "underflow_factor": 1e-14,
        # inward spiral: per-turn peak radius falling this many turns in a row,
        # with r below collapse_ratio of the largest radius reached
        "collapse_turns": 8,
        "collapse_ratio": 1e-2
    },
    "geometry": {
        "r_min": 1e-10
    },
    "events": {
        "max_iter": 40
    },
    "quadrature": {
        "tol": 1e-10,
        "limit": 50
    },
    "poisson": {
        "step": float(np.cbrt(np.finfo(float).eps)),
        "richardson_tol": 1e-4,
        "points": 10,
        "seed": 12345
    },
    "reduction": {
        "dy": 0.02
    },
    "output": {
        "format": "csv",
        "precision": ".17g"
    }
}

# Validation rules
VALIDATION_RULES = {
    "integration": {
        "rel_tol": {
            "min": 1e-15,
            "max": 1e-2,
            "message": "rel_tol must be between 1e-15 and 1e-2"
        },
        "abs_tol": {
            "min": 1e-18,
            "max": 1e-2,
            "message": "abs_tol must be between 1e-18 and 1e-2"
        }
    },
    "kepler_solve": {
        "e": {
            "min": 0.0,
            "max": 1.0,
            "message": "Eccentricity must satisfy 0 <= e < 1"
        }
    },
    "pbcheck": {
        "suite": {
            "values": [
                "kepler_negative", "kepler_positive", "kepler_zero",
                "hamiltonian_angle_raw", "hamiltonian_angle_rescaled",
                "hamiltonian_angle_weyl", "micz"
            ],
            "message": "Unknown Poisson-bracket suite"
        }
    },
    "family": {
        "values": list(FAMILIES.keys()),
        "message": "Unknown model family"
    }
}
