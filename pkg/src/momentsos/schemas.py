"""Published JSON schemas for CLI results; every emitted document re-validates."""

from __future__ import annotations

import jsonschema

POLYNOMIAL = {
    "type": "object",
    "required": ["n", "terms"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["exp", "coef"],
                "properties": {
                    "exp": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "coef": {"type": "number"},
                },
            },
        },
    },
}

MOMENTS = {
    "type": "object",
    "required": ["n", "degree_bound", "values", "ordering"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "degree_bound": {"type": "integer", "minimum": 0},
        "ordering": {"const": "graded-lex"},
        "values": {"type": "array", "items": {"type": "number"}},
        "label": {"type": "string"},
    },
}

MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

_RESULTS = {
    "lowerbound": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["t", "rho", "status", "flat", "certificate_residual"],
            "properties": {
                "t": {"type": "integer"},
                "rho": {"type": "number"},
                "status": {"type": "string"},
                "gap": {"type": "number"},
                "certificate_residual": {"type": "number"},
                "flat": {"type": "boolean"},
                "ranks": {"type": "array", "items": {"type": "integer"}},
                "minimizers": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "extraction_status": {"type": "string"},
                "certificate": {"type": "array", "items": MATRIX},
                "phi": MOMENTS,
            },
        },
    },
    "upperbound": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["t", "mode", "value"],
            "properties": {
                "t": {"type": "integer"},
                "mode": {"enum": ["multivariate", "pushforward"]},
                "value": {"type": "number"},
                "degenerate": {"type": "boolean"},
                "sigma": {"anyOf": [POLYNOMIAL, {"type": "null"}]},
            },
        },
    },
    "christoffel-rep": {
        "type": "object",
        "required": ["t", "phi", "gram_blocks", "representation_residual"],
        "properties": {
            "t": {"type": "integer"},
            "phi": MOMENTS,
            "gram_blocks": {"type": "array", "items": MATRIX},
            "representation_residual": {"type": "number"},
            "duality_gap": {"type": "number"},
            "kkt_residual": {"type": "number"},
            "newton_iterations": {"type": "integer"},
        },
    },
    "pell-check": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["t", "constant", "max_residual"],
            "properties": {
                "t": {"type": "integer"},
                "constant": {"type": "number"},
                "max_residual": {"type": "number"},
                "residual_poly": POLYNOMIAL,
            },
        },
    },
    "equilibrium": {
        "type": "object",
        "required": ["set", "per_order", "drift"],
        "properties": {
            "set": {"type": "string"},
            "per_order": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["t", "constant", "phi", "pell_residual"],
                    "properties": {
                        "t": {"type": "integer"},
                        "constant": {"type": "number"},
                        "phi": MOMENTS,
                        "pell_residual": {"type": "number"},
                        "exploratory": {"type": "boolean"},
                    },
                },
            },
            "drift": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["from_t", "to_t", "max_shared_coordinate_change"],
                },
            },
        },
    },
    "disintegrate": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["x", "t", "lambda_marginal", "nu", "factor_residual"],
            "properties": {
                "x": {"type": "array", "items": {"type": "number"}},
                "t": {"type": "integer"},
                "lambda_marginal": {"type": "number"},
                "nu": MOMENTS,
                "nu_mass": {"type": "number"},
                "factor_residual": {"type": "number"},
                "joint_reciprocal": POLYNOMIAL,
            },
        },
    },
}

ENVELOPE = {
    "type": "object",
    "required": ["command", "version", "tolerances", "results"],
    "properties": {
        "command": {"type": "string"},
        "version": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "tolerances": {"type": "object"},
        "results": {},
    },
}

ERROR = {
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["kind", "message"],
            "properties": {
                "kind": {"enum": ["validation", "numerical"]},
                "message": {"type": "string"},
            },
        }
    },
}


def validate_result(document: dict) -> None:
    """Validate a CLI result document against the published schema."""
    jsonschema.validate(document, ENVELOPE)
    command = document["command"]
    if command in _RESULTS:
        jsonschema.validate(document["results"], _RESULTS[command])
