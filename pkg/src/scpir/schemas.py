"""JSON Schemas for every document the package writes."""

_rational = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_params = {
    "type": "object",
    "required": ["N", "K", "t"],
    "properties": {k: {"type": "integer", "minimum": 1} for k in ("N", "K", "t")},
}
_bits = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["message", "position"],
        "additionalProperties": False,
        "properties": {"message": {"type": "integer", "minimum": 1}, "position": {"type": "integer", "minimum": 0}},
    },
}
_element = {
    "type": "object",
    "required": ["stage", "subset_members", "bits"],
    "properties": {
        "stage": {"type": "integer", "minimum": 1},
        "subset_members": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "bits": _bits,
    },
}

PLACEMENT = {
    "type": "object",
    "required": ["version", "N", "K", "t", "assignments"],
    "properties": {
        "version": {"const": 1},
        "N": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 1},
        "t": {"type": "integer", "minimum": 1},
        "assignments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["db", "message", "subset_members"],
                "additionalProperties": False,
                "properties": {
                    "db": {"type": "integer", "minimum": 1},
                    "message": {"type": "integer", "minimum": 1},
                    "subset_members": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
            },
        },
    },
}

# database-visible: no kind, no theta, no permutations
DB_QUERY = {
    "type": "object",
    "required": ["version", "db", "elements"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": 1},
        "db": {"type": "integer", "minimum": 1},
        "elements": {"type": "array", "items": dict(_element, additionalProperties=False)},
    },
}

QUERY_PLAN = {
    "type": "object",
    "required": ["version", "params", "theta", "queries", "decode_map", "permutations"],
    "properties": {
        "version": {"const": 1},
        "params": _params,
        "theta": {"type": "integer", "minimum": 1},
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["db", "elements"],
                "properties": {
                    "db": {"type": "integer"},
                    "elements": {
                        "type": "array",
                        "items": {
                            "allOf": [
                                _element,
                                {
                                    "required": ["kind"],
                                    "properties": {"kind": {"enum": ["desired-containing", "pure-undesired"]}},
                                },
                            ]
                        },
                    },
                },
            },
        },
        "decode_map": {"type": "array"},
        "permutations": {"type": "object", "required": ["seed", "perms"]},
    },
}

ANSWER_SET = {
    "type": "object",
    "required": ["answers"],
    "properties": {
        "answers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["db", "bits"],
                "properties": {
                    "db": {"type": "integer", "minimum": 1},
                    "bits": {"type": "array", "items": {"enum": [0, 1]}},
                },
            },
        }
    },
}

_stage_row = {
    "type": "object",
    "required": ["t", "stage", "total_per_db", "desired_per_db", "formula_total", "formula_desired"],
}

RETRIEVAL_REPORT = {
    "type": "object",
    "required": ["theta", "downloaded_bits", "desired_bits", "cost", "cost_decimal", "stage_table", "verified"],
    "properties": {
        "params": {"oneOf": [_params, {"type": "null"}]},
        "theta": {"type": "integer", "minimum": 1},
        "downloaded_bits": {"type": "integer", "minimum": 0},
        "desired_bits": {"type": "integer", "minimum": 1},
        "cost": _rational,
        "cost_decimal": {"type": "number"},
        "stage_table": {"type": "array", "items": _stage_row},
        "verified": {"type": "boolean"},
    },
}

AUDIT_REPORT = {
    "type": "object",
    "required": ["mode", "params", "per_db", "pass"],
    "properties": {
        "mode": {"enum": ["structural", "exhaustive", "montecarlo"]},
        "params": _params,
        "per_db": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["db", "pass"],
                "anyOf": [
                    {"required": ["max_tv"]},
                    {"required": ["census_diff"]},
                    {"required": ["multiset_diff"]},
                ],
                "properties": {"db": {"type": "integer", "minimum": 1}, "pass": {"type": "boolean"}},
            },
        },
        "pass": {"type": "boolean"},
    },
}

MEMSHARE = {
    "type": "object",
    "required": ["N", "K", "mu", "t1", "t2", "alpha", "L1", "L2", "cost"],
    "properties": {"mu": _rational, "alpha": _rational, "cost": _rational},
}

TRADEOFF = {
    "type": "object",
    "required": ["N", "K", "points"],
    "properties": {
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "mu", "cost", "on_hull", "baseline"],
                "properties": {"mu": _rational, "cost": _rational, "baseline": _rational},
            },
        }
    },
}

CURVE_CSV_COLUMNS = ["t", "mu_num", "mu_den", "cost_num", "cost_den", "cost_decimal", "on_hull", "baseline_decimal"]
