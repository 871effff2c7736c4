"""Registry of structured-output schemas for LLM completions.

Every completion names one of these schemas; backend implementations must
only return values that validate. Validation uses JSON Schema.
"""

from __future__ import annotations

import jsonschema

_BINARY = {"type": "integer", "enum": [0, 1]}

_SCHEMAS: dict[str, dict] = {
    "marketing_brief": {
        "type": "object",
        "properties": {
            "primary_product": {"type": "string", "minLength": 1},
            "background_elements": {"type": "string"},
            "theme": {"type": "string"},
        },
        "required": ["primary_product", "background_elements", "theme"],
        "additionalProperties": False,
    },
    "background_verdict": {
        "type": "object",
        "properties": {"verdict": _BINARY},
        "required": ["verdict"],
        "additionalProperties": False,
    },
    "scale_advice": {
        "type": "object",
        "properties": {
            "s_w": {"type": "number", "exclusiveMinimum": 0},
            "s_h": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["s_w", "s_h"],
        "additionalProperties": False,
    },
    "scene_caption": {
        "type": "object",
        "properties": {"caption": {"type": "string", "minLength": 1}},
        "required": ["caption"],
        "additionalProperties": False,
    },
    "rubric_scores": {
        "type": "object",
        "properties": {
            "caption_alignment": _BINARY,
            "product_uniqueness": _BINARY,
            "physical_realism": _BINARY,
            "lighting_consistency": _BINARY,
        },
        "required": [
            "caption_alignment",
            "product_uniqueness",
            "physical_realism",
            "lighting_consistency",
        ],
        "additionalProperties": False,
    },
}


class SchemaViolation(ValueError):
    pass


def is_registered(schema_id: str) -> bool:
    return schema_id in _SCHEMAS


def registered_ids() -> list[str]:
    return sorted(_SCHEMAS)


def get_schema(schema_id: str) -> dict:
    try:
        return _SCHEMAS[schema_id]
    except KeyError:
        raise SchemaViolation(f"schema not registered: {schema_id!r}") from None


def validate(schema_id: str, value) -> None:
    """Raise SchemaViolation if value does not conform to the named schema."""
    schema = get_schema(schema_id)
    try:
        jsonschema.validate(value, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"value does not conform to {schema_id!r}: {exc.message}") from exc
