# runs/config.py
"""
Run-config documents.

A document is a JSON object; ``preset`` names a built-in configuration that
the rest of the document overrides key by key. Schema errors come back as
one ``section.key: message`` line per offending key.
"""

import copy
import json

from rest_framework import serializers

from .presets import PRESETS, get_preset, preset_names
from .serializers import RunConfig, RunConfigSerializer

__all__ = ["ConfigError", "RunConfig", "flatten_errors", "merge_preset", "parse_config"]


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` keeps the structured detail."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


def deep_merge(base: dict, overrides: dict) -> dict:
    """Nested dicts merge; any other value in ``overrides`` replaces the base one."""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def merge_preset(document: dict) -> dict:
    """Resolve ``preset``; raises a DRF ValidationError for unknown names."""
    name = document.get("preset")
    if name is None:
        return document
    if not isinstance(name, str) or name not in PRESETS:
        raise serializers.ValidationError(
            {"preset": [f"Unknown preset '{name}'. Available: {', '.join(preset_names())}."]}
        )
    return deep_merge(get_preset(name), document)


def flatten_errors(errors, prefix="") -> list[str]:
    """DRF's nested error structure as 'section.key: message' lines."""
    lines = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == "non_field_errors" else (f"{prefix}.{key}" if prefix else str(key))
            lines.extend(flatten_errors(value, name))
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                lines.extend(flatten_errors(value, f"{prefix}[{index}]"))
            else:
                lines.append(f"{prefix or 'config'}: {value}")
    else:
        lines.append(f"{prefix or 'config'}: {errors}")
    return lines


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document (empty text is an empty document) and build the run."""
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: malformed JSON ({exc}).") from exc
    if not isinstance(document, dict):
        raise ConfigError("config: the document must be a JSON object.")

    try:
        serializer = RunConfigSerializer(data=merge_preset(document))
        serializer.is_valid(raise_exception=True)
        return serializer.build()
    except serializers.ValidationError as exc:
        raise ConfigError("\n".join(flatten_errors(exc.detail)), errors=exc.detail) from exc
