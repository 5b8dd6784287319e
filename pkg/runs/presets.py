# runs/presets.py
"""
Built-in run configurations.

Each preset is a run-config document in the same schema users write, so a
user document can override any key of the preset it names.
"""

import copy

KERR_FOCUSING = "kerr-focusing"
KERR_DEFOCUSING = "kerr-defocusing"
SATURABLE_FOCUSING = "saturable-focusing"
SATURABLE_DEFOCUSING = "saturable-defocusing"
KERR_DEFOCUSING_HALF = "kerr-defocusing-half"
SATURABLE_DEFOCUSING_HALF = "saturable-defocusing-half"
SECH_1D = "sech-1d"


def _two_paths(start, down, up, step):
    return [
        {"label": "down", "start": start, "stop": down, "step": step},
        {"label": "up", "start": start, "stop": up, "step": step},
    ]


def _half_resolution(preset):
    half = copy.deepcopy(preset)
    half["grid"] = {"d": 2, "n": 192, "box_len": 32.0}
    return half


PRESETS = {
    KERR_FOCUSING: {
        "description": "Kerr focusing lattice, V0=28.8, path 0 -> 11.7498 on [-16,16)^2",
        "model": {"kind": "kerr", "V0": 28.8, "sigma": 1, "kinetic_factor": 0.5},
        "grid": {"d": 2, "n": 192, "box_len": 32.0},
        "plan": {
            "paths": [{"label": "up", "start": 0.0, "stop": 11.7498, "step": 0.25}],
            "seed": {"kind": "gaussian", "sigma": 0.5, "target_power": 4.0},
        },
    },
    KERR_DEFOCUSING: {
        "description": "Kerr defocusing lattice, V0=21.6, paths 16 -> 15.125 and 16 -> 17.5 on [-32,32)^2",
        "model": {"kind": "kerr", "V0": 21.6, "sigma": -1, "kinetic_factor": 0.5},
        "grid": {"d": 2, "n": 384, "box_len": 64.0},
        "plan": {
            "paths": _two_paths(16.0, 15.125, 17.5, 0.125),
            "seed": {"kind": "gaussian", "sigma": 1.0, "target_power": 4.0},
        },
    },
    SATURABLE_FOCUSING: {
        "description": "Saturable focusing lattice, V0=36.3, path 14 -> 27.375 on [-16,16)^2",
        "model": {"kind": "saturable", "V0": 36.3, "A": 1.0, "kinetic_factor": 0.5},
        "grid": {"d": 2, "n": 192, "box_len": 32.0},
        "plan": {
            "paths": [{"label": "up", "start": 14.0, "stop": 27.375, "step": 0.25}],
            "seed": {"kind": "gaussian", "sigma": 1.0, "target_power": 2.0},
        },
    },
    SATURABLE_DEFOCUSING: {
        "description": "Saturable defocusing lattice, V0=-36.3, paths -24 -> -24.5 and -24 -> -23.4 on [-32,32)^2",
        "model": {"kind": "saturable", "V0": -36.3, "A": 1.0, "kinetic_factor": 0.5},
        "grid": {"d": 2, "n": 384, "box_len": 64.0},
        "plan": {
            "paths": _two_paths(-24.0, -24.5, -23.4, 0.015625),
            "seed": {"kind": "gaussian", "sigma": 1.0, "target_power": 0.4},
        },
    },
    SECH_1D: {
        "description": "1-D cubic -u'' - 2u^3 = lambda u without potential; sech(x) at lambda=-1",
        "model": {"kind": "cubic", "coefficient": 2.0, "kinetic_factor": 1.0},
        "grid": {"d": 1, "n": 512, "box_len": 40.0},
        "plan": {
            "paths": [{"label": "down", "start": -1.0, "stop": -2.0, "step": 0.25}],
            "seed": {"kind": "gaussian", "sigma": 1.0, "target_power": 2.0},
        },
    },
}

PRESETS[KERR_DEFOCUSING_HALF] = {
    **_half_resolution(PRESETS[KERR_DEFOCUSING]),
    "description": "Kerr defocusing at desk scale: [-16,16)^2 with n=192",
}
PRESETS[SATURABLE_DEFOCUSING_HALF] = {
    **_half_resolution(PRESETS[SATURABLE_DEFOCUSING]),
    "description": "Saturable defocusing at desk scale: [-16,16)^2 with n=192",
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    """A run-config document for ``name`` without its description; KeyError if unknown."""
    document = copy.deepcopy(PRESETS[name])
    document.pop("description", None)
    return document


def describe_presets() -> list[dict]:
    return [{"name": name, "description": PRESETS[name]["description"]} for name in preset_names()]
