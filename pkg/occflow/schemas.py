"""
Configuration schemas of scene and experiment files.

Defaults follow the desk-scale setting; `PRESETS` supplies the per-scene overrides that a
scene file selects with `"preset"`.
"""
import copy
from typing import Dict
from occflow.config import Schema
from occflow.config.validators import Validator
from occflow.config.validators import constraints
from occflow.config.validators.exceptions import ObjectValueError
from occflow.config.fields import (
    Field,
    NumberField,
    PositiveNumberField,
    NonNegativeNumberField,
    FractionField,
    IntegerField,
    PositiveIntegerField,
    OddWindowField,
    BooleanField,
    StringField,
    PathField,
    SelectField,
    MultiSelectField,
    VectorField,
    NumberListField,
    SectionField,
    ListSectionField,
)
from occflow.enums import Shape, Ablation, LabelSource


GRID_SCHEMA = Schema(
    name="grid",
    fields=[
        VectorField(name="origin", value=[-6.4, -6.4, -1.0], description="lower corner in ego coordinates (m)"),
        VectorField(name="extent", value=[12.8, 12.8, 6.4], description="volume size (m)"),
        PositiveNumberField(name="resolution", value=0.2, description="voxel edge length (m)"),
    ]
)

PRIMITIVE_SCHEMA = Schema(
    name="primitive",
    fields=[
        StringField(name="name", value="primitive"),
        SelectField(name="shape", options=[s.value for s in Shape], is_required=True),
        VectorField(name="center", value=[0.0, 0.0, 0.0]),
        VectorField(name="half_extents"),
        PositiveNumberField(name="radius"),
        VectorField(name="velocity", value=[0.0, 0.0, 0.0], description="displacement per frame (m)"),
        VectorField(name="albedo", value=[0.5, 0.5, 0.5]),
        BooleanField(name="dynamic", value=False),
    ]
)

CAMERA_SCHEMA = Schema(
    name="camera",
    fields=[
        StringField(name="name", value="front"),
        PositiveIntegerField(name="width", value=48),
        PositiveIntegerField(name="height", value=32),
        PositiveNumberField(name="fov", value=90.0, description="horizontal field of view (degrees)"),
        VectorField(name="position", value=[0.0, 0.0, 1.2]),
        NumberField(name="yaw", value=0.0),
        NumberField(name="pitch", value=10.0),
    ]
)

LIDAR_SCHEMA = Schema(
    name="lidar",
    fields=[
        VectorField(name="position", value=[0.0, 0.0, 1.5]),
        PositiveIntegerField(name="azimuths", value=180),
        PositiveIntegerField(name="channels", value=16),
        VectorField(name="elevation", value=[-30.0, 5.0], length=2),
    ]
)

EGO_SCHEMA = Schema(
    name="ego",
    fields=[
        VectorField(name="start", value=[0.0, 0.0, 0.0]),
        NumberField(name="heading", value=0.0),
        VectorField(name="velocity", value=[0.1, 0.0, 0.0], description="translation per frame (m)"),
        NumberField(name="yaw_rate", value=0.0, description="yaw change per frame (degrees)"),
    ]
)

SCENE_SCHEMA = Schema(
    name="scene",
    fields=[
        StringField(name="name", value="desk"),
        SelectField(name="preset", options=["desk", "wide"], value="desk"),
        SectionField(name="grid", schema=GRID_SCHEMA),
        ListSectionField(name="primitives", schema=PRIMITIVE_SCHEMA),
        ListSectionField(name="cameras", schema=CAMERA_SCHEMA),
        SectionField(name="lidar", schema=LIDAR_SCHEMA),
        SectionField(name="ego", schema=EGO_SCHEMA),
        PositiveIntegerField(name="frames", value=6),
        PositiveNumberField(name="frame_dt", value=0.1),
        IntegerField(name="seed", value=0),
    ]
)

WEIGHTS_SCHEMA = Schema(
    name="weights",
    fields=[
        NonNegativeNumberField(name="lambda_sim", value=5.0),
        NonNegativeNumberField(name="lambda_dep", value=1.0),
        NonNegativeNumberField(name="lambda_rgb", value=0.1),
        NonNegativeNumberField(name="lambda_r", value=10.0),
        NonNegativeNumberField(name="lambda_den", value=0.01),
        NonNegativeNumberField(name="lambda_e_s", value=0.1),
        NonNegativeNumberField(name="lambda_e_d", value=0.1),
        NonNegativeNumberField(name="lambda_H_s", value=0.1),
        NonNegativeNumberField(name="lambda_H_d", value=0.1),
        NonNegativeNumberField(name="lambda_H_f", value=0.02),
        NonNegativeNumberField(name="lambda_s_d", value=0.01),
    ]
)

AGGREGATION_SCHEMA = Schema(
    name="aggregation",
    fields=[
        FractionField(name="lambda_ag", value=0.5),
        PositiveNumberField(name="tau", value=2.0),
        PositiveNumberField(name="a_init", value=10.0),
        BooleanField(name="stop_gradient_neighbors", value=False),
    ]
)

SIMILARITY_SCHEMA = Schema(
    name="similarity",
    fields=[
        OddWindowField(name="window", value=35),
        PositiveNumberField(name="tau_s", value=0.75),
        PositiveIntegerField(name="interval", value=5, description="iterations between pseudo-label refreshes"),
    ]
)

LABELING_SCHEMA = Schema(
    name="labeling",
    fields=[
        SelectField(name="source", options=[s.value for s in LabelSource], value=LabelSource.MASKS.value),
        FractionField(name="noise", value=0.0),
        FractionField(name="dynamic_confidence", value=0.5),
        FractionField(name="static_confidence", value=0.3),
        FractionField(name="mask_confidence", value=0.9),
    ]
)

SCHEDULE_SCHEMA = Schema(
    name="schedule",
    fields=[
        IntegerField(name="iterations", value=2000),
        NonNegativeNumberField(name="lr", value=1e-2),
        NonNegativeNumberField(name="lr_log_a", value=1e-3),
        PositiveIntegerField(name="lidar_rays", value=512),
        IntegerField(name="camera_patches", value=2),
        PositiveIntegerField(name="patch_size", value=8),
        PositiveIntegerField(name="reg_points", value=1024),
        PositiveIntegerField(name="samples", value=96),
        PositiveIntegerField(name="window_k", value=20),
        BooleanField(name="normalize_depth", value=False),
        PositiveNumberField(name="divergence", value=1e6),
        BooleanField(name="static_only", value=False),
        PositiveIntegerField(name="log_every", value=100),
    ]
)

EVALUATION_SCHEMA = Schema(
    name="evaluation",
    fields=[
        NumberListField(name="thresholds", value=[0.25, 0.5, 1.0]),
        PositiveNumberField(name="mave_threshold", value=2.0, description="range threshold of the true positives that feed mAVE (m)"),
        IntegerField(name="future_poses", value=8),
        PositiveIntegerField(name="rays_per_pose", value=1024),
        PositiveIntegerField(name="samples", value=256),
        Field(
            name="frames",
            value=[],
            validator=Validator(constraints=[constraints.IsListOf(item=constraints.IsAtLeast(min_value=0))])
        ),
        PositiveIntegerField(name="flow_points", value=2048),
    ]
)

EXPERIMENT_SCHEMA = Schema(
    name="experiment",
    fields=[
        StringField(name="name", value="experiment"),
        Field(
            name="scene",
            is_required=True,
            validator=Validator(constraints=[constraints.IsType(data_type=(str, dict), exception_type=ObjectValueError)]),
            description="scene file (relative to the config) or inline scene object"
        ),
        Field(
            name="grid",
            validator=Validator(constraints=[constraints.IsObject()]),
            description="overrides of the scene volume (origin, extent, resolution)"
        ),
        SectionField(name="weights", schema=WEIGHTS_SCHEMA),
        SectionField(name="aggregation", schema=AGGREGATION_SCHEMA),
        SectionField(name="similarity", schema=SIMILARITY_SCHEMA),
        SectionField(name="labeling", schema=LABELING_SCHEMA),
        SectionField(name="schedule", schema=SCHEDULE_SCHEMA),
        SectionField(name="evaluation", schema=EVALUATION_SCHEMA),
        IntegerField(name="seed", value=0),
        PathField(name="output", value="out", description="directory the artifacts are written to"),
        MultiSelectField(name="ablations", options=[a.value for a in Ablation]),
    ]
)


DESK_SCENE = {
    "name": "desk",
    "preset": "desk",
    "grid": {"origin": [-6.4, -6.4, -1.0], "extent": [12.8, 12.8, 6.4], "resolution": 0.2},
    "primitives": [
        {"name": "ground", "shape": "ground-plane", "center": [0.0, 0.0, 0.0], "albedo": [0.35, 0.35, 0.35]},
        {"name": "cabinet", "shape": "box", "center": [3.0, 3.0, 0.8], "half_extents": [0.8, 0.6, 0.8],
         "albedo": [0.8, 0.6, 0.3]},
        {"name": "pillar", "shape": "box", "center": [-2.5, -3.0, 1.2], "half_extents": [0.4, 0.4, 1.2],
         "albedo": [0.3, 0.5, 0.8]},
        {"name": "cart", "shape": "box", "center": [-2.0, 1.6, 0.5], "half_extents": [0.6, 0.4, 0.5],
         "velocity": [0.4, 0.0, 0.0], "albedo": [0.9, 0.2, 0.2], "dynamic": True},
    ],
    "cameras": [
        {"name": "front", "yaw": 0.0},
        {"name": "left", "yaw": 90.0},
        {"name": "back", "yaw": 180.0},
        {"name": "right", "yaw": -90.0},
    ],
    "lidar": {},
    "ego": {},
    "frames": 6,
    "frame_dt": 0.1,
    "seed": 0,
}

PRESETS: Dict[str, Dict] = {
    "desk": {
        "scene": {"grid": {"origin": [-6.4, -6.4, -1.0], "extent": [12.8, 12.8, 6.4], "resolution": 0.2}},
        "weights": {"lambda_s_d": 0.01},
        "evaluation": {"mave_threshold": 0.5},
    },
    "wide": {
        "scene": {"grid": {"origin": [-12.8, -12.8, -1.0], "extent": [25.6, 25.6, 6.4], "resolution": 0.4}},
        "weights": {"lambda_s_d": 0.1},
    },
}


def merge(base: Dict, override: Dict) -> Dict:
    """
    Recursively merge `override` into a copy of `base` (objects merge, everything else replaces).

    :param base: Dict, The defaults.
    :param override: Dict, The values that win.
    :return: Dict

    """

    merged = copy.deepcopy(base)

    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)

    return merged


def apply_scene_preset(scene: Dict) -> Dict:
    """
    Fill a raw scene object with the defaults of its preset (explicit keys win).

    :param scene: Dict, The raw scene object.
    :return: Dict

    """

    preset = scene.get("preset", "desk") if isinstance(scene, dict) else "desk"
    defaults = PRESETS.get(preset, PRESETS["desk"])["scene"]
    return merge(defaults, scene) if isinstance(scene, dict) else scene


def apply_experiment_preset(experiment: Dict, preset: str) -> Dict:
    """
    Fill a raw experiment object with the non-scene defaults of a scene preset.

    :param experiment: Dict, The raw experiment object.
    :param preset: str, The preset of the experiment's scene.
    :return: Dict

    """

    defaults = {k: v for k, v in PRESETS.get(preset, PRESETS["desk"]).items() if k != "scene"}
    return merge(defaults, experiment)
