"""
Experiment orchestration: configuration, data generation, labeling, training, evaluation
and artifacts.

Every step reads and writes its artifacts under the experiment's output directory, so the
subcommands can be chained (`gen-scene`, `label-rays`, `train`, `eval`) or run at once
(`run`).
"""
import os
import argparse
import copy
import glob
import json
import logging
from typing import Dict, List, Optional, Tuple, Union
import numpy as np
import torch
from occflow import metrics
from occflow.aggregation import FrameFields
from occflow.commands import Command, CommandRegistry
from occflow.config import Schema, locate
from occflow.config.fields.exceptions import ConfigValidationError
from occflow.enums import Ablation, LabelSource
from occflow.exceptions import ArtifactNotFoundError, ConfigError, DivergenceError, SceneMismatchError
from occflow.gradcheck import run_gradcheck
from occflow.grids import read_grid_file
from occflow.images import write_pgm, write_ppm
from occflow.labeling import MaskSet, label_batches
from occflow.losses import TERMS, Objective
from occflow.models import ExperimentConfig, LossRecord, MetricsReport
from occflow.models.deserializers import ExperimentDeserializer
from occflow.models.serializers import (
    ComparisonSerializer, LossRecordSerializer, MetricsSerializer, format_table, read_csv, write_csv,
)
from occflow.optimization import TrainState, TrainingData, initial_state, optimize
from occflow.rays import RayBatch, make_batches, read_rays, write_batches
from occflow.scenes import SceneOracle
from occflow.schemas import (
    DESK_SCENE, EXPERIMENT_SCHEMA, SCENE_SCHEMA, apply_experiment_preset, apply_scene_preset, merge,
)
from occflow.similarity import frame_labels


logger = logging.getLogger(__name__)

BUILTIN_SCENES = {"desk": DESK_SCENE}

SCENE_FILE = "scene.json"
RAYS_DIR = "rays"
LABELS_DIR = "labels"
MASKS_DIR = os.path.join(LABELS_DIR, "masks")
RENDERS_DIR = "renders"
CHECKPOINT_FILE = "checkpoint.grid"
LOSS_TRACE_FILE = "loss_trace.csv"
METRICS_FILE = "metrics.csv"
METRICS_JSON_FILE = "metrics.json"
COMPARISON_FILE = "comparison.csv"


def read_text(path: str) -> str:
    if not os.path.isfile(path):
        raise ArtifactNotFoundError(path=path)

    with open(path, "r") as handle:
        return handle.read()


def parse(text: str, name: str) -> Dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(message=f"Invalid JSON in {name} (line {e.lineno}): {e.msg}.", line=e.lineno)


def validate_bindings(text: str, bindings: Dict, schema: Schema, prefix: str = "", inline: bool = False) -> Dict:
    """
    Validate bindings parsed from `text`, reporting the source line of the offending key.

    :param text: str, The JSON source the bindings come from.
    :param bindings: Dict, The bindings.
    :param schema: Schema, The schema.
    :param prefix: str, Dotted path prepended to field names in diagnostics.
    :param inline: bool, Whether the bindings sit at `prefix` inside `text` rather than at
        its top level.
    :return: Dict

    :raises: ConfigError

    """

    try:
        return schema.validate(bindings=bindings)
    except ConfigValidationError as e:
        field = f"{prefix}.{e.field}" if prefix else e.field
        line = locate(text=text, path=field if inline else e.field)
        error = ConfigValidationError(field=field, value=e.value, message=e.message, line=line)
        raise ConfigError(message=str(error), line=line)


def resolve_scene(reference: Union[str, Dict], text: str, directory: str, grid: Optional[Dict] = None) -> Dict:
    """
    Load and validate the scene of an experiment.

    :param reference: Union[str, Dict], A scene file relative to `directory`, the name of a
        built-in scene or an inline scene object.
    :param text: str, The experiment source, for diagnostics of inline scenes.
    :param directory: str, Directory of the experiment file.
    :param grid: Optional[Dict], Overrides of the scene volume.
    :return: Dict, The validated scene object.

    :raises: ConfigError, ArtifactNotFoundError

    """

    inline = isinstance(reference, dict)

    if inline:
        raw = reference
    else:
        path = os.path.join(directory, reference)

        if not os.path.isfile(path) and reference in BUILTIN_SCENES:
            raw = BUILTIN_SCENES[reference]
            text = json.dumps(raw, indent=2)
        else:
            text = read_text(path)
            raw = parse(text, name=path)

            if not isinstance(raw, dict):
                raise ConfigError(message=f"Invalid Field Assignment: {path} must hold a scene object.", line=1)

    raw = apply_scene_preset(raw)

    if grid:
        raw = merge(raw, {"grid": grid})

    return validate_bindings(text, raw, SCENE_SCHEMA, prefix="scene", inline=inline)


def load_experiment(
        path: str,
        seed: Optional[int] = None,
        output: Optional[str] = None,
        ablations: Optional[List[str]] = None,
        schema: Schema = EXPERIMENT_SCHEMA) -> ExperimentConfig:
    """
    Read, validate and deserialize an experiment file; command-line values override it.

    :param path: str, The experiment file.
    :param seed: Optional[int], Seed override.
    :param output: Optional[str], Output directory override.
    :param ablations: Optional[List[str]], Ablations appended to the configured ones.
    :param schema: Schema, The schema the file is validated against, e.g. the one of the
        running command.
    :return: ExperimentConfig

    :raises: ConfigError, ArtifactNotFoundError

    """

    text = read_text(path)
    raw = parse(text, name=path)

    if not isinstance(raw, dict):
        raise ConfigError(message="Invalid Field Assignment: experiment must be an object.", line=1)

    validated = validate_bindings(text, raw, schema)
    scene = resolve_scene(validated["scene"], text, os.path.dirname(os.path.abspath(path)), validated.get("grid"))
    experiment = validate_bindings(text, apply_experiment_preset(raw, scene["preset"]), schema)
    experiment["scene"] = scene
    experiment.pop("grid", None)
    experiment["ablations"] = list(experiment.get("ablations") or []) + list(ablations or [])

    if seed is not None:
        experiment["seed"] = seed

    if output is not None:
        field = schema.field("output")

        try:
            experiment["output"] = output if field is None else field.resolve(value=output, path="output")
        except ConfigValidationError as e:
            raise ConfigError(message=str(e))

    try:
        return ExperimentDeserializer().deserialize(data=experiment)
    except ValueError as e:
        raise ConfigError(message=f"Invalid Field Assignment: {e}.")


def configure_torch(threads: Optional[int] = None) -> None:
    torch.set_num_threads(max(1, int(threads or os.cpu_count() or 1)))
    torch.use_deterministic_algorithms(True)


def artifact(cfg: ExperimentConfig, *parts: str) -> str:
    return os.path.join(cfg.output, *parts)


def objective(cfg: ExperimentConfig) -> Objective:
    """
    Build the training objective of the configured variant.

    :param cfg: ExperimentConfig, The experiment.
    :return: Objective

    """

    aggregation = copy.deepcopy(cfg.aggregation)

    if cfg.has(Ablation.NO_TA):
        aggregation.static = False
        aggregation.dynamic = False

    if cfg.has(Ablation.NO_DYN_TA):
        aggregation.dynamic = False

    return Objective(
        weights=cfg.weights,
        aggregation=aggregation,
        samples=cfg.schedule.samples,
        normalize_depth=cfg.schedule.normalize_depth,
        single=cfg.has(Ablation.SINGLE_SDF),
        similarity=not cfg.has(Ablation.NO_SIM),
    )


def read_batches(directory: str) -> List[RayBatch]:
    paths = sorted(glob.glob(os.path.join(directory, "*.rays")))

    if len(paths) == 0:
        raise ArtifactNotFoundError(path=os.path.join(directory, "*.rays"))

    return [read_rays(path) for path in paths]


def generate_scene(cfg: ExperimentConfig) -> Tuple[SceneOracle, List[RayBatch]]:
    """
    Build the oracle, generate every frame's rays and write `scene.json` and `rays/`.

    Oracle labels are noised at the labeling noise rate when they are used directly.

    :param cfg: ExperimentConfig, The experiment.
    :return: Tuple[SceneOracle, List[RayBatch]]

    """

    scene = cfg.scene
    oracle = SceneOracle(scene)
    noise = cfg.labeling.noise if cfg.labeling.source == LabelSource.ORACLE else 0.0
    batches = make_batches(oracle, scene.cameras, scene.lidar, range(scene.frames), seed=cfg.seed, noise=noise)

    os.makedirs(cfg.output, exist_ok=True)

    with open(artifact(cfg, SCENE_FILE), "w") as handle:
        json.dump(scene.to_json(), handle, indent=2, sort_keys=True)

    write_batches(artifact(cfg, RAYS_DIR), batches)
    logger.info(f"scene `{scene.name}`: {scene.frames} frames, {sum(len(b) for b in batches)} rays")
    return oracle, batches


def label_rays(cfg: ExperimentConfig, oracle: SceneOracle, batches: List[RayBatch]) -> List[RayBatch]:
    """
    Label the LiDAR rays and write the labeled batches (and masks) to `labels/`.

    :param cfg: ExperimentConfig, The experiment.
    :param oracle: SceneOracle, The scene.
    :param batches: List[RayBatch], The generated batches.
    :return: List[RayBatch]

    """

    scene = cfg.scene
    masks = None

    if cfg.labeling.source == LabelSource.MASKS:
        masks = MaskSet.from_oracle(oracle, scene.cameras, range(scene.frames), cfg.labeling, seed=cfg.seed)
        masks.save(artifact(cfg, MASKS_DIR))

    labeled = label_batches(batches, masks, scene.cameras, scene.grid, cfg.labeling)
    write_batches(artifact(cfg, LABELS_DIR), labeled)
    return labeled


def write_loss_trace(cfg: ExperimentConfig, trace: List[LossRecord]) -> None:
    serializer = LossRecordSerializer(terms=list(TERMS.keys()))
    write_csv(artifact(cfg, LOSS_TRACE_FILE), serializer.columns(), serializer.batch(trace))


def train(cfg: ExperimentConfig, oracle: SceneOracle, batches: List[RayBatch]) -> TrainState:
    """
    Optimize the fields and write `checkpoint.grid` and `loss_trace.csv`.

    The loss trace is written even when training diverges.

    :param cfg: ExperimentConfig, The experiment.
    :param oracle: SceneOracle, The scene.
    :param batches: List[RayBatch], The labeled batches.
    :return: TrainState

    :raises: DivergenceError, NonFiniteLossError

    """

    scene = cfg.scene
    schedule = copy.deepcopy(cfg.schedule)
    schedule.static_only = schedule.static_only or cfg.has(Ablation.SINGLE_SDF)
    poses = [oracle.pose(t) for t in range(scene.frames)]
    data = TrainingData(spec=scene.grid, poses=poses, cameras=scene.cameras, batches=batches)
    state = initial_state(poses, scene.grid, schedule, a=cfg.aggregation.sharpness.a)

    try:
        optimize(state, data, objective(cfg), cfg.similarity, seed=cfg.seed)
    except DivergenceError as e:
        write_loss_trace(cfg, e.trace)
        raise

    write_loss_trace(cfg, state.trace)
    state.checkpoint(artifact(cfg, CHECKPOINT_FILE), metadata={"variant": cfg.variant, "scene": scene.name, "seed": cfg.seed})
    return state


def load_fields(cfg: ExperimentConfig, oracle: SceneOracle) -> FrameFields:
    path = artifact(cfg, CHECKPOINT_FILE)

    if not os.path.isfile(path):
        raise ArtifactNotFoundError(path=path)

    spec, arrays, _ = read_grid_file(path)
    poses = [oracle.pose(t) for t in range(cfg.scene.frames)]
    return FrameFields.from_arrays(spec=spec, poses=poses, arrays=arrays)


def final_loss(cfg: ExperimentConfig, trace: Optional[List[LossRecord]] = None) -> float:
    if trace:
        return trace[-1].total

    path = artifact(cfg, LOSS_TRACE_FILE)

    if os.path.isfile(path):
        rows = read_csv(path)

        if rows:
            return float(rows[-1]["total"])

    return float("nan")


def write_renders(cfg: ExperimentConfig, fields: FrameFields, frames: List[int]) -> None:
    """
    Write depth, color, flow and similarity images of the evaluated frames.

    :param cfg: ExperimentConfig, The experiment.
    :param fields: FrameFields, The trained fields.
    :param frames: List[int], The frames.
    :return: None

    """

    single = cfg.has(Ablation.SINGLE_SDF)
    tau = cfg.aggregation.sharpness.tau
    extent = float(np.linalg.norm(cfg.scene.grid.extent))

    for t in frames:
        if len(cfg.scene.cameras) > 0:
            depth, color = metrics.render_camera(fields, t, cfg.scene.cameras[0], cfg.evaluation.samples, tau, single)
            write_pgm(artifact(cfg, RENDERS_DIR, f"depth_t{t:03d}.pgm"), depth, low=0.0, high=extent)
            write_ppm(artifact(cfg, RENDERS_DIR, f"color_t{t:03d}.ppm"), np.clip(color, 0.0, 1.0))

        write_pgm(artifact(cfg, RENDERS_DIR, f"flow_t{t:03d}.pgm"), metrics.flow_magnitude(fields, t), low=0.0)

        if not single and 1 <= t < fields.frames - 1:
            labels = frame_labels(fields.phi_d, fields.poses, t, float(fields.a.detach()), cfg.similarity)
            write_pgm(artifact(cfg, RENDERS_DIR, f"similarity_t{t:03d}.pgm"), labels.similarity, low=0.0, high=1.0)


def evaluate(cfg: ExperimentConfig, oracle: SceneOracle, fields: FrameFields, loss: float) -> MetricsReport:
    """
    Evaluate the fields and write `metrics.csv`, `metrics.json` and the renders.

    :param cfg: ExperimentConfig, The experiment.
    :param oracle: SceneOracle, The scene.
    :param fields: FrameFields, The trained fields.
    :param loss: float, Final training loss.
    :return: MetricsReport

    """

    report = metrics.evaluate(
        fields,
        oracle,
        cfg.evaluation,
        tau=cfg.aggregation.sharpness.tau,
        variant=cfg.variant,
        seed=cfg.seed,
        single=cfg.has(Ablation.SINGLE_SDF),
        final_loss=loss,
    )
    serializer = MetricsSerializer()
    write_csv(artifact(cfg, METRICS_FILE), serializer.columns(report), serializer.batch(report))

    with open(artifact(cfg, METRICS_JSON_FILE), "w") as handle:
        json.dump(report.to_json(), handle, indent=2, sort_keys=True)

    write_renders(cfg, fields, metrics.evaluation_frames(cfg.evaluation, fields.frames))
    return report


def run_experiment(cfg: ExperimentConfig) -> MetricsReport:
    """
    Run the whole pipeline: scene, labels, training and evaluation.

    :param cfg: ExperimentConfig, The experiment.
    :return: MetricsReport

    :raises: DivergenceError, NonFiniteLossError

    """

    logger.info(f"experiment `{cfg.name}`, variant {cfg.variant}, seed {cfg.seed}")
    oracle, batches = generate_scene(cfg)
    batches = label_rays(cfg, oracle, batches)
    state = train(cfg, oracle, batches)
    return evaluate(cfg, oracle, state.fields, final_loss(cfg, state.trace))


def read_reports(paths: List[str]) -> List[MetricsReport]:
    serializer = MetricsSerializer()
    reports = []

    for path in paths:
        if not os.path.isfile(path):
            raise ArtifactNotFoundError(path=path)

        reports += [serializer.deserialize(row) for row in read_csv(path)]

    return reports


def compare(paths: List[str], output: Optional[str] = None) -> Tuple[List[str], List[Dict[str, str]]]:
    """
    Build the ablation table of metrics reports, the first report being the reference.

    :param paths: List[str], The `metrics.csv` files.
    :param output: Optional[str], Directory receiving `comparison.csv`.
    :return: Tuple[List[str], List[Dict[str, str]]], Columns and rows.

    :raises: ConfigError, ArtifactNotFoundError, SceneMismatchError

    """

    reports = read_reports(paths)

    if len(reports) < 2:
        raise ConfigError(message=f"comparison needs at least 2 reports, got {len(reports)}")

    reference = reports[0]

    for report in reports[1:]:
        if (report.scene, report.seed, report.thresholds) != (reference.scene, reference.seed, reference.thresholds):
            raise SceneMismatchError(
                expected=f"{reference.scene} (seed {reference.seed})",
                found=f"{report.scene} (seed {report.seed})",
            )

    serializer = ComparisonSerializer(reference=reference)
    columns, rows = serializer.columns(), serializer.batch(reports)

    if output is not None:
        os.makedirs(output, exist_ok=True)
        write_csv(os.path.join(output, COMPARISON_FILE), columns, rows)

    print(format_table(columns, rows))
    return columns, rows


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_experiment(args.config, seed=args.seed, output=args.out, ablations=args.ablate, schema=args.schema)
    configure_torch(args.threads)
    return cfg


def gen_scene_handler(args: argparse.Namespace) -> int:
    generate_scene(_experiment(args))
    return 0


def label_rays_handler(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    label_rays(cfg, SceneOracle(cfg.scene), read_batches(artifact(cfg, RAYS_DIR)))
    return 0


def train_handler(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    train(cfg, SceneOracle(cfg.scene), read_batches(artifact(cfg, LABELS_DIR)))
    return 0


def eval_handler(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    oracle = SceneOracle(cfg.scene)
    evaluate(cfg, oracle, load_fields(cfg, oracle), final_loss(cfg))
    return 0


def run_handler(args: argparse.Namespace) -> int:
    run_experiment(_experiment(args))
    return 0


def compare_handler(args: argparse.Namespace) -> int:
    compare(args.reports, output=args.out or os.path.dirname(os.path.abspath(args.reports[0])))
    return 0


def validate_handler(args: argparse.Namespace) -> int:
    if args.explain:
        print(format_table(["key", "default", "required", "description"], args.schema.explain()))

    cfg = load_experiment(args.config, seed=args.seed, output=args.out, ablations=args.ablate, schema=args.schema)
    logger.info(f"`{args.config}` is valid: experiment `{cfg.name}`, scene `{cfg.scene.name}`, variant {cfg.variant}")
    return 0


def gradcheck_handler(args: argparse.Namespace) -> int:
    configure_torch(args.threads)
    report = run_gradcheck(seed=args.seed or 0, count=args.count)
    failed = [c for c in report.checks if not c.passed]

    for check in failed:
        logger.error(
            f"{check.name}[{check.index}]: adjoint {check.adjoint:.6e}, numeric {check.numeric:.6e}, "
            f"relative error {check.error:.2e} > {check.tolerance:.0e}"
        )

    print(f"gradcheck: {len(report.checks) - len(failed)}/{len(report.checks)} passed, max relative error {report.max_error:.3e}")
    return 0 if report.passed else 1


COMMANDS = CommandRegistry(commands=[
    Command(name="gen-scene", handler=gen_scene_handler, schema=EXPERIMENT_SCHEMA, help="generate the scene and its rays"),
    Command(name="label-rays", handler=label_rays_handler, schema=EXPERIMENT_SCHEMA, help="label the LiDAR rays static or dynamic"),
    Command(name="train", handler=train_handler, schema=EXPERIMENT_SCHEMA, help="optimize the per-frame fields"),
    Command(name="eval", handler=eval_handler, schema=EXPERIMENT_SCHEMA, help="evaluate a trained checkpoint"),
    Command(name="run", handler=run_handler, schema=EXPERIMENT_SCHEMA, help="generate, label, train and evaluate"),
    Command(name="compare", handler=compare_handler, help="tabulate metrics reports against the first one"),
    Command(name="validate", handler=validate_handler, schema=EXPERIMENT_SCHEMA, help="check an experiment file"),
    Command(name="gradcheck", handler=gradcheck_handler, help="compare adjoint gradients with finite differences"),
])
