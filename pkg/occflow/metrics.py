"""
Ray-based evaluation against the scene oracle.

Predictions come from the per-frame fields without temporal aggregation: query rays are
rendered against the blended SDF of frame t, a ray hits when its weight sum exceeds 0.5
and its depth is then the normalized rendered depth.
"""
import logging
import math
from typing import List, NamedTuple, Optional, Tuple
import numpy as np
import torch
from occflow.aggregation import FrameFields, FrameView, align_point
from occflow.enums import FlowDirection
from occflow.grids import DTYPE, VectorGrid3, sigmoid_occ
from occflow.models import AggParams, EvalConfig, LidarScan, MetricsReport, PinholeCamera, SharpnessParams
from occflow.rays import camera_rays
from occflow.rendering import render, sample_rays
from occflow.scenes import SceneOracle


logger = logging.getLogger(__name__)

HIT_WEIGHT = 0.5
OUTLIER_VOXELS = 2.0
OUTLIER_FRACTION = 0.05


class RayMatch(NamedTuple):
    """
    Classification of query rays at one depth threshold.
    """

    threshold: float
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    @property
    def counts(self) -> Tuple[int, int, int]:
        return int(self.tp.sum()), int(self.fp.sum()), int(self.fn.sum())

    @property
    def iou(self) -> float:
        return iou(*self.counts)


def iou(tp: int, fp: int, fn: int) -> float:
    total = tp + fp + fn

    if total == 0:
        logger.warning("no evaluable rays, RayIoU is undefined")
        return float("nan")

    return tp / total


def match_rays(predicted: np.ndarray, truth: np.ndarray, threshold: float) -> RayMatch:
    """
    Classify rays by their predicted and true depths (NaN marks a miss).

    A ray is a true positive when both hit and the depth error is below the threshold, a
    false positive when the prediction hits otherwise, and a false negative when the
    truth hits otherwise; rays that both miss are ignored.

    :param predicted: np.ndarray, Predicted depths (N,).
    :param truth: np.ndarray, True depths (N,).
    :param threshold: float, Depth threshold (m).
    :return: RayMatch

    :raises: ValueError

    """

    if not threshold > 0:
        raise ValueError(f"depth threshold must be positive, got {threshold}")

    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    pred_hit = np.isfinite(predicted)
    true_hit = np.isfinite(truth)

    with np.errstate(invalid="ignore"):
        tp = pred_hit & true_hit & (np.abs(predicted - truth) < threshold)

    return RayMatch(threshold=float(threshold), tp=tp, fp=pred_hit & ~tp, fn=true_hit & ~tp)


def ray_iou(predicted: np.ndarray, truth: np.ndarray, thresholds: List[float]) -> List[RayMatch]:
    return [match_rays(predicted, truth, threshold) for threshold in thresholds]


def velocity_errors(flow: VectorGrid3, endpoints: np.ndarray, velocity: np.ndarray, frame_dt: float) -> np.ndarray:
    """
    Velocity error `|f(x) / dt - v|` at ray endpoints.

    :param flow: VectorGrid3, Predicted forward flow (m per frame).
    :param endpoints: np.ndarray, Predicted endpoints (N, 3).
    :param velocity: np.ndarray, True velocities (N, 3) in m/s, same axes as the flow.
    :param frame_dt: float, Frame interval (s).
    :return: np.ndarray, Errors (N,) in m/s.

    """

    endpoints = np.asarray(endpoints, dtype=np.float64).reshape(-1, 3)

    if len(endpoints) == 0:
        return np.zeros(0)

    with torch.no_grad():
        predicted = flow.sample(torch.from_numpy(endpoints).to(DTYPE)).numpy() / frame_dt

    return np.linalg.norm(predicted - np.asarray(velocity, dtype=np.float64).reshape(-1, 3), axis=-1)


def mave(flow: VectorGrid3, endpoints: np.ndarray, velocity: np.ndarray, frame_dt: float) -> float:
    """
    Mean velocity error over dynamic true positives.

    :param flow: VectorGrid3, Predicted forward flow (m per frame).
    :param endpoints: np.ndarray, Predicted endpoints of the dynamic true positives (N, 3).
    :param velocity: np.ndarray, True velocities there (N, 3), m/s.
    :param frame_dt: float, Frame interval (s).
    :return: float, NaN when there is no ray.

    """

    errors = velocity_errors(flow, endpoints, velocity, frame_dt)
    return mean_or_nan(errors, "no dynamic true positives, mAVE is undefined")


def flow_errors(flow: VectorGrid3, points: np.ndarray, truth: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)

    if len(points) == 0:
        return np.zeros(0)

    with torch.no_grad():
        predicted = flow.sample(torch.from_numpy(points).to(DTYPE)).numpy()

    return np.linalg.norm(predicted - np.asarray(truth, dtype=np.float64).reshape(-1, 3), axis=-1)


def epe3d(flow: VectorGrid3, points: np.ndarray, truth: np.ndarray) -> float:
    """
    Mean 3D end-point error of a flow at points inside movers.

    :param flow: VectorGrid3, Predicted flow (m per frame).
    :param points: np.ndarray, Ego points (N, 3).
    :param truth: np.ndarray, True flows (N, 3).
    :return: float, NaN when there is no point.

    """

    return mean_or_nan(flow_errors(flow, points, truth), "no points inside movers, EPE3D is undefined")


def mean_or_nan(values: np.ndarray, warning: str) -> float:
    if len(values) == 0:
        logger.warning(warning)
        return float("nan")

    return float(np.mean(values))


def inference_view(fields: FrameFields, t: int, tau: float, single: bool = False) -> FrameView:
    """
    Get the queries of frame t without temporal aggregation.

    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :param tau: float, Blending temperature.
    :param single: bool, Single-field mode.
    :return: FrameView

    """

    params = AggParams(lambda_ag=0.0, sharpness=SharpnessParams(a=float(fields.a.detach()), tau=tau))
    return FrameView(fields=fields, t=t, params=params, single=single)


def predict_depths(
        view: FrameView,
        origins: np.ndarray,
        dirs: np.ndarray,
        samples: int,
        color: bool = False) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Render predicted depths, NaN where the weight sum does not exceed `HIT_WEIGHT`.

    :param view: FrameView, The queries.
    :param origins: np.ndarray, Origins (N, 3).
    :param dirs: np.ndarray, Unit directions (N, 3).
    :param samples: int, Samples per ray.
    :param color: bool, Also render normalized colors.
    :return: Tuple[np.ndarray, Optional[np.ndarray]], Depths (N,) and colors (N, 3).

    """

    depths = np.full(len(origins), np.nan)
    colors = np.zeros((len(origins), 3)) if color else None
    sampled = sample_rays(origins, dirs, view.fields.spec, samples)

    if len(sampled) == 0:
        return depths, colors

    with torch.no_grad():
        out = render(sampled, view.blended, view.fields.a, color=view.color if color else None)
        weight = out.weight_sum.numpy()
        depth = out.normalized_depth().numpy()

    hit = weight > HIT_WEIGHT
    depths[sampled.index[hit]] = depth[hit]

    if color:
        colors[sampled.index] = out.color.numpy() / np.maximum(weight, 1e-12)[:, None]

    return depths, colors


def query_rays(
        oracle: SceneOracle,
        t: int,
        lidar: LidarScan,
        cfg: EvalConfig,
        rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw LiDAR-like rays from the current and the next `future_poses` ego poses, expressed
    in frame-t ego coordinates.

    Directions are uniform on the band of the scan's elevation range.

    :param oracle: SceneOracle, The scene (for the ego trajectory).
    :param t: int, The frame.
    :param lidar: LidarScan, Sensor position and elevation range.
    :param cfg: EvalConfig, Number of poses and rays.
    :param rng: np.random.Generator, The random source.
    :return: Tuple[np.ndarray, np.ndarray], Origins and unit directions.

    """

    pose = oracle.pose(t)
    low, high = np.sin(np.radians(lidar.elevation))
    origins, dirs = [], []

    for j in range(cfg.future_poses + 1):
        other = oracle.pose(t + j)
        rotation = np.linalg.solve(pose, other)[:3, :3]
        azimuth = rng.uniform(0.0, 2.0 * math.pi, cfg.rays_per_pose)
        height = rng.uniform(low, high, cfg.rays_per_pose)
        radius = np.sqrt(1.0 - height ** 2)
        local = np.stack([radius * np.cos(azimuth), radius * np.sin(azimuth), height], axis=-1)
        dirs.append(local @ rotation.T)
        origins.append(np.tile(align_point(np.asarray(lidar.position, dtype=np.float64), other, pose), (cfg.rays_per_pose, 1)))

    return np.concatenate(origins), np.concatenate(dirs)


class FrameEvaluation(NamedTuple):
    """
    Per-ray and per-point results of one frame.
    """

    predicted: np.ndarray
    truth: np.ndarray
    dynamic: np.ndarray
    velocity_errors: np.ndarray
    forward_errors: np.ndarray
    backward_errors: np.ndarray


def evaluate_frame(
        fields: FrameFields,
        oracle: SceneOracle,
        t: int,
        cfg: EvalConfig,
        tau: float,
        seed: int,
        single: bool = False) -> FrameEvaluation:
    """
    Evaluate the prediction of one frame.

    :param fields: FrameFields, The trained fields.
    :param oracle: SceneOracle, The scene.
    :param t: int, The frame.
    :param cfg: EvalConfig, Evaluation settings.
    :param tau: float, Blending temperature.
    :param seed: int, Seed of the query rays and flow points.
    :param single: bool, Single-field mode.
    :return: FrameEvaluation

    """

    rng = np.random.default_rng([seed, t])
    lidar = oracle.scene.lidar or LidarScan()
    origins, dirs = query_rays(oracle, t, lidar, cfg, rng)
    predicted, _ = predict_depths(inference_view(fields, t, tau, single), origins, dirs, cfg.samples)
    hits = oracle.cast_rays(origins, dirs, t)

    moving = match_rays(predicted, hits.ranges, cfg.mave_threshold).tp & hits.dynamic
    endpoints = origins[moving] + predicted[moving, None] * dirs[moving]
    velocity = oracle.rotate_to_ego(oracle.primitive_velocity(hits.primitive[moving]), t)
    speed = velocity_errors(fields.flow_forward[t], endpoints, velocity, oracle.frame_dt)

    points = oracle.sample_dynamic_points(t, cfg.flow_points, rng)
    errors = {
        direction: flow_errors(fields.flow(t, direction), points, oracle.ego_flow(points, t, direction))
        for direction in FlowDirection
    }

    logger.debug(f"frame {t}: {len(origins)} query rays, {int(moving.sum())} dynamic true positives, {len(points)} flow points")
    return FrameEvaluation(
        predicted=predicted,
        truth=hits.ranges,
        dynamic=hits.dynamic,
        velocity_errors=speed,
        forward_errors=errors[FlowDirection.FORWARD],
        backward_errors=errors[FlowDirection.BACKWARD],
    )


def evaluation_frames(cfg: EvalConfig, frames: int) -> List[int]:
    """
    Get the evaluated frames: the configured ones, or every frame with two neighbors.

    :param cfg: EvalConfig, Evaluation settings.
    :param frames: int, Length of the sequence.
    :return: List[int]

    :raises: ValueError

    """

    chosen = cfg.frames if len(cfg.frames) > 0 else list(range(1, frames - 1)) or list(range(frames))

    for t in chosen:
        if not 0 <= t < frames:
            raise ValueError(f"evaluation frame {t} is outside the sequence of {frames} frames")

    return chosen


def evaluate(
        fields: FrameFields,
        oracle: SceneOracle,
        cfg: EvalConfig,
        tau: float,
        variant: str = "full",
        seed: int = 0,
        single: bool = False,
        final_loss: float = float("nan")) -> MetricsReport:
    """
    Evaluate trained fields against the oracle.

    Counts, velocity errors, flow errors and depth errors are pooled over the evaluated
    frames.

    :param fields: FrameFields, The trained fields.
    :param oracle: SceneOracle, The scene.
    :param cfg: EvalConfig, Evaluation settings.
    :param tau: float, Blending temperature.
    :param variant: str, Variant label of the report.
    :param seed: int, Run seed.
    :param single: bool, Single-field mode.
    :param final_loss: float, Last training loss.
    :return: MetricsReport

    """

    results = [evaluate_frame(fields, oracle, t, cfg, tau, seed, single) for t in evaluation_frames(cfg, fields.frames)]
    predicted = np.concatenate([r.predicted for r in results])
    truth = np.concatenate([r.truth for r in results])
    dynamic = np.concatenate([r.dynamic for r in results])
    matches = ray_iou(predicted, truth, cfg.thresholds)
    counts = [m.counts for m in matches]

    both = np.isfinite(predicted) & np.isfinite(truth)
    error = np.where(both, np.abs(predicted - truth), 0.0)
    bound = np.maximum(OUTLIER_VOXELS * fields.spec.resolution, OUTLIER_FRACTION * np.where(both, truth, 0.0))

    forward = mean_or_nan(np.concatenate([r.forward_errors for r in results]), "no points inside movers, EPE3D is undefined")
    backward = mean_or_nan(np.concatenate([r.backward_errors for r in results]), "no points inside movers, EPE3D is undefined")

    report = MetricsReport(
        variant=variant,
        scene=oracle.scene.name,
        seed=seed,
        thresholds=list(cfg.thresholds),
        ray_iou=[iou(*c) for c in counts],
        tp=[c[0] for c in counts],
        fp=[c[1] for c in counts],
        fn=[c[2] for c in counts],
        mave=mean_or_nan(np.concatenate([r.velocity_errors for r in results]), "no dynamic true positives, mAVE is undefined"),
        epe3d=float(np.mean([forward, backward])),
        epe3d_forward=forward,
        epe3d_backward=backward,
        depth_error=mean_or_nan(error[both], "no ray hits in both prediction and oracle"),
        depth_error_fg=mean_or_nan(error[both & dynamic], "no dynamic ray hits in both prediction and oracle"),
        depth_outliers=mean_or_nan((error > bound)[both].astype(np.float64), "no ray hits in both prediction and oracle"),
        final_loss=final_loss,
    )
    logger.info(f"{variant}: RayIoU {report.ray_iou_mean:.4f}, mAVE {report.mave:.4f} m/s, EPE3D {report.epe3d:.4f} m")
    return report


def render_camera(
        fields: FrameFields,
        t: int,
        camera: PinholeCamera,
        samples: int,
        tau: float,
        single: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Render the predicted depth and color images of a camera.

    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :param camera: PinholeCamera, The camera.
    :param samples: int, Samples per ray.
    :param tau: float, Blending temperature.
    :param single: bool, Single-field mode.
    :return: Tuple[np.ndarray, np.ndarray], Depth (H, W) with NaN misses and color (H, W, 3).

    """

    origins, dirs, _ = camera_rays(camera)
    depths, colors = predict_depths(inference_view(fields, t, tau, single), origins, dirs, samples, color=True)
    return depths.reshape(camera.height, camera.width), colors.reshape(camera.height, camera.width, 3)


def flow_magnitude(fields: FrameFields, t: int) -> np.ndarray:
    """
    Bird's-eye view of the forward flow: the largest magnitude in every column, gated by
    the dynamic occupancy.

    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :return: np.ndarray, Shape (X, Y), m per frame.

    """

    with torch.no_grad():
        occupancy = sigmoid_occ(fields.phi_d[t].values[..., 0], fields.a)
        magnitude = torch.linalg.norm(fields.flow_forward[t].values, dim=-1) * occupancy

    return magnitude.max(dim=-1).values.numpy()
