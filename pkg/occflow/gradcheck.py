"""
Finite-difference verification of the adjoint gradients of the total loss.
"""
import logging
from typing import List, NamedTuple, Tuple
import numpy as np
import torch
from occflow.aggregation import FrameFields
from occflow.enums import Shape
from occflow.grids import DTYPE
from occflow.losses import IterationBatch, Objective, gradients, total_loss
from occflow.models import (
    AggParams, EgoTrajectory, GridSpec, LidarScan, LossWeights, PinholeCamera, Schedule,
    ScenePrimitive, SceneDescription, SharpnessParams, SimFlowParams,
)
from occflow.optimization import TrainingData
from occflow.rays import make_batches
from occflow.scenes import SceneOracle
from occflow.similarity import frame_labels


logger = logging.getLogger(__name__)

FLOW_GROUPS = ("flow_backward", "flow_forward")


class GradientCheck(NamedTuple):
    """
    One compared parameter.
    """

    name: str
    index: int
    adjoint: float
    numeric: float
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


class GradcheckReport(NamedTuple):
    """
    All compared parameters of a run.
    """

    checks: List[GradientCheck]

    @property
    def max_error(self) -> float:
        return max((c.error for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return len(self.checks) > 0 and all(c.passed for c in self.checks)


def relative_error(adjoint: float, numeric: float, floor: float = 1e-6) -> float:
    return abs(adjoint - numeric) / max(abs(adjoint), abs(numeric), floor)


def toy_scene() -> SceneDescription:
    """
    An 8 x 8 x 8 volume with a ground plane, a static box and a moving sphere, seen by one
    small camera and a sparse LiDAR.

    :return: SceneDescription

    """

    return SceneDescription(
        name="gradcheck",
        preset="desk",
        grid=GridSpec(origin=[-0.8, -0.8, -0.2], extent=[1.6, 1.6, 1.6], resolution=0.2),
        primitives=[
            ScenePrimitive(name="ground", shape=Shape.GROUND_PLANE, center=[0.0, 0.0, 0.0], albedo=[0.3, 0.3, 0.3]),
            ScenePrimitive(name="block", shape=Shape.BOX, center=[-0.45, 0.4, 0.2], half_extents=[0.15, 0.15, 0.2], albedo=[0.8, 0.2, 0.2]),
            ScenePrimitive(name="ball", shape=Shape.SPHERE, center=[0.3, -0.2, 0.35], radius=0.2, velocity=[0.05, 0.0, 0.0],
                           albedo=[0.2, 0.3, 0.9], dynamic=True),
        ],
        cameras=[PinholeCamera(name="front", width=8, height=8, fov=90.0, position=[-0.6, 0.0, 0.7], pitch=30.0)],
        lidar=LidarScan(position=[0.0, 0.0, 0.7], azimuths=24, channels=4, elevation=[-50.0, -10.0]),
        ego=EgoTrajectory(velocity=[0.02, 0.0, 0.0]),
        frames=3,
        frame_dt=0.1,
        seed=0,
    )


def toy_problem(seed: int = 0) -> Tuple[FrameFields, IterationBatch, Objective]:
    """
    Build perturbed oracle fields, one iteration's supervision of frame 1 and an objective
    with every term enabled.

    :param seed: int, Seed of the perturbations and the sampling.
    :return: Tuple[FrameFields, IterationBatch, Objective]

    """

    scene = toy_scene()
    oracle = SceneOracle(scene)
    spec = scene.grid
    rng = np.random.default_rng(seed)
    poses = [oracle.pose(t) for t in range(scene.frames)]
    fields = FrameFields.initial(spec=spec, poses=poses, a=10.0, requires_grad=False)

    def noise(*shape: int) -> torch.Tensor:
        return torch.from_numpy(rng.normal(0.0, 1.0, shape)).to(DTYPE)

    for t in range(scene.frames):
        fields.phi_s[t].values = torch.from_numpy(oracle.sdf_grid(t, dynamic=False)).to(DTYPE)[..., None] + 0.02 * noise(*spec.dims, 1)
        fields.phi_d[t].values = torch.from_numpy(oracle.sdf_grid(t, dynamic=True)).to(DTYPE)[..., None] + 0.02 * noise(*spec.dims, 1)
        fields.color_s[t].values = torch.from_numpy(rng.random(tuple(spec.dims) + (3,))).to(DTYPE)
        fields.color_d[t].values = torch.from_numpy(rng.random(tuple(spec.dims) + (3,))).to(DTYPE)
        fields.flow_backward[t].values = 0.05 * noise(*spec.dims, 3)
        fields.flow_forward[t].values = 0.05 * noise(*spec.dims, 3)

    for values in fields.parameters():
        values.requires_grad_(True)

    fields.log_a.requires_grad_(True)

    batches = make_batches(oracle, scene.cameras, scene.lidar, range(scene.frames), seed=seed)
    data = TrainingData(spec=spec, poses=poses, cameras=scene.cameras, batches=batches)
    schedule = Schedule(lidar_rays=16, camera_patches=1, patch_size=4, reg_points=16, samples=16, window_k=2)
    similarity = SimFlowParams(window=3, cell=spec.resolution)
    batch = data.sample(1, schedule, rng)
    batch = batch._replace(labels=frame_labels(fields.phi_d, poses, 1, 10.0, similarity))
    objective = Objective(
        weights=LossWeights(),
        aggregation=AggParams(lambda_ag=0.5, sharpness=SharpnessParams(a=10.0, tau=2.0)),
        samples=schedule.samples,
    )
    return fields, batch, objective


def check_gradients(
        fields: FrameFields,
        batch: IterationBatch,
        objective: Objective,
        count: int = 100,
        step: float = 1e-6,
        tolerance: float = 1e-4,
        flow_tolerance: float = 1e-3,
        minimum: float = 1e-4,
        seed: int = 0) -> GradcheckReport:
    """
    Compare adjoint gradients with central differences on random parameters.

    Parameters are drawn among those whose adjoint gradient exceeds `minimum` in
    magnitude; `log_a` is always compared.

    :param fields: FrameFields, Fields whose grids and `log_a` require gradients.
    :param batch: IterationBatch, The supervision.
    :param objective: Objective, Weights and switches.
    :param count: int, Number of grid parameters to compare.
    :param step: float, Difference step.
    :param tolerance: float, Relative error bound.
    :param flow_tolerance: float, Relative error bound for flow parameters.
    :param minimum: float, Smallest adjoint gradient magnitude considered.
    :param seed: int, Seed of the parameter draw.
    :return: GradcheckReport

    """

    _, grads, grad_log_a = gradients(fields, batch, objective)
    names = [f"{name}_{t:03d}" for name in FrameFields.GROUPS for t in range(fields.frames)]
    parameters = fields.parameters()
    candidates = [
        (p, int(j))
        for p, g in enumerate(grads)
        for j in np.flatnonzero(np.abs(g.detach().numpy().reshape(-1)) > minimum)
    ]
    rng = np.random.default_rng(seed)
    chosen = [candidates[i] for i in sorted(rng.choice(len(candidates), size=min(count, len(candidates)), replace=False))]

    def loss() -> float:
        with torch.no_grad():
            return float(total_loss(fields, batch, objective)[0])

    def central(values: torch.Tensor, j: int) -> float:
        flat = values.data.view(-1)
        original = float(flat[j])
        flat[j] = original + step
        ahead = loss()
        flat[j] = original - step
        behind = loss()
        flat[j] = original
        return (ahead - behind) / (2.0 * step)

    checks = []

    for p, j in chosen:
        adjoint = float(grads[p].reshape(-1)[j])
        numeric = central(parameters[p], j)
        bound = flow_tolerance if names[p].startswith(FLOW_GROUPS) else tolerance
        checks.append(GradientCheck(names[p], j, adjoint, numeric, relative_error(adjoint, numeric), bound))

    adjoint = float(grad_log_a)
    numeric = central(fields.log_a, 0)
    checks.append(GradientCheck("log_a", 0, adjoint, numeric, relative_error(adjoint, numeric), tolerance))

    report = GradcheckReport(checks=checks)
    logger.info(f"gradient check: {len(checks)} parameters, max relative error {report.max_error:.3e}")
    return report


def run_gradcheck(seed: int = 0, count: int = 100) -> GradcheckReport:
    fields, batch, objective = toy_problem(seed=seed)
    return check_gradients(fields, batch, objective, count=count, seed=seed)
