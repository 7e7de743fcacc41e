"""
Direct optimization of the frame fields with Adam.
"""
import logging
from typing import Dict, List, Optional, Tuple
import numpy as np
import torch
from tqdm import tqdm
from occflow.aggregation import FrameFields
from occflow.enums import RayLabel, SensorKind
from occflow.exceptions import DivergenceError
from occflow.grids import DTYPE, write_grid_file, read_grid_file
from occflow.logs import progress_enabled
from occflow.losses import CameraPatch, IterationBatch, Objective, SourceView, SupervisionRays, to_frame, total_loss
from occflow.models import GridSpec, LossRecord, PinholeCamera, Schedule, SimFlowParams
from occflow.rays import RayBatch
from occflow.similarity import PseudoLabels, frame_labels


logger = logging.getLogger(__name__)

DYNAMIC_GROUPS = ["phi_d", "color_d", "flow_backward", "flow_forward"]


class TrainingData(object):
    """
    Training Data Class

    The labeled ray batches of a sequence, indexed for per-iteration sampling.

    Attributes:
        spec (`GridSpec`): The volume.
        poses (`List[np.ndarray]`): Ego poses per frame.
        cameras (`List[PinholeCamera]`): The cameras.
        lidar (`Dict[int, RayBatch]`): LiDAR batch per frame.
        camera (`Dict[Tuple[int, str], RayBatch]`): Camera batch per frame and camera.

    """

    def __init__(self, spec: GridSpec, poses: List[np.ndarray], cameras: List[PinholeCamera], batches: List[RayBatch]) -> None:
        self.spec = spec
        self.poses = poses
        self.cameras = cameras
        self.lidar: Dict[int, RayBatch] = {}
        self.camera: Dict[Tuple[int, str], RayBatch] = {}
        self._images: Dict[Tuple[int, str], np.ndarray] = {}

        for batch in batches:
            if batch.kind == SensorKind.LIDAR:
                self.lidar[batch.t] = batch
            else:
                self.camera[(batch.t, batch.camera)] = batch

    @property
    def frames(self) -> int:
        return len(self.poses)

    def image(self, t: int, camera: PinholeCamera) -> np.ndarray:
        """
        Get the (H, W, 3) image of a camera at a frame.

        :param t: int, The frame.
        :param camera: PinholeCamera, The camera.
        :return: np.ndarray

        """

        key = (t, camera.name)

        if key not in self._images:
            batch = self.camera[key]
            image = np.zeros((camera.height, camera.width, 3))
            image[batch.pixels[:, 0], batch.pixels[:, 1]] = batch.gt_color
            self._images[key] = image

        return self._images[key]

    def static_rays(self, t: int, count: int, window: int, rng: np.random.Generator, single: bool = False) -> SupervisionRays:
        """
        Draw static rays measured at frames t +- k (k < window, clamped) in frame-t coordinates.

        :param t: int, The supervised frame.
        :param count: int, Rays wanted (fewer may survive alignment).
        :param window: int, The window K.
        :param rng: np.random.Generator, The random source.
        :param single: bool, Accept every non-discarded ray.
        :return: SupervisionRays

        """

        offsets = rng.integers(-(window - 1), window, size=count) if window > 1 else np.zeros(count, dtype=np.int64)
        frames = np.clip(t + offsets, 0, self.frames - 1)
        parts = []

        for u in np.unique(frames):
            batch = self.lidar.get(int(u))

            if batch is None:
                continue

            usable = batch.hits & (batch.labels != RayLabel.DISCARD.value)

            if not single:
                usable &= batch.label_mask(RayLabel.STATIC)

            pool = np.flatnonzero(usable)

            if len(pool) == 0:
                continue

            wanted = int(np.sum(frames == u))
            chosen = rng.choice(pool, size=wanted, replace=wanted > len(pool))
            parts.append(to_frame(
                batch.origins[chosen], batch.dirs[chosen], batch.gt_range[chosen],
                self.poses[int(u)], self.poses[t], self.spec,
            ))

        return SupervisionRays.concatenate(parts)

    def dynamic_rays(self, t: int, count: int, rng: np.random.Generator) -> SupervisionRays:
        batch = self.lidar.get(t)

        if batch is None or count <= 0:
            return SupervisionRays.empty()

        pool = np.flatnonzero(batch.hits & batch.label_mask(RayLabel.DYNAMIC))

        if len(pool) == 0:
            return SupervisionRays.empty()

        chosen = rng.choice(pool, size=count, replace=count > len(pool))
        return to_frame(batch.origins[chosen], batch.dirs[chosen], batch.gt_range[chosen], self.poses[t], self.poses[t], self.spec)

    def patches(self, t: int, count: int, size: int, rng: np.random.Generator) -> List[CameraPatch]:
        """
        Draw contiguous pixel patches of frame t, with the t-1 and t+1 images as sources.

        :param t: int, The frame.
        :param count: int, Number of patches.
        :param size: int, Patch side (pixels).
        :param rng: np.random.Generator, The random source.
        :return: List[CameraPatch]

        """

        cameras = [c for c in self.cameras if (t, c.name) in self.camera and c.height >= size and c.width >= size]
        patches = []

        if len(cameras) == 0 or size < 2:
            return patches

        for _ in range(count):
            camera = cameras[int(rng.integers(0, len(cameras)))]
            top = int(rng.integers(0, camera.height - size + 1))
            left = int(rng.integers(0, camera.width - size + 1))
            rows = np.arange(top, top + size)
            cols = np.arange(left, left + size)
            index = (rows[:, None] * camera.width + cols[None, :]).reshape(-1)
            batch = self.camera[(t, camera.name)]
            sources = [
                SourceView(pose=self.poses[u], image=self.image(u, camera))
                for u in (t - 1, t + 1) if (u, camera.name) in self.camera
            ]
            patches.append(CameraPatch(
                camera=camera,
                rows=rows,
                cols=cols,
                origins=batch.origins[index],
                dirs=batch.dirs[index],
                target=self.image(t, camera)[top:top + size, left:left + size],
                sources=sources,
            ))

        return patches

    def points(self, count: int, rng: np.random.Generator) -> torch.Tensor:
        points = self.spec.lower + rng.random((max(count, 1), 3)) * (self.spec.upper - self.spec.lower)
        return torch.from_numpy(points).to(DTYPE)

    def sample(self, t: int, schedule: Schedule, rng: np.random.Generator, single: bool = False) -> IterationBatch:
        """
        Draw the supervision of one iteration: half static and half dynamic LiDAR rays,
        camera patches and regularization points.

        :param t: int, The center frame.
        :param schedule: Schedule, Batch sizes and window.
        :param rng: np.random.Generator, The random source.
        :param single: bool, Single-field mode (all rays supervise the static field).
        :return: IterationBatch

        """

        if single:
            static = self.static_rays(t, schedule.lidar_rays, schedule.window_k, rng, single=True)
            dynamic = SupervisionRays.empty()
        elif schedule.static_only:
            static = self.static_rays(t, schedule.lidar_rays, schedule.window_k, rng)
            dynamic = SupervisionRays.empty()
        else:
            half = schedule.lidar_rays // 2
            static = self.static_rays(t, schedule.lidar_rays - half, schedule.window_k, rng)
            dynamic = self.dynamic_rays(t, half, rng)

        return IterationBatch(
            t=t,
            static=static,
            dynamic=dynamic,
            patches=self.patches(t, schedule.camera_patches, schedule.patch_size, rng),
            points=self.points(schedule.reg_points, rng),
            labels=None,
        )


class TrainState(object):
    """
    Train State Class

    Attributes:
        fields (`FrameFields`): The optimized fields.
        optimizer (`torch.optim.Adam`): The optimizer.
        iteration (`int`): Completed iterations.
        trace (`List[LossRecord]`): Loss record per iteration.
        window_k (`int`): Static multi-frame window.

    """

    def __init__(self, fields: FrameFields, schedule: Schedule) -> None:
        self.fields = fields
        self.schedule = schedule
        self.window_k = schedule.window_k
        self.iteration = 0
        self.trace: List[LossRecord] = []
        self._labels: Dict[int, Tuple[int, PseudoLabels]] = {}

        if schedule.static_only:
            for name in DYNAMIC_GROUPS:
                for values in fields.grids(name):
                    values.requires_grad_(False)

        grids = [p for p in fields.parameters() if p.requires_grad]
        self.optimizer = torch.optim.Adam([
            {"params": grids, "lr": schedule.lr},
            {"params": [fields.log_a], "lr": schedule.lr_log_a},
        ])

    @property
    def parameters(self) -> List[torch.Tensor]:
        return [p for group in self.optimizer.param_groups for p in group["params"]]

    def labels(self, t: int, params: SimFlowParams) -> PseudoLabels:
        """
        Get the pseudo-labels of frame t, recomputed every `params.interval` iterations.

        :param t: int, The frame.
        :param params: SimFlowParams, Similarity settings.
        :return: PseudoLabels

        """

        cached = self._labels.get(t)

        if cached is None or self.iteration - cached[0] >= params.interval:
            labels = frame_labels(self.fields.phi_d, self.fields.poses, t, float(self.fields.a.detach()), params)
            self._labels[t] = (self.iteration, labels)
            return labels

        return cached[1]

    def checkpoint(self, path: str, metadata: Optional[Dict] = None) -> None:
        """
        Write every grid, `log_a` and the Adam moments to a grid file.

        :param path: str, The destination.
        :param metadata: Optional[Dict], Extra header entries.
        :return: None

        """

        arrays = self.fields.arrays()
        steps = []

        for i, p in enumerate(self.parameters):
            state = self.optimizer.state.get(p, {})

            if "exp_avg" in state:
                arrays[f"adam_m_{i:04d}"] = state["exp_avg"].detach().numpy()
                arrays[f"adam_v_{i:04d}"] = state["exp_avg_sq"].detach().numpy()
                steps.append(int(float(state["step"])))
            else:
                steps.append(0)

        header = {"kind": "checkpoint", "iteration": self.iteration, "frames": self.fields.frames, "adam_steps": steps}
        header.update(metadata or {})
        write_grid_file(path, self.fields.spec, arrays, header)

    @classmethod
    def restore(cls, path: str, poses: List[np.ndarray], schedule: Schedule) -> 'TrainState':
        """
        Rebuild a state from a checkpoint.

        :param path: str, The checkpoint.
        :param poses: List[np.ndarray], Ego poses of the sequence.
        :param schedule: Schedule, The schedule the state continues with.
        :return: TrainState

        """

        spec, arrays, metadata = read_grid_file(path)
        fields = FrameFields.from_arrays(spec=spec, poses=poses, arrays=arrays, requires_grad=True)
        state = cls(fields=fields, schedule=schedule)
        state.iteration = int(metadata.get("iteration", 0))

        for i, p in enumerate(state.parameters):
            if f"adam_m_{i:04d}" in arrays:
                state.optimizer.state[p] = {
                    "step": torch.tensor(float(metadata["adam_steps"][i])),
                    "exp_avg": torch.from_numpy(np.array(arrays[f"adam_m_{i:04d}"])).to(DTYPE).reshape(p.shape),
                    "exp_avg_sq": torch.from_numpy(np.array(arrays[f"adam_v_{i:04d}"])).to(DTYPE).reshape(p.shape),
                }

        return state


def initial_state(poses: List[np.ndarray], spec: GridSpec, schedule: Schedule, a: float) -> TrainState:
    """
    Create the starting state: static SDF +0.5 m, dynamic SDF +1.0 m, zero flow.

    :param poses: List[np.ndarray], Ego poses.
    :param spec: GridSpec, The volume.
    :param schedule: Schedule, The schedule.
    :param a: float, Initial sharpness.
    :return: TrainState

    """

    return TrainState(fields=FrameFields.initial(spec=spec, poses=poses, a=a), schedule=schedule)


def optimize(
        state: TrainState,
        data: TrainingData,
        objective: Objective,
        similarity: SimFlowParams,
        seed: int) -> TrainState:
    """
    Run the schedule's iterations.

    Each iteration draws a center frame t in [1, T - 2], samples its supervision, takes one
    Adam step on the total loss and appends a loss record.

    :param state: TrainState, The state to advance.
    :param data: TrainingData, The labeled rays.
    :param objective: Objective, Weights and switches.
    :param similarity: SimFlowParams, Pseudo-label settings.
    :param seed: int, Seed of the batch sampling.
    :return: TrainState

    :raises: ValueError, DivergenceError, NonFiniteLossError

    """

    schedule = state.schedule

    if data.frames < 3:
        raise ValueError(f"training needs at least 3 frames, got {data.frames}")

    rng = np.random.default_rng(seed)
    use_similarity = objective.similarity and not objective.single and not schedule.static_only
    start = state.iteration

    for iteration in tqdm(range(start, start + schedule.iterations), desc="train", disable=not progress_enabled()):
        t = int(rng.integers(1, data.frames - 1))
        batch = data.sample(t, schedule, rng, single=objective.single)

        if use_similarity:
            batch = batch._replace(labels=state.labels(t, similarity))

        state.optimizer.zero_grad(set_to_none=True)
        loss, terms = total_loss(state.fields, batch, objective, iteration=iteration)
        record = terms.record(iteration, objective.weights)
        state.trace.append(record)

        if record.total > schedule.divergence:
            raise DivergenceError(iteration=iteration, loss=record.total, trace=state.trace)

        loss.backward()
        state.optimizer.step()
        state.iteration = iteration + 1

        if iteration % schedule.log_every == 0:
            logger.info(f"iteration {iteration}: frame {t}, loss {record.total:.6g}, range {record.terms.get('range', 0.0):.6g}")

    return state
