"""
Analytic scene oracle: exact SDFs, sphere-traced ranges, ground-truth flow and dynamic masks.

Primitives live in world coordinates and move rigidly with a constant velocity per frame.
Ray queries take origins and directions in the ego coordinates of the queried frame.
"""
import logging
from typing import List, Optional, Tuple, NamedTuple
import numpy as np
from occflow.enums import Shape, FlowDirection
from occflow.grids import volume_bounds
from occflow.models import SceneDescription, ScenePrimitive, PinholeCamera, GridSpec


logger = logging.getLogger(__name__)

TOLERANCE = 1e-6
MAX_STEPS = 2000


class RayHits(NamedTuple):
    """
    Results of casting a bundle of rays.

    `ranges` is NaN on misses, `primitive` is -1 on misses and `colors` are black.
    """

    ranges: np.ndarray
    colors: np.ndarray
    dynamic: np.ndarray
    primitive: np.ndarray


def sd_box(p: np.ndarray, half_extents: np.ndarray) -> np.ndarray:
    q = np.abs(p) - half_extents
    return np.linalg.norm(np.maximum(q, 0.0), axis=-1) + np.minimum(np.max(q, axis=-1), 0.0)


def sd_sphere(p: np.ndarray, radius: float) -> np.ndarray:
    return np.linalg.norm(p, axis=-1) - radius


class SceneOracle(object):
    """
    Scene Oracle Class

    Immutable analytic stand-in for a real sequence; every query is pure.

    Attributes:
        scene (`SceneDescription`): The scene being answered for.

    """

    def __init__(self, scene: SceneDescription) -> None:
        """
        Scene Oracle Constructor

        :param scene: SceneDescription, The scene.
        :return: None

        :raises: ValueError

        """

        for primitive in scene.primitives:
            primitive.check()

        if not any(not p.dynamic for p in scene.primitives):
            raise ValueError(f"scene `{scene.name}` needs at least one static primitive")

        self._scene = scene
        self._velocities = np.array([p.velocity for p in scene.primitives], dtype=np.float64).reshape(-1, 3)
        self._centers = np.array([p.center for p in scene.primitives], dtype=np.float64).reshape(-1, 3)
        self._albedo = np.array([p.albedo for p in scene.primitives], dtype=np.float64).reshape(-1, 3)
        self._dynamic = np.array([p.dynamic for p in scene.primitives], dtype=bool)

    @property
    def scene(self) -> SceneDescription:
        return self._scene

    @property
    def primitives(self) -> List[ScenePrimitive]:
        return self._scene.primitives

    @property
    def spec(self) -> GridSpec:
        return self._scene.grid

    @property
    def frame_dt(self) -> float:
        return self._scene.frame_dt

    @property
    def frames(self) -> int:
        return self._scene.frames

    @property
    def dynamic(self) -> np.ndarray:
        """
        Get the dynamic flag of every primitive.

        :return: np.ndarray

        """

        return self._dynamic

    def pose(self, t: float) -> np.ndarray:
        """
        Get the ego-to-world transform of frame `t`.

        :param t: float, The frame.
        :return: np.ndarray

        """

        return self._scene.ego.pose(t)

    def to_world(self, points: np.ndarray, t: float) -> np.ndarray:
        pose = self.pose(t)
        return np.asarray(points, dtype=np.float64) @ pose[:3, :3].T + pose[:3, 3]

    def to_ego(self, points: np.ndarray, t: float) -> np.ndarray:
        pose = self.pose(t)
        return (np.asarray(points, dtype=np.float64) - pose[:3, 3]) @ pose[:3, :3]

    def rotate_to_ego(self, vectors: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.pose(t)[:3, :3]

    def rotate_to_world(self, vectors: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.pose(t)[:3, :3].T

    def centers(self, t: float) -> np.ndarray:
        """
        Get the primitive centers at frame `t` (world coordinates).

        :param t: float, The frame.
        :return: np.ndarray

        """

        return self._centers + t * self._velocities

    def primitive_sdf(self, index: int, x: np.ndarray, t: float) -> np.ndarray:
        """
        Exact signed distance to one primitive at its frame-`t` pose.

        :param index: int, The primitive.
        :param x: np.ndarray, World points of shape (..., 3).
        :param t: float, The frame.
        :return: np.ndarray

        """

        primitive = self.primitives[index]
        center = self.centers(t)[index]
        x = np.asarray(x, dtype=np.float64)

        if primitive.shape == Shape.GROUND_PLANE:
            return x[..., 2] - center[2]
        elif primitive.shape == Shape.SPHERE:
            return sd_sphere(x - center, primitive.radius)

        return sd_box(x - center, np.asarray(primitive.half_extents))

    def sdf_parts(self, x: np.ndarray, t: float) -> np.ndarray:
        """
        Per-primitive signed distances, shape (..., P).

        :param x: np.ndarray, World points of shape (..., 3).
        :param t: float, The frame.
        :return: np.ndarray

        """

        return np.stack([self.primitive_sdf(i, x, t) for i in range(len(self.primitives))], axis=-1)

    def scene_sdf(self, x: np.ndarray, t: float, dynamic: Optional[bool] = None) -> np.ndarray:
        """
        Exact signed distance to the union of primitives at frame `t`.

        :param x: np.ndarray, World points of shape (..., 3).
        :param t: float, The frame.
        :param dynamic: Optional[bool], Restrict to dynamic (True) or static (False)
            primitives; None uses all of them.
        :return: np.ndarray

        """

        parts = self.sdf_parts(x, t)

        if dynamic is not None:
            keep = self._dynamic if dynamic else ~self._dynamic

            if not keep.any():
                return np.full(parts.shape[:-1], np.inf)

            parts = parts[..., keep]

        return np.min(parts, axis=-1)

    def ego_sdf(self, points: np.ndarray, t: float, dynamic: Optional[bool] = None) -> np.ndarray:
        """
        Scene SDF at points given in the ego coordinates of frame `t`.

        :param points: np.ndarray, Ego points of shape (..., 3).
        :param t: float, The frame.
        :param dynamic: Optional[bool], See `scene_sdf`.
        :return: np.ndarray

        """

        return self.scene_sdf(self.to_world(points, t), t, dynamic=dynamic)

    def trace(self, origins: np.ndarray, dirs: np.ndarray, t: float, far: np.ndarray) -> np.ndarray:
        """
        Sphere-trace world rays against the frame-`t` scene.

        :param origins: np.ndarray, World origins (N, 3).
        :param dirs: np.ndarray, Unit world directions (N, 3).
        :param t: float, The frame.
        :param far: np.ndarray, Largest admissible range per ray (N,).
        :return: np.ndarray, Ranges, NaN on misses.

        """

        depth = np.zeros(len(origins))
        hit = np.zeros(len(origins), dtype=bool)
        active = far >= 0.0

        start = self.scene_sdf(origins[active], t)
        inside = np.flatnonzero(active)[start < -TOLERANCE]
        active[inside] = False

        for _ in range(MAX_STEPS):
            index = np.flatnonzero(active)

            if len(index) == 0:
                break

            d = self.scene_sdf(origins[index] + depth[index, None] * dirs[index], t)
            done = np.abs(d) < TOLERANCE
            hit[index[done]] = True
            active[index[done]] = False
            step = index[~done]
            depth[step] += d[~done]
            active[step[depth[step] > far[step]]] = False

        if active.any():
            logger.debug(f"{int(active.sum())} rays did not converge within {MAX_STEPS} steps")

        return np.where(hit & (depth <= far), depth, np.nan)

    def cast_rays(self, origins: np.ndarray, dirs: np.ndarray, t: float) -> RayHits:
        """
        Cast rays given in the ego coordinates of frame `t`.

        Ranges are bounded by the exit distance of the frame-`t` volume.

        :param origins: np.ndarray, Ego origins (N, 3).
        :param dirs: np.ndarray, Unit ego directions (N, 3).
        :param t: float, The frame.
        :return: RayHits

        """

        origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
        dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
        _, far = volume_bounds(self.spec, origins, dirs)
        ranges = self.trace(self.to_world(origins, t), self.rotate_to_world(dirs, t), t, far)

        hits = ~np.isnan(ranges)
        primitive = np.full(len(origins), -1, dtype=np.int64)
        colors = np.zeros((len(origins), 3))
        dynamic = np.zeros(len(origins), dtype=bool)

        if hits.any():
            points = self.to_world(origins[hits] + ranges[hits, None] * dirs[hits], t)
            primitive[hits] = np.argmin(self.sdf_parts(points, t), axis=-1)
            colors[hits] = self._albedo[primitive[hits]]
            dynamic[hits] = self._dynamic[primitive[hits]]

        return RayHits(ranges=ranges, colors=colors, dynamic=dynamic, primitive=primitive)

    def cast_ray(self, origin: np.ndarray, direction: np.ndarray, t: float) -> Tuple[Optional[float], np.ndarray, bool]:
        """
        Cast a single ray.

        :param origin: np.ndarray, Ego origin.
        :param direction: np.ndarray, Unit ego direction.
        :param t: float, The frame.
        :return: Tuple[Optional[float], np.ndarray, bool], Range (None on a miss), color
            and whether the hit primitive is dynamic.

        """

        hits = self.cast_rays(origin, direction, t)
        value = float(hits.ranges[0])
        return (None if np.isnan(value) else value), hits.colors[0], bool(hits.dynamic[0])

    def mover(self, x: np.ndarray, t: float) -> np.ndarray:
        """
        Index of the dynamic primitive containing each world point, -1 if none.

        Points on a surface count as inside.

        :param x: np.ndarray, World points (..., 3).
        :param t: float, The frame.
        :return: np.ndarray

        """

        x = np.asarray(x, dtype=np.float64)
        index = np.full(x.shape[:-1], -1, dtype=np.int64)

        for i in np.flatnonzero(self._dynamic):
            index = np.where((index < 0) & (self.primitive_sdf(i, x, t) <= TOLERANCE), i, index)

        return index

    def gt_flow(self, x: np.ndarray, t: float, direction: FlowDirection) -> np.ndarray:
        """
        Ground-truth displacement over one frame at world points.

        :param x: np.ndarray, World points (..., 3).
        :param t: float, The frame.
        :param direction: FlowDirection, Backward (to t-1) or forward (to t+1).
        :return: np.ndarray, Displacements (m per frame), zero outside movers.

        """

        index = self.mover(x, t)
        sign = 1.0 if FlowDirection(direction) == FlowDirection.FORWARD else -1.0
        flow = np.where((index >= 0)[..., None], self._velocities[np.maximum(index, 0)], 0.0)
        return sign * flow

    def ego_flow(self, points: np.ndarray, t: float, direction: FlowDirection) -> np.ndarray:
        """
        Ground-truth flow at ego points of frame `t`, expressed in frame-`t` ego axes.

        :param points: np.ndarray, Ego points (..., 3).
        :param t: float, The frame.
        :param direction: FlowDirection, The direction.
        :return: np.ndarray

        """

        return self.rotate_to_ego(self.gt_flow(self.to_world(points, t), t, direction), t)

    def velocity(self, x: np.ndarray, t: float) -> np.ndarray:
        """
        Ground-truth velocity (m/s, world axes).

        :param x: np.ndarray, World points (..., 3).
        :param t: float, The frame.
        :return: np.ndarray

        """

        return self.gt_flow(x, t, FlowDirection.FORWARD) / self.frame_dt

    def primitive_velocity(self, index: np.ndarray) -> np.ndarray:
        """
        Velocity (m/s, world axes) of primitives by index; zero for -1.

        :param index: np.ndarray, Primitive indices.
        :return: np.ndarray

        """

        index = np.asarray(index)
        return np.where((index >= 0)[..., None], self._velocities[np.maximum(index, 0)], 0.0) / self.frame_dt

    def sdf_grid(self, t: float, dynamic: Optional[bool] = None, spec: Optional[GridSpec] = None) -> np.ndarray:
        """
        Exact SDF at the cell centers of the frame-`t` volume.

        :param t: float, The frame.
        :param dynamic: Optional[bool], See `scene_sdf`.
        :param spec: Optional[GridSpec], The volume (defaults to the scene grid).
        :return: np.ndarray, Shape (X, Y, Z).

        """

        spec = spec or self.spec
        return self.ego_sdf(spec.centers(), t, dynamic=dynamic)

    def sample_dynamic_points(self, t: float, count: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draw points inside movers (ego coordinates of frame `t`, inside the volume).

        :param t: float, The frame.
        :param count: int, Number of points wanted.
        :param rng: np.random.Generator, The random source.
        :return: np.ndarray, Shape (n, 3) with n <= count.

        """

        spec = self.spec
        movers = np.flatnonzero(self._dynamic)

        if len(movers) == 0 or count <= 0:
            return np.zeros((0, 3))

        boxes = []

        for i in movers:
            primitive = self.primitives[i]
            half = np.full(3, primitive.radius) if primitive.shape == Shape.SPHERE else np.asarray(primitive.half_extents)
            boxes.append((self.centers(t)[i] - half, self.centers(t)[i] + half))

        points = []

        for _ in range(8):
            choice = rng.integers(0, len(boxes), size=count)
            lower = np.array([boxes[c][0] for c in choice])
            upper = np.array([boxes[c][1] for c in choice])
            world = lower + rng.random((count, 3)) * (upper - lower)
            ego = self.to_ego(world, t)
            keep = (self.mover(world, t) >= 0) & np.all((ego > spec.lower) & (ego < spec.upper), axis=-1)
            points.append(ego[keep])

            if sum(len(p) for p in points) >= count:
                break

        return np.concatenate(points, axis=0)[:count]

    def render_masks(
            self,
            camera: PinholeCamera,
            t: float,
            confidence: float,
            noise: float = 0.0,
            rng: Optional[np.random.Generator] = None) -> List[Tuple[np.ndarray, float]]:
        """
        Render one instance mask per visible mover, emulating a segmentation model.

        :param camera: PinholeCamera, The camera.
        :param t: float, The frame.
        :param confidence: float, Score attached to every mask.
        :param noise: float, Probability of flipping each mask pixel.
        :param rng: Optional[np.random.Generator], Random source for the flips.
        :return: List[Tuple[np.ndarray, float]], Boolean (H, W) masks with scores.

        """

        from occflow.rays import camera_rays

        origins, dirs, _ = camera_rays(camera)
        hits = self.cast_rays(origins, dirs, t)
        index = hits.primitive.reshape(camera.height, camera.width)
        masks = []

        for i in np.flatnonzero(self._dynamic):
            mask = index == i

            if noise > 0 and rng is not None:
                mask = mask ^ (rng.random(mask.shape) < noise)

            if mask.any():
                masks.append((mask, float(confidence)))

        return masks
