import abc
import math
from typing import List, Optional, Dict, Any, Tuple
import numpy as np
from occflow.enums import Shape, Ablation, LabelSource
from occflow.models.utilities import Formatter


class JSONModel(abc.ABC):
    """
    JSON Model Class

    Abstract class providing methods for converting objects to dict and JSON-safe dicts.

    """

    def to_dict(self) -> Dict:
        """
        Convert the object to a dict.

        :return: Dict

        """

        data = {}
        prefix = ''.join(['_', self.__class__.__name__, '__'])

        for key, value in vars(self).items():
            if not key.startswith(prefix):
                if isinstance(value, list):
                    value = [item.to_dict() if hasattr(item, 'to_dict') else item for item in value]
                elif hasattr(value, 'to_dict'):
                    value = value.to_dict()

                data[key.lstrip("_")] = value

        return data

    def to_json(self) -> Dict:
        """
        Convert the object to JSON-safe dict.

        :return: Dict

        """

        return Formatter.jsonify(data=self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict) -> Any:
        """
        Convert an object from the provided data.

        Keys without a matching attribute are ignored; nested models are handled by the
        deserializers.

        :param data: Dict, The data to use for object construction.
        :return: Any

        """

        instance = cls()

        for key, value in data.items():
            if hasattr(instance, key):
                setattr(instance, key, value)

        return instance


class GridSpec(JSONModel):
    """
    Grid Spec Model Class

    Axis-aligned voxel volume in ego coordinates. Values live at cell centers,
    `origin + (index + 0.5) * resolution`.

    Attributes:
        origin (`List[float]`): Lower corner of the volume (m).
        extent (`List[float]`): Size of the volume along each axis (m).
        resolution (`float`): Voxel edge length (m).

    """

    def __init__(
            self,
            origin: Optional[List[float]] = None,
            extent: Optional[List[float]] = None,
            resolution: Optional[float] = 0.2) -> None:
        """
        Grid Spec Constructor

        :param origin: Optional[List[float]], Lower corner of the volume (m).
        :param extent: Optional[List[float]], Size of the volume (m).
        :param resolution: Optional[float], Voxel edge length (m).
        :return: None

        """

        self.origin = origin if origin is not None else [-6.4, -6.4, -1.0]
        self.extent = extent if extent is not None else [12.8, 12.8, 6.4]
        self.resolution = resolution

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, GridSpec):
            return False

        return np.allclose(self.origin, other.origin) \
            and np.allclose(self.extent, other.extent) \
            and math.isclose(self.resolution, other.resolution)

    @property
    def origin(self) -> List[float]:
        """
        Get the lower corner of the volume.

        :return: List[float]

        """

        return self._origin

    @origin.setter
    def origin(self, value: List[float]) -> None:
        self._origin = [float(v) for v in value]

    @property
    def extent(self) -> List[float]:
        """
        Get the size of the volume.

        :return: List[float]

        """

        return self._extent

    @extent.setter
    def extent(self, value: List[float]) -> None:
        self._extent = [float(v) for v in value]

    @property
    def resolution(self) -> float:
        """
        Get the voxel edge length.

        :return: float

        """

        return self._resolution

    @resolution.setter
    def resolution(self, value: float) -> None:
        self._resolution = float(value)

    @property
    def dims(self) -> Tuple[int, int, int]:
        """
        Get the number of cells along each axis.

        :return: Tuple[int, int, int]

        :raises: ValueError

        """

        if not (self.resolution > 0):
            raise ValueError(f"grid resolution must be positive, got {self.resolution}")

        dims = tuple(int(round(e / self.resolution)) for e in self.extent)

        if min(dims) < 2:
            raise ValueError(f"grid needs at least 2 cells per axis, got {dims}")

        return dims

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=np.float64)

    @property
    def upper(self) -> np.ndarray:
        """
        Get the upper corner of the volume (cell count times resolution past the origin).

        :return: np.ndarray

        """

        return self.lower + np.asarray(self.dims, dtype=np.float64) * self.resolution

    @property
    def count(self) -> int:
        x, y, z = self.dims
        return x * y * z

    def centers(self) -> np.ndarray:
        """
        Get the cell center coordinates as an array of shape (X, Y, Z, 3).

        :return: np.ndarray

        """

        axes = [self.origin[i] + (np.arange(d) + 0.5) * self.resolution for i, d in enumerate(self.dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


class SharpnessParams(JSONModel):
    """
    Sharpness Params Model Class

    One sharpness `a` is shared by blending, occupancy and rendering.

    Attributes:
        a (`float`): Sigmoid sharpness (1/m), learnable during training.
        tau (`float`): Blend temperature.

    """

    def __init__(self, a: Optional[float] = 10.0, tau: Optional[float] = 2.0) -> None:
        self.a = a
        self.tau = tau

    @property
    def a(self) -> float:
        return self._a

    @a.setter
    def a(self, value: float) -> None:
        if value is not None and not (value > 0):
            raise ValueError(f"sharpness must be positive, got {value}")

        self._a = value

    @property
    def tau(self) -> float:
        return self._tau

    @tau.setter
    def tau(self, value: float) -> None:
        if value is not None and not (value > 0):
            raise ValueError(f"temperature must be positive, got {value}")

        self._tau = value


class ScenePrimitive(JSONModel):
    """
    Scene Primitive Model Class

    Attributes:
        name (`str`): Name of the primitive, used in logs.
        shape (`Shape`): The analytic shape.
        center (`List[float]`): Center at frame 0 in world coordinates (m). For ground
            planes only the z-component (height) is used.
        half_extents (`List[float]`): Box half sizes (m).
        radius (`float`): Sphere radius (m).
        velocity (`List[float]`): Displacement per frame (m).
        albedo (`List[float]`): Flat RGB color in [0, 1].
        dynamic (`bool`): Whether the primitive belongs to a dynamic class.

    """

    def __init__(
            self,
            name: Optional[str] = None,
            shape: Optional[Shape] = Shape.BOX,
            center: Optional[List[float]] = None,
            half_extents: Optional[List[float]] = None,
            radius: Optional[float] = None,
            velocity: Optional[List[float]] = None,
            albedo: Optional[List[float]] = None,
            dynamic: Optional[bool] = False) -> None:
        """
        Scene Primitive Constructor

        :param name: Optional[str], Name of the primitive.
        :param shape: Optional[Shape], The analytic shape.
        :param center: Optional[List[float]], Center at frame 0 (m).
        :param half_extents: Optional[List[float]], Box half sizes (m).
        :param radius: Optional[float], Sphere radius (m).
        :param velocity: Optional[List[float]], Displacement per frame (m).
        :param albedo: Optional[List[float]], Flat RGB color.
        :param dynamic: Optional[bool], Whether the primitive is dynamic.
        :return: None

        """

        self.name = name
        self.shape = shape
        self.center = center if center is not None else [0.0, 0.0, 0.0]
        self.half_extents = half_extents
        self.radius = radius
        self.velocity = velocity if velocity is not None else [0.0, 0.0, 0.0]
        self.albedo = albedo if albedo is not None else [0.5, 0.5, 0.5]
        self.dynamic = dynamic

    def check(self) -> None:
        """
        Check the primitive invariants.

        :return: None

        :raises: ValueError

        """

        if self.shape == Shape.BOX and (self.half_extents is None or min(self.half_extents) <= 0):
            raise ValueError(f"box `{self.name}` needs positive half extents")
        elif self.shape == Shape.SPHERE and (self.radius is None or self.radius <= 0):
            raise ValueError(f"sphere `{self.name}` needs a positive radius")

        if (not self.dynamic) and any(v != 0 for v in self.velocity):
            raise ValueError(f"static primitive `{self.name}` cannot move")

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        self._name = value

    @property
    def shape(self) -> Shape:
        """
        Get the analytic shape of the primitive.

        :return: Shape

        """

        return self._shape

    @shape.setter
    def shape(self, value: Any) -> None:
        self._shape = Shape(value) if value is not None else None

    @property
    def center(self) -> List[float]:
        return self._center

    @center.setter
    def center(self, value: List[float]) -> None:
        self._center = [float(v) for v in value]

    @property
    def half_extents(self) -> Optional[List[float]]:
        return self._half_extents

    @half_extents.setter
    def half_extents(self, value: Optional[List[float]]) -> None:
        self._half_extents = [float(v) for v in value] if value is not None else None

    @property
    def radius(self) -> Optional[float]:
        return self._radius

    @radius.setter
    def radius(self, value: Optional[float]) -> None:
        self._radius = float(value) if value is not None else None

    @property
    def velocity(self) -> List[float]:
        """
        Get the displacement per frame (m).

        :return: List[float]

        """

        return self._velocity

    @velocity.setter
    def velocity(self, value: List[float]) -> None:
        self._velocity = [float(v) for v in value]

    @property
    def albedo(self) -> List[float]:
        return self._albedo

    @albedo.setter
    def albedo(self, value: List[float]) -> None:
        self._albedo = [float(v) for v in value]

    @property
    def dynamic(self) -> bool:
        return self._dynamic

    @dynamic.setter
    def dynamic(self, value: bool) -> None:
        self._dynamic = bool(value)


def rotation_z(angle: float) -> np.ndarray:
    """
    Rotation matrix about the z axis.

    :param angle: float, Angle in radians.
    :return: np.ndarray

    """

    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


class PinholeCamera(JSONModel):
    """
    Pinhole Camera Model Class

    Camera axes follow the image convention (x right, y down, z forward). The camera is
    mounted on the ego platform; at zero yaw and pitch it looks along ego +x.

    Attributes:
        name (`str`): Name of the camera.
        width (`int`): Image width (pixels).
        height (`int`): Image height (pixels).
        fov (`float`): Horizontal field of view (degrees).
        position (`List[float]`): Optical center in ego coordinates (m).
        yaw (`float`): Rotation about ego z (degrees, counter-clockwise).
        pitch (`float`): Downward tilt (degrees).

    """

    def __init__(
            self,
            name: Optional[str] = "front",
            width: Optional[int] = 48,
            height: Optional[int] = 32,
            fov: Optional[float] = 90.0,
            position: Optional[List[float]] = None,
            yaw: Optional[float] = 0.0,
            pitch: Optional[float] = 10.0) -> None:
        self.name = name
        self.width = width
        self.height = height
        self.fov = fov
        self.position = position if position is not None else [0.0, 0.0, 1.2]
        self.yaw = yaw
        self.pitch = pitch

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        self._name = value

    @property
    def width(self) -> int:
        return self._width

    @width.setter
    def width(self, value: int) -> None:
        self._width = int(value)

    @property
    def height(self) -> int:
        return self._height

    @height.setter
    def height(self, value: int) -> None:
        self._height = int(value)

    @property
    def fov(self) -> float:
        return self._fov

    @fov.setter
    def fov(self, value: float) -> None:
        self._fov = float(value)

    @property
    def position(self) -> List[float]:
        return self._position

    @position.setter
    def position(self, value: List[float]) -> None:
        self._position = [float(v) for v in value]

    @property
    def yaw(self) -> float:
        return self._yaw

    @yaw.setter
    def yaw(self, value: float) -> None:
        self._yaw = float(value)

    @property
    def pitch(self) -> float:
        return self._pitch

    @pitch.setter
    def pitch(self, value: float) -> None:
        self._pitch = float(value)

    @property
    def focal(self) -> float:
        """
        Get the focal length in pixels (square pixels).

        :return: float

        """

        return 0.5 * self.width / math.tan(math.radians(self.fov) / 2.0)

    def intrinsics(self) -> np.ndarray:
        f = self.focal
        return np.array([[f, 0.0, self.width / 2.0], [0.0, f, self.height / 2.0], [0.0, 0.0, 1.0]])

    def rotation(self) -> np.ndarray:
        """
        Get the camera-to-ego rotation.

        :return: np.ndarray

        """

        base = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
        return rotation_z(math.radians(self.yaw)) @ rotation_y(math.radians(self.pitch)) @ base


class LidarScan(JSONModel):
    """
    Lidar Scan Model Class

    Attributes:
        position (`List[float]`): Sensor origin in ego coordinates (m).
        azimuths (`int`): Number of azimuth steps over 360 degrees.
        channels (`int`): Number of elevation rings.
        elevation (`List[float]`): Lowest and highest elevation (degrees).

    """

    def __init__(
            self,
            position: Optional[List[float]] = None,
            azimuths: Optional[int] = 180,
            channels: Optional[int] = 16,
            elevation: Optional[List[float]] = None) -> None:
        self.position = position if position is not None else [0.0, 0.0, 1.5]
        self.azimuths = azimuths
        self.channels = channels
        self.elevation = elevation if elevation is not None else [-30.0, 5.0]

    @property
    def position(self) -> List[float]:
        return self._position

    @position.setter
    def position(self, value: List[float]) -> None:
        self._position = [float(v) for v in value]

    @property
    def azimuths(self) -> int:
        return self._azimuths

    @azimuths.setter
    def azimuths(self, value: int) -> None:
        self._azimuths = int(value)

    @property
    def channels(self) -> int:
        return self._channels

    @channels.setter
    def channels(self, value: int) -> None:
        self._channels = int(value)

    @property
    def elevation(self) -> List[float]:
        return self._elevation

    @elevation.setter
    def elevation(self, value: List[float]) -> None:
        self._elevation = [float(v) for v in value]


class EgoTrajectory(JSONModel):
    """
    Ego Trajectory Model Class

    Constant-velocity motion of the sensor platform with an optional constant yaw rate.
    The pose of frame `t` maps ego coordinates to world coordinates.

    Attributes:
        start (`List[float]`): World position at frame 0 (m).
        heading (`float`): Yaw at frame 0 (degrees).
        velocity (`List[float]`): Translation per frame in world coordinates (m).
        yaw_rate (`float`): Yaw change per frame (degrees).

    """

    def __init__(
            self,
            start: Optional[List[float]] = None,
            heading: Optional[float] = 0.0,
            velocity: Optional[List[float]] = None,
            yaw_rate: Optional[float] = 0.0) -> None:
        self.start = start if start is not None else [0.0, 0.0, 0.0]
        self.heading = heading
        self.velocity = velocity if velocity is not None else [0.0, 0.0, 0.0]
        self.yaw_rate = yaw_rate

    @property
    def start(self) -> List[float]:
        return self._start

    @start.setter
    def start(self, value: List[float]) -> None:
        self._start = [float(v) for v in value]

    @property
    def heading(self) -> float:
        return self._heading

    @heading.setter
    def heading(self, value: float) -> None:
        self._heading = float(value)

    @property
    def velocity(self) -> List[float]:
        return self._velocity

    @velocity.setter
    def velocity(self, value: List[float]) -> None:
        self._velocity = [float(v) for v in value]

    @property
    def yaw_rate(self) -> float:
        return self._yaw_rate

    @yaw_rate.setter
    def yaw_rate(self, value: float) -> None:
        self._yaw_rate = float(value)

    def pose(self, t: float) -> np.ndarray:
        """
        Get the 4x4 ego-to-world transform of frame `t`.

        :param t: float, Frame index (fractional values interpolate).
        :return: np.ndarray

        """

        pose = np.eye(4)
        pose[:3, :3] = rotation_z(math.radians(self.heading + self.yaw_rate * t))
        pose[:3, 3] = np.asarray(self.start) + t * np.asarray(self.velocity)
        return pose


class SceneDescription(JSONModel):
    """
    Scene Description Model Class

    Everything needed to regenerate a synthetic sequence bit-identically.

    Attributes:
        name (`str`): Name of the scene.
        preset (`str`): The preset the defaults were drawn from.
        grid (`GridSpec`): The representation volume (ego coordinates).
        primitives (`List[ScenePrimitive]`): Scene content in world coordinates.
        cameras (`List[PinholeCamera]`): Cameras mounted on the platform.
        lidar (`LidarScan`): LiDAR mounted on the platform (None disables it).
        ego (`EgoTrajectory`): Platform motion.
        frames (`int`): Number of frames in the sequence.
        frame_dt (`float`): Seconds per frame.
        seed (`int`): Seed for label noise and any randomized generation.

    """

    def __init__(
            self,
            name: Optional[str] = "desk",
            preset: Optional[str] = "desk",
            grid: Optional[GridSpec] = None,
            primitives: Optional[List[ScenePrimitive]] = None,
            cameras: Optional[List[PinholeCamera]] = None,
            lidar: Optional[LidarScan] = None,
            ego: Optional[EgoTrajectory] = None,
            frames: Optional[int] = 6,
            frame_dt: Optional[float] = 0.1,
            seed: Optional[int] = 0) -> None:
        """
        Scene Description Constructor

        :param name: Optional[str], Name of the scene.
        :param preset: Optional[str], The preset the defaults were drawn from.
        :param grid: Optional[GridSpec], The representation volume.
        :param primitives: Optional[List[ScenePrimitive]], Scene content.
        :param cameras: Optional[List[PinholeCamera]], Cameras on the platform.
        :param lidar: Optional[LidarScan], LiDAR on the platform.
        :param ego: Optional[EgoTrajectory], Platform motion.
        :param frames: Optional[int], Number of frames.
        :param frame_dt: Optional[float], Seconds per frame.
        :param seed: Optional[int], Generation seed.
        :return: None

        """

        self.name = name
        self.preset = preset
        self.grid = grid if grid is not None else GridSpec()
        self.primitives = primitives if primitives is not None else []
        self.cameras = cameras if cameras is not None else []
        self.lidar = lidar
        self.ego = ego if ego is not None else EgoTrajectory()
        self.frames = frames
        self.frame_dt = frame_dt
        self.seed = seed

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        self._name = value

    @property
    def preset(self) -> str:
        return self._preset

    @preset.setter
    def preset(self, value: str) -> None:
        self._preset = value

    @property
    def grid(self) -> GridSpec:
        return self._grid

    @grid.setter
    def grid(self, value: GridSpec) -> None:
        self._grid = value

    @property
    def primitives(self) -> List[ScenePrimitive]:
        return self._primitives

    @primitives.setter
    def primitives(self, value: List[ScenePrimitive]) -> None:
        self._primitives = value

    @property
    def cameras(self) -> List[PinholeCamera]:
        return self._cameras

    @cameras.setter
    def cameras(self, value: List[PinholeCamera]) -> None:
        self._cameras = value

    @property
    def lidar(self) -> Optional[LidarScan]:
        return self._lidar

    @lidar.setter
    def lidar(self, value: Optional[LidarScan]) -> None:
        self._lidar = value

    @property
    def ego(self) -> EgoTrajectory:
        return self._ego

    @ego.setter
    def ego(self, value: EgoTrajectory) -> None:
        self._ego = value

    @property
    def frames(self) -> int:
        return self._frames

    @frames.setter
    def frames(self, value: int) -> None:
        self._frames = int(value)

    @property
    def frame_dt(self) -> float:
        return self._frame_dt

    @frame_dt.setter
    def frame_dt(self, value: float) -> None:
        self._frame_dt = float(value)

    @property
    def seed(self) -> int:
        return self._seed

    @seed.setter
    def seed(self, value: int) -> None:
        self._seed = int(value)


class LossWeights(JSONModel):
    """
    Loss Weights Model Class

    Attributes:
        lambda_sim (`float`): Similarity-flow supervision.
        lambda_dep (`float`): Reprojection (depth) photometric loss.
        lambda_rgb (`float`): Rendered color loss.
        lambda_r (`float`): LiDAR range loss.
        lambda_den (`float`): Dynamic endpoint density loss.
        lambda_e_s (`float`): Static eikonal loss.
        lambda_e_d (`float`): Dynamic eikonal loss.
        lambda_H_s (`float`): Static hessian loss.
        lambda_H_d (`float`): Dynamic hessian loss.
        lambda_H_f (`float`): Flow hessian loss.
        lambda_s_d (`float`): Dynamic sparsity loss.

    """

    def __init__(
            self,
            lambda_sim: Optional[float] = 5.0,
            lambda_dep: Optional[float] = 1.0,
            lambda_rgb: Optional[float] = 0.1,
            lambda_r: Optional[float] = 10.0,
            lambda_den: Optional[float] = 0.01,
            lambda_e_s: Optional[float] = 0.1,
            lambda_e_d: Optional[float] = 0.1,
            lambda_H_s: Optional[float] = 0.1,
            lambda_H_d: Optional[float] = 0.1,
            lambda_H_f: Optional[float] = 0.02,
            lambda_s_d: Optional[float] = 0.01) -> None:
        self.lambda_sim = lambda_sim
        self.lambda_dep = lambda_dep
        self.lambda_rgb = lambda_rgb
        self.lambda_r = lambda_r
        self.lambda_den = lambda_den
        self.lambda_e_s = lambda_e_s
        self.lambda_e_d = lambda_e_d
        self.lambda_H_s = lambda_H_s
        self.lambda_H_d = lambda_H_d
        self.lambda_H_f = lambda_H_f
        self.lambda_s_d = lambda_s_d

    def __setattr__(self, key: str, value: Any) -> None:
        if key.startswith("lambda_") and (value is not None) and (value < 0):
            raise ValueError(f"loss weight `{key}` must be non-negative, got {value}")

        super().__setattr__(key, None if value is None else float(value))


class AggParams(JSONModel):
    """
    Aggregation Params Model Class

    Attributes:
        lambda_ag (`float`): Aggregation ratio in [0, 1].
        sharpness (`SharpnessParams`): Shared sharpness and temperature.
        static (`bool`): Whether the static field is aggregated.
        dynamic (`bool`): Whether the dynamic field is aggregated.
        stop_gradient_neighbors (`bool`): Detach neighbor-frame samples.

    """

    def __init__(
            self,
            lambda_ag: Optional[float] = 0.5,
            sharpness: Optional[SharpnessParams] = None,
            static: Optional[bool] = True,
            dynamic: Optional[bool] = True,
            stop_gradient_neighbors: Optional[bool] = False) -> None:
        self.lambda_ag = lambda_ag
        self.sharpness = sharpness if sharpness is not None else SharpnessParams()
        self.static = static
        self.dynamic = dynamic
        self.stop_gradient_neighbors = stop_gradient_neighbors

    @property
    def lambda_ag(self) -> float:
        """
        Get the aggregation ratio.

        :return: float

        """

        return self._lambda_ag

    @lambda_ag.setter
    def lambda_ag(self, value: float) -> None:
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"aggregation ratio must lie in [0, 1], got {value}")

        self._lambda_ag = float(value)

    @property
    def sharpness(self) -> SharpnessParams:
        return self._sharpness

    @sharpness.setter
    def sharpness(self, value: SharpnessParams) -> None:
        self._sharpness = value

    @property
    def static(self) -> bool:
        return self._static

    @static.setter
    def static(self, value: bool) -> None:
        self._static = bool(value)

    @property
    def dynamic(self) -> bool:
        return self._dynamic

    @dynamic.setter
    def dynamic(self, value: bool) -> None:
        self._dynamic = bool(value)

    @property
    def stop_gradient_neighbors(self) -> bool:
        return self._stop_gradient_neighbors

    @stop_gradient_neighbors.setter
    def stop_gradient_neighbors(self, value: bool) -> None:
        self._stop_gradient_neighbors = bool(value)


class SimFlowParams(JSONModel):
    """
    Similarity Flow Params Model Class

    Attributes:
        window (`int`): Odd search window side N (cells).
        tau_s (`float`): Consistency decay rate.
        cell (`float`): BEV cell size (m).
        lambda_sim (`float`): Loss weight (mirrors `LossWeights.lambda_sim`).
        interval (`int`): Iterations between pseudo-label refreshes.

    """

    def __init__(
            self,
            window: Optional[int] = 35,
            tau_s: Optional[float] = 0.75,
            cell: Optional[float] = 0.2,
            lambda_sim: Optional[float] = 5.0,
            interval: Optional[int] = 5) -> None:
        self.window = window
        self.tau_s = tau_s
        self.cell = cell
        self.lambda_sim = lambda_sim
        self.interval = interval

    @property
    def window(self) -> int:
        return self._window

    @window.setter
    def window(self, value: int) -> None:
        if (value < 3) or (value % 2 == 0):
            raise ValueError(f"similarity window must be odd and at least 3, got {value}")

        self._window = int(value)

    @property
    def tau_s(self) -> float:
        return self._tau_s

    @tau_s.setter
    def tau_s(self, value: float) -> None:
        if not (value > 0):
            raise ValueError(f"consistency decay must be positive, got {value}")

        self._tau_s = float(value)

    @property
    def cell(self) -> float:
        return self._cell

    @cell.setter
    def cell(self, value: float) -> None:
        self._cell = float(value)

    @property
    def lambda_sim(self) -> float:
        return self._lambda_sim

    @lambda_sim.setter
    def lambda_sim(self, value: float) -> None:
        self._lambda_sim = float(value)

    @property
    def interval(self) -> int:
        return self._interval

    @interval.setter
    def interval(self, value: int) -> None:
        self._interval = max(1, int(value))

    @property
    def radius(self) -> int:
        return self.window // 2


class LabelingParams(JSONModel):
    """
    Labeling Params Model Class

    Attributes:
        source (`LabelSource`): Where ray labels come from.
        noise (`float`): Probability of flipping an oracle label (oracle source) or a mask
            pixel (mask source).
        dynamic_confidence (`float`): Mask score at or above which endpoints are
            candidate dynamic.
        static_confidence (`float`): Mask score below which masks are ignored for the
            static decision.
        mask_confidence (`float`): Score given to generated masks.

    """

    def __init__(
            self,
            source: Optional[LabelSource] = LabelSource.MASKS,
            noise: Optional[float] = 0.0,
            dynamic_confidence: Optional[float] = 0.5,
            static_confidence: Optional[float] = 0.3,
            mask_confidence: Optional[float] = 0.9) -> None:
        self.source = source
        self.noise = noise
        self.dynamic_confidence = dynamic_confidence
        self.static_confidence = static_confidence
        self.mask_confidence = mask_confidence

    @property
    def source(self) -> LabelSource:
        return self._source

    @source.setter
    def source(self, value: Any) -> None:
        self._source = LabelSource(value)

    @property
    def noise(self) -> float:
        return self._noise

    @noise.setter
    def noise(self, value: float) -> None:
        self._noise = float(value)

    @property
    def dynamic_confidence(self) -> float:
        return self._dynamic_confidence

    @dynamic_confidence.setter
    def dynamic_confidence(self, value: float) -> None:
        self._dynamic_confidence = float(value)

    @property
    def static_confidence(self) -> float:
        return self._static_confidence

    @static_confidence.setter
    def static_confidence(self, value: float) -> None:
        self._static_confidence = float(value)

    @property
    def mask_confidence(self) -> float:
        return self._mask_confidence

    @mask_confidence.setter
    def mask_confidence(self, value: float) -> None:
        self._mask_confidence = float(value)


class Schedule(JSONModel):
    """
    Schedule Model Class

    Optimization schedule and per-iteration sampling budget.

    Attributes:
        iterations (`int`): Number of optimizer steps.
        lr (`float`): Learning rate of the field grids.
        lr_log_a (`float`): Learning rate of log(a).
        lidar_rays (`int`): LiDAR rays per iteration (half static, half dynamic).
        camera_patches (`int`): Camera patches per iteration.
        patch_size (`int`): Side of a camera patch (pixels).
        reg_points (`int`): Uniform regularization points per iteration.
        samples (`int`): Samples per training ray.
        window_k (`int`): Static multi-frame window K (frames).
        normalize_depth (`bool`): Divide rendered depth by the weight sum in the range loss.
        divergence (`float`): Total loss above which training aborts.
        static_only (`bool`): Train the static field only (dynamic field frozen empty).
        log_every (`int`): Iterations between progress log lines.

    """

    def __init__(
            self,
            iterations: Optional[int] = 2000,
            lr: Optional[float] = 1e-2,
            lr_log_a: Optional[float] = 1e-3,
            lidar_rays: Optional[int] = 512,
            camera_patches: Optional[int] = 2,
            patch_size: Optional[int] = 8,
            reg_points: Optional[int] = 1024,
            samples: Optional[int] = 96,
            window_k: Optional[int] = 20,
            normalize_depth: Optional[bool] = False,
            divergence: Optional[float] = 1e6,
            static_only: Optional[bool] = False,
            log_every: Optional[int] = 100) -> None:
        self.iterations = iterations
        self.lr = lr
        self.lr_log_a = lr_log_a
        self.lidar_rays = lidar_rays
        self.camera_patches = camera_patches
        self.patch_size = patch_size
        self.reg_points = reg_points
        self.samples = samples
        self.window_k = window_k
        self.normalize_depth = normalize_depth
        self.divergence = divergence
        self.static_only = static_only
        self.log_every = log_every

    @property
    def iterations(self) -> int:
        return self._iterations

    @iterations.setter
    def iterations(self, value: int) -> None:
        self._iterations = int(value)

    @property
    def lr(self) -> float:
        return self._lr

    @lr.setter
    def lr(self, value: float) -> None:
        if value < 0:
            raise ValueError(f"learning rate must be non-negative, got {value}")

        self._lr = float(value)

    @property
    def lr_log_a(self) -> float:
        return self._lr_log_a

    @lr_log_a.setter
    def lr_log_a(self, value: float) -> None:
        self._lr_log_a = float(value)

    @property
    def lidar_rays(self) -> int:
        return self._lidar_rays

    @lidar_rays.setter
    def lidar_rays(self, value: int) -> None:
        self._lidar_rays = int(value)

    @property
    def camera_patches(self) -> int:
        return self._camera_patches

    @camera_patches.setter
    def camera_patches(self, value: int) -> None:
        self._camera_patches = int(value)

    @property
    def patch_size(self) -> int:
        return self._patch_size

    @patch_size.setter
    def patch_size(self, value: int) -> None:
        self._patch_size = int(value)

    @property
    def reg_points(self) -> int:
        return self._reg_points

    @reg_points.setter
    def reg_points(self, value: int) -> None:
        self._reg_points = int(value)

    @property
    def samples(self) -> int:
        return self._samples

    @samples.setter
    def samples(self, value: int) -> None:
        if value < 2:
            raise ValueError(f"rays need at least 2 samples, got {value}")

        self._samples = int(value)

    @property
    def window_k(self) -> int:
        return self._window_k

    @window_k.setter
    def window_k(self, value: int) -> None:
        self._window_k = int(value)

    @property
    def normalize_depth(self) -> bool:
        return self._normalize_depth

    @normalize_depth.setter
    def normalize_depth(self, value: bool) -> None:
        self._normalize_depth = bool(value)

    @property
    def divergence(self) -> float:
        return self._divergence

    @divergence.setter
    def divergence(self, value: float) -> None:
        self._divergence = float(value)

    @property
    def static_only(self) -> bool:
        return self._static_only

    @static_only.setter
    def static_only(self, value: bool) -> None:
        self._static_only = bool(value)

    @property
    def log_every(self) -> int:
        return self._log_every

    @log_every.setter
    def log_every(self, value: int) -> None:
        self._log_every = max(1, int(value))


class EvalConfig(JSONModel):
    """
    Evaluation Config Model Class

    Attributes:
        thresholds (`List[float]`): RayIoU depth-error thresholds (m).
        mave_threshold (`float`): Threshold whose true positives feed mAVE (m).
        future_poses (`int`): Number of future ego poses rays originate from.
        rays_per_pose (`int`): Query rays cast from each pose.
        samples (`int`): Samples per evaluation ray.
        frames (`List[int]`): Frames to evaluate (empty means every interior frame).
        flow_points (`int`): Points sampled inside movers for EPE3D.

    """

    def __init__(
            self,
            thresholds: Optional[List[float]] = None,
            mave_threshold: Optional[float] = 2.0,
            future_poses: Optional[int] = 8,
            rays_per_pose: Optional[int] = 1024,
            samples: Optional[int] = 256,
            frames: Optional[List[int]] = None,
            flow_points: Optional[int] = 2048) -> None:
        self.thresholds = thresholds if thresholds is not None else [0.25, 0.5, 1.0]
        self.mave_threshold = mave_threshold
        self.future_poses = future_poses
        self.rays_per_pose = rays_per_pose
        self.samples = samples
        self.frames = frames if frames is not None else []
        self.flow_points = flow_points

    @property
    def thresholds(self) -> List[float]:
        return self._thresholds

    @thresholds.setter
    def thresholds(self, value: List[float]) -> None:
        if any(v <= 0 for v in value):
            raise ValueError(f"thresholds must be positive, got {value}")

        self._thresholds = [float(v) for v in value]

    @property
    def mave_threshold(self) -> float:
        return self._mave_threshold

    @mave_threshold.setter
    def mave_threshold(self, value: float) -> None:
        self._mave_threshold = float(value)

    @property
    def future_poses(self) -> int:
        return self._future_poses

    @future_poses.setter
    def future_poses(self, value: int) -> None:
        self._future_poses = int(value)

    @property
    def rays_per_pose(self) -> int:
        return self._rays_per_pose

    @rays_per_pose.setter
    def rays_per_pose(self, value: int) -> None:
        self._rays_per_pose = int(value)

    @property
    def samples(self) -> int:
        return self._samples

    @samples.setter
    def samples(self, value: int) -> None:
        self._samples = int(value)

    @property
    def frames(self) -> List[int]:
        return self._frames

    @frames.setter
    def frames(self, value: List[int]) -> None:
        self._frames = [int(v) for v in value]

    @property
    def flow_points(self) -> int:
        return self._flow_points

    @flow_points.setter
    def flow_points(self, value: int) -> None:
        self._flow_points = int(value)


class ExperimentConfig(JSONModel):
    """
    Experiment Config Model Class

    Attributes:
        name (`str`): Name of the experiment.
        scene (`SceneDescription`): The synthetic scene.
        weights (`LossWeights`): Loss weights.
        aggregation (`AggParams`): Temporal aggregation settings.
        similarity (`SimFlowParams`): Similarity-flow settings.
        labeling (`LabelingParams`): Ray labeling settings.
        schedule (`Schedule`): Optimization schedule.
        evaluation (`EvalConfig`): Evaluation settings.
        seed (`int`): Run seed.
        output (`str`): Output directory.
        ablations (`List[Ablation]`): Enabled ablation switches.

    """

    def __init__(
            self,
            name: Optional[str] = "experiment",
            scene: Optional[SceneDescription] = None,
            weights: Optional[LossWeights] = None,
            aggregation: Optional[AggParams] = None,
            similarity: Optional[SimFlowParams] = None,
            labeling: Optional[LabelingParams] = None,
            schedule: Optional[Schedule] = None,
            evaluation: Optional[EvalConfig] = None,
            seed: Optional[int] = 0,
            output: Optional[str] = "out",
            ablations: Optional[List[Ablation]] = None) -> None:
        self.name = name
        self.scene = scene if scene is not None else SceneDescription()
        self.weights = weights if weights is not None else LossWeights()
        self.aggregation = aggregation if aggregation is not None else AggParams()
        self.similarity = similarity if similarity is not None else SimFlowParams()
        self.labeling = labeling if labeling is not None else LabelingParams()
        self.schedule = schedule if schedule is not None else Schedule()
        self.evaluation = evaluation if evaluation is not None else EvalConfig()
        self.seed = seed
        self.output = output
        self.ablations = ablations if ablations is not None else []

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        self._name = value

    @property
    def scene(self) -> SceneDescription:
        return self._scene

    @scene.setter
    def scene(self, value: SceneDescription) -> None:
        self._scene = value

    @property
    def weights(self) -> LossWeights:
        return self._weights

    @weights.setter
    def weights(self, value: LossWeights) -> None:
        self._weights = value

    @property
    def aggregation(self) -> AggParams:
        return self._aggregation

    @aggregation.setter
    def aggregation(self, value: AggParams) -> None:
        self._aggregation = value

    @property
    def similarity(self) -> SimFlowParams:
        return self._similarity

    @similarity.setter
    def similarity(self, value: SimFlowParams) -> None:
        self._similarity = value

    @property
    def labeling(self) -> LabelingParams:
        return self._labeling

    @labeling.setter
    def labeling(self, value: LabelingParams) -> None:
        self._labeling = value

    @property
    def schedule(self) -> Schedule:
        return self._schedule

    @schedule.setter
    def schedule(self, value: Schedule) -> None:
        self._schedule = value

    @property
    def evaluation(self) -> EvalConfig:
        return self._evaluation

    @evaluation.setter
    def evaluation(self, value: EvalConfig) -> None:
        self._evaluation = value

    @property
    def seed(self) -> int:
        return self._seed

    @seed.setter
    def seed(self, value: int) -> None:
        if value < 0:
            raise ValueError(f"seed must be a non-negative integer, got {value}")

        self._seed = int(value)

    @property
    def output(self) -> str:
        return self._output

    @output.setter
    def output(self, value: str) -> None:
        self._output = value

    @property
    def ablations(self) -> List[Ablation]:
        return self._ablations

    @ablations.setter
    def ablations(self, value: List[Any]) -> None:
        unique = []

        for item in value:
            item = Ablation(item)

            if item not in unique:
                unique.append(item)

        self._ablations = unique

    def has(self, ablation: Ablation) -> bool:
        return ablation in self._ablations

    @property
    def variant(self) -> str:
        """
        Get the label of the variant, e.g. `full` or `no-dyn-ta+no-sim`.

        :return: str

        """

        if len(self._ablations) == 0:
            return "full"

        return "+".join(sorted(a.value for a in self._ablations))


class MetricsReport(JSONModel):
    """
    Metrics Report Model Class

    Attributes:
        variant (`str`): Variant label (`full` or the enabled ablations).
        scene (`str`): Scene name.
        seed (`int`): Run seed.
        thresholds (`List[float]`): RayIoU thresholds (m).
        ray_iou (`List[float]`): RayIoU per threshold.
        tp (`List[int]`): True positives per threshold.
        fp (`List[int]`): False positives per threshold.
        fn (`List[int]`): False negatives per threshold.
        mave (`float`): Mean absolute velocity error (m/s).
        epe3d (`float`): Mean of forward and backward 3D end-point error (m).
        epe3d_forward (`float`): Forward flow end-point error (m).
        epe3d_backward (`float`): Backward flow end-point error (m).
        depth_error (`float`): Mean absolute depth error where both hit (m).
        depth_error_fg (`float`): The same over dynamic oracle hits (m).
        depth_outliers (`float`): Fraction of both-hit rays with a large depth error.
        final_loss (`float`): Last total training loss.

    """

    def __init__(
            self,
            variant: Optional[str] = "full",
            scene: Optional[str] = None,
            seed: Optional[int] = 0,
            thresholds: Optional[List[float]] = None,
            ray_iou: Optional[List[float]] = None,
            tp: Optional[List[int]] = None,
            fp: Optional[List[int]] = None,
            fn: Optional[List[int]] = None,
            mave: Optional[float] = float("nan"),
            epe3d: Optional[float] = float("nan"),
            epe3d_forward: Optional[float] = float("nan"),
            epe3d_backward: Optional[float] = float("nan"),
            depth_error: Optional[float] = float("nan"),
            depth_error_fg: Optional[float] = float("nan"),
            depth_outliers: Optional[float] = float("nan"),
            final_loss: Optional[float] = float("nan")) -> None:
        self.variant = variant
        self.scene = scene
        self.seed = seed
        self.thresholds = thresholds if thresholds is not None else []
        self.ray_iou = ray_iou if ray_iou is not None else []
        self.tp = tp if tp is not None else []
        self.fp = fp if fp is not None else []
        self.fn = fn if fn is not None else []
        self.mave = mave
        self.epe3d = epe3d
        self.epe3d_forward = epe3d_forward
        self.epe3d_backward = epe3d_backward
        self.depth_error = depth_error
        self.depth_error_fg = depth_error_fg
        self.depth_outliers = depth_outliers
        self.final_loss = final_loss

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, MetricsReport):
            return False

        return self.to_json() == other.to_json()

    @property
    def ray_iou_mean(self) -> float:
        """
        Get the mean RayIoU over thresholds (NaN entries are skipped).

        :return: float

        """

        values = [v for v in self.ray_iou if not math.isnan(v)]
        return float(np.mean(values)) if len(values) > 0 else float("nan")

    def iou_at(self, threshold: float) -> float:
        for t, v in zip(self.thresholds, self.ray_iou):
            if math.isclose(t, threshold):
                return v

        raise KeyError(f"no RayIoU at threshold {threshold}")


class LossRecord(JSONModel):
    """
    Loss Record Model Class

    Unweighted loss terms of one iteration and the weighted total.

    Attributes:
        iteration (`int`): The iteration.
        terms (`Dict[str, float]`): Unweighted term values keyed by term name.
        total (`float`): The weighted total loss.

    """

    def __init__(
            self,
            iteration: Optional[int] = 0,
            terms: Optional[Dict[str, float]] = None,
            total: Optional[float] = 0.0) -> None:
        self.iteration = iteration
        self.terms = terms if terms is not None else {}
        self.total = total

    @property
    def iteration(self) -> int:
        return self._iteration

    @iteration.setter
    def iteration(self, value: int) -> None:
        self._iteration = int(value)

    @property
    def terms(self) -> Dict[str, float]:
        return self._terms

    @terms.setter
    def terms(self, value: Dict[str, float]) -> None:
        self._terms = {k: float(v) for k, v in value.items()}

    @property
    def total(self) -> float:
        return self._total

    @total.setter
    def total(self, value: float) -> None:
        self._total = float(value)
