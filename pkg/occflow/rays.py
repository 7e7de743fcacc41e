"""
Supervisory ray batches: sensor ray lattices, oracle labeling and the `.rays` container.
"""
import os
import json
import math
import logging
from typing import List, Optional, Tuple, Dict, Iterable
import numpy as np
from occflow.enums import SensorKind, RayLabel
from occflow.exceptions import RayFormatError
from occflow.models import PinholeCamera, LidarScan, JSONModel
from occflow.scenes import SceneOracle


logger = logging.getLogger(__name__)

RAYS_FORMAT = "occflow.rays"
RAYS_VERSION = 1
UNIT_TOLERANCE = 1e-9

COLUMNS = [
    ("origins", 3), ("dirs", 3), ("gt_range", 1), ("gt_color", 3),
    ("pixels", 2), ("labels", 1), ("dynamic", 1), ("primitive", 1),
]


class RayBatch(JSONModel):
    """
    Ray Batch Model Class

    Rays of one sensor at one frame, in the ego coordinates of that frame.

    Attributes:
        origins (`np.ndarray`): Ray origins (N, 3) (m).
        dirs (`np.ndarray`): Unit directions (N, 3).
        t (`int`): Frame index.
        kind (`SensorKind`): Camera or LiDAR.
        labels (`np.ndarray`): Static/dynamic/discard label values (N,).
        gt_range (`np.ndarray`): Measured ranges (N,), NaN when the ray leaves the volume unhit.
        gt_color (`np.ndarray`): Measured colors (N, 3).
        pixels (`np.ndarray`): (row, column) per camera ray (N, 2); -1 for LiDAR rays.
        camera (`str`): Name of the camera (None for LiDAR).
        dynamic (`np.ndarray`): Whether the oracle hit is a dynamic primitive (N,).
        primitive (`np.ndarray`): Index of the hit primitive (N,), -1 on misses.

    """

    def __init__(
            self,
            origins: Optional[np.ndarray] = None,
            dirs: Optional[np.ndarray] = None,
            t: Optional[int] = 0,
            kind: Optional[SensorKind] = SensorKind.LIDAR,
            labels: Optional[np.ndarray] = None,
            gt_range: Optional[np.ndarray] = None,
            gt_color: Optional[np.ndarray] = None,
            pixels: Optional[np.ndarray] = None,
            camera: Optional[str] = None,
            dynamic: Optional[np.ndarray] = None,
            primitive: Optional[np.ndarray] = None) -> None:
        """
        Ray Batch Constructor

        Missing per-ray arrays default to static labels, NaN ranges, black colors and no
        pixel coordinates.

        :raises: ValueError

        """

        self.origins = origins if origins is not None else np.zeros((0, 3))
        n = len(self.origins)
        self.dirs = dirs if dirs is not None else np.tile([1.0, 0.0, 0.0], (n, 1))
        self.t = t
        self.kind = kind
        self.labels = labels if labels is not None else np.full(n, RayLabel.STATIC.value)
        self.gt_range = gt_range if gt_range is not None else np.full(n, np.nan)
        self.gt_color = gt_color if gt_color is not None else np.zeros((n, 3))
        self.pixels = pixels if pixels is not None else np.full((n, 2), -1)
        self.camera = camera
        self.dynamic = dynamic if dynamic is not None else np.zeros(n, dtype=bool)
        self.primitive = primitive if primitive is not None else np.full(n, -1)

    def __len__(self) -> int:
        return len(self.origins)

    @property
    def origins(self) -> np.ndarray:
        return self._origins

    @origins.setter
    def origins(self, value: np.ndarray) -> None:
        self._origins = np.asarray(value, dtype=np.float64).reshape(-1, 3)

    @property
    def dirs(self) -> np.ndarray:
        """
        Get the unit ray directions.

        :return: np.ndarray

        """

        return self._dirs

    @dirs.setter
    def dirs(self, value: np.ndarray) -> None:
        """
        Set the ray directions.

        :param value: np.ndarray, Directions of shape (N, 3), unit length within 1e-9.
        :return: None

        :raises: ValueError

        """

        value = np.asarray(value, dtype=np.float64).reshape(-1, 3)

        if len(value) != len(self.origins):
            raise ValueError(f"{len(value)} directions for {len(self.origins)} origins")

        if len(value) > 0 and np.max(np.abs(np.linalg.norm(value, axis=1) - 1.0)) > UNIT_TOLERANCE:
            raise ValueError("ray directions must have unit length")

        self._dirs = value

    @property
    def t(self) -> int:
        return self._t

    @t.setter
    def t(self, value: int) -> None:
        self._t = int(value)

    @property
    def kind(self) -> SensorKind:
        return self._kind

    @kind.setter
    def kind(self, value: SensorKind) -> None:
        self._kind = SensorKind(value)

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @labels.setter
    def labels(self, value: np.ndarray) -> None:
        self._labels = np.asarray(value, dtype=np.int64).reshape(-1)

    @property
    def gt_range(self) -> np.ndarray:
        return self._gt_range

    @gt_range.setter
    def gt_range(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64).reshape(-1)

        if np.any(value[~np.isnan(value)] <= 0):
            raise ValueError("measured ranges must be positive or NaN")

        self._gt_range = value

    @property
    def gt_color(self) -> np.ndarray:
        return self._gt_color

    @gt_color.setter
    def gt_color(self, value: np.ndarray) -> None:
        self._gt_color = np.asarray(value, dtype=np.float64).reshape(-1, 3)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @pixels.setter
    def pixels(self, value: np.ndarray) -> None:
        self._pixels = np.asarray(value, dtype=np.int64).reshape(-1, 2)

    @property
    def camera(self) -> Optional[str]:
        return self._camera

    @camera.setter
    def camera(self, value: Optional[str]) -> None:
        self._camera = value

    @property
    def dynamic(self) -> np.ndarray:
        return self._dynamic

    @dynamic.setter
    def dynamic(self, value: np.ndarray) -> None:
        self._dynamic = np.asarray(value, dtype=bool).reshape(-1)

    @property
    def primitive(self) -> np.ndarray:
        return self._primitive

    @primitive.setter
    def primitive(self, value: np.ndarray) -> None:
        self._primitive = np.asarray(value, dtype=np.int64).reshape(-1)

    @property
    def hits(self) -> np.ndarray:
        return ~np.isnan(self.gt_range)

    def endpoints(self) -> np.ndarray:
        """
        Get the measured endpoints (NaN rows for misses).

        :return: np.ndarray

        """

        return self.origins + self.gt_range[:, None] * self.dirs

    def select(self, index: np.ndarray) -> 'RayBatch':
        """
        Get the batch restricted to the given rays.

        :param index: np.ndarray, Integer indices or a boolean mask.
        :return: RayBatch

        """

        return RayBatch(
            origins=self.origins[index],
            dirs=self.dirs[index],
            t=self.t,
            kind=self.kind,
            labels=self.labels[index],
            gt_range=self.gt_range[index],
            gt_color=self.gt_color[index],
            pixels=self.pixels[index],
            camera=self.camera,
            dynamic=self.dynamic[index],
            primitive=self.primitive[index],
        )

    def with_labels(self, labels: np.ndarray) -> 'RayBatch':
        batch = self.select(np.arange(len(self)))
        batch.labels = labels
        return batch

    def label_mask(self, label: RayLabel) -> np.ndarray:
        return self.labels == RayLabel(label).value

    @property
    def filename(self) -> str:
        """
        Get the file name the batch is stored under.

        :return: str

        """

        if self.kind == SensorKind.LIDAR:
            return f"frame_{self.t:03d}_lidar.rays"

        return f"frame_{self.t:03d}_camera_{self.camera}.rays"


def camera_rays(camera: PinholeCamera) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Build one ray per pixel center, in row-major scan order.

    :param camera: PinholeCamera, The camera.
    :return: Tuple[np.ndarray, np.ndarray, np.ndarray], Ego origins, unit ego directions
        and (row, column) pixel coordinates.

    """

    rows, cols = np.meshgrid(np.arange(camera.height), np.arange(camera.width), indexing="ij")
    rows, cols = rows.reshape(-1), cols.reshape(-1)
    k = camera.intrinsics()
    local = np.stack([
        (cols + 0.5 - k[0, 2]) / k[0, 0],
        (rows + 0.5 - k[1, 2]) / k[1, 1],
        np.ones(len(rows)),
    ], axis=-1)
    dirs = local @ camera.rotation().T
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.tile(np.asarray(camera.position), (len(dirs), 1))
    return origins, dirs, np.stack([rows, cols], axis=-1)


def lidar_rays(lidar: LidarScan) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build the azimuth/elevation lattice of a scan.

    :param lidar: LidarScan, The scan.
    :return: Tuple[np.ndarray, np.ndarray], Ego origins and unit ego directions.

    """

    azimuth = 2.0 * math.pi * np.arange(lidar.azimuths) / lidar.azimuths
    elevation = np.radians(np.linspace(lidar.elevation[0], lidar.elevation[1], lidar.channels))
    el, az = np.meshgrid(elevation, azimuth, indexing="ij")
    dirs = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1).reshape(-1, 3)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return np.tile(np.asarray(lidar.position), (len(dirs), 1)), dirs


def project(camera: PinholeCamera, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Project ego points into a camera image.

    :param camera: PinholeCamera, The camera.
    :param points: np.ndarray, Ego points (N, 3).
    :return: Tuple[np.ndarray, np.ndarray, np.ndarray], Column and row image coordinates
        (continuous, pixel centers at +0.5) and depth along the optical axis.

    """

    local = (np.asarray(points, dtype=np.float64) - np.asarray(camera.position)) @ camera.rotation()
    k = camera.intrinsics()

    with np.errstate(divide="ignore", invalid="ignore"):
        u = k[0, 0] * local[:, 0] / local[:, 2] + k[0, 2]
        v = k[1, 1] * local[:, 1] / local[:, 2] + k[1, 2]

    return u, v, local[:, 2]


def make_batches(
        oracle: SceneOracle,
        cameras: List[PinholeCamera],
        lidar: Optional[LidarScan],
        frames: Iterable[int],
        seed: int,
        noise: float = 0.0) -> List[RayBatch]:
    """
    Generate the camera and LiDAR batches of a sequence from the oracle.

    Each ray is labeled dynamic iff its oracle hit is a dynamic primitive; with a
    positive `noise` rate the labels of rays with a return are flipped at random. Rays
    without a return stay static.

    :param oracle: SceneOracle, The scene.
    :param cameras: List[PinholeCamera], Cameras on the platform.
    :param lidar: Optional[LidarScan], LiDAR on the platform.
    :param frames: Iterable[int], Frames to generate.
    :param seed: int, Seed of the label noise.
    :param noise: float, Label flip probability.
    :return: List[RayBatch], Per frame: the LiDAR batch, then one batch per camera.

    :raises: ValueError

    """

    frames = list(frames)

    if len(frames) == 0:
        raise ValueError("cannot generate rays for an empty frame range")

    if lidar is None and len(cameras) == 0:
        raise ValueError("at least one sensor is needed to generate rays")

    rng = np.random.default_rng(seed)
    batches = []

    sensors = []

    if lidar is not None:
        origins, dirs = lidar_rays(lidar)
        sensors.append((SensorKind.LIDAR, None, origins, dirs, None))

    for camera in cameras:
        origins, dirs, pixels = camera_rays(camera)
        sensors.append((SensorKind.CAMERA, camera.name, origins, dirs, pixels))

    for t in frames:
        for kind, name, origins, dirs, pixels in sensors:
            hits = oracle.cast_rays(origins, dirs, t)
            flips = (rng.random(len(origins)) < noise) & ~np.isnan(hits.ranges)
            labels = np.where(hits.dynamic ^ flips, RayLabel.DYNAMIC.value, RayLabel.STATIC.value)
            batches.append(RayBatch(
                origins=origins,
                dirs=dirs,
                t=t,
                kind=kind,
                labels=labels,
                gt_range=hits.ranges,
                gt_color=hits.colors,
                pixels=pixels,
                camera=name,
                dynamic=hits.dynamic,
                primitive=hits.primitive,
            ))

        logger.debug(f"frame {t}: generated {sum(len(b) for b in batches if b.t == t)} rays")

    return batches


def write_rays(path: str, batch: RayBatch) -> None:
    """
    Write a batch to a `.rays` file: one line of JSON header, then an (N, 15)
    little-endian float64 row-major table.

    :param path: str, The destination file.
    :param batch: RayBatch, The batch.
    :return: None

    """

    table = np.concatenate([
        batch.origins, batch.dirs, batch.gt_range[:, None], batch.gt_color, batch.pixels.astype(np.float64),
        batch.labels[:, None].astype(np.float64), batch.dynamic[:, None].astype(np.float64),
        batch.primitive[:, None].astype(np.float64),
    ], axis=1)
    header = {
        "format": RAYS_FORMAT,
        "version": RAYS_VERSION,
        "kind": batch.kind.value,
        "t": batch.t,
        "camera": batch.camera,
        "count": len(batch),
        "dtype": "<f8",
        "columns": [{"name": name, "width": width} for name, width in COLUMNS],
    }

    with open(path, "wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        handle.write(np.ascontiguousarray(table, dtype="<f8").tobytes(order="C"))


def read_rays(path: str) -> RayBatch:
    """
    Read a batch written by `write_rays`.

    :param path: str, The source file.
    :return: RayBatch

    :raises: RayFormatError

    """

    with open(path, "rb") as handle:
        header_line = handle.readline()
        payload = handle.read()

    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise RayFormatError(f"`{path}` has no valid ray header: {e}")

    if header.get("format") != RAYS_FORMAT:
        raise RayFormatError(f"`{path}` is not a ray file")

    width = sum(w for _, w in COLUMNS)
    count = int(header["count"])

    if len(payload) != count * width * 8:
        raise RayFormatError(f"`{path}` holds {len(payload)} payload bytes, expected {count * width * 8}")

    table = np.frombuffer(payload, dtype="<f8").reshape(count, width)
    columns: Dict[str, np.ndarray] = {}
    offset = 0

    for name, w in COLUMNS:
        columns[name] = table[:, offset:offset + w]
        offset += w

    return RayBatch(
        origins=columns["origins"],
        dirs=columns["dirs"],
        t=header["t"],
        kind=header["kind"],
        labels=columns["labels"][:, 0],
        gt_range=columns["gt_range"][:, 0],
        gt_color=columns["gt_color"],
        pixels=columns["pixels"],
        camera=header.get("camera"),
        dynamic=columns["dynamic"][:, 0] > 0.5,
        primitive=columns["primitive"][:, 0],
    )


def write_batches(directory: str, batches: List[RayBatch]) -> List[str]:
    """
    Write every batch into `directory` under its own file name.

    :param directory: str, The destination directory (created when missing).
    :param batches: List[RayBatch], The batches.
    :return: List[str], The written paths.

    """

    os.makedirs(directory, exist_ok=True)
    paths = []

    for batch in batches:
        path = os.path.join(directory, batch.filename)
        write_rays(path=path, batch=batch)
        paths.append(path)

    return paths
