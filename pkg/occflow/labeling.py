"""
Static/dynamic ray classification from dynamic instance masks.

LiDAR endpoints are projected into every camera; endpoints inside a confident mask are
candidate dynamic, clustered per mask with 26-connected components, and only the largest
cluster of each mask keeps the dynamic label.
"""
import os
import re
import logging
from typing import Dict, List, Tuple, Iterable, Optional
import numpy as np
from scipy import ndimage
from occflow.enums import RayLabel, SensorKind
from occflow.images import write_pgm, read_pgm
from occflow.models import GridSpec, PinholeCamera, LabelingParams
from occflow.rays import RayBatch, project
from occflow.scenes import SceneOracle


logger = logging.getLogger(__name__)

STRUCTURE = np.ones((3, 3, 3), dtype=bool)
MASK_FILE = re.compile(r"^frame_(\d+)_(.+)_mask_(\d+)\.pgm$")

Mask = Tuple[np.ndarray, float]


class MaskSet(object):
    """
    Mask Set Class

    Boolean instance masks with confidence scores, per frame and camera.

    """

    def __init__(self) -> None:
        self._masks: Dict[Tuple[int, str], List[Mask]] = {}

    def __len__(self) -> int:
        return sum(len(v) for v in self._masks.values())

    def add(self, t: int, camera: str, mask: np.ndarray, score: float) -> None:
        """
        Add a mask.

        :param t: int, The frame.
        :param camera: str, The camera name.
        :param mask: np.ndarray, Boolean image of shape (H, W).
        :param score: float, Confidence in [0, 1].
        :return: None

        :raises: ValueError

        """

        if not (0.0 <= score <= 1.0):
            raise ValueError(f"mask confidence must lie in [0, 1], got {score}")

        self._masks.setdefault((int(t), camera), []).append((np.asarray(mask, dtype=bool), float(score)))

    def get(self, t: int, camera: str) -> List[Mask]:
        return self._masks.get((int(t), camera), [])

    def keys(self) -> List[Tuple[int, str]]:
        return sorted(self._masks.keys())

    @classmethod
    def from_oracle(
            cls,
            oracle: SceneOracle,
            cameras: List[PinholeCamera],
            frames: Iterable[int],
            params: LabelingParams,
            seed: int) -> 'MaskSet':
        """
        Render instance masks of every mover, emulating a segmentation model.

        :param oracle: SceneOracle, The scene.
        :param cameras: List[PinholeCamera], The cameras.
        :param frames: Iterable[int], The frames.
        :param params: LabelingParams, Mask confidence and pixel noise.
        :param seed: int, Seed of the pixel noise.
        :return: MaskSet

        """

        rng = np.random.default_rng(seed)
        masks = cls()

        for t in frames:
            for camera in cameras:
                for mask, score in oracle.render_masks(camera, t, params.mask_confidence, params.noise, rng):
                    masks.add(t=t, camera=camera.name, mask=mask, score=score)

        return masks

    def save(self, directory: str) -> List[str]:
        """
        Write every mask as a PGM whose gray level is the score inside the mask.

        :param directory: str, The destination directory.
        :return: List[str], The written paths.

        """

        paths = []

        for (t, camera), masks in sorted(self._masks.items()):
            for k, (mask, score) in enumerate(masks):
                path = os.path.join(directory, f"frame_{t:03d}_{camera}_mask_{k}.pgm")
                write_pgm(path, np.where(mask, score, 0.0), low=0.0, high=1.0)
                paths.append(path)

        return paths

    @classmethod
    def load(cls, directory: str) -> 'MaskSet':
        """
        Read masks written by `save` (or produced externally with the same naming).

        :param directory: str, The source directory.
        :return: MaskSet

        """

        masks = cls()
        found = []

        for name in os.listdir(directory):
            match = MASK_FILE.match(name)

            if match is not None:
                found.append((int(match.group(1)), match.group(2), int(match.group(3)), name))

        for t, camera, _, name in sorted(found):
            image = read_pgm(os.path.join(directory, name))
            inside = image > 0
            score = float(np.max(image)) if inside.any() else 0.0
            masks.add(t=t, camera=camera, mask=inside, score=score)

        return masks


class VoxelClusterLabels(object):
    """
    Voxel Cluster Labels Class

    Attributes:
        labels (`np.ndarray`): Component label per voxel, 0 for empty voxels.
        sizes (`np.ndarray`): Voxel count of component `k` at index `k - 1`.

    """

    def __init__(self, labels: np.ndarray, spec: Optional[GridSpec] = None) -> None:
        self.spec = spec
        self.labels = labels

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @labels.setter
    def labels(self, value: np.ndarray) -> None:
        self._labels = np.asarray(value, dtype=np.int64)
        self._sizes = np.bincount(self._labels.reshape(-1))[1:]

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def count(self) -> int:
        return int(self._labels.max()) if self._labels.size > 0 else 0

    def largest(self) -> int:
        """
        Get the label of the largest component; ties go to the smallest label.

        :return: int, 0 when there is no component.

        """

        if self.count == 0:
            return 0

        return int(np.argmax(self._sizes)) + 1


def connected_components_3d(occupied: np.ndarray, spec: Optional[GridSpec] = None) -> VoxelClusterLabels:
    """
    Label the 26-connected components of an occupancy volume.

    Labels are assigned in x-major scan order of each component's first voxel.

    :param occupied: np.ndarray, Boolean volume (X, Y, Z).
    :param spec: Optional[GridSpec], The volume the voxels belong to.
    :return: VoxelClusterLabels

    """

    labels, _ = ndimage.label(np.asarray(occupied, dtype=bool), structure=STRUCTURE)
    return VoxelClusterLabels(labels=labels, spec=spec)


def voxelize(points: np.ndarray, spec: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map points to voxel indices.

    :param points: np.ndarray, Points (N, 3); NaN rows are outside.
    :param spec: GridSpec, The volume.
    :return: Tuple[np.ndarray, np.ndarray], Indices (N, 3) and whether each point is inside.

    """

    points = np.asarray(points, dtype=np.float64)

    with np.errstate(invalid="ignore"):
        cells = np.floor((points - spec.lower) / spec.resolution)
        inside = np.all((cells >= 0) & (cells < np.asarray(spec.dims)), axis=-1)

    cells = np.where(inside[:, None], cells, 0).astype(np.int64)
    return cells, inside


def classify_rays(
        batch: RayBatch,
        masks: MaskSet,
        cameras: List[PinholeCamera],
        spec: GridSpec,
        params: LabelingParams) -> np.ndarray:
    """
    Label LiDAR rays static, dynamic or discard from the masks of their frame.

    An endpoint inside a mask with score >= `dynamic_confidence` in any camera is a
    candidate dynamic point; one inside no mask with score >= `static_confidence` in every
    camera that sees it is static; anything else is discarded, as are endpoints that no
    camera sees or that lie outside the volume. Rays without a return are static.
    Candidates outside the largest cluster of every mask they fall in are demoted to static.

    :param batch: RayBatch, LiDAR rays of one frame.
    :param masks: MaskSet, The masks.
    :param cameras: List[PinholeCamera], The cameras the masks belong to.
    :param spec: GridSpec, The volume (voxelization uses its resolution).
    :param params: LabelingParams, Confidence thresholds.
    :return: np.ndarray, Label values per ray.

    :raises: ValueError

    """

    n = len(batch)
    labels = np.full(n, RayLabel.DISCARD.value, dtype=np.int64)
    hits = batch.hits
    labels[~hits] = RayLabel.STATIC.value

    endpoints = batch.endpoints()
    cells, inside = voxelize(endpoints, spec)
    target = hits & inside
    index = np.flatnonzero(target)

    visible = np.zeros(n, dtype=bool)
    uncertain = np.zeros(n, dtype=bool)
    candidate = np.zeros(n, dtype=bool)
    groups: Dict[Tuple[int, int], np.ndarray] = {}

    for c, camera in enumerate(cameras):
        u, v, depth = project(camera, endpoints[index])

        with np.errstate(invalid="ignore"):
            seen = (depth > 1e-9) & (u >= 0) & (u < camera.width) & (v >= 0) & (v < camera.height)

        visible[index[seen]] = True
        rows = np.floor(v[seen]).astype(np.int64)
        cols = np.floor(u[seen]).astype(np.int64)

        for k, (mask, score) in enumerate(masks.get(batch.t, camera.name)):
            if mask.shape != (camera.height, camera.width):
                raise ValueError(f"mask of shape {mask.shape} does not match camera `{camera.name}`")

            covered = index[seen][mask[rows, cols]]

            if score >= params.static_confidence:
                uncertain[covered] = True

            if score >= params.dynamic_confidence and len(covered) > 0:
                candidate[covered] = True
                groups[(c, k)] = covered

    labels[target & visible & ~uncertain] = RayLabel.STATIC.value

    keep = np.zeros(n, dtype=bool)

    for key in sorted(groups.keys()):
        rays = groups[key]
        occupied = np.zeros(spec.dims, dtype=bool)
        occupied[cells[rays, 0], cells[rays, 1], cells[rays, 2]] = True
        clusters = connected_components_3d(occupied, spec=spec)
        largest = clusters.largest()
        member = clusters.labels[cells[rays, 0], cells[rays, 1], cells[rays, 2]] == largest
        keep[rays[member]] = True
        logger.debug(f"frame {batch.t} mask {key}: {clusters.count} clusters, kept {int(member.sum())}/{len(rays)} points")

    labels[candidate & keep] = RayLabel.DYNAMIC.value
    labels[candidate & ~keep] = RayLabel.STATIC.value
    return labels


def label_batches(
        batches: List[RayBatch],
        masks: Optional[MaskSet],
        cameras: List[PinholeCamera],
        spec: GridSpec,
        params: LabelingParams) -> List[RayBatch]:
    """
    Relabel the LiDAR batches from the masks; camera batches pass through.

    With no mask set the labels already on the batches (oracle labels) are kept.

    :param batches: List[RayBatch], The batches.
    :param masks: Optional[MaskSet], The masks.
    :param cameras: List[PinholeCamera], The cameras.
    :param spec: GridSpec, The volume.
    :param params: LabelingParams, Confidence thresholds.
    :return: List[RayBatch]

    """

    out = []

    for batch in batches:
        if masks is not None and batch.kind == SensorKind.LIDAR:
            labels = classify_rays(batch=batch, masks=masks, cameras=cameras, spec=spec, params=params)
            batch = batch.with_labels(labels)
            logger.info(
                f"frame {batch.t}: {int(batch.label_mask(RayLabel.DYNAMIC).sum())} dynamic, "
                f"{int(batch.label_mask(RayLabel.STATIC).sum())} static, "
                f"{int(batch.label_mask(RayLabel.DISCARD).sum())} discarded rays"
            )

        out.append(batch)

    return out
