"""
Dense voxel fields: storage, trilinear sampling, occupancy and smooth-min blending.

Grid values live at cell centers and are stored x-major as tensors of shape
(X, Y, Z, C) in float64. Sampling outside the volume clamps to the boundary cells.
"""
import io
import json
import math
import logging
from typing import Dict, Optional, Tuple, Union, Callable, Any
import numpy as np
import torch
import torch.nn.functional as F
from occflow.models import GridSpec
from occflow.exceptions import GridFormatError


logger = logging.getLogger(__name__)

DTYPE = torch.float64
GRID_FORMAT = "occflow.grid"
GRID_VERSION = 1

Number = Union[float, torch.Tensor]


class Grid3(object):
    """
    Grid3 Class

    Dense 3D grid of C-channel values with trilinear sampling.

    Attributes:
        spec (`GridSpec`): The volume the grid covers.
        values (`torch.Tensor`): Values of shape (X, Y, Z, C).

    """

    channels = None

    def __init__(self, spec: GridSpec, values: torch.Tensor) -> None:
        """
        Grid3 Constructor

        :param spec: GridSpec, The volume the grid covers.
        :param values: torch.Tensor, Values of shape (X, Y, Z) or (X, Y, Z, C).
        :return: None

        :raises: ValueError

        """

        self.spec = spec
        self.values = values

    @property
    def spec(self) -> GridSpec:
        """
        Get the grid spec.

        :return: GridSpec

        """

        return self._spec

    @spec.setter
    def spec(self, value: GridSpec) -> None:
        if value.count < 8:
            raise ValueError(f"grid needs at least 2 cells per axis, got {value.dims}")

        self._spec = value

    @property
    def values(self) -> torch.Tensor:
        """
        Get the values tensor, shape (X, Y, Z, C).

        :return: torch.Tensor

        """

        return self._values

    @values.setter
    def values(self, value: torch.Tensor) -> None:
        """
        Set the values tensor.

        :param value: torch.Tensor, Values of shape (X, Y, Z) or (X, Y, Z, C).
        :return: None

        :raises: ValueError

        """

        if value.dim() == 3:
            value = value.unsqueeze(-1)

        if tuple(value.shape[:3]) != tuple(self.spec.dims):
            raise ValueError(f"grid values of shape {tuple(value.shape)} do not match dims {self.spec.dims}")

        if (self.channels is not None) and (value.shape[3] != self.channels):
            raise ValueError(f"{self.__class__.__name__} needs {self.channels} channels, got {value.shape[3]}")

        self._values = value

    @classmethod
    def full(
            cls,
            spec: GridSpec,
            fill: Union[float, Tuple[float, ...]],
            channels: Optional[int] = None,
            requires_grad: bool = False) -> 'Grid3':
        """
        Create a grid with every cell set to `fill`.

        :param spec: GridSpec, The volume.
        :param fill: Union[float, Tuple[float, ...]], The value (or per-channel values).
        :param channels: Optional[int], Channel count (defaults to the class channel count).
        :param requires_grad: bool, Whether the values are an optimizable leaf.
        :return: Grid3

        """

        channels = channels or cls.channels or 1
        fill = torch.as_tensor(fill, dtype=DTYPE).expand(channels)
        values = fill.reshape(1, 1, 1, channels).repeat(*spec.dims, 1).contiguous()
        return cls(spec=spec, values=values.requires_grad_(requires_grad))

    @classmethod
    def from_function(
            cls,
            spec: GridSpec,
            fn: Callable[[np.ndarray], np.ndarray],
            requires_grad: bool = False) -> 'Grid3':
        """
        Create a grid by evaluating `fn` at every cell center.

        :param spec: GridSpec, The volume.
        :param fn: Callable, Maps (N, 3) points to (N,) or (N, C) values.
        :param requires_grad: bool, Whether the values are an optimizable leaf.
        :return: Grid3

        """

        centers = spec.centers().reshape(-1, 3)
        values = np.asarray(fn(centers), dtype=np.float64).reshape(*spec.dims, -1)
        return cls(spec=spec, values=torch.from_numpy(values).to(DTYPE).requires_grad_(requires_grad))

    def normalize(self, points: torch.Tensor) -> torch.Tensor:
        """
        Map points (m) to the [-1, 1] coordinates of `grid_sample`, first and last cell
        centers landing on -1 and 1.

        :param points: torch.Tensor, Points of shape (..., 3).
        :return: torch.Tensor

        """

        lower = torch.as_tensor(self.spec.origin, dtype=DTYPE)
        dims = torch.as_tensor(self.spec.dims, dtype=DTYPE)
        cells = (points - lower) / self.spec.resolution - 0.5
        return cells / (dims - 1.0) * 2.0 - 1.0

    def sample(self, points: torch.Tensor) -> torch.Tensor:
        """
        Trilinearly sample the grid, clamping outside points to the boundary cells.

        :param points: torch.Tensor, Points of shape (..., 3) in meters.
        :return: torch.Tensor, Values of shape (..., C).

        """

        points = torch.as_tensor(points, dtype=DTYPE)
        batch = points.shape[:-1]
        coords = self.normalize(points.reshape(1, 1, 1, -1, 3))
        volume = self.values.permute(3, 2, 1, 0).unsqueeze(0)
        out = F.grid_sample(volume, coords, mode="bilinear", padding_mode="border", align_corners=True)
        return out.reshape(self.values.shape[3], -1).transpose(0, 1).reshape(*batch, self.values.shape[3])

    def numpy(self) -> np.ndarray:
        return self.values.detach().cpu().numpy()

    def detach(self) -> 'Grid3':
        return type(self)(spec=self.spec, values=self.values.detach())

    def clone(self, requires_grad: bool = False) -> 'Grid3':
        return type(self)(spec=self.spec, values=self.values.detach().clone().requires_grad_(requires_grad))


class ScalarGrid3(Grid3):
    """
    Scalar Grid3 Class

    Single-channel grid, used for the static and dynamic SDFs.

    Attributes:
        channels (`int`): One value per cell.

    """

    channels = 1

    def sample(self, points: torch.Tensor) -> torch.Tensor:
        """
        Trilinearly sample the grid.

        :param points: torch.Tensor, Points of shape (..., 3) in meters.
        :return: torch.Tensor, Values of shape (...).

        """

        return super().sample(points=points)[..., 0]


class VectorGrid3(Grid3):
    """
    Vector Grid3 Class

    Three-channel grid, used for flows (m per frame), pseudo-labels and RGB colors.

    Attributes:
        channels (`int`): Three values per cell.

    """

    channels = 3


def sample_trilinear(grid: Grid3, x: Any) -> torch.Tensor:
    """
    Sample a grid at point(s) `x`, clamping outside the volume.

    :param grid: Grid3, The grid.
    :param x: Any, A 3-vector or an array of shape (..., 3).
    :return: torch.Tensor

    """

    return grid.sample(points=torch.as_tensor(x, dtype=DTYPE))


def sigmoid_occ(phi: Number, a: Number, occupancy: bool = True) -> torch.Tensor:
    """
    Sigmoid of an SDF value.

    The occupancy orientation `(1 + exp(a phi))^-1` is 1 inside and 0 outside; the
    rendering orientation `(1 + exp(-a phi))^-1` is its mirror.

    :param phi: Number, SDF value(s) (m).
    :param a: Number, Sharpness (1/m), positive.
    :param occupancy: bool, Select the occupancy (decreasing) orientation.
    :return: torch.Tensor

    :raises: ValueError

    """

    a = torch.as_tensor(a, dtype=DTYPE)

    if not bool(torch.all(a > 0)):
        raise ValueError(f"sharpness must be positive, got {a}")

    phi = torch.as_tensor(phi, dtype=DTYPE)
    return torch.sigmoid(-a * phi) if occupancy else torch.sigmoid(a * phi)


class SmoothMin(torch.autograd.Function):
    """
    Log-sum-exp smooth minimum with rate `k`.

    The forward pass uses the shifted form `min - log1p(exp(-k|x - y|)) / k`, which stays
    within `[min - ln2/k, min]` exactly in floating point; the backward pass uses the
    softmax weights so the gradient is smooth at ties.
    """

    @staticmethod
    def forward(ctx: Any, x: torch.Tensor, y: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
        low = torch.minimum(x, y)
        out = low - torch.log1p(torch.exp(-k * torch.abs(x - y))) / k
        ctx.save_for_backward(x, y, k, out)
        return out

    @staticmethod
    def backward(ctx: Any, grad: torch.Tensor) -> Tuple[Optional[torch.Tensor], ...]:
        x, y, k, out = ctx.saved_tensors
        wx = torch.sigmoid(k * (y - x))
        wy = 1.0 - wx
        gx = grad * wx if ctx.needs_input_grad[0] else None
        gy = grad * wy if ctx.needs_input_grad[1] else None
        gk = None

        if ctx.needs_input_grad[2]:
            gk = (grad * (wx * x + wy * y - out) / k).sum().reshape(k.shape)

        return _unbroadcast(gx, x.shape), _unbroadcast(gy, y.shape), gk


def _unbroadcast(grad: Optional[torch.Tensor], shape: torch.Size) -> Optional[torch.Tensor]:
    if grad is None or grad.shape == shape:
        return grad

    while grad.dim() > len(shape):
        grad = grad.sum(dim=0)

    for i, size in enumerate(shape):
        if size == 1 and grad.shape[i] != 1:
            grad = grad.sum(dim=i, keepdim=True)

    return grad


def blend_rate(a: Number, tau: Number) -> torch.Tensor:
    """
    Get the smooth-min rate `a / tau`.

    :param a: Number, Sharpness.
    :param tau: Number, Temperature.
    :return: torch.Tensor

    :raises: ValueError

    """

    a = torch.as_tensor(a, dtype=DTYPE)
    tau = torch.as_tensor(tau, dtype=DTYPE)

    if not (bool(torch.all(a > 0)) and bool(torch.all(tau > 0))):
        raise ValueError(f"sharpness and temperature must be positive, got a={a}, tau={tau}")

    return a / tau


def blend_sdf(phi_s: Number, phi_d: Number, a: Number, tau: Number) -> torch.Tensor:
    """
    Blend the static and dynamic SDFs with the temperature-scaled smooth minimum
    `-(tau/a) ln(exp(-a phi_s / tau) + exp(-a phi_d / tau))`.

    :param phi_s: Number, Static SDF value(s) (m).
    :param phi_d: Number, Dynamic SDF value(s) (m).
    :param a: Number, Sharpness (1/m).
    :param tau: Number, Temperature.
    :return: torch.Tensor

    """

    k = blend_rate(a=a, tau=tau)
    phi_s = torch.as_tensor(phi_s, dtype=DTYPE)
    phi_d = torch.as_tensor(phi_d, dtype=DTYPE)
    phi_s, phi_d = torch.broadcast_tensors(phi_s, phi_d)
    return SmoothMin.apply(phi_s, phi_d, k)


def blend_weights(phi_s: Number, phi_d: Number, a: Number, tau: Number) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Get the soft assignment of the smooth minimum to each field.

    The weights are the derivatives of `blend_sdf` and sum to one; they mix the static
    and dynamic colors.

    :param phi_s: Number, Static SDF value(s).
    :param phi_d: Number, Dynamic SDF value(s).
    :param a: Number, Sharpness.
    :param tau: Number, Temperature.
    :return: Tuple[torch.Tensor, torch.Tensor]

    """

    k = blend_rate(a=a, tau=tau)
    w_s = torch.sigmoid(k * (torch.as_tensor(phi_d, dtype=DTYPE) - torch.as_tensor(phi_s, dtype=DTYPE)))
    return w_s, 1.0 - w_s


def tree_sum(values: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """
    Sum along a dimension by pairwise halving.

    Every addition is elementwise, so the result does not depend on how many threads
    torch uses.

    :param values: torch.Tensor, The values.
    :param dim: int, The dimension to reduce.
    :return: torch.Tensor

    """

    values = values.movedim(dim, -1)

    if values.shape[-1] == 0:
        return values.sum(dim=-1)

    while values.shape[-1] > 1:
        if values.shape[-1] % 2 == 1:
            values = torch.cat([values, torch.zeros_like(values[..., :1])], dim=-1)

        values = values[..., 0::2] + values[..., 1::2]

    return values[..., 0]


def tree_mean(values: torch.Tensor) -> torch.Tensor:
    """
    Mean of all elements through `tree_sum`; zero for an empty tensor.

    :param values: torch.Tensor, The values.
    :return: torch.Tensor

    """

    flat = values.reshape(-1)

    if flat.numel() == 0:
        return flat.sum()

    return tree_sum(flat) / flat.numel()


def volume_bounds(spec: GridSpec, origins: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Intersect rays with the volume box (slab method).

    Entry is clamped to 0 for origins inside the volume. Rays that miss the volume, or
    only meet it behind their origin, get `exit < entry`.

    :param spec: GridSpec, The volume.
    :param origins: np.ndarray, Ray origins of shape (N, 3).
    :param dirs: np.ndarray, Unit directions of shape (N, 3).
    :return: Tuple[np.ndarray, np.ndarray], Entry and exit distances, each (N,).

    """

    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))

    with np.errstate(divide="ignore", invalid="ignore"):
        inverse = 1.0 / dirs
        t0 = (spec.lower - origins) * inverse
        t1 = (spec.upper - origins) * inverse

    near = np.nan_to_num(np.fmin(t0, t1), nan=-np.inf, posinf=np.inf, neginf=-np.inf)
    far = np.nan_to_num(np.fmax(t0, t1), nan=np.inf, posinf=np.inf, neginf=-np.inf)
    entry = np.maximum(np.max(near, axis=1), 0.0)
    leave = np.min(far, axis=1)
    return entry, np.where(leave >= entry, leave, -1.0)


def write_grid_file(
        path: str,
        spec: GridSpec,
        arrays: Dict[str, np.ndarray],
        metadata: Optional[Dict] = None) -> None:
    """
    Write named arrays to a `.grid` container.

    Layout: one line of JSON header, then the arrays back to back as little-endian
    float32 in C order (x-major for grids).

    :param path: str, The destination file.
    :param spec: GridSpec, The volume the arrays belong to.
    :param arrays: Dict[str, np.ndarray], The arrays, in write order.
    :param metadata: Optional[Dict], Extra JSON-safe values (e.g. the sharpness).
    :return: None

    """

    entries, payload, offset = [], io.BytesIO(), 0

    for name, array in arrays.items():
        data = np.ascontiguousarray(np.asarray(array, dtype="<f4"))

        if not np.all(np.isfinite(data)):
            raise GridFormatError(f"array `{name}` has non-finite values")

        entries.append({"name": name, "shape": list(data.shape), "count": int(data.size), "offset": offset})
        payload.write(data.tobytes(order="C"))
        offset += data.size * 4

    header = {
        "format": GRID_FORMAT,
        "version": GRID_VERSION,
        "spec": spec.to_json(),
        "dtype": "<f4",
        "arrays": entries,
        "metadata": metadata or {},
    }

    with open(path, "wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        handle.write(payload.getvalue())


def read_grid_file(path: str) -> Tuple[GridSpec, Dict[str, np.ndarray], Dict]:
    """
    Read a `.grid` container.

    :param path: str, The source file.
    :return: Tuple[GridSpec, Dict[str, np.ndarray], Dict], The spec, float64 arrays and
        metadata.

    :raises: GridFormatError

    """

    with open(path, "rb") as handle:
        header_line = handle.readline()
        payload = handle.read()

    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise GridFormatError(f"`{path}` has no valid grid header: {e}")

    if header.get("format") != GRID_FORMAT:
        raise GridFormatError(f"`{path}` is not a grid file")

    spec = GridSpec.from_dict(header["spec"])
    arrays = {}

    for entry in header["arrays"]:
        start, count = entry["offset"], entry["count"]

        if start + 4 * count > len(payload) or math.prod(entry["shape"]) != count:
            raise GridFormatError(f"array `{entry['name']}` in `{path}` is truncated")

        data = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        arrays[entry["name"]] = data.reshape(entry["shape"]).astype(np.float64)

    return spec, arrays, header.get("metadata", {})


def save_grid(path: str, grid: Grid3) -> None:
    """
    Save a single grid as a `.grid` file.

    :param path: str, The destination file.
    :param grid: Grid3, The grid.
    :return: None

    """

    write_grid_file(path=path, spec=grid.spec, arrays={"values": grid.numpy()}, metadata={"kind": type(grid).__name__})


def load_grid(path: str) -> Grid3:
    """
    Load a grid written by `save_grid`.

    :param path: str, The source file.
    :return: Grid3

    """

    spec, arrays, metadata = read_grid_file(path=path)
    kinds = {"ScalarGrid3": ScalarGrid3, "VectorGrid3": VectorGrid3}
    cls = kinds.get(metadata.get("kind"), Grid3)
    return cls(spec=spec, values=torch.from_numpy(arrays["values"]))
