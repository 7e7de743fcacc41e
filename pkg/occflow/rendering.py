"""
NeuS-style differentiable rendering of SDF fields along rays.
"""
import logging
from typing import Callable, NamedTuple, Optional, Union, Tuple
import numpy as np
import torch
import torch.nn.functional as F
from occflow.grids import DTYPE, volume_bounds, tree_sum
from occflow.models import GridSpec


logger = logging.getLogger(__name__)

FieldQuery = Callable[[torch.Tensor], torch.Tensor]


class RaySamples(NamedTuple):
    """
    Uniform samples along the rays that intersect the volume.

    `index` maps each row back to the input ray; rays that miss the volume have no row.
    """

    depths: torch.Tensor
    points: torch.Tensor
    spacing: torch.Tensor
    index: np.ndarray

    @property
    def count(self) -> int:
        return int(self.depths.shape[-1])

    def __len__(self) -> int:
        return int(self.depths.shape[0])


class RenderOut(NamedTuple):
    """
    Per-sample alphas, transmittances and weights, plus rendered depth and color.
    """

    alphas: torch.Tensor
    transmittance: torch.Tensor
    weights: torch.Tensor
    depth: torch.Tensor
    color: Optional[torch.Tensor]
    weight_sum: torch.Tensor

    def normalized_depth(self, eps: float = 1e-12) -> torch.Tensor:
        """
        Get the rendered depth divided by the weight sum.

        :param eps: float, Lower bound of the divisor.
        :return: torch.Tensor

        """

        return self.depth / torch.clamp(self.weight_sum, min=eps)


def sample_rays(origins: np.ndarray, dirs: np.ndarray, spec: GridSpec, count: int) -> RaySamples:
    """
    Place `count` uniformly spaced samples from volume entry to exit on every ray.

    :param origins: np.ndarray, Ray origins (N, 3) in the volume's coordinates.
    :param dirs: np.ndarray, Unit directions (N, 3).
    :param spec: GridSpec, The volume.
    :param count: int, Samples per ray, at least 2.
    :return: RaySamples

    :raises: ValueError

    """

    if count < 2:
        raise ValueError(f"rays need at least 2 samples, got {count}")

    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    entry, leave = volume_bounds(spec, origins, dirs)
    index = np.flatnonzero(leave > entry)

    steps = torch.linspace(0.0, 1.0, count, dtype=DTYPE)
    entry_t = torch.from_numpy(entry[index])
    leave_t = torch.from_numpy(leave[index])
    depths = entry_t[:, None] + (leave_t - entry_t)[:, None] * steps[None, :]
    points = torch.from_numpy(origins[index])[:, None, :] + depths[..., None] * torch.from_numpy(dirs[index])[:, None, :]
    return RaySamples(depths=depths, points=points, spacing=(leave_t - entry_t) / (count - 1), index=index)


def sample_ray(origin: np.ndarray, direction: np.ndarray, spec: GridSpec, count: int) -> RaySamples:
    """
    Sample a single ray; the result is empty when the ray misses the volume.

    :param origin: np.ndarray, The origin.
    :param direction: np.ndarray, The unit direction.
    :param spec: GridSpec, The volume.
    :param count: int, Samples along the ray.
    :return: RaySamples

    """

    return sample_rays(origins=origin, dirs=direction, spec=spec, count=count)


def neus_alpha(phi_m: Union[float, torch.Tensor], phi_next: Union[float, torch.Tensor], a: Union[float, torch.Tensor]) -> torch.Tensor:
    """
    Discrete opacity between consecutive samples, `max(1 - S(phi_next) / S(phi_m), 0)` with
    the increasing sigmoid `S(x) = (1 + exp(-a x))^-1`.

    Evaluated in log space so that far-from-surface samples do not underflow.

    :param phi_m: Union[float, torch.Tensor], SDF at the sample.
    :param phi_next: Union[float, torch.Tensor], SDF at the next sample.
    :param a: Union[float, torch.Tensor], Sharpness, positive.
    :return: torch.Tensor

    :raises: ValueError

    """

    a = torch.as_tensor(a, dtype=DTYPE)

    if not bool(torch.all(a > 0)):
        raise ValueError(f"sharpness must be positive, got {a}")

    phi_m = torch.as_tensor(phi_m, dtype=DTYPE)
    phi_next = torch.as_tensor(phi_next, dtype=DTYPE)
    ratio = F.logsigmoid(a * phi_next) - F.logsigmoid(a * phi_m)
    return torch.clamp(-torch.expm1(ratio), min=0.0)


def composite(alphas: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Turn alphas into transmittances `T_m = prod_{j<m} (1 - alpha_j)` and weights `T_m alpha_m`.

    :param alphas: torch.Tensor, Alphas of shape (..., M).
    :return: Tuple[torch.Tensor, torch.Tensor], Transmittances and weights, each (..., M).

    """

    ones = torch.ones_like(alphas[..., :1])
    transmittance = torch.cumprod(torch.cat([ones, 1.0 - alphas], dim=-1), dim=-1)[..., :-1]
    return transmittance, transmittance * alphas


def render(
        samples: RaySamples,
        phi: FieldQuery,
        a: Union[float, torch.Tensor],
        color: Optional[FieldQuery] = None) -> RenderOut:
    """
    Render depth (and color) along sampled rays.

    The last sample has no successor and gets a zero alpha. Depth and color are the
    unnormalized weighted sums.

    :param samples: RaySamples, The samples.
    :param phi: FieldQuery, Maps points (N, M, 3) to SDF values (N, M).
    :param a: Union[float, torch.Tensor], Sharpness.
    :param color: Optional[FieldQuery], Maps points (N, M, 3) to colors (N, M, 3).
    :return: RenderOut

    """

    values = phi(samples.points)
    alphas = neus_alpha(values[..., :-1], values[..., 1:], a)
    alphas = torch.cat([alphas, torch.zeros_like(alphas[..., :1])], dim=-1)
    transmittance, weights = composite(alphas)
    depth = tree_sum(weights * samples.depths, dim=-1)
    rgb = None

    if color is not None:
        rgb = tree_sum(weights[..., None] * color(samples.points), dim=-2)

    return RenderOut(
        alphas=alphas,
        transmittance=transmittance,
        weights=weights,
        depth=depth,
        color=rgb,
        weight_sum=tree_sum(weights, dim=-1),
    )
