"""
The training objective.

Every loss function returns unweighted terms; `LossTerms.weighted` applies the loss
weights. All reductions are means computed with the pairwise tree sum.
"""
import logging
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Tuple
import numpy as np
import torch
import torch.nn.functional as F
from occflow.aggregation import FrameFields, FrameView, align_point
from occflow.exceptions import NonFiniteLossError
from occflow.grids import DTYPE, tree_sum, tree_mean
from occflow.models import AggParams, GridSpec, LossRecord, LossWeights, PinholeCamera
from occflow.rendering import RenderOut, sample_rays, render
from occflow.similarity import PseudoLabels, sim_flow_loss


logger = logging.getLogger(__name__)

# term name -> loss weight
TERMS = {
    "sim": "lambda_sim",
    "dep": "lambda_dep",
    "rgb": "lambda_rgb",
    "range": "lambda_r",
    "density": "lambda_den",
    "eikonal_s": "lambda_e_s",
    "eikonal_d": "lambda_e_d",
    "hessian_s": "lambda_H_s",
    "hessian_d": "lambda_H_d",
    "hessian_f": "lambda_H_f",
    "sparsity_d": "lambda_s_d",
}

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
SSIM_ALPHA = 0.85
EIKONAL_EPS = 1e-12


class LossTerms(object):
    """
    Loss Terms Class

    Unweighted loss terms keyed by name (see `TERMS`).

    Attributes:
        terms (`Dict[str, torch.Tensor]`): The terms.

    """

    def __init__(self, terms: Optional[Dict[str, torch.Tensor]] = None) -> None:
        self.terms = dict(terms or {})

    def __getitem__(self, name: str) -> torch.Tensor:
        return self.terms[name]

    def __contains__(self, name: str) -> bool:
        return name in self.terms

    def __iter__(self) -> Iterator[str]:
        return iter(self.terms)

    def update(self, other: 'LossTerms') -> 'LossTerms':
        self.terms.update(other.terms)
        return self

    def weighted(self, weights: LossWeights) -> torch.Tensor:
        """
        Get the weighted sum of the terms, in `TERMS` order.

        :param weights: LossWeights, The weights.
        :return: torch.Tensor

        """

        values = [getattr(weights, TERMS[name]) * self.terms[name] for name in TERMS if name in self.terms]

        if len(values) == 0:
            return torch.zeros((), dtype=DTYPE)

        return tree_sum(torch.stack(values))

    def check(self, iteration: Optional[int] = None) -> None:
        """
        Raise on the first non-finite term.

        :param iteration: Optional[int], The iteration, for the report.
        :return: None

        :raises: NonFiniteLossError

        """

        for name in TERMS:
            if name in self.terms and not bool(torch.isfinite(self.terms[name])):
                raise NonFiniteLossError(term=name, value=float(self.terms[name]), iteration=iteration)

    def record(self, iteration: int, weights: LossWeights) -> LossRecord:
        return LossRecord(
            iteration=iteration,
            terms={name: float(self.terms[name]) for name in TERMS if name in self.terms},
            total=float(self.weighted(weights)),
        )


class SupervisionRays(NamedTuple):
    """
    LiDAR rays expressed in the ego coordinates of the supervised frame.
    """

    origins: np.ndarray
    dirs: np.ndarray
    ranges: np.ndarray

    def __len__(self) -> int:
        return int(self.ranges.shape[0])

    def endpoints(self) -> np.ndarray:
        return self.origins + self.ranges[:, None] * self.dirs

    @classmethod
    def empty(cls) -> 'SupervisionRays':
        return cls(origins=np.zeros((0, 3)), dirs=np.zeros((0, 3)), ranges=np.zeros(0))

    @classmethod
    def concatenate(cls, parts: List['SupervisionRays']) -> 'SupervisionRays':
        if len(parts) == 0:
            return cls.empty()

        return cls(
            origins=np.concatenate([p.origins for p in parts]),
            dirs=np.concatenate([p.dirs for p in parts]),
            ranges=np.concatenate([p.ranges for p in parts]),
        )


def to_frame(
        origins: np.ndarray,
        dirs: np.ndarray,
        ranges: np.ndarray,
        pose_u: np.ndarray,
        pose_t: np.ndarray,
        spec: GridSpec) -> SupervisionRays:
    """
    Move rays measured at frame u into frame-t ego coordinates.

    Rays without a return, and rays whose endpoint leaves the volume after alignment, are
    dropped.

    :param origins: np.ndarray, Origins (N, 3) in frame-u ego coordinates.
    :param dirs: np.ndarray, Unit directions (N, 3).
    :param ranges: np.ndarray, Measured ranges (N,), NaN for misses.
    :param pose_u: np.ndarray, Pose of the measuring frame.
    :param pose_t: np.ndarray, Pose of the supervised frame.
    :param spec: GridSpec, The volume.
    :return: SupervisionRays

    """

    origins = align_point(np.asarray(origins, dtype=np.float64), pose_u, pose_t)
    rotation = np.linalg.solve(pose_t, pose_u)[:3, :3]
    dirs = np.asarray(dirs, dtype=np.float64) @ rotation.T
    ranges = np.asarray(ranges, dtype=np.float64)
    keep = np.isfinite(ranges)

    with np.errstate(invalid="ignore"):
        ends = origins + ranges[:, None] * dirs
        keep &= np.all((ends >= spec.lower) & (ends <= spec.upper), axis=-1)

    return SupervisionRays(origins=origins[keep], dirs=dirs[keep], ranges=ranges[keep])


def rendered_depth(out: RenderOut, normalize: bool) -> torch.Tensor:
    return out.normalized_depth() if normalize else out.depth


def lidar_loss(
        static: SupervisionRays,
        dynamic: SupervisionRays,
        view: FrameView,
        samples: int,
        normalize_depth: bool = False) -> LossTerms:
    """
    Range loss of static and dynamic rays plus the density loss at dynamic endpoints.

    Static rays are rendered against the aggregated static SDF and dynamic rays against
    the aggregated dynamic SDF; the density loss `max(phi^d_t, 0)` uses the dynamic SDF of
    the frame itself.

    :param static: SupervisionRays, Static rays in frame-t coordinates.
    :param dynamic: SupervisionRays, Dynamic rays of frame t.
    :param view: FrameView, The fields of frame t.
    :param samples: int, Samples per ray.
    :param normalize_depth: bool, Divide the rendered depth by the weight sum.
    :return: LossTerms, `range` and `density`.

    """

    spec = view.fields.spec
    a = view.fields.a
    errors = []

    for rays, query in ((static, view.static), (dynamic, view.dynamic)):
        if len(rays) == 0:
            continue

        sampled = sample_rays(rays.origins, rays.dirs, spec, samples)

        if len(sampled) == 0:
            continue

        depth = rendered_depth(render(sampled, query, a), normalize_depth)
        target = torch.from_numpy(rays.ranges[sampled.index]).to(DTYPE)
        errors.append((depth - target) ** 2)

    if len(errors) == 0:
        logger.warning(f"frame {view.t}: empty LiDAR batch, range loss set to 0")
        range_loss = torch.zeros((), dtype=DTYPE)
    else:
        range_loss = tree_mean(torch.cat(errors))

    if len(dynamic) > 0 and not view.single:
        endpoints = torch.from_numpy(dynamic.endpoints()).to(DTYPE)
        density = tree_mean(torch.relu(view.raw_dynamic(endpoints)))
    else:
        density = torch.zeros((), dtype=DTYPE)

    return LossTerms({"range": range_loss, "density": density})


def dssim(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """
    Structural dissimilarity `clamp((1 - SSIM) / 2, 0, 1)` over 3x3 windows with
    reflection padding.

    :param x: torch.Tensor, Images (B, C, H, W), H and W at least 2.
    :param y: torch.Tensor, Images (B, C, H, W).
    :return: torch.Tensor, Per-pixel values (B, C, H, W).

    """

    x = F.pad(x, (1, 1, 1, 1), mode="reflect")
    y = F.pad(y, (1, 1, 1, 1), mode="reflect")
    mu_x = F.avg_pool2d(x, 3, 1)
    mu_y = F.avg_pool2d(y, 3, 1)
    sigma_x = F.avg_pool2d(x ** 2, 3, 1) - mu_x ** 2
    sigma_y = F.avg_pool2d(y ** 2, 3, 1) - mu_y ** 2
    sigma_xy = F.avg_pool2d(x * y, 3, 1) - mu_x * mu_y
    numerator = (2 * mu_x * mu_y + SSIM_C1) * (2 * sigma_xy + SSIM_C2)
    denominator = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (sigma_x + sigma_y + SSIM_C2)
    return torch.clamp((1 - numerator / denominator) / 2, 0, 1)


def photometric_error(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """
    Per-pixel `0.85 DSSIM + 0.15 L1`, averaged over channels.

    :param x: torch.Tensor, Images (B, 3, H, W).
    :param y: torch.Tensor, Images (B, 3, H, W).
    :return: torch.Tensor, Shape (B, H, W).

    """

    structural = dssim(x, y).mean(dim=1)
    absolute = torch.abs(x - y).mean(dim=1)
    return SSIM_ALPHA * structural + (1.0 - SSIM_ALPHA) * absolute


def as_image(values: torch.Tensor, size: int) -> torch.Tensor:
    return values.reshape(size, size, 3).permute(2, 0, 1).unsqueeze(0)


class SourceView(NamedTuple):
    """
    A neighbor frame's image of the same camera, with that frame's ego pose.
    """

    pose: np.ndarray
    image: np.ndarray


class CameraPatch(NamedTuple):
    """
    A contiguous p x p block of camera pixels of frame t.

    `origins` and `dirs` are row-major frame-t ego rays; `target` is (p, p, 3).
    """

    camera: PinholeCamera
    rows: np.ndarray
    cols: np.ndarray
    origins: np.ndarray
    dirs: np.ndarray
    target: np.ndarray
    sources: List[SourceView]

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])


def project_torch(camera: PinholeCamera, points: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Differentiable pinhole projection of ego points into pixel coordinates.

    :param camera: PinholeCamera, The camera.
    :param points: torch.Tensor, Ego points (..., 3).
    :return: Tuple[torch.Tensor, torch.Tensor, torch.Tensor], Columns u, rows v and depths.

    """

    rotation = torch.from_numpy(camera.rotation()).to(DTYPE)
    position = torch.as_tensor(camera.position, dtype=DTYPE)
    local = (points - position) @ rotation
    z = local[..., 2]
    safe = torch.where(z > 1e-9, z, torch.ones_like(z))
    u = camera.focal * local[..., 0] / safe + camera.width / 2.0
    v = camera.focal * local[..., 1] / safe + camera.height / 2.0
    return u, v, z


def reprojection_error(
        patch: CameraPatch,
        depth: torch.Tensor,
        valid: torch.Tensor,
        pose_t: np.ndarray) -> torch.Tensor:
    """
    Auto-masked minimum reprojection error of a patch.

    Each source image is warped into the patch through the rendered depth; the per-pixel
    error is the minimum over the sources whose reprojection lands in the image. Pixels
    where an unwarped source matches the target at least as well are masked out.

    :param patch: CameraPatch, The patch.
    :param depth: torch.Tensor, Rendered depth per ray (p * p,).
    :param valid: torch.Tensor, Rays with a usable depth (p * p,).
    :param pose_t: np.ndarray, Pose of frame t.
    :return: torch.Tensor, Errors of the retained pixels (1-D).

    """

    size = patch.size
    camera = patch.camera
    target = torch.from_numpy(patch.target).to(DTYPE).permute(2, 0, 1).unsqueeze(0)
    points = torch.from_numpy(patch.origins).to(DTYPE) + depth[:, None] * torch.from_numpy(patch.dirs).to(DTYPE)
    warped_errors = []
    identity_errors = []

    for source in patch.sources:
        image = torch.from_numpy(source.image).to(DTYPE).permute(2, 0, 1).unsqueeze(0)
        u, v, z = project_torch(camera, align_point(points, pose_t, source.pose))
        inside = valid & (z > 1e-9) & (u >= 0) & (u <= camera.width) & (v >= 0) & (v <= camera.height)
        grid = torch.stack([u / camera.width * 2.0 - 1.0, v / camera.height * 2.0 - 1.0], dim=-1).reshape(1, size, size, 2)
        warped = F.grid_sample(image, grid, mode="bilinear", padding_mode="border", align_corners=False)
        error = photometric_error(warped, target)[0]
        warped_errors.append(torch.where(inside.reshape(size, size), error, torch.full_like(error, np.inf)))

        unwarped = torch.from_numpy(source.image[patch.rows][:, patch.cols]).to(DTYPE).permute(2, 0, 1).unsqueeze(0)
        identity_errors.append(photometric_error(unwarped, target)[0].detach())

    if len(warped_errors) == 0:
        return torch.zeros(0, dtype=DTYPE)

    best = torch.stack(warped_errors).min(dim=0).values
    identity = torch.stack(identity_errors).min(dim=0).values
    keep = torch.isfinite(best) & (best < identity)
    return best[keep]


def photo_loss(patches: List[CameraPatch], view: FrameView, samples: int) -> LossTerms:
    """
    Color and reprojection losses of camera patches rendered against the blended field.

    :param patches: List[CameraPatch], Patches of frame t.
    :param view: FrameView, The fields of frame t.
    :param samples: int, Samples per ray.
    :return: LossTerms, `rgb` and `dep`.

    """

    spec = view.fields.spec
    pose_t = view.fields.poses[view.t]
    rgb_errors = []
    dep_errors = []

    for patch in patches:
        count = patch.size * patch.size
        sampled = sample_rays(patch.origins, patch.dirs, spec, samples)
        index = torch.from_numpy(sampled.index).to(torch.int64)
        color = torch.zeros((count, 3), dtype=DTYPE)
        depth = torch.zeros(count, dtype=DTYPE)
        valid = torch.zeros(count, dtype=torch.bool)

        if len(sampled) > 0:
            out = render(sampled, view.blended, view.fields.a, color=view.color)
            color = color.index_copy(0, index, out.color)
            depth = depth.index_copy(0, index, out.normalized_depth())
            valid[index] = out.weight_sum.detach() > 1e-6

        target = torch.from_numpy(patch.target).to(DTYPE).permute(2, 0, 1).unsqueeze(0)
        rgb_errors.append(photometric_error(as_image(color, patch.size), target).reshape(-1))
        dep_errors.append(reprojection_error(patch, depth, valid, pose_t))

    rgb = tree_mean(torch.cat(rgb_errors)) if len(rgb_errors) > 0 else torch.zeros((), dtype=DTYPE)
    dep = tree_mean(torch.cat(dep_errors)) if len(dep_errors) > 0 else torch.zeros((), dtype=DTYPE)
    return LossTerms({"rgb": rgb, "dep": dep})


def eikonal(query: Callable[[torch.Tensor], torch.Tensor], points: torch.Tensor, step: float) -> torch.Tensor:
    """
    Mean `(|grad phi| - 1)^2` with the gradient from central differences.

    :param query: Callable[[torch.Tensor], torch.Tensor], Maps points (..., 3) to SDF values (...).
    :param points: torch.Tensor, Points (N, 3).
    :param step: float, Difference step (m).
    :return: torch.Tensor

    """

    offsets = torch.eye(3, dtype=DTYPE) * step
    ahead = query(points[None, :, :] + offsets[:, None, :])
    behind = query(points[None, :, :] - offsets[:, None, :])
    gradient = (ahead - behind) / (2.0 * step)
    norm = torch.sqrt(tree_sum(gradient * gradient, dim=0) + EIKONAL_EPS)
    return tree_mean((norm - 1.0) ** 2)


def grid_hessian(values: torch.Tensor, step: float) -> torch.Tensor:
    """
    Sum over axes of the mean squared second difference at the interior grid nodes,
    channels summed.

    :param values: torch.Tensor, Grid values (X, Y, Z, C).
    :param step: float, Cell size (m).
    :return: torch.Tensor

    """

    total = []

    for axis in range(3):
        count = values.shape[axis]

        if count < 3:
            continue

        ahead = values.narrow(axis, 2, count - 2)
        middle = values.narrow(axis, 1, count - 2)
        behind = values.narrow(axis, 0, count - 2)
        second = (ahead - 2.0 * middle + behind) / (step * step)
        total.append(tree_mean(tree_sum(second * second, dim=-1)))

    if len(total) == 0:
        return torch.zeros((), dtype=DTYPE)

    return tree_sum(torch.stack(total))


def reg_loss(view: FrameView, points: torch.Tensor) -> LossTerms:
    """
    Eikonal, hessian, flow hessian and dynamic sparsity terms of frame t.

    :param view: FrameView, The fields of frame t.
    :param points: torch.Tensor, Uniform sample points (N, 3), N >= 1.
    :return: LossTerms

    :raises: ValueError

    """

    if points.shape[0] < 1:
        raise ValueError("regularization needs at least one sample point")

    fields = view.fields
    t = view.t
    step = fields.spec.resolution
    zero = torch.zeros((), dtype=DTYPE)
    terms = {
        "eikonal_s": eikonal(view.raw_static, points, step),
        "hessian_s": grid_hessian(fields.phi_s[t].values, step),
    }

    if view.single:
        terms.update({"eikonal_d": zero, "hessian_d": zero, "hessian_f": zero, "sparsity_d": zero})
    else:
        terms.update({
            "eikonal_d": eikonal(view.raw_dynamic, points, step),
            "hessian_d": grid_hessian(fields.phi_d[t].values, step),
            "hessian_f": grid_hessian(fields.flow_backward[t].values, step) + grid_hessian(fields.flow_forward[t].values, step),
            "sparsity_d": tree_mean(torch.relu(-view.raw_dynamic(points))),
        })

    return LossTerms(terms)


class IterationBatch(NamedTuple):
    """
    Everything one iteration supervises frame t with.
    """

    t: int
    static: SupervisionRays
    dynamic: SupervisionRays
    patches: List[CameraPatch]
    points: torch.Tensor
    labels: Optional[PseudoLabels]


class Objective(object):
    """
    Objective Class

    The weighted training objective and the switches that shape it.

    Attributes:
        weights (`LossWeights`): The loss weights.
        aggregation (`AggParams`): Temporal aggregation settings.
        samples (`int`): Samples per training ray.
        normalize_depth (`bool`): Divide rendered depth by the weight sum in the range loss.
        single (`bool`): One field carries the whole scene.
        similarity (`bool`): Whether the similarity-flow term is used.

    """

    def __init__(
            self,
            weights: LossWeights,
            aggregation: AggParams,
            samples: int,
            normalize_depth: Optional[bool] = False,
            single: Optional[bool] = False,
            similarity: Optional[bool] = True) -> None:
        self.weights = weights
        self.aggregation = aggregation
        self.samples = samples
        self.normalize_depth = bool(normalize_depth)
        self.single = bool(single)
        self.similarity = bool(similarity)

    def view(self, fields: FrameFields, t: int) -> FrameView:
        return FrameView(fields=fields, t=t, params=self.aggregation, single=self.single)

    def terms(self, fields: FrameFields, batch: IterationBatch) -> LossTerms:
        """
        Evaluate every loss term of an iteration.

        :param fields: FrameFields, The fields.
        :param batch: IterationBatch, The supervision.
        :return: LossTerms

        """

        view = self.view(fields, batch.t)
        terms = lidar_loss(batch.static, batch.dynamic, view, self.samples, self.normalize_depth)
        terms.update(photo_loss(batch.patches, view, self.samples))
        terms.update(reg_loss(view, batch.points))

        if self.similarity and not self.single and batch.labels is not None:
            t = batch.t
            terms.update(LossTerms({
                "sim": sim_flow_loss(fields.flow_backward[t], fields.flow_forward[t], batch.labels, fields.phi_d[t], fields.a),
            }))
        else:
            terms.update(LossTerms({"sim": torch.zeros((), dtype=DTYPE)}))

        for name in terms:
            logger.debug(f"frame {batch.t} {name}: {float(terms[name]):.6g}")

        return terms


def total_loss(
        fields: FrameFields,
        batch: IterationBatch,
        objective: Objective,
        iteration: Optional[int] = None) -> Tuple[torch.Tensor, LossTerms]:
    """
    Weighted sum of every term.

    :param fields: FrameFields, The fields.
    :param batch: IterationBatch, The supervision.
    :param objective: Objective, Weights and switches.
    :param iteration: Optional[int], The iteration, for error reports.
    :return: Tuple[torch.Tensor, LossTerms]

    :raises: NonFiniteLossError

    """

    terms = objective.terms(fields, batch)
    terms.check(iteration)
    return terms.weighted(objective.weights), terms


def gradients(fields: FrameFields, batch: IterationBatch, objective: Objective) -> Tuple[torch.Tensor, List[torch.Tensor], torch.Tensor]:
    """
    Adjoint gradients of the total loss.

    :param fields: FrameFields, Fields whose grids and `log_a` require gradients.
    :param batch: IterationBatch, The supervision.
    :param objective: Objective, Weights and switches.
    :return: Tuple, The loss, the grid gradients (order of `FrameFields.parameters`) and
        the gradient of `log_a`.

    """

    loss, _ = total_loss(fields, batch, objective)
    parameters = fields.parameters() + [fields.log_a]
    grads = torch.autograd.grad(loss, parameters, allow_unused=True)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(parameters, grads)]
    return loss, grads[:-1], grads[-1]
