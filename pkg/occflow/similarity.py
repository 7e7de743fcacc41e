"""
Similarity-flow pseudo-labels.

Every BEV column of the dynamic occupancy is a feature vector. The displacement of a
column between frames is the offset, inside an N x N window, of the most cosine-similar
column of the ego-aligned neighbor frame; scaled by the cell size and broadcast along z it
supervises the predicted flows, weighted by forward/backward consistency.
"""
import logging
from typing import List, NamedTuple, Optional, Tuple
import numpy as np
import torch
from occflow.aggregation import align_point
from occflow.grids import DTYPE, ScalarGrid3, VectorGrid3, sigmoid_occ, tree_sum, tree_mean
from occflow.models import GridSpec, SimFlowParams


logger = logging.getLogger(__name__)


class FeatureMap(object):
    """
    Feature Map Class

    Gradient-free BEV feature map: one vector of length C per (x, y) cell.

    Attributes:
        spec (`GridSpec`): The volume the BEV plane belongs to.
        values (`torch.Tensor`): Features of shape (X, Y, C).
        valid (`torch.Tensor`): Cells with defined content, shape (X, Y).

    """

    def __init__(self, spec: GridSpec, values: torch.Tensor, valid: Optional[torch.Tensor] = None) -> None:
        self.spec = spec
        self.values = values
        self.valid = valid if valid is not None else torch.ones(values.shape[:2], dtype=torch.bool)

    @property
    def values(self) -> torch.Tensor:
        return self._values

    @values.setter
    def values(self, value: torch.Tensor) -> None:
        value = torch.as_tensor(value, dtype=DTYPE).detach()

        if value.dim() != 3 or value.shape[2] < 1:
            raise ValueError(f"features must have shape (X, Y, C) with C >= 1, got {tuple(value.shape)}")

        if not bool(torch.isfinite(value).all()):
            raise ValueError("features must be finite")

        self._values = value

    @property
    def channels(self) -> int:
        return int(self._values.shape[2])

    def unit(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Get the unit-length features and the mask of non-zero ones.

        :return: Tuple[torch.Tensor, torch.Tensor]

        """

        norm = torch.sqrt(tree_sum(self._values * self._values, dim=-1))
        nonzero = norm > 0
        scale = torch.where(nonzero, 1.0 / torch.where(nonzero, norm, torch.ones_like(norm)), torch.zeros_like(norm))
        return self._values * scale[..., None], nonzero


class Matching(NamedTuple):
    """
    Best window offset (cells, x then y) per BEV cell and its cosine similarity.
    """

    displacement: np.ndarray
    similarity: np.ndarray


class PseudoLabels(NamedTuple):
    """
    Backward and forward pseudo-label flows of one frame with their consistency weight.
    """

    backward: VectorGrid3
    forward: VectorGrid3
    weight: torch.Tensor
    similarity: np.ndarray


def build_features(phi_d: ScalarGrid3, a: float, points: Optional[torch.Tensor] = None) -> FeatureMap:
    """
    Build the dynamic occupancy columns of a dynamic SDF grid.

    :param phi_d: ScalarGrid3, The dynamic SDF.
    :param a: float, Sharpness.
    :param points: Optional[torch.Tensor], Query points (X, Y, Z, 3) replacing the cell
        centers, e.g. the centers of another frame aligned into this one.
    :return: FeatureMap, C equals the z dimension.

    """

    spec = phi_d.spec
    a = torch.as_tensor(a, dtype=DTYPE).detach()

    with torch.no_grad():
        if points is None:
            phi = phi_d.values[..., 0]
            valid = torch.ones(spec.dims[:2], dtype=torch.bool)
        else:
            points = torch.as_tensor(points, dtype=DTYPE)
            phi = phi_d.sample(points)
            lower = torch.as_tensor(spec.lower[:2], dtype=DTYPE)
            upper = torch.as_tensor(spec.upper[:2], dtype=DTYPE)
            column = points[:, :, 0, :2]
            valid = torch.all((column >= lower) & (column <= upper), dim=-1)

        return FeatureMap(spec=spec, values=sigmoid_occ(phi, a), valid=valid)


def window_offsets(radius: int) -> List[Tuple[int, int]]:
    """
    List the window offsets in tie-break priority: smaller `|di| + |dj|` first, then
    scan order.

    :param radius: int, Half window size.
    :return: List[Tuple[int, int]]

    """

    offsets = [(di, dj) for di in range(-radius, radius + 1) for dj in range(-radius, radius + 1)]
    return sorted(offsets, key=lambda o: (abs(o[0]) + abs(o[1]), o[0], o[1]))


def similarity_argmax(curr: FeatureMap, prev: FeatureMap, params: SimFlowParams) -> Matching:
    """
    Find, per cell, the window offset whose neighbor-frame feature is most cosine-similar.

    Offsets that leave the map or land on invalid neighbor cells are excluded. Cells with a
    zero feature get offset (0, 0). An offset replaces the current best only when strictly
    more similar.

    :param curr: FeatureMap, Features of the current frame.
    :param prev: FeatureMap, Features of the neighbor frame, aligned to the current one.
    :param params: SimFlowParams, Window size.
    :return: Matching

    :raises: ValueError

    """

    if curr.values.shape != prev.values.shape:
        raise ValueError(f"feature maps differ in shape: {tuple(curr.values.shape)} vs {tuple(prev.values.shape)}")

    r = params.radius
    nx, ny, channels = curr.values.shape
    current, nonzero = curr.unit()
    neighbor, _ = prev.unit()

    padded = torch.zeros((nx + 2 * r, ny + 2 * r, channels), dtype=DTYPE)
    padded[r:r + nx, r:r + ny] = neighbor
    inside = torch.zeros((nx + 2 * r, ny + 2 * r), dtype=torch.bool)
    inside[r:r + nx, r:r + ny] = prev.valid

    best = torch.full((nx, ny), -np.inf, dtype=DTYPE)
    displacement = torch.zeros((nx, ny, 2), dtype=torch.int64)

    for di, dj in window_offsets(r):
        window = padded[r + di:r + di + nx, r + dj:r + dj + ny]
        similarity = tree_sum(current * window, dim=-1)
        similarity = torch.where(inside[r + di:r + di + nx, r + dj:r + dj + ny], similarity, torch.full_like(similarity, -np.inf))
        better = similarity > best
        best = torch.where(better, similarity, best)
        displacement[better] = torch.tensor([di, dj], dtype=torch.int64)

    displacement[~nonzero] = 0
    best = torch.where(nonzero, best, torch.zeros_like(best))
    return Matching(displacement=displacement.numpy(), similarity=best.numpy())


def pseudo_labels(displacement: np.ndarray, spec: GridSpec, params: SimFlowParams) -> VectorGrid3:
    """
    Turn cell displacements into metric flows `(di * cell, dj * cell, 0)` on every z level.

    :param displacement: np.ndarray, Offsets (X, Y, 2).
    :param spec: GridSpec, The volume.
    :param params: SimFlowParams, Cell size.
    :return: VectorGrid3

    """

    displacement = np.asarray(displacement, dtype=np.float64)
    column = np.concatenate([displacement * params.cell, np.zeros(displacement.shape[:2] + (1,))], axis=-1)
    values = np.broadcast_to(column[:, :, None, :], tuple(spec.dims) + (3,)).copy()
    return VectorGrid3(spec=spec, values=torch.from_numpy(values))


def consistency_weight(f_back: torch.Tensor, f_fwd: torch.Tensor, tau_s: float) -> torch.Tensor:
    """
    Forward/backward consistency `exp(-tau_s |f_back + f_fwd|)`.

    :param f_back: torch.Tensor, Backward flows (..., 3).
    :param f_fwd: torch.Tensor, Forward flows (..., 3).
    :param tau_s: float, Decay rate, positive.
    :return: torch.Tensor, Weights (...) in (0, 1].

    :raises: ValueError

    """

    if not tau_s > 0:
        raise ValueError(f"consistency decay must be positive, got {tau_s}")

    total = torch.as_tensor(f_back, dtype=DTYPE) + torch.as_tensor(f_fwd, dtype=DTYPE)
    return torch.exp(-tau_s * torch.sqrt(tree_sum(total * total, dim=-1)))


def frame_labels(
        phi_d: List[ScalarGrid3],
        poses: List[np.ndarray],
        t: int,
        a: float,
        params: SimFlowParams) -> PseudoLabels:
    """
    Compute the backward and forward pseudo-labels of frame `t` from its neighbors.

    :param phi_d: List[ScalarGrid3], Dynamic SDFs of every frame.
    :param poses: List[np.ndarray], Ego poses of every frame.
    :param t: int, The frame; t-1 and t+1 must exist.
    :param a: float, Sharpness.
    :param params: SimFlowParams, Window, decay and cell size.
    :return: PseudoLabels

    :raises: ValueError

    """

    if not (1 <= t < len(phi_d) - 1):
        raise ValueError(f"frame {t} has no neighbors on both sides")

    spec = phi_d[t].spec
    centers = torch.from_numpy(spec.centers()).to(DTYPE)
    curr = build_features(phi_d[t], a)
    labels = []
    similarity = None

    for u in (t - 1, t + 1):
        aligned = align_point(centers, poses[t], poses[u])
        matching = similarity_argmax(curr, build_features(phi_d[u], a, points=aligned), params)
        labels.append(pseudo_labels(matching.displacement, spec, params))
        similarity = matching.similarity if similarity is None else similarity

    backward, forward = labels
    weight = consistency_weight(backward.values, forward.values, params.tau_s)
    return PseudoLabels(backward=backward, forward=forward, weight=weight, similarity=similarity)


def sim_flow_loss(
        flow_backward: VectorGrid3,
        flow_forward: VectorGrid3,
        labels: PseudoLabels,
        phi_d: ScalarGrid3,
        a: float) -> torch.Tensor:
    """
    Gated L1 distance between predicted flows and pseudo-labels, averaged over cells.

    The occupancy gate, the consistency weight and the labels carry no gradient.

    :param flow_backward: VectorGrid3, Predicted flow to t-1.
    :param flow_forward: VectorGrid3, Predicted flow to t+1.
    :param labels: PseudoLabels, The pseudo-labels.
    :param phi_d: ScalarGrid3, Dynamic SDF of the frame.
    :param a: float, Sharpness.
    :return: torch.Tensor

    """

    gate = sigmoid_occ(phi_d.values[..., 0].detach(), torch.as_tensor(a, dtype=DTYPE).detach())
    weight = gate * labels.weight.detach()
    backward = tree_sum(torch.abs(flow_backward.values - labels.backward.values.detach()), dim=-1)
    forward = tree_sum(torch.abs(flow_forward.values - labels.forward.values.detach()), dim=-1)
    return tree_mean(weight * (backward + forward))
