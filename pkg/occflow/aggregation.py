"""
Temporal aggregation of the per-frame fields over t-1, t and t+1.

Neighbor frames are queried at ego-aligned points. The static field is averaged in place;
the dynamic field is sampled at flow-warped points and blended with a weight gated by the
dynamic occupancy of frame t.
"""
import logging
from typing import Dict, List, Optional, Union
import numpy as np
import torch
from occflow.enums import FlowDirection
from occflow.grids import DTYPE, ScalarGrid3, VectorGrid3, sigmoid_occ, blend_sdf, blend_weights
from occflow.models import GridSpec, AggParams


logger = logging.getLogger(__name__)

Points = Union[np.ndarray, torch.Tensor]


class FrameFields(object):
    """
    Frame Fields Class

    The optimizable scene: per-frame SDF, color and flow grids on one volume, the ego
    pose of every frame and the shared sharpness `a = exp(log_a)`.

    Attributes:
        spec (`GridSpec`): The volume every grid lives on.
        poses (`List[np.ndarray]`): Ego-to-world transforms (4x4), one per frame.
        phi_s (`List[ScalarGrid3]`): Static SDFs.
        phi_d (`List[ScalarGrid3]`): Dynamic SDFs.
        color_s (`List[VectorGrid3]`): Static colors.
        color_d (`List[VectorGrid3]`): Dynamic colors.
        flow_backward (`List[VectorGrid3]`): Flows to t-1 (m per frame, frame-t ego axes).
        flow_forward (`List[VectorGrid3]`): Flows to t+1.
        log_a (`torch.Tensor`): Log of the sharpness.

    """

    GROUPS = ["phi_s", "phi_d", "color_s", "color_d", "flow_backward", "flow_forward"]

    def __init__(
            self,
            spec: GridSpec,
            poses: List[np.ndarray],
            phi_s: List[ScalarGrid3],
            phi_d: List[ScalarGrid3],
            color_s: List[VectorGrid3],
            color_d: List[VectorGrid3],
            flow_backward: List[VectorGrid3],
            flow_forward: List[VectorGrid3],
            log_a: torch.Tensor) -> None:
        self.spec = spec
        self.poses = [np.asarray(p, dtype=np.float64) for p in poses]
        self.phi_s = phi_s
        self.phi_d = phi_d
        self.color_s = color_s
        self.color_d = color_d
        self.flow_backward = flow_backward
        self.flow_forward = flow_forward
        self.log_a = torch.as_tensor(log_a, dtype=DTYPE)
        self.check()

    def check(self) -> None:
        """
        Check that every group has one grid per frame on the shared volume and that the
        poses are rigid.

        :return: None

        :raises: ValueError

        """

        for name in self.GROUPS:
            grids = getattr(self, name)

            if len(grids) != len(self.poses):
                raise ValueError(f"`{name}` holds {len(grids)} grids for {len(self.poses)} frames")

            for grid in grids:
                if grid.spec != self.spec:
                    raise ValueError(f"`{name}` grid does not share the scene volume")

        for t, pose in enumerate(self.poses):
            if pose.shape != (4, 4) or not np.allclose(pose[:3, :3] @ pose[:3, :3].T, np.eye(3), atol=1e-9):
                raise ValueError(f"pose of frame {t} is not a rigid transform")

    @classmethod
    def initial(
            cls,
            spec: GridSpec,
            poses: List[np.ndarray],
            a: float = 10.0,
            static: float = 0.5,
            dynamic: float = 1.0,
            requires_grad: bool = True) -> 'FrameFields':
        """
        Create free-space fields: constant positive SDFs, gray colors and zero flows.

        :param spec: GridSpec, The volume.
        :param poses: List[np.ndarray], The ego poses.
        :param a: float, Initial sharpness.
        :param static: float, Initial static SDF (m).
        :param dynamic: float, Initial dynamic SDF (m).
        :param requires_grad: bool, Whether the grids are optimizable leaves.
        :return: FrameFields

        """

        count = len(poses)

        def scalars(fill: float) -> List[ScalarGrid3]:
            return [ScalarGrid3.full(spec, fill, requires_grad=requires_grad) for _ in range(count)]

        def vectors(fill: float) -> List[VectorGrid3]:
            return [VectorGrid3.full(spec, fill, requires_grad=requires_grad) for _ in range(count)]

        return cls(
            spec=spec,
            poses=poses,
            phi_s=scalars(static),
            phi_d=scalars(dynamic),
            color_s=vectors(0.5),
            color_d=vectors(0.5),
            flow_backward=vectors(0.0),
            flow_forward=vectors(0.0),
            log_a=torch.tensor(float(np.log(a)), dtype=DTYPE, requires_grad=requires_grad),
        )

    @property
    def frames(self) -> int:
        return len(self.poses)

    @property
    def a(self) -> torch.Tensor:
        return torch.exp(self.log_a)

    def has(self, t: int) -> bool:
        return 0 <= t < self.frames

    def flow(self, t: int, direction: FlowDirection) -> VectorGrid3:
        if FlowDirection(direction) == FlowDirection.FORWARD:
            return self.flow_forward[t]

        return self.flow_backward[t]

    def grids(self, name: str) -> List[torch.Tensor]:
        return [grid.values for grid in getattr(self, name)]

    def parameters(self) -> List[torch.Tensor]:
        """
        Get every grid tensor, group by group and frame by frame (`log_a` excluded).

        :return: List[torch.Tensor]

        """

        return [values for name in self.GROUPS for values in self.grids(name)]

    def arrays(self) -> Dict[str, np.ndarray]:
        """
        Get every grid and `log_a` as arrays keyed `<group>_<frame>`.

        :return: Dict[str, np.ndarray]

        """

        arrays = {"log_a": self.log_a.detach().numpy().reshape(1)}

        for name in self.GROUPS:
            for t, grid in enumerate(getattr(self, name)):
                arrays[f"{name}_{t:03d}"] = grid.numpy()

        return arrays

    @classmethod
    def from_arrays(
            cls,
            spec: GridSpec,
            poses: List[np.ndarray],
            arrays: Dict[str, np.ndarray],
            requires_grad: bool = False) -> 'FrameFields':
        """
        Rebuild fields from the arrays produced by `arrays`.

        :param spec: GridSpec, The volume.
        :param poses: List[np.ndarray], The ego poses.
        :param arrays: Dict[str, np.ndarray], The arrays.
        :param requires_grad: bool, Whether the grids are optimizable leaves.
        :return: FrameFields

        :raises: KeyError

        """

        groups = {}

        for name in cls.GROUPS:
            kind = ScalarGrid3 if name.startswith("phi") else VectorGrid3
            groups[name] = [
                kind(spec=spec, values=torch.from_numpy(np.array(arrays[f"{name}_{t:03d}"])).to(DTYPE).requires_grad_(requires_grad))
                for t in range(len(poses))
            ]

        log_a = torch.tensor(float(np.asarray(arrays["log_a"]).reshape(-1)[0]), dtype=DTYPE, requires_grad=requires_grad)
        return cls(spec=spec, poses=poses, log_a=log_a, **groups)

    def detach(self) -> 'FrameFields':
        groups = {name: [grid.detach() for grid in getattr(self, name)] for name in self.GROUPS}
        return FrameFields(spec=self.spec, poses=self.poses, log_a=self.log_a.detach(), **groups)


def align_point(x: Points, pose_t: np.ndarray, pose_u: np.ndarray) -> Points:
    """
    Express frame-t ego points in frame-u ego coordinates, `pose_u^-1 pose_t x`.

    :param x: Points, Points (..., 3), numpy or torch.
    :param pose_t: np.ndarray, Ego-to-world transform of frame t.
    :param pose_u: np.ndarray, Ego-to-world transform of frame u.
    :return: Points, Same type as `x`.

    """

    relative = np.linalg.solve(np.asarray(pose_u, dtype=np.float64), np.asarray(pose_t, dtype=np.float64))

    if isinstance(x, torch.Tensor):
        relative = torch.from_numpy(relative).to(DTYPE)
        return x @ relative[:3, :3].T + relative[:3, 3]

    return np.asarray(x, dtype=np.float64) @ relative[:3, :3].T + relative[:3, 3]


def _neighbors(fields: FrameFields, t: int) -> bool:
    return fields.has(t - 1) and fields.has(t + 1)


def _maybe_detach(value: torch.Tensor, params: AggParams) -> torch.Tensor:
    return value.detach() if params.stop_gradient_neighbors else value


def aggregate_static(x: Points, fields: FrameFields, t: int, params: AggParams) -> torch.Tensor:
    """
    Aggregated static SDF, `lambda (phi_{t-1} + phi_{t+1}) / 2 + (1 - lambda) phi_t`.

    Falls back to `phi_t` when static aggregation is off or a neighbor frame is missing.

    :param x: Points, Frame-t ego points (..., 3).
    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :param params: AggParams, Aggregation settings.
    :return: torch.Tensor, Values (...).

    """

    x = torch.as_tensor(x, dtype=DTYPE)
    current = fields.phi_s[t].sample(x)

    if not params.static or params.lambda_ag == 0.0 or not _neighbors(fields, t):
        return current

    pose = fields.poses[t]
    before = _maybe_detach(fields.phi_s[t - 1].sample(align_point(x, pose, fields.poses[t - 1])), params)
    after = _maybe_detach(fields.phi_s[t + 1].sample(align_point(x, pose, fields.poses[t + 1])), params)
    return params.lambda_ag * (before + after) / 2.0 + (1.0 - params.lambda_ag) * current


def aggregate_dynamic(x: Points, fields: FrameFields, t: int, params: AggParams) -> torch.Tensor:
    """
    Aggregated dynamic SDF.

    The neighbors are sampled at the warped points `x + f_{t-}(x)` and `x + f_{t+}(x)`
    (aligned to their frames) and blended with the weight `lambda * occupancy(phi^d_t(x))`,
    so the flows receive gradients through the sample positions.

    :param x: Points, Frame-t ego points (..., 3).
    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :param params: AggParams, Aggregation settings.
    :return: torch.Tensor, Values (...).

    """

    x = torch.as_tensor(x, dtype=DTYPE)
    current = fields.phi_d[t].sample(x)

    if not params.dynamic or params.lambda_ag == 0.0 or not _neighbors(fields, t):
        return current

    pose = fields.poses[t]
    gate = params.lambda_ag * sigmoid_occ(current, fields.a)
    warped_before = x + fields.flow_backward[t].sample(x)
    warped_after = x + fields.flow_forward[t].sample(x)
    previous, following = fields.phi_d[t - 1], fields.phi_d[t + 1]

    # flows keep their gradient path through the sample positions
    if params.stop_gradient_neighbors:
        previous, following = previous.detach(), following.detach()

    before = previous.sample(align_point(warped_before, pose, fields.poses[t - 1]))
    after = following.sample(align_point(warped_after, pose, fields.poses[t + 1]))
    return gate * (before + after) / 2.0 + (1.0 - gate) * current


def blend_aggregated(x: Points, fields: FrameFields, t: int, params: AggParams) -> torch.Tensor:
    """
    Smooth minimum of the aggregated static and dynamic SDFs.

    :param x: Points, Frame-t ego points (..., 3).
    :param fields: FrameFields, The fields.
    :param t: int, The frame.
    :param params: AggParams, Aggregation settings.
    :return: torch.Tensor

    """

    return blend_sdf(
        aggregate_static(x, fields, t, params),
        aggregate_dynamic(x, fields, t, params),
        fields.a,
        params.sharpness.tau,
    )


class FrameView(object):
    """
    Frame View Class

    Field queries of one frame, as the renderer consumes them. With `single` set the
    static field carries the whole scene and the dynamic field is ignored.

    Attributes:
        fields (`FrameFields`): The fields.
        t (`int`): The frame.
        params (`AggParams`): Aggregation settings.
        single (`bool`): Single-field mode.

    """

    def __init__(self, fields: FrameFields, t: int, params: AggParams, single: Optional[bool] = False) -> None:
        if not fields.has(t):
            raise ValueError(f"frame {t} is outside the sequence of {fields.frames} frames")

        self.fields = fields
        self.t = t
        self.params = params
        self.single = bool(single)

    def static(self, x: torch.Tensor) -> torch.Tensor:
        return aggregate_static(x, self.fields, self.t, self.params)

    def dynamic(self, x: torch.Tensor) -> torch.Tensor:
        return aggregate_dynamic(x, self.fields, self.t, self.params)

    def blended(self, x: torch.Tensor) -> torch.Tensor:
        if self.single:
            return self.static(x)

        return blend_aggregated(x, self.fields, self.t, self.params)

    def raw_static(self, x: torch.Tensor) -> torch.Tensor:
        return self.fields.phi_s[self.t].sample(x)

    def raw_dynamic(self, x: torch.Tensor) -> torch.Tensor:
        return self.fields.phi_d[self.t].sample(x)

    def color(self, x: torch.Tensor) -> torch.Tensor:
        """
        Blended color, the static and dynamic colors mixed by the smooth-min assignment.

        :param x: torch.Tensor, Points (..., 3).
        :return: torch.Tensor, Colors (..., 3).

        """

        static = self.fields.color_s[self.t].sample(x)

        if self.single:
            return static

        w_s, w_d = blend_weights(self.static(x), self.dynamic(x), self.fields.a, self.params.sharpness.tau)
        return w_s[..., None] * static + w_d[..., None] * self.fields.color_d[self.t].sample(x)

    def flow(self, x: torch.Tensor, direction: FlowDirection) -> torch.Tensor:
        return self.fields.flow(self.t, direction).sample(x)
