from typing import List, Optional
from occflow.enums import Shape
from occflow.models import EgoTrajectory, GridSpec, LidarScan, PinholeCamera, SceneDescription, ScenePrimitive


def tiny_grid(resolution: float = 0.2) -> GridSpec:
    return GridSpec(origin=[-1.6, -1.6, -0.4], extent=[3.2, 3.2, 1.6], resolution=resolution)


def tiny_scene(
        velocity: Optional[List[float]] = None,
        heading: float = 0.0,
        frames: int = 4,
        dynamic: bool = True) -> SceneDescription:
    """
    Build a small scene: a ground plane, a static crate ahead of the ego and a ball
    on its left rolling along +x at 0.1 m per frame.

    :param velocity: Optional[List[float]], Ego translation per frame (m).
    :param heading: float, Ego yaw at frame 0 (degrees).
    :param frames: int, Number of frames.
    :param dynamic: bool, Whether the ball is part of the scene.
    :return: SceneDescription

    """

    primitives = [
        ScenePrimitive(name="ground", shape=Shape.GROUND_PLANE, center=[0.0, 0.0, 0.0], albedo=[0.5, 0.5, 0.5]),
        ScenePrimitive(
            name="crate", shape=Shape.BOX, center=[1.0, 0.0, 0.3], half_extents=[0.3, 0.3, 0.3], albedo=[0.8, 0.4, 0.1]
        ),
    ]

    if dynamic:
        primitives.append(ScenePrimitive(
            name="ball",
            shape=Shape.SPHERE,
            center=[0.0, 1.0, 0.4],
            radius=0.3,
            velocity=[0.1, 0.0, 0.0],
            albedo=[0.1, 0.3, 0.9],
            dynamic=True,
        ))

    return SceneDescription(
        name="tiny",
        grid=tiny_grid(),
        primitives=primitives,
        cameras=[PinholeCamera(name="front", width=16, height=12, fov=90.0, position=[0.0, 0.0, 0.3], pitch=10.0)],
        lidar=LidarScan(position=[0.0, 0.0, 0.3], azimuths=48, channels=6, elevation=[-40.0, 0.0]),
        ego=EgoTrajectory(heading=heading, velocity=velocity or [0.0, 0.0, 0.0]),
        frames=frames,
        frame_dt=0.1,
    )
