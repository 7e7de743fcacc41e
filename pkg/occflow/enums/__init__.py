from enum import Enum


class Shape(Enum):
    """
    Shape Enum Class

    The analytic primitives a synthetic scene can be built from.

    """

    """
    Axis-aligned box given by its center and half-extents.

    """
    BOX = "box"

    """
    Sphere given by its center and radius.

    """
    SPHERE = "sphere"

    """
    Horizontal ground plane at the height of the center's z-component.

    """
    GROUND_PLANE = "ground-plane"


class SensorKind(Enum):
    """
    Sensor Kind Enum Class

    """

    """
    Pinhole camera rays (one per pixel), carrying colors and pixel coordinates.

    """
    CAMERA = "camera"

    """
    LiDAR rays over an azimuth/elevation lattice, carrying measured ranges.

    """
    LIDAR = "lidar"


class RayLabel(Enum):
    """
    Ray Label Enum Class

    Static/dynamic pseudo-label of a supervisory ray. The integer values are the ones
    stored in `.rays` payloads.

    """

    """
    Ray supervises the static field (possibly from a neighbor frame).

    """
    STATIC = 0

    """
    Ray supervises the dynamic field (current frame only).

    """
    DYNAMIC = 1

    """
    Ray lies in an uncertain mask region and is not used.

    """
    DISCARD = 2


class FlowDirection(Enum):
    """
    Flow Direction Enum Class

    """

    """
    Displacement from frame t to frame t-1.

    """
    BACKWARD = "backward"

    """
    Displacement from frame t to frame t+1.

    """
    FORWARD = "forward"


class Ablation(Enum):
    """
    Ablation Enum Class

    Switches that disable parts of the method for comparison runs.

    """

    """
    No temporal aggregation for either field.

    """
    NO_TA = "no-ta"

    """
    No temporal aggregation for the dynamic field.

    """
    NO_DYN_TA = "no-dyn-ta"

    """
    No similarity-flow supervision.

    """
    NO_SIM = "no-sim"

    """
    A single SDF carries the whole scene.

    """
    SINGLE_SDF = "single-sdf"


class LabelSource(Enum):
    """
    Label Source Enum Class

    """

    """
    Labels come from projecting LiDAR endpoints into (noisy) dynamic masks and clustering.

    """
    MASKS = "masks"

    """
    Labels are the oracle's exact hit labels, possibly flipped at the noise rate.

    """
    ORACLE = "oracle"


class LogLevel(Enum):
    """
    Log Level Enum Class

    Values accepted by the `OCCFLOW_LOG` environment variable.

    """

    ERROR = "error"
    INFO = "info"
    DEBUG = "debug"
