import math
from enum import Enum
from typing import List

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

# Energy regime below which embeddedness and the length/area bounds are guaranteed
ENERGY_REGIME = 8.0


class DifferentiationMethod(str, Enum):
    STENCIL = "stencil"
    FOURIER = "fourier"


class TimeScheme(str, Enum):
    EXPLICIT_RK4 = "explicit-rk4"
    IMEX = "imex"


class TerminationReason(str, Enum):
    GREAT_CIRCLE = "great_circle"
    STATIONARY = "stationary"
    MAX_STEPS = "max_steps"
    MAX_TIME = "max_time"
    SINGULARITY_SUSPECTED = "singularity_suspected"


class CurveFamilyName(str, Enum):
    LATITUDE = "latitude"
    PERTURBED_GREAT_CIRCLE = "perturbed_great_circle"
    LISSAJOUS = "lissajous"
    FROM_FILE = "from_file"


class FindingSeverity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class FlowDefaults:
    NODES = 256
    DT = 1e-4
    DT_MIN = 1e-12
    DT_MAX = 5e-2
    DT_GROWTH = 1.25
    CFL = 0.5
    ENERGY_TOLERANCE = 1e-10
    MAX_HALVINGS = 20
    RESAMPLE_EVERY = 25
    MAX_STEPS = 200000
    T_MAX = 1e3
    KAPPA_TOL = 1e-4
    ENERGY_GAP_TOL = 1e-6
    GRADIENT_TOL = 1e-10
    KAPPA_CEILING = 1e4
    SAMPLE_EVERY = 10


class ModuliDefaults:
    # Tie tolerance on the fundamental-domain boundary
    BOUNDARY_TOLERANCE = 1e-12
    MAX_REDUCTION_STEPS = 10000


TRAJECTORY_COLUMNS: List[str] = [
    "t", "energy", "length", "area", "sup_kappa",
    "grad_l2", "dissipation", "dt", "embedded",
]

MODULUS_COLUMNS: List[str] = [
    "tau_re", "tau_im", "tau_red_re", "tau_red_im", "word",
]


class ErrorMessages:
    NON_UNIT = "Input is not a unit quaternion / unit vector"
    NON_TANGENT = "Vector is not tangent to S^3 at the base point"
    TOO_COARSE = "Curve has too few nodes for periodic differentiation"
    DEGENERATE_CURVE = "Curve is not regular"
    NOT_EMBEDDED = "Curve is not embedded; enclosed area is undefined"
    SEED_OFF_FIBER = "Lift seed does not lie on the fiber over the first node"
    MESH_MISMATCH = "Torus mesh was not built from this curve"
    DEGENERATE_METRIC = "Discrete first fundamental form is degenerate"
    STEP_FAILURE = "Time step rejected after the maximal number of dt halvings"
    RESAMPLED = "Node correspondence broken by resampling between samples"
    REGIME = "Initial elastic energy outside the regime E0 < 8"
    CONFIG = "Invalid run configuration"
    PARSE = "Malformed snapshot file"
