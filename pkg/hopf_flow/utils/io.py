"""Plain-text persistence: curve snapshots, trajectory CSV, torus meshes, JSON reports and run configs."""
import csv
import math
from pathlib import Path
from typing import Optional, Tuple, Union
import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError
from hopf_flow.constants.flow_constants import MODULUS_COLUMNS, TRAJECTORY_COLUMNS
from hopf_flow.exceptions.flow_exceptions import ConfigError, ParseError
from hopf_flow.exceptions.geometry_exceptions import NonUnitInputError
from hopf_flow.models.curve import DiscreteCurve
from hopf_flow.models.flow import FlowState
from hopf_flow.models.hopf import HopfTorusMesh
from hopf_flow.models.moduli import ModulusPoint
from hopf_flow.models.run_config import RunConfig
from hopf_flow.utils.logger import logger, log_error

PathLike = Union[str, Path]


def fmt(value: float) -> str:
    """Scientific notation with enough digits to read back the same double."""
    return f"{float(value):.17e}"


def write_snapshot(curve: DiscreteCurve, path: PathLike, t: float = 0.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{curve.size} {curve.orientation} {fmt(t)}"]
    lines.extend(
        f"{index} {fmt(x)} {fmt(y)} {fmt(z)}" for index, (x, y, z) in enumerate(curve.nodes)
    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@log_error(logger)
def read_snapshot(path: PathLike) -> Tuple[DiscreteCurve, float]:
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines()]
    if not lines:
        raise ParseError(1, "empty file")
    header = lines[0].split()
    try:
        size, orientation, t = int(header[0]), int(header[1]), float(header[2])
    except (IndexError, ValueError):
        raise ParseError(1, f"expected 'N orientation t', got '{lines[0]}'")
    if len(header) != 3 or size < 1 or orientation not in (1, -1):
        raise ParseError(1, f"invalid header '{lines[0]}'")

    nodes = np.empty((size, 3))
    rows = [(number, line) for number, line in enumerate(lines[1:], start=2) if line.strip()]
    if len(rows) != size:
        raise ParseError(len(lines), f"expected {size} node rows, found {len(rows)}")
    for expected, (number, line) in enumerate(rows):
        fields = line.split()
        try:
            index = int(fields[0])
            values = [float(item) for item in fields[1:]]
        except (IndexError, ValueError):
            raise ParseError(number, f"unreadable row '{line}'")
        if index != expected or len(values) != 3 or not all(map(math.isfinite, values)):
            raise ParseError(number, f"row '{line}' is not 'index x y z' for index {expected}")
        nodes[expected] = values

    try:
        curve = DiscreteCurve(nodes=nodes, orientation=orientation)
    except (NonUnitInputError, ValidationError) as e:
        raise ParseError(2, f"nodes are not on the unit sphere: {e}")
    return curve, t


class TrajectoryWriter:
    """Row-by-row trajectory CSV; modulus columns are appended when moduli are tracked."""

    def __init__(self, path: PathLike, with_moduli: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.with_moduli = with_moduli
        self._handle = None
        self._writer = None

    def __enter__(self) -> "TrajectoryWriter":
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        columns = TRAJECTORY_COLUMNS + (MODULUS_COLUMNS if self.with_moduli else [])
        self._writer.writerow(columns)
        return self

    def __exit__(self, *exc) -> None:
        self._handle.close()

    def write(self, state: FlowState, point: Optional[ModulusPoint] = None) -> None:
        report = state.report
        embedded = "" if report.embedded is None else int(report.embedded)
        row = [
            fmt(state.t), fmt(report.energy), fmt(report.length),
            "" if report.area is None else fmt(report.area),
            fmt(report.sup_kappa), fmt(report.gradient_l2), fmt(report.dissipation),
            fmt(state.stats.dt_used), embedded,
        ]
        if self.with_moduli:
            if point is None:
                row.extend([""] * len(MODULUS_COLUMNS))
            else:
                row.extend([fmt(point.tau_re), fmt(point.tau_im), fmt(point.reduced_re),
                            fmt(point.reduced_im), point.word])
        self._writer.writerow(row)
        self._handle.flush()


def read_trajectory(path: PathLike) -> list:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _projection_pole(points: np.ndarray) -> np.ndarray:
    """Of the eight points ±e_k, the one with the largest distance to the mesh."""
    flat = points.reshape(-1, 4)
    candidates = np.concatenate([np.eye(4), -np.eye(4)])
    clearance = [float(np.min(np.linalg.norm(flat - pole, axis=1))) for pole in candidates]
    return candidates[int(np.argmax(clearance))]


def stereographic(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    axis = int(np.argmax(np.abs(pole)))
    height = points @ pole
    rest = np.delete(points, axis, axis=-1)
    return rest / (1.0 - height)[..., None]


def write_mesh(mesh: HopfTorusMesh, path: PathLike, stereographic_block: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    size, fibers = mesh.shape
    points = mesh.points
    seam_shift = int(round(mesh.lift.parameter_holonomy * fibers / (2.0 * math.pi)))

    lines = [f"# hopf torus {size}x{fibers} holonomy {fmt(mesh.holonomy)}"]
    lines.extend(f"v {fmt(w)} {fmt(x)} {fmt(y)} {fmt(z)}" for w, x, y, z in points.reshape(-1, 4))
    if stereographic_block:
        pole = _projection_pole(points)
        lines.append(f"# stereographic from {' '.join(fmt(c) for c in pole)}")
        lines.extend(f"v3 {fmt(x)} {fmt(y)} {fmt(z)}" for x, y, z in stereographic(points, pole).reshape(-1, 3))

    def vertex(row: int, column: int) -> int:
        if row == size:
            row, column = 0, column + seam_shift
        return row * fibers + column % fibers + 1

    for row in range(size):
        for column in range(fibers):
            lines.append(
                f"f {vertex(row, column)} {vertex(row + 1, column)} "
                f"{vertex(row + 1, column + 1)} {vertex(row, column + 1)}"
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(record: BaseModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_run_config(path: PathLike) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config_file", f"{path} is not a readable file")
    values = dotenv_values(path)
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError(missing[0], "expected key=value")
    try:
        return RunConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "config"
        raise ConfigError(key, error["msg"]) from e
