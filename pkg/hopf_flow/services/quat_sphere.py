"""Quaternion kernel for S³ ⊂ ℍ and S² = S³ ∩ span{1, j, k}.

Arrays carry quaternions along a trailing axis of length 4 ordered (1, i, j, k)
and points of S² along a trailing axis of length 3 ordered (1, j, k). All
functions broadcast over leading axes.
"""
from typing import Union
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.exceptions.geometry_exceptions import NonTangentInputError, NonUnitInputError
from hopf_flow.models.quaternion import Quaternion

settings = get_settings()

QuaternionLike = Union[Quaternion, np.ndarray]

_CONJUGATE = np.array([1.0, -1.0, -1.0, -1.0])
_TILDE = np.array([1.0, -1.0, 1.0, 1.0])
_S2_AXES = [0, 2, 3]


def _as_array(q) -> np.ndarray:
    if isinstance(q, Quaternion):
        return q.as_array()
    return np.asarray(q, dtype=float)


def _like(template, values: np.ndarray):
    if isinstance(template, Quaternion):
        return Quaternion.from_array(values)
    return values


def qmul(p, q) -> np.ndarray:
    p, q = _as_array(p), _as_array(q)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def qprod(*factors, unit: bool = True) -> np.ndarray:
    """Left-to-right product of several quaternion arrays; unit chains are renormalized every RENORMALIZE_EVERY products."""
    if not factors:
        raise ValueError("qprod needs at least one factor")
    result = _as_array(factors[0])
    for count, factor in enumerate(factors[1:], start=1):
        result = qmul(result, factor)
        if unit and count % settings.RENORMALIZE_EVERY == 0:
            result = normalize(result)
    return result


def qconj(q) -> np.ndarray:
    return _as_array(q) * _CONJUGATE


def qtilde(q) -> np.ndarray:
    return _as_array(q) * _TILDE


def qdot(p, q) -> np.ndarray:
    return np.sum(_as_array(p) * _as_array(q), axis=-1)


def normalize(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values / np.linalg.norm(values, axis=-1, keepdims=True)


def embed_s2(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape[:-1] + (4,))
    out[..., _S2_AXES] = p
    return out


def project_s2(q) -> np.ndarray:
    return _as_array(q)[..., _S2_AXES]


def exp_i(phi) -> np.ndarray:
    """e^{iφ} for scalar or array φ."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape + (4,))
    out[..., 0] = np.cos(phi)
    out[..., 1] = np.sin(phi)
    return out


def exp_j(angle) -> np.ndarray:
    angle = np.asarray(angle, dtype=float)
    out = np.zeros(angle.shape + (4,))
    out[..., 0] = np.cos(angle)
    out[..., 2] = np.sin(angle)
    return out


def _require_unit(values: np.ndarray, label: str) -> None:
    deviation = np.abs(np.linalg.norm(values, axis=-1) - 1.0)
    worst = float(np.max(deviation)) if deviation.size else 0.0
    if worst > settings.UNIT_TOLERANCE:
        raise NonUnitInputError(f"{label}: norm deviation {worst:.3e}")


def involution(q: QuaternionLike) -> QuaternionLike:
    """q ↦ q̃, fixing 1, j, k and sending i to −i."""
    return _like(q, qtilde(q))


def hopf_map(q: QuaternionLike) -> np.ndarray:
    values = _as_array(q)
    _require_unit(values, "hopf_map")
    return project_s2(qmul(qtilde(values), values))


def hopf_differential(q: QuaternionLike, v: QuaternionLike) -> np.ndarray:
    base, vector = _as_array(q), _as_array(v)
    _require_unit(base, "hopf_differential")
    scale = np.maximum(np.linalg.norm(vector, axis=-1), 1.0)
    if np.any(np.abs(qdot(base, vector)) > settings.UNIT_TOLERANCE * scale):
        raise NonTangentInputError(f"max |<q, v>| = {np.max(np.abs(qdot(base, vector))):.3e}")
    return project_s2(qmul(qtilde(vector), base) + qmul(qtilde(base), vector))


def rotate_s2(p, r: QuaternionLike) -> np.ndarray:
    """p ↦ r̃·p·r"""
    point, rotor = np.asarray(p, dtype=float), _as_array(r)
    _require_unit(point, "rotate_s2 point")
    _require_unit(rotor, "rotate_s2 rotor")
    return project_s2(qprod(qtilde(rotor), embed_s2(point), rotor))


def rotation_matrix(r: QuaternionLike) -> np.ndarray:
    rotor = _as_array(r)
    return np.stack([rotate_s2(axis, rotor) for axis in np.eye(3)], axis=-1)


def fiber_seed(p) -> np.ndarray:
    """A point of π⁻¹(p), written q = z₁ + z₂·j with z₁ real on the northern half and z₂ real on the southern."""
    p = np.asarray(p, dtype=float)
    _require_unit(p, "fiber_seed")
    p0, p1, p2 = np.moveaxis(p, -1, 0)
    north = p0 >= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = np.sqrt(np.clip((1.0 + p0) / 2.0, 0.0, None))
        z2 = np.sqrt(np.clip((1.0 - p0) / 2.0, 0.0, None))
        seed_north = np.stack([z1, np.zeros_like(z1), p1 / (2 * z1), p2 / (2 * z1)], axis=-1)
        seed_south = np.stack([p1 / (2 * z2), -p2 / (2 * z2), z2, np.zeros_like(z2)], axis=-1)
    seed = np.where(north[..., None], seed_north, seed_south)
    return normalize(seed)


def onto_fiber(q, p) -> np.ndarray:
    """Nearest point of π⁻¹(p) to q: the fiber is the circle e^{iφ}·s through s = fiber_seed(p)."""
    seed = fiber_seed(p)
    turned = qmul(exp_i(np.full(seed.shape[:-1], 0.5 * np.pi)), seed)
    along, across = qdot(q, seed), qdot(q, turned)
    return normalize(along[..., None] * seed + across[..., None] * turned)


def horizontal_lift_vector(q, v) -> np.ndarray:
    """½·(q̄)~·v, the horizontal vector at q whose image under Dπ_q is v."""
    return 0.5 * qmul(qtilde(qconj(q)), embed_s2(v))


def lift_generator(q, v) -> np.ndarray:
    """a = ½·(q̄)~·v·q̄ restricted to span{j, k}, so that a·q is the horizontal lift of v."""
    a = 0.5 * qmul(qmul(qtilde(qconj(q)), embed_s2(v)), qconj(q))
    a[..., :2] = 0.0
    return a


def wrap_angle(angle):
    """Representative in (−π, π]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)
