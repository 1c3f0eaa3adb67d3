from pydantic import BaseModel, ConfigDict
import numpy as np


class Quaternion(BaseModel):
    """w + x·i + y·j + z·k"""
    model_config = ConfigDict(frozen=True)

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, values) -> "Quaternion":
        w, x, y, z = (float(v) for v in np.asarray(values, dtype=float).reshape(4))
        return cls(w=w, x=x, y=y, z=z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(
                w=self.w * other.w - self.x * other.x - self.y * other.y - self.z * other.z,
                x=self.w * other.x + self.x * other.w + self.y * other.z - self.z * other.y,
                y=self.w * other.y - self.x * other.z + self.y * other.w + self.z * other.x,
                z=self.w * other.z + self.x * other.y - self.y * other.x + self.z * other.w,
            )
        return Quaternion(w=self.w * other, x=self.x * other, y=self.y * other, z=self.z * other)

    def __rmul__(self, scalar: float) -> "Quaternion":
        return self * scalar

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(w=self.w + other.w, x=self.x + other.x, y=self.y + other.y, z=self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return self + other * -1.0

    def __neg__(self) -> "Quaternion":
        return self * -1.0

    def conjugate(self) -> "Quaternion":
        return Quaternion(w=self.w, x=-self.x, y=-self.y, z=-self.z)

    def tilde(self) -> "Quaternion":
        return Quaternion(w=self.w, x=-self.x, y=self.y, z=self.z)

    def norm(self) -> float:
        return float(np.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2))

    def isclose(self, other: "Quaternion", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.as_array(), other.as_array(), atol=atol, rtol=0.0))
