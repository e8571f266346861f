from dataclasses import dataclass
import enum
import math
from typing import Optional


class ShapeKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM_BALL = "uniform-ball"
    STUDENT_T = "student-t"


@dataclass(frozen=True)
class ShapeDistribution:
    """Spherically symmetric standard waveform f(z) = g(‖z‖).

    Normalized to unit mass, zero mean and identity covariance. ``log_normalizer``
    is log g(0); ``support_radius`` is finite only for the uniform ball.
    """

    kind: ShapeKind
    dim: int
    nu: Optional[float] = None
    log_normalizer: float = 0.0
    support_radius: float = math.inf

    @property
    def is_smooth(self) -> bool:
        return self.kind is not ShapeKind.UNIFORM_BALL

    @property
    def label(self) -> str:
        if self.kind is ShapeKind.STUDENT_T:
            return f"{self.kind.value}({self.nu:g})"
        return self.kind.value
