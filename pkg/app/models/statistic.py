from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class StatisticFn:
    """Single-observation statistic x ↦ θ̂(x) ∈ R^m with analytic derivatives.

    All three maps take an (n, d) batch: ``value`` returns (n, m), ``gradient``
    (n, m, d) and ``laplacian`` (n, m).
    """

    name: str
    n_outputs: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
