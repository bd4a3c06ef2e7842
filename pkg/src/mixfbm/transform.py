"""
Fundamental semimartingale Z_t = int_0^t g_H(s, t) dY_s, the martingale M^H,
the drift target Q* and the log-likelihood.

All stochastic integrals are sums over grid cells: the increment of a path on
cell i is weighted by the kernel value of that cell.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import KernelSolveError
from .fredholm import GHKernelFamily
from .paths import GridPath, Role, TimeGrid, check_same_grid, require_role


class QKind(str, enum.Enum):
    TARGET_QSTAR = "target_Qstar"
    GENERIC_QH = "generic_QH"
    ESTIMATE_QHAT = "estimate_Qhat"


@dataclass(frozen=True, eq=False)
class QPath:
    grid: TimeGrid
    values: np.ndarray
    kind: QKind

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n + 1,):
            raise ValueError(f"Q path needs {self.grid.n + 1} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Q path values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", QKind(self.kind))


def kernel_transform(increments: np.ndarray, fam: GHKernelFamily) -> np.ndarray:
    """sum_{i<j} g[j][i] dY_i for every j; works on (..., n) stacks of increments."""
    return np.asarray(increments) @ fam.weights.T


def transform_to_Z(Y: GridPath, fam: GHKernelFamily) -> GridPath:
    """Z(t_j) = sum_{i<j} g_H(cell i, t_j) (Y(t_{i+1}) - Y(t_i)), Z(0) = 0."""
    check_same_grid(Y, fam)
    return GridPath(Y.grid, kernel_transform(Y.increments(), fam), Role.TRANSFORM_Z)


def martingale_from_noise(mixed: GridPath, fam: GHKernelFamily) -> GridPath:
    """M^H_t = int_0^t g_H(s, t) dW~_s on the grid."""
    check_same_grid(mixed, fam)
    require_role(mixed, Role.MIXED)
    return GridPath(mixed.grid, kernel_transform(mixed.increments(), fam), Role.MARTINGALE_M)


def derivative_in_qv(N: np.ndarray, qv: np.ndarray) -> np.ndarray:
    """dN/d<M> as ratios of central increments, one-sided at both ends."""
    N = np.asarray(N, dtype=float)
    out = np.empty_like(N)
    dq_c = qv[2:] - qv[:-2]
    dq_l, dq_r = qv[1] - qv[0], qv[-1] - qv[-2]
    if np.any(dq_c <= 0) or dq_l <= 0 or dq_r <= 0:
        raise KernelSolveError("degenerate quadratic variation increments")
    out[1:-1] = (N[2:] - N[:-2]) / dq_c
    out[0] = (N[1] - N[0]) / dq_l
    out[-1] = (N[-1] - N[-2]) / dq_r
    return out


def drift_target(x: GridPath, fam: GHKernelFamily) -> QPath:
    """Q* for a given limit path x: d/d<M>_t int_0^t g_H(s, t) theta(s) x(s) ds.

    Since x' = theta x, the cell integral of theta x is the increment of x.
    """
    check_same_grid(x, fam)
    numerator = kernel_transform(x.increments(), fam)
    return QPath(x.grid, derivative_in_qv(numerator, fam.qv), QKind.TARGET_QSTAR)


def q_star(theta, x0: float, fam: GHKernelFamily) -> QPath:
    """Drift of Z in intrinsic time along the noiseless limit x(t) = x0 exp(int theta)."""
    x = x0 * np.exp(theta.integral(fam.grid.points))
    return drift_target(GridPath(fam.grid, x, Role.LIMIT_X), fam)


def log_likelihood(Q: QPath, Z: GridPath, fam: GHKernelFamily) -> float:
    """sum Q_i dZ_i - 1/2 sum Q_i^2 d<M>_i over the grid cells (left points)."""
    check_same_grid(Q, Z, fam)
    q = Q.values[:-1]
    return float(q @ Z.increments() - 0.5 * (q * q) @ np.diff(fam.qv))


def intrinsic_drift(Q: QPath, fam: GHKernelFamily) -> np.ndarray:
    """int_0^t Q d<M> by the trapezoid rule in <M>, at every grid point."""
    check_same_grid(Q, fam)
    q = Q.values
    out = np.zeros_like(q)
    out[1:] = np.cumsum(0.5 * (q[1:] + q[:-1]) * np.diff(fam.qv))
    return out
