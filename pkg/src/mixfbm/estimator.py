"""
Kernel-type estimator of the drift Q* of the fundamental semimartingale Z.

Z has drift Q* d<M>, not Q* dt, so the estimator smooths Z's increments per
unit of intrinsic time and then averages them against G in ordinary time:

    Qhat(t_j) = (1/h) sum_i G((s_i - t_j) / h) (dZ_i / d<M>_i) dt,

with s_i the midpoint of cell i. For Z with dZ = q d<M> this is a Riemann sum
of (1/h) int G((s - t)/h) q(s) ds. The bandwidth follows h = c eps^{4/(4 gamma + 3)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import integrate

from .fredholm import GHKernelFamily
from .paths import GridPath, TimeGrid, check_same_grid
from .transform import QKind, QPath

KERNEL_KINDS = ("epanechnikov", "uniform", "custom")
EvalPolicy = Literal["interior_only", "full_with_flag"]
NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Compactly supported smoothing kernel G with int G = 1.

    Built-ins live on [-1, 1]. ``custom`` takes a table (u, G(u)) that is
    linearly interpolated; its support is [u[0], u[-1]].
    """

    kind: str = "epanechnikov"
    table_u: np.ndarray | None = field(default=None, repr=False)
    table_g: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNEL_KINDS}")
        if self.kind == "custom":
            if self.table_u is None or self.table_g is None:
                raise ValueError("custom kernel needs table_u and table_g")
            u = np.asarray(self.table_u, dtype=float)
            g = np.asarray(self.table_g, dtype=float)
            if u.shape != g.shape or u.ndim != 1 or len(u) < 2 or np.any(np.diff(u) <= 0):
                raise ValueError("custom kernel table must be two equal-length arrays with increasing u")
            if not np.all(np.isfinite(g)):
                raise ValueError("custom kernel values must be finite")
            object.__setattr__(self, "table_u", u)
            object.__setattr__(self, "table_g", g)
        A, B = self.support
        if not A < 0 < B:
            raise ValueError(f"kernel support [{A}, {B}] must contain 0 in its interior")
        mass = self.mass()
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"kernel integrates to {mass!r}, not 1")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "custom":
            return float(self.table_u[0]), float(self.table_u[-1])
        return -1.0, 1.0

    def mass(self) -> float:
        if self.kind == "custom":
            # exact for the piecewise linear interpolant
            return float(integrate.trapezoid(self.table_g, self.table_u))
        A, B = self.support
        return integrate.quad(lambda u: float(self(u)), A, B, epsabs=1e-13, epsrel=1e-13)[0]

    def __call__(self, u):
        return kernel_eval(u, self)


def kernel_eval(u, spec: KernelSpec):
    """G(u); zero outside the support."""
    u = np.asarray(u, dtype=float)
    if spec.kind == "epanechnikov":
        out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    elif spec.kind == "uniform":
        out = np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    else:
        out = np.interp(u, spec.table_u, spec.table_g, left=0.0, right=0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EstimatorSpec:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    bandwidth_constant: float = 1.0
    gamma: float = 1.0
    eval_policy: EvalPolicy = "interior_only"

    def __post_init__(self):
        if not self.bandwidth_constant > 0:
            raise ValueError("bandwidth_constant must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.eval_policy not in ("interior_only", "full_with_flag"):
            raise ValueError(f"unknown eval_policy {self.eval_policy!r}")

    def bandwidth(self, eps: float) -> float:
        return bandwidth(eps, self.gamma, self.bandwidth_constant)


def bandwidth_exponent(gamma: float) -> float:
    """4 / (4 gamma + 3): balances h^{2 gamma} against eps^2 h^{-3/2}."""
    return 4.0 / (4.0 * gamma + 3.0)


def rate_exponent(gamma: float) -> float:
    """Risk decays like eps^{8 gamma / (4 gamma + 3)} under the bandwidth rule."""
    return 8.0 * gamma / (4.0 * gamma + 3.0)


def bandwidth(eps: float, gamma: float, c: float = 1.0) -> float:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not c > 0:
        raise ValueError(f"bandwidth constant must be positive, got {c}")
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    beta = bandwidth_exponent(gamma)
    assert 0 < beta < 4 / 3
    return c * eps**beta


def interior_mask(grid: TimeGrid, h: float, support: tuple[float, float]) -> np.ndarray:
    """True where the window [t + A h, t + B h] lies inside [0, T]."""
    A, B = support
    t = grid.points
    slack = 1e-12 * grid.T
    return (t + A * h >= -slack) & (t + B * h <= grid.T + slack)


class Smoother:
    """Precomputed linear map Z -> Qhat for one (grid, kernel, bandwidth, family)."""

    def __init__(self, fam: GHKernelFamily, kernel: KernelSpec, h: float):
        grid = fam.grid
        if h < 2 * grid.dt:
            raise ValueError(f"bandwidth h={h:.4g} is below two grid steps (dt={grid.dt:.4g})")
        self.grid, self.h, self.kernel = grid, h, kernel
        u = (grid.midpoints[None, :] - grid.points[:, None]) / h
        per_intrinsic = grid.dt / np.diff(fam.qv)
        self.matrix = kernel_eval(u, kernel) / h * per_intrinsic[None, :]
        self.interior = interior_mask(grid, h, kernel.support)

    def apply(self, z_increments: np.ndarray) -> np.ndarray:
        return np.asarray(z_increments) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class QEstimate:
    path: QPath
    boundary: np.ndarray
    h: float

    @property
    def values(self) -> np.ndarray:
        return self.path.values


def estimate_q_path(Z: GridPath, spec: EstimatorSpec, eps: float, fam: GHKernelFamily) -> QEstimate:
    """Kernel estimate of Q* from the transformed observation ``Z``.

    Returns the estimate at every grid point together with a boolean flag
    marking boundary points, whose smoothing window leaves [0, T].
    """
    check_same_grid(Z, fam)
    h = spec.bandwidth(eps)
    sm = Smoother(fam, spec.kernel, h)
    values = sm.apply(Z.increments())
    return QEstimate(QPath(Z.grid, values, QKind.ESTIMATE_QHAT), ~sm.interior, h)


@dataclass(frozen=True, eq=False)
class RiskSummary:
    """Monte Carlo risk of a set of estimates against the target.

    ``curve`` holds E(Qhat - Q*)^2 at every grid point (NaN outside the
    evaluated set); ``se`` is the MC standard error at the maximizer.
    """

    sup_risk: float
    argmax: int
    argmax_t: float
    se: float
    curve: np.ndarray
    n_points: int
    replications: int


def sup_risk(estimates: Sequence, qstar: QPath, policy: EvalPolicy = "interior_only",
             interior: np.ndarray | None = None) -> RiskSummary:
    """max_t of the MC mean of (Qhat(t) - Q*(t))^2 over the evaluated grid points.

    ``estimates`` is a sequence of :class:`QEstimate`, :class:`QPath` or arrays,
    aggregated in the given order. With ``interior_only`` the boundary points
    (from the estimates' flags or ``interior``) are excluded.
    """
    if len(estimates) == 0:
        raise ValueError("need at least one replication")
    rows, flags = [], None
    for est in estimates:
        if isinstance(est, QEstimate):
            flags = est.boundary if flags is None else flags
            rows.append(est.values)
        elif isinstance(est, QPath):
            rows.append(est.values)
        else:
            rows.append(np.asarray(est, dtype=float))
    sq = (np.stack(rows) - qstar.values[None, :]) ** 2
    if policy == "interior_only":
        if interior is not None:
            mask = np.asarray(interior, dtype=bool)
        elif flags is not None:
            mask = ~flags
        else:
            mask = np.ones(sq.shape[1], dtype=bool)
    elif policy == "full_with_flag":
        mask = np.ones(sq.shape[1], dtype=bool)
    else:
        raise ValueError(f"unknown policy {policy!r}")
    if not mask.any():
        raise ValueError("no grid point left to evaluate; bandwidth too large for the horizon")
    curve = np.full(sq.shape[1], np.nan)
    curve[mask] = sq[:, mask].mean(axis=0)
    k = int(np.nanargmax(curve))
    R = sq.shape[0]
    se = float(sq[:, k].std(ddof=1) / math.sqrt(R)) if R > 1 else math.nan
    return RiskSummary(
        sup_risk=float(curve[k]),
        argmax=k,
        argmax_t=float(qstar.grid.points[k]),
        se=se,
        curve=curve,
        n_points=int(mask.sum()),
        replications=R,
    )
