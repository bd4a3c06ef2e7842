"""
Kernel g_H(s, t) of the martingale transform and the quadratic variation
<M^H>_t = int_0^t g_H(s, t) ds.

For H > 1/2 the kernel equation

    g(s) + H d/ds int_0^t g(r) |s - r|^{2H-1} sign(s - r) dr = 1,   0 < s < t,

is a weakly singular Fredholm equation of the second kind,

    g(s) + H (2H - 1) int_0^t g(r) |s - r|^{2H-2} dr = 1.

It is discretized with g piecewise constant on m equal cells and collocated at
cell midpoints. The singular factor is integrated exactly over each cell
(product integration), which gives

    int_{cell l} H (2H-1) |s_k - r|^{2H-2} dr = H [F(s_k - a_l) - F(s_k - b_l)],
    F(x) = sign(x) |x|^{2H-1}.

On a uniform mesh the collocation matrix is symmetric Toeplitz, and for the
whole family t_j = j dt the matrix for t_j is the leading j x j block of the
one for t_n. One Cholesky factorization therefore serves every t_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import KernelSolveError
from .paths import TimeGrid, fgn_autocovariance, validate_hurst


def _singular_part(x: np.ndarray, H: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** (2.0 * H - 1.0)


def collocation_column(m: int, dt: float, H: float) -> np.ndarray:
    """First column of the (symmetric Toeplitz) m x m collocation matrix."""
    d = np.arange(m, dtype=float)
    col = H * (_singular_part((d + 0.5) * dt, H) - _singular_part((d - 0.5) * dt, H))
    col[0] += 1.0
    return col


def solve_g(t_end: float, H, m: int) -> np.ndarray:
    """Solve the kernel equation for g_H(., t_end).

    Parameters
    ----------
    t_end : float
        Upper limit t of the kernel equation.
    H : float
        Supported Hurst index.
    m : int
        Number of equal cells of [0, t_end].

    Returns
    -------
    ndarray of shape (m,)
        Values of g at the cell midpoints (k + 1/2) t_end / m. Cell k carries
        this value on [k dt, (k + 1) dt).
    """
    H = validate_hurst(H)
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    m = int(m)
    if H == 0.5:
        return np.full(m, 0.5)
    A = scipy.linalg.toeplitz(collocation_column(m, t_end / m, H))
    try:
        g = scipy.linalg.solve(A, np.ones(m), assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise KernelSolveError(f"collocation system singular (t_end={t_end}, H={H}, m={m})") from exc
    if not np.all(np.isfinite(g)):
        raise KernelSolveError(f"non-finite kernel values (t_end={t_end}, H={H}, m={m})")
    return g


def energy_residual(gvec, t_end: float, H) -> float:
    """Relative defect of the energy identity for a discrete kernel.

    Multiplying the Fredholm form by g and integrating gives

        int g^2 + H(2H-1) int int g(u) g(v) |u-v|^{2H-2} du dv = int g.

    For piecewise constant g both sides are exact sums; the double integral
    over cells k, l equals the fBm increment covariance of those cells.
    Returns |LHS - RHS| / |RHS|.
    """
    H = validate_hurst(H)
    if H == 0.5:
        raise ValueError("energy identity uses the Fredholm form and needs H > 1/2; "
                         "check H = 1/2 against g = 1/2 directly")
    g = np.asarray(gvec, dtype=float)
    m = len(g)
    dt = t_end / m
    cov = scipy.linalg.toeplitz(fgn_autocovariance(np.arange(m), H, dt))
    lhs = dt * (g @ g) + g @ cov @ g
    rhs = dt * g.sum()
    return float(abs(lhs - rhs) / abs(rhs))


@dataclass(frozen=True, eq=False)
class GHKernelFamily:
    """Kernel slices g_H(., t_j) for every grid time plus <M^H> and its density.

    ``weights[j, i]`` is the value of g_H(., t_j) on cell i = [t_i, t_{i+1}),
    for i < j, and 0 for i >= j. Row 0 is empty. ``qv[j]`` is <M^H>_{t_j}
    and ``qv_density[j]`` its time derivative.
    """

    grid: TimeGrid
    H: float
    weights: np.ndarray
    qv: np.ndarray
    qv_density: np.ndarray

    def row(self, j: int) -> np.ndarray:
        return self.weights[j, :j]

    @property
    def g(self) -> list[np.ndarray]:
        return [self.row(j) for j in range(self.grid.n + 1)]


def build_family(grid: TimeGrid, H) -> GHKernelFamily:
    """Solve the kernel equation for every t_j of ``grid``.

    Cost is one O(n^3) Cholesky factorization plus n triangular solve pairs,
    O(n^3) in total.
    """
    H = validate_hurst(H)
    n, dt, t = grid.n, grid.dt, grid.points
    weights = np.zeros((n + 1, n))
    if H == 0.5:
        weights[np.tril_indices(n + 1, -1, n)] = 0.5
        qv = 0.5 * t
        density = np.full(n + 1, 0.5)
    else:
        A = scipy.linalg.toeplitz(collocation_column(n, dt, H))
        try:
            chol = scipy.linalg.cholesky(A, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise KernelSolveError(f"collocation matrix not positive definite (H={H}, n={n})") from exc
        for j in range(1, n + 1):
            lj = chol[:j, :j]
            y = scipy.linalg.solve_triangular(lj, np.ones(j), lower=True, check_finite=False)
            gj = scipy.linalg.solve_triangular(lj, y, lower=True, trans="T", check_finite=False)
            if not np.all(np.isfinite(gj)):
                raise KernelSolveError(f"non-finite kernel values at j={j} (t={t[j]}, H={H})")
            weights[j, :j] = gj
        qv = weights.sum(axis=1) * dt
        density = np.gradient(qv, dt, edge_order=1)
    if not np.all(np.diff(qv) > 0):
        j = int(np.argmin(np.diff(qv)))
        raise KernelSolveError(f"quadratic variation not increasing at j={j + 1} (H={H}, n={n})")
    if not np.all(density[1:] > 0):
        raise KernelSolveError(f"quadratic variation density not positive (H={H}, n={n})")
    for arr in (weights, qv, density):
        arr.flags.writeable = False
    return GHKernelFamily(grid=grid, H=H, weights=weights, qv=qv, qv_density=density)
