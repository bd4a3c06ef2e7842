"""
Exact simulation of Brownian, fractional Brownian and mixed fractional
Brownian paths on a uniform time grid.

The mixed process is W~ = W + W^H with W a standard Wiener process and W^H an
independent fractional Brownian motion,

    E[W^H_s W^H_t] = (s^{2H} + t^{2H} - |s - t|^{2H}) / 2.

Two samplers are provided. ``cholesky_exact`` factorizes the covariance of
W^H at the grid points and is the reference. ``spectral_fast`` draws
fractional Gaussian noise by circulant embedding (Davies-Harte) and is checked
against the reference in law.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import GridMismatchError, SamplerError, UnsupportedHurstError

SamplerMethod = Literal["cholesky_exact", "spectral_fast"]
SAMPLER_METHODS: tuple[str, ...] = ("cholesky_exact", "spectral_fast")

# Circulant eigenvalues in [-CIRCULANT_CLAMP, 0) are rounding noise.
CIRCULANT_CLAMP = 1e-9


# ---------------------------------------------------------------------------
# Grid and path containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = i T / n, i = 0..n."""

    T: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"number of steps n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n", int(self.n))

    @property
    def dt(self) -> float:
        return self.T / self.n

    @functools.cached_property
    def points(self) -> np.ndarray:
        t = np.arange(self.n + 1) * self.dt
        t[-1] = self.T
        t.flags.writeable = False
        return t

    @property
    def midpoints(self) -> np.ndarray:
        return self.points[:-1] + 0.5 * self.dt

    def coarsen(self, factor: int) -> "TimeGrid":
        if factor < 1 or self.n % factor:
            raise ValueError(f"cannot coarsen n={self.n} by {factor}")
        return TimeGrid(self.T, self.n // factor)


class Role(str, enum.Enum):
    BROWNIAN = "brownian"
    FBM = "fbm"
    MIXED = "mixed"
    STATE_X = "state_X"
    LIMIT_X = "limit_x"
    TRANSFORM_Z = "transform_Z"
    MARTINGALE_M = "martingale_M"
    Q_PATH = "q_path"


_ZERO_START = {Role.BROWNIAN, Role.FBM, Role.MIXED, Role.TRANSFORM_Z, Role.MARTINGALE_M}


@dataclass(frozen=True, eq=False)
class GridPath:
    """Values of one trajectory at the points of a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray
    role: Role

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n + 1,):
            raise ValueError(
                f"{self.role.value} path needs {self.grid.n + 1} values, got shape {values.shape}"
            )
        if self.role in _ZERO_START and values[0] != 0.0:
            raise ValueError(f"{self.role.value} path must start at 0, got {values[0]}")
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def __len__(self):
        return len(self.values)


def check_same_grid(*items) -> TimeGrid:
    """Return the common grid of ``items`` or raise :class:`GridMismatchError`."""
    grids = [item.grid for item in items]
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")
    return first


# ---------------------------------------------------------------------------
# Hurst index and covariances
# ---------------------------------------------------------------------------


def validate_hurst(H: float) -> float:
    """Return ``H`` as a float if it is in the supported set {1/2} U (1/2, 1).

    Raises
    ------
    UnsupportedHurstError
        For H in (0, 1/2); the kernel equation has no Fredholm reduction there.
    ValueError
        For H outside (0, 1).
    """
    H = float(H)
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {H}")
    if H < 0.5:
        raise UnsupportedHurstError(
            f"Hurst index H={H} < 1/2 is not supported; use H = 1/2 or H in (1/2, 1)"
        )
    return H


@dataclass(frozen=True)
class HurstIndex:
    H: float

    def __post_init__(self):
        object.__setattr__(self, "H", validate_hurst(self.H))

    def __float__(self):
        return self.H


def fbm_covariance(s, t, H) -> np.ndarray | float:
    """E[W^H_s W^H_t] = (s^{2H} + t^{2H} - |s-t|^{2H}) / 2, broadcasting."""
    H = float(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("times must be nonnegative")
    two_h = 2.0 * H
    out = 0.5 * (s**two_h + t**two_h - np.abs(s - t) ** two_h)
    return float(out) if out.ndim == 0 else out


def mixed_covariance(s, t, H) -> np.ndarray | float:
    """Covariance of W + W^H: min(s, t) + fbm_covariance(s, t, H)."""
    out = np.minimum(np.asarray(s, dtype=float), np.asarray(t, dtype=float)) + np.asarray(
        fbm_covariance(s, t, H)
    )
    return float(out) if np.ndim(out) == 0 else out


def fgn_autocovariance(k, H: float, dt: float = 1.0) -> np.ndarray:
    """Covariance of two fBm increments over steps ``dt`` that are ``k`` steps apart."""
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** two_h + np.abs(k - 1) ** two_h - 2.0 * k**two_h) * dt**two_h


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    method: SamplerMethod = "cholesky_exact"
    jitter_tol: float = 1e-12

    def __post_init__(self):
        if self.method not in SAMPLER_METHODS:
            raise ValueError(f"unknown sampler method {self.method!r}; choose from {SAMPLER_METHODS}")
        if not self.jitter_tol >= 0:
            raise ValueError("jitter_tol must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def stream(seed: int, rep_index: int = 0) -> np.random.Generator:
    """Private generator for replication ``rep_index`` of an experiment seeded by ``seed``.

    Streams depend only on (seed, rep_index), so replications are reproducible
    regardless of the order or thread they run on.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rep_index),)))


def _cholesky_with_jitter(cov: np.ndarray, jitter_tol: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    if jitter_tol > 0:
        try:
            return np.linalg.cholesky(cov + jitter_tol * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            pass
    raise SamplerError(
        f"fBm covariance is not positive definite within diagonal jitter {jitter_tol:g}"
    )


def _circulant_eigenvalues(n: int, H: float) -> np.ndarray:
    """Eigenvalues of the 2n circulant embedding of the unit-step fGn covariance."""
    gamma = fgn_autocovariance(np.arange(n + 1), H)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -CIRCULANT_CLAMP:
        raise SamplerError(
            f"circulant embedding not nonnegative definite (min eigenvalue {lam.min():.3e})"
        )
    return np.clip(lam, 0.0, None)


class MixedSampler:
    """Joint sampler of (W, W^H, W + W^H) at the points of ``grid``.

    The expensive factorization is done once at construction; every
    :meth:`draw` consumes ``n`` normals for W and then the normals needed by
    the fBm method, in that order.
    """

    def __init__(self, grid: TimeGrid, H: float, method: SamplerMethod = "cholesky_exact",
                 jitter_tol: float = 1e-12):
        if method not in SAMPLER_METHODS:
            raise ValueError(f"unknown sampler method {method!r}")
        self.grid = grid
        self.H = validate_hurst(H)
        self.method = method
        n, t = grid.n, grid.points
        if method == "cholesky_exact":
            cov = np.asarray(fbm_covariance(t[1:, None], t[None, 1:], self.H))
            self._factor = _cholesky_with_jitter(cov, jitter_tol)
        else:
            self._sqrt_lam = np.sqrt(_circulant_eigenvalues(n, self.H) / (2 * n))

    def _fbm_values(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.grid.n
        if self.method == "cholesky_exact":
            z = rng.standard_normal((size, n))
            return z @ self._factor.T
        z = rng.standard_normal((size, 2 * n)) + 1j * rng.standard_normal((size, 2 * n))
        fgn = np.fft.fft(self._sqrt_lam * z, axis=-1)[:, :n].real
        return np.cumsum(fgn * self.grid.dt**self.H, axis=-1)

    def draw_many(self, rng: np.random.Generator, size: int):
        """Return arrays (W, WH, mixed), each of shape (size, n + 1)."""
        n = self.grid.n
        dW = rng.standard_normal((size, n)) * np.sqrt(self.grid.dt)
        W = np.zeros((size, n + 1))
        W[:, 1:] = np.cumsum(dW, axis=-1)
        WH = np.zeros((size, n + 1))
        WH[:, 1:] = self._fbm_values(rng, size)
        return W, WH, W + WH

    def draw(self, rng: np.random.Generator):
        """One joint draw as (mixed, brownian, fbm) :class:`GridPath` objects."""
        W, WH, mixed = (a[0] for a in self.draw_many(rng, 1))
        return (
            GridPath(self.grid, mixed, Role.MIXED),
            GridPath(self.grid, W, Role.BROWNIAN),
            GridPath(self.grid, WH, Role.FBM),
        )


@functools.lru_cache(maxsize=16)
def get_sampler(grid: TimeGrid, H: float, method: str, jitter_tol: float) -> MixedSampler:
    return MixedSampler(grid, H, method, jitter_tol)


def sample_mixed_path(grid: TimeGrid, H, cfg: SamplerConfig, rep_index: int = 0):
    """Draw (mixed, brownian, fbm) paths for replication ``rep_index``.

    Identical (seed, method, grid, H, rep_index) give bit-identical output.
    """
    sampler = get_sampler(grid, validate_hurst(float(H)), cfg.method, float(cfg.jitter_tol))
    return sampler.draw(stream(cfg.seed, rep_index))


def require_role(path: GridPath, *roles: Role) -> None:
    if path.role not in roles:
        raise ValueError(f"expected a path with role in {[r.value for r in roles]}, got {path.role.value}")


__all__ = [
    "TimeGrid", "GridPath", "Role", "HurstIndex", "SamplerConfig", "MixedSampler",
    "validate_hurst", "fbm_covariance", "mixed_covariance", "fgn_autocovariance",
    "sample_mixed_path", "stream", "check_same_grid", "GridMismatchError",
]
