"""Measurement-noise models and the noise-level schedule shared by both chains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec
from .spectral import dst_inverse, evaluate_series


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class BridgeSpec:
    """Per-mode standard deviations of the sine coefficients of the bridge noise."""

    sigma_nm: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma_nm, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("sigma_nm must be a square matrix")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("sigma_nm entries must be finite and nonnegative")
        s.setflags(write=False)
        object.__setattr__(self, "sigma_nm", s)

    @classmethod
    def constant(cls, grid: GridSpec, sigma: float = 1e-6) -> "BridgeSpec":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(np.full(grid.shape, float(sigma)))


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    sigmas: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigmas, dtype=np.float64)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("schedule needs sigma_0 and at least one positive level")
        if s[0] != 0.0:
            raise ValueError("sigma_0 must be exactly 0")
        if np.any(np.diff(s) <= 0):
            raise ValueError("noise levels must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "sigmas", s)

    @property
    def T(self) -> int:
        return self.sigmas.size - 1

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[-1])


def make_schedule(T: int = 100, sigma_min: float = 0.01, sigma_max: float = 2.0,
                  kind: str = "geometric") -> NoiseSchedule:
    """``sigma_t = sigma_min (sigma_max/sigma_min)^((t-1)/(T-1))`` for ``t = 1..T``."""
    if kind != "geometric":
        raise ValueError(f"unsupported schedule kind {kind!r}")
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0 < sigma_min < sigma_max:
        raise ValueError("need 0 < sigma_min < sigma_max")
    if T == 1:
        levels = np.array([sigma_max])
    else:
        levels = sigma_min * (sigma_max / sigma_min) ** (np.arange(T) / (T - 1))
    return NoiseSchedule(np.concatenate([[0.0], levels]))


def sample_iid_gaussian(grid: GridSpec, sigma_f: float, rng_seed=None, size=None) -> np.ndarray:
    """I.i.d. ``N(0, sigma_f^2)`` values on the grid; ``size`` prepends batch axes."""
    if sigma_f < 0:
        raise ValueError("sigma_f must be nonnegative")
    shape = (() if size is None else tuple(np.atleast_1d(size))) + grid.shape
    return sigma_f * _rng(rng_seed).standard_normal(shape)


def sample_bridge_coeffs(grid: GridSpec, spec: BridgeSpec, rng_seed=None, size=None) -> np.ndarray:
    """Coefficients ``w_nm ~ N(0, sigma_nm^2)``."""
    if spec.sigma_nm.shape != grid.shape:
        raise ValueError("bridge spec does not match grid")
    shape = (() if size is None else tuple(np.atleast_1d(size))) + grid.shape
    return spec.sigma_nm * _rng(rng_seed).standard_normal(shape)


def sample_brownian_bridge(grid: GridSpec, spec: BridgeSpec, rng_seed=None, size=None) -> np.ndarray:
    """Grid samples of ``sum_nm w_nm sin(n pi x) sin(m pi y)``; zero on the boundary."""
    return dst_inverse(sample_bridge_coeffs(grid, spec, rng_seed, size))


def bridge_variance(spec: BridgeSpec, x, y) -> np.ndarray:
    """Pointwise variance ``sum_nm sigma_nm^2 sin^2(n pi x) sin^2(m pi y)``."""
    s2 = np.asarray(spec.sigma_nm) ** 2
    n = s2.shape[0]
    k = np.arange(1, n + 1)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    sx = np.sin(np.pi * k[:, None] * x.ravel()[None, :]) ** 2
    sy = np.sin(np.pi * k[:, None] * y.ravel()[None, :]) ** 2
    return np.einsum("nm,np,mp->p", s2, sx, sy).reshape(x.shape)


def bridge_at(coeffs, x, y) -> np.ndarray:
    """Evaluate drawn bridges off-grid from their coefficients."""
    return evaluate_series(coeffs, x, y)
