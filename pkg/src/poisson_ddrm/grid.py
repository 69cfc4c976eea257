"""Discrete domain, field containers and the MAE metric.

Fields live on the interior points of a uniform grid over the unit square.
With ``N`` interior points per axis the spacing is ``h = 1/(N+1)`` and the
coordinates are ``x_i = i*h`` for ``i = 1..N``.  The homogeneous Dirichlet
boundary is implicit and never stored.

Array layout: ``values[i, j] = g(x_{i+1}, y_{j+1})``, so axis 0 is x and
axis 1 is y.  Every numerical routine in the package accepts arrays with
arbitrary leading batch dimensions and treats the last two axes as the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROVENANCES = ("type1", "type2", "type3", "type4", "type5", "type6", "nn", "external")
METHODS = ("dry-forward", "dry-inverse", "ddrm-forward", "ddrm-inverse",
           "fd-forward", "fd-inverse", "spectral-forward", "spectral-inverse")


@dataclass(frozen=True)
class GridSpec:
    n_interior: int = 64

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 2:
            raise ValueError(f"n_interior must be an integer >= 2, got {self.n_interior!r}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_interior, self.n_interior)

    def coords(self) -> np.ndarray:
        """1-D interior coordinates ``i*h`` for ``i = 1..N``."""
        return np.arange(1, self.n_interior + 1) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(X, Y)`` on the interior mesh."""
        X, Y = self.mesh()
        return np.asarray(fn(X, Y), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An immutable grid function.  Behaves like an array via ``__array__``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        return cls(grid, grid.sample(fn))


@dataclass(frozen=True)
class PairSample:
    f: ScalarField
    u: ScalarField
    provenance: str = "external"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.f.grid != self.u.grid:
            raise ValueError("f and u live on different grids")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


@dataclass(frozen=True)
class EvalRecord:
    method: str
    mae: float
    sample_count: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.mae >= 0:
            raise ValueError("mae must be nonnegative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")


def zero_field(grid: GridSpec) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape))


def _check_same_grid(a, b):
    ga, gb = getattr(a, "grid", None), getattr(b, "grid", None)
    if ga is not None and gb is not None and ga != gb:
        raise ValueError(f"grid mismatch: {ga} vs {gb}")
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape[-2:] != b.shape[-2:]:
        raise ValueError(f"grid mismatch: {a.shape[-2:]} vs {b.shape[-2:]}")
    return a, b


def mae(a, b):
    """Mean absolute difference over the interior points.

    Batched inputs return one value per leading index.
    """
    a, b = _check_same_grid(a, b)
    out = np.mean(np.abs(a - b), axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def eval_batch(pairs: Sequence[PairSample], predictions, target: str, method: str) -> EvalRecord:
    """Average per-sample MAE of ``predictions`` against channel ``target``."""
    if target not in ("u", "f"):
        raise ValueError(f"target must be 'u' or 'f', got {target!r}")
    if len(pairs) == 0:
        raise ValueError("empty batch")
    if len(pairs) != len(predictions):
        raise ValueError(f"{len(pairs)} pairs but {len(predictions)} predictions")
    per_sample = [mae(getattr(p, target), q) for p, q in zip(pairs, predictions)]
    return EvalRecord(method, float(np.mean(per_sample)), len(pairs))
