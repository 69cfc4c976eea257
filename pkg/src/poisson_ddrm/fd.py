"""Five-point finite-difference Laplacian and the finite-difference baselines.

The discrete Dirichlet Laplacian is diagonalised by the same sine vectors as
the continuous one, so the FD Poisson system is solved exactly through the
sine transform with the discrete eigenvalues.  No iterative solver, hence no
solver tolerance in the baseline numbers.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec
from .spectral import _grid_of, dst_forward, dst_inverse


def fd_eigenvalues(grid: GridSpec) -> np.ndarray:
    """``mu[n-1, m-1] = -(4/h^2) (sin^2(n pi h/2) + sin^2(m pi h/2))``."""
    h = grid.h
    k = np.arange(1, grid.n_interior + 1)
    s2 = np.sin(k * np.pi * h / 2) ** 2
    return -(4.0 / h**2) * (s2[:, None] + s2[None, :])


def fd_laplacian(field) -> np.ndarray:
    """Five-point stencil with zero ghost values outside the domain."""
    g = np.asarray(field, dtype=np.float64)
    h = _grid_of(g).h
    pad = [(0, 0)] * (g.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(g, pad)
    out = (p[..., 2:, 1:-1] + p[..., :-2, 1:-1] + p[..., 1:-1, 2:] + p[..., 1:-1, :-2]
           - 4.0 * g)
    return out / (h * h)


def fd_poisson_solve(f) -> np.ndarray:
    """Exact solution of ``fd_laplacian(u) = f``."""
    mu = fd_eigenvalues(_grid_of(f))
    return dst_inverse(dst_forward(f) / mu)


def fd_inverse_estimate(u) -> np.ndarray:
    """Estimate ``f = Lap u`` by the five-point stencil."""
    return fd_laplacian(u)
