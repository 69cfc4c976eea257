"""Sine-basis transforms and the Dirichlet Laplacian eigensystem on the unit square.

Basis functions are ``s_nm(x, y) = sin(n*pi*x) * sin(m*pi*y)`` for
``n, m = 1..N``; coefficient arrays are indexed ``c[n-1, m-1]``.

Conventions (fixed for the whole package):

    forward:         c[n, m] = 4 h^2 * sum_ij g[i, j] sin(n pi x_i) sin(m pi y_j)
    reconstruction:  g[i, j] = sum_nm c[n, m] sin(n pi x_i) sin(m pi y_j)

On the interior grid ``x_i = i/(N+1)`` these two maps are exact inverses
(DST-I orthogonality), so grid fields and coefficient arrays are
interchangeable without loss.

The continuous eigenvalues ``-(n pi)^2 - (m pi)^2`` are used everywhere in
this module; the discrete five-point eigenvalues live in :mod:`poisson_ddrm.fd`.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from .grid import GridSpec


def _grid_of(a) -> GridSpec:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square trailing grid axes, got shape {a.shape}")
    return GridSpec(a.shape[-1])


def dst_forward(field) -> np.ndarray:
    """Sine coefficients of a grid field (raw, no eigenvalue scaling)."""
    g = np.asarray(field, dtype=np.float64)
    h = _grid_of(g).h
    return h * h * scipy.fft.dstn(g, type=1, axes=(-2, -1))


def dst_inverse(coeffs) -> np.ndarray:
    """Grid field ``sum_nm c[n, m] s_nm`` sampled on the interior points."""
    c = np.asarray(coeffs, dtype=np.float64)
    _grid_of(c)
    return 0.25 * scipy.fft.dstn(c, type=1, axes=(-2, -1))


def sine_matrix(grid: GridSpec) -> np.ndarray:
    """``S[n-1, i-1] = sin(n pi x_i)``; used for direct-summation checks."""
    k = np.arange(1, grid.n_interior + 1)
    return np.sin(np.pi * np.outer(k, k) * grid.h)


def basis_function(grid: GridSpec, n: int, m: int) -> np.ndarray:
    """``sin(n pi x) sin(m pi y)`` sampled on the grid."""
    x = grid.coords()
    return np.outer(np.sin(n * np.pi * x), np.sin(m * np.pi * x))


def eigenvalues(grid: GridSpec) -> np.ndarray:
    """``lam[n-1, m-1] = -(n pi)^2 - (m pi)^2``."""
    k = np.arange(1, grid.n_interior + 1, dtype=np.float64)
    k2 = (np.pi * k) ** 2
    return -(k2[:, None] + k2[None, :])


def _eig_for(field, eig):
    return eigenvalues(_grid_of(field)) if eig is None else np.asarray(eig)


def to_u_space_from_f(field_f, eig=None) -> np.ndarray:
    """Coefficients ``<f, s_nm> / lam_nm``: the forward chain's observation in u-space."""
    return dst_forward(field_f) / _eig_for(field_f, eig)


def to_f_space_from_u(field_u, eig=None) -> np.ndarray:
    """Coefficients ``lam_nm <u, s_nm>``: the inverse chain's observation in f-space."""
    return dst_forward(field_u) * _eig_for(field_u, eig)


def spectral_laplacian(field, eig=None) -> np.ndarray:
    return dst_inverse(dst_forward(field) * _eig_for(field, eig))


def spectral_poisson_solve(f, eig=None) -> np.ndarray:
    """Solve ``Lap u = f`` with ``u = 0`` on the boundary, mode by mode."""
    return dst_inverse(dst_forward(f) / _eig_for(f, eig))


def evaluate_series(coeffs, x, y) -> np.ndarray:
    """Evaluate ``sum_nm c[..., n, m] s_nm(x, y)`` at arbitrary points.

    ``x`` and ``y`` are broadcast together; the result has shape
    ``coeffs.shape[:-2] + broadcast(x, y).shape``.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.shape[-1]
    k = np.arange(1, n + 1)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    sx = np.sin(np.pi * k[:, None] * x.ravel()[None, :])
    sy = np.sin(np.pi * k[:, None] * y.ravel()[None, :])
    out = np.einsum("...nm,np,mp->...p", c, sx, sy)
    return out.reshape(c.shape[:-2] + x.shape)
