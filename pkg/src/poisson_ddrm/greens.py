"""Free-space Green's function, its squared-kernel integral, and the per-mode
variance bound used by the forward chain, with Monte-Carlo checks of both."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, PairSample
from .noise import sample_iid_gaussian
from .report import Report
from .spectral import dst_forward, eigenvalues, sine_matrix, spectral_poisson_solve

LN2 = np.log(2.0)


def greens_psi(dx, dy):
    """``ln(|(dx, dy)|) / (2 pi)``."""
    r = np.hypot(dx, dy)
    if np.any(r == 0):
        raise ValueError("Green's function is singular at the origin")
    return np.log(r) / (2 * np.pi)


def _psi2_radial(R):
    """``int_0^R r ln(r)^2 dr / (4 pi^2)``."""
    R = np.asarray(R, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(R)
        out = 0.5 * R**2 * (L * L - L + 0.5)
    return np.where(R > 0, out, 0.0) / (4 * np.pi**2)


def _corner_rect_integral(a, b, order=64):
    """``int int psi^2`` over ``[0, a] x [0, b]`` with the singularity at the corner.

    Polar coordinates about the corner: the radial integral is closed form,
    the angular one is smooth and done by Gauss-Legendre on each triangle.
    """
    if a <= 0 or b <= 0:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(order)
    split = np.arctan2(b, a)
    t1 = 0.5 * split * (nodes + 1)
    t2 = split + 0.5 * (np.pi / 2 - split) * (nodes + 1)
    i1 = 0.5 * split * np.sum(weights * _psi2_radial(a / np.cos(t1)))
    i2 = 0.5 * (np.pi / 2 - split) * np.sum(weights * _psi2_radial(b / np.sin(t2)))
    return float(i1 + i2)


def _rect_integral_about(x, y, x0, x1, y0, y1, order=64):
    """``int int psi^2((x', y') - (x, y))`` over a rectangle containing ``(x, y)``."""
    return sum(_corner_rect_integral(a, b, order)
               for a in (x1 - x, x - x0) for b in (y1 - y, y - y0))


def k_kernel(x: float, y: float, quadrature_n: int = 256) -> float:
    """``K(x, y) = int int_Omega psi((x', y') - (x, y))^2 dx' dy'``.

    Midpoint rule on a ``quadrature_n`` square mesh; the cells touching
    ``(x, y)`` are replaced by an exact polar integration about the point.
    """
    if quadrature_n < 32:
        raise ValueError("quadrature_n must be >= 32")
    if not (0 < x < 1 and 0 < y < 1):
        raise ValueError("(x, y) must lie in the open unit square")
    n = int(quadrature_n)
    d = 1.0 / n

    def touching(p):
        k = p * n
        lo = int(np.floor(k))
        if np.isclose(k, round(k), rtol=0, atol=1e-12):
            lo = int(round(k)) - 1
            return max(lo, 0), min(lo + 2, n)
        return lo, lo + 1

    ix0, ix1 = touching(x)
    iy0, iy1 = touching(y)
    mid = (np.arange(n) + 0.5) * d
    psi2 = _psi2_at(mid, x, y)
    mask = np.ones((n, n), dtype=bool)
    mask[ix0:ix1, iy0:iy1] = False
    far = float(np.sum(psi2[mask]) * d * d)
    near = _rect_integral_about(x, y, ix0 * d, ix1 * d, iy0 * d, iy1 * d)
    return far + near


def _psi2_at(mid, x, y):
    # a midpoint may coincide with (x, y); that cell is masked out by the caller
    r = np.hypot(mid[:, None] - x, mid[None, :] - y)
    out = np.zeros_like(r)
    ok = r > 0
    out[ok] = (np.log(r[ok]) / (2 * np.pi)) ** 2
    return out


def k_kernel_polar(x: float, y: float, order: int = 256) -> float:
    """Independent evaluation of ``K`` by polar integration about ``(x, y)`` over the whole square."""
    return _rect_integral_about(x, y, 0.0, 1.0, 0.0, 1.0, order)


def kbar_table(grid: GridSpec) -> np.ndarray:
    """``Kbar[n-1, m-1] = (1/|lam_nm| + ln 2 max(n, m))^2``."""
    k = np.arange(1, grid.n_interior + 1)
    big = np.maximum(k[:, None], k[None, :])
    return (1.0 / np.abs(eigenvalues(grid)) + LN2 * big) ** 2


def variance_bound(n: int, m: int, sigma_f: float) -> float:
    """Upper bound on the variance of the ``(n, m)`` coefficient of ``u`` given ``f``."""
    return (1.0 / (np.pi**2 * (n * n + m * m)) + LN2 * max(n, m)) ** 2 * sigma_f**2


def discrete_solution_variance(grid: GridSpec, sigma_f: float) -> np.ndarray:
    """Exact pointwise variance of ``spectral_poisson_solve(z)`` for i.i.d. grid noise ``z``.

    Each sine coefficient of ``z`` has variance ``4 h^2 sigma_f^2`` and distinct
    modes are uncorrelated, so the grid variance is
    ``4 h^2 sigma_f^2 sum_nm s_nm(x, y)^2 / lam_nm^2``.
    """
    S = sine_matrix(grid)
    w = 1.0 / eigenvalues(grid) ** 2
    return 4 * grid.h**2 * sigma_f**2 * np.einsum("ni,mj,nm->ij", S**2, S**2, w)


def _draw_chunks(draws, chunk):
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        yield done, b
        done += b


def verify_thm2_mc(pair: PairSample, sigma_f: float, draws: int = 10_000, points=None,
                   seed: int = 0, chunk: int = 1000, quadrature_n: int = 256) -> Report:
    """Monte-Carlo check of the pointwise law of ``u`` given a noisy ``f``.

    ``points`` are 0-based grid indices ``(i, j)``; defaults to the centre
    point and two off-centre points.  Per point: the empirical mean must be
    within 4 standard errors of ``u_0`` (the exact solve of the clean ``f``)
    and the empirical variance within a factor 2 of the exact discrete
    variance.  The free-space ``sigma_f^2 h^2 K(x, y)`` value is reported
    alongside; it ignores the boundary, so it is context rather than a gate.
    """
    if draws < 1000:
        raise ValueError("draws must be >= 1000")
    grid = pair.grid
    N = grid.n_interior
    if points is None:
        points = [(N // 2, N // 2), (N // 4, N // 2), (N // 8, N // 8)]
    idx = np.array(points, dtype=int)
    f = pair.f.values
    u0 = spectral_poisson_solve(f)
    rng = np.random.default_rng(seed)
    s1 = np.zeros(len(idx))
    s2 = np.zeros(len(idx))
    for _, b in _draw_chunks(draws, chunk):
        z = sample_iid_gaussian(grid, sigma_f, rng, size=b)
        u = spectral_poisson_solve(f + z)[:, idx[:, 0], idx[:, 1]]
        d = u - u0[idx[:, 0], idx[:, 1]]
        s1 += d.sum(axis=0)
        s2 += (d * d).sum(axis=0)
    bias = s1 / draws
    var = (s2 - draws * bias**2) / (draws - 1)
    disc = discrete_solution_variance(grid, sigma_f)[idx[:, 0], idx[:, 1]]
    x = grid.coords()
    report = Report("thm2", info={"sigma_f": sigma_f, "draws": draws, "seed": seed})
    for p, (i, j) in enumerate(idx):
        K = k_kernel(x[i], x[j], quadrature_n)
        free = sigma_f**2 * grid.h**2 * K
        se = np.sqrt(max(var[p], 0.0) / draws)
        mean_ok = abs(bias[p]) <= 4 * se
        if disc[p] == 0:
            ratio = 1.0 if var[p] == 0 else np.inf
            free_ratio = 1.0 if var[p] == 0 else np.inf
        else:
            ratio = var[p] / disc[p]
            free_ratio = var[p] / free
        report.add(f"point({i},{j})", mean_ok and 0.5 <= ratio <= 2.0,
                   x=x[i], y=x[j], bias=bias[p], mean_se=se, empirical_var=var[p],
                   discrete_var=disc[p], var_ratio=ratio, K=K, free_space_var=free,
                   free_space_ratio=free_ratio,
                   max_abs_u0_minus_pair_u=float(np.max(np.abs(u0 - pair.u.values))))
    return report


def thm3_coefficient_samples(grid: GridSpec, sigma_f: float, modes, draws: int,
                             seed: int = 0, chunk: int = 1000) -> np.ndarray:
    """Draws of the ``(n, m)`` coefficients of ``Lap^-1 z``, shape ``(draws, len(modes))``."""
    idx = np.array(modes, dtype=int) - 1
    rng = np.random.default_rng(seed)
    out = np.empty((draws, len(idx)))
    for start, b in _draw_chunks(draws, chunk):
        z = sample_iid_gaussian(grid, sigma_f, rng, size=b)
        c = dst_forward(spectral_poisson_solve(z))
        out[start:start + b] = c[:, idx[:, 0], idx[:, 1]]
    return out


def verify_thm3_bound_mc(sigma_f: float, modes=((1, 1), (1, 64), (64, 64), (8, 8), (3, 4)),
                         draws: int = 10_000, seed: int = 0, grid: GridSpec = GridSpec(),
                         check_scaling: bool = True) -> Report:
    """Empirical coefficient variances of ``Lap^-1 z`` against the analytic bound.

    With ``check_scaling`` the run is repeated at ``2 sigma_f`` on fresh
    draws (``seed + 1``) and both the bound and the empirical variances must grow by a
    factor in ``[3.6, 4.4]``.
    """
    if draws < 1000:
        raise ValueError("draws must be >= 1000")
    lam = eigenvalues(grid)
    report = Report("thm3", info={"sigma_f": sigma_f, "draws": draws, "seed": seed})
    var = thm3_coefficient_samples(grid, sigma_f, modes, draws, seed).var(axis=0, ddof=1)
    var2 = (thm3_coefficient_samples(grid, 2 * sigma_f, modes, draws, seed + 1).var(axis=0, ddof=1)
            if check_scaling else None)
    for k, (n, m) in enumerate(modes):
        bound = variance_bound(n, m, sigma_f)
        theory = 4 * grid.h**2 * sigma_f**2 / lam[n - 1, m - 1] ** 2
        stats = dict(n=n, m=m, empirical_var=var[k], bound=bound, theory_var=theory)
        ok = var[k] <= bound
        if check_scaling:
            b2 = variance_bound(n, m, 2 * sigma_f)
            r_emp = var2[k] / var[k] if var[k] > 0 else np.nan
            r_bound = b2 / bound if bound > 0 else np.nan
            stats.update(empirical_ratio=r_emp, bound_ratio=r_bound)
            ok = ok and 3.6 <= r_emp <= 4.4 and 3.6 <= r_bound <= 4.4 and var2[k] <= b2
        report.add(f"mode({n},{m})", ok, **stats)
    return report

