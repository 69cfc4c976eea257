"""Independent reference computations used by the tests.

Nothing here imports from the package under test except plain data types.
Transforms are direct sums built from ``math.sin``; Laplacians of the
closed-form pairs come from sympy.
"""

import math

import numpy as np


def sine_table(N):
    h = 1.0 / (N + 1)
    return np.array([[math.sin(n * math.pi * i * h) for i in range(1, N + 1)] for n in range(1, N + 1)])


def dst_direct(field):
    """``c[n, m] = 4 h^2 sum_ij g_ij sin(n pi x_i) sin(m pi y_j)`` by explicit summation."""
    g = np.asarray(field, dtype=np.float64)
    N = g.shape[-1]
    h = 1.0 / (N + 1)
    S = sine_table(N)
    return 4 * h * h * np.einsum("ni,...ij,mj->...nm", S, g, S)


def idst_direct(coeffs):
    c = np.asarray(coeffs, dtype=np.float64)
    S = sine_table(c.shape[-1])
    return np.einsum("ni,...nm,mj->...ij", S, c, S)


def mode_field(N, n, m):
    h = 1.0 / (N + 1)
    return np.array([[math.sin(n * math.pi * i * h) * math.sin(m * math.pi * j * h)
                      for j in range(1, N + 1)] for i in range(1, N + 1)])


def mae_direct(a, b):
    a, b = np.asarray(a).tolist(), np.asarray(b).tolist()
    tot, cnt = 0.0, 0
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            tot += abs(x - y)
            cnt += 1
    return tot / cnt


def five_point_direct(u):
    """5-point Laplacian with zero ghost values, written as loops."""
    u = np.asarray(u, dtype=np.float64)
    N = u.shape[0]
    h = 1.0 / (N + 1)

    def at(i, j):
        return u[i, j] if 0 <= i < N and 0 <= j < N else 0.0

    out = np.empty_like(u)
    for i in range(N):
        for j in range(N):
            out[i, j] = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4 * at(i, j)) / h**2
    return out


def kbar_direct(n, m):
    lam = math.pi**2 * (n * n + m * m)
    return (1.0 / lam + math.log(2) * max(n, m)) ** 2


def sympy_pair(kind, n=1, k=1, j=1):
    """``(u, Lap u)`` as numpy callables built symbolically from the u closed forms."""
    import sympy as sp

    x, y = sp.symbols("x y")
    pi = sp.pi
    u = {
        "type1": sp.sin(n * pi * x) * sp.sin(k * pi * y),
        "type2": sp.sin(n * pi * x) * sp.sin(k * pi * y) * sp.sin(j * pi * x),
        "type3": sp.sin(n * pi * x) * sp.sin(k * pi * y) * sp.cos(n * pi * x),
        "type4": sp.sin(n * pi * x) * sp.sin(k * pi * y) * sp.cos(j * pi * x),
        "type5": n * (x - 1) * x * (y - 1) * y * sp.exp(x - y),
        "type6": n * (x - 1) * x * (y - 1) * y * sp.exp(y - x),
    }[kind]
    lap = sp.diff(u, x, 2) + sp.diff(u, y, 2)
    return sp.lambdify((x, y), u, "numpy"), sp.lambdify((x, y), lap, "numpy")


# Values frozen from the computations above (see test_oracles.py for the re-derivation).
MAE_TYPE1_VS_ZERO_N64 = 0.4178860780824728   # mean |sin(pi x) sin(pi y)| over the 64x64 grid
FD_GAP_MAE_N64 = 0.0016056305135903769       # |lambda_11 - mu_11| * MAE_TYPE1_VS_ZERO_N64
KBAR_1_64 = 1967.9377391767785
KBAR_1_1 = 0.5532500022545553
PSI_1_1 = 0.0551589000381629                  # ln 2 / (4 pi)
