"""Generators for ``(f, u)`` pairs with ``Lap u = f`` and ``u = 0`` on the boundary.

Two families:

* analytical pairs (types 1 to 6), closed forms for both ``u`` and ``f``;
* neural-network pairs ``u = g(x, y) x(1-x) y(1-y)`` with ``g`` a random
  tanh network and ``f`` obtained exactly from second-order jets.

Every sample draws from its own generator keyed on ``(seed, split, index)``,
so a dataset is reproducible element by element regardless of how it is
sliced or parallelised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .grid import GridSpec, PairSample, ScalarField
from .jets import TanhNetSpec, tanh_net_jets

ANALYTICAL_KINDS = ("type1", "type2", "type3", "type4", "type5", "type6")
SPLITS = {"train": 0, "test": 1}
PI = np.pi


@dataclass(frozen=True)
class AnalyticalSpec:
    kind: str
    n: int = 1
    k: int = 1
    j: int = 1

    def __post_init__(self):
        if self.kind not in ANALYTICAL_KINDS:
            raise ValueError(f"unknown analytical kind {self.kind!r}")
        for name in ("n", "k", "j"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    def max_mode(self) -> int:
        """Highest sine mode present in ``u`` (types 1 to 4 only)."""
        return {"type1": max(self.n, self.k), "type2": max(self.n + self.j, self.k),
                "type3": max(2 * self.n, self.k), "type4": max(self.n + self.j, self.k),
                }.get(self.kind, 0)


def analytical_functions(spec: AnalyticalSpec):
    """Closed forms ``(u, f)`` as vectorised callables of ``(x, y)``."""
    n, k, j = spec.n, spec.k, spec.j
    sin, cos, exp = np.sin, np.cos, np.exp

    if spec.kind == "type1":
        def u(x, y): return sin(n * PI * x) * sin(k * PI * y)
        def f(x, y): return -PI**2 * (n**2 + k**2) * sin(n * PI * x) * sin(k * PI * y)
    elif spec.kind == "type2":
        def u(x, y): return sin(n * PI * x) * sin(k * PI * y) * sin(j * PI * x)
        def f(x, y):
            return -PI**2 * (-2 * j * n * cos(j * PI * x) * cos(n * PI * x)
                             + (j**2 + k**2 + n**2) * sin(j * PI * x) * sin(n * PI * x)) * sin(k * PI * y)
    elif spec.kind == "type3":
        def u(x, y): return sin(n * PI * x) * sin(k * PI * y) * cos(n * PI * x)
        def f(x, y): return -0.5 * (k**2 + 4 * n**2) * PI**2 * sin(2 * n * PI * x) * sin(k * PI * y)
    elif spec.kind == "type4":
        def u(x, y): return sin(n * PI * x) * sin(k * PI * y) * cos(j * PI * x)
        def f(x, y):
            return -PI**2 * (2 * j * n * cos(n * PI * x) * sin(j * PI * x)
                             + (j**2 + k**2 + n**2) * cos(j * PI * x) * sin(n * PI * x)) * sin(k * PI * y)
    elif spec.kind == "type5":
        def u(x, y): return n * (x - 1) * x * (y - 1) * y * exp(x - y)
        def f(x, y): return 2 * exp(x - y) * n * x * (y - 1) * (2 + x * (y - 2) + y)
    else:
        def u(x, y): return n * (x - 1) * x * (y - 1) * y * exp(y - x)
        def f(x, y): return 2 * n * exp(y - x) * y * (x - 1) * (2 + x - 2 * y + x * y)
    return u, f


def gen_analytical(spec: AnalyticalSpec, grid: GridSpec) -> PairSample:
    u, f = analytical_functions(spec)
    return PairSample(ScalarField.from_function(grid, f), ScalarField.from_function(grid, u),
                      spec.kind, {"n": spec.n, "k": spec.k, "j": spec.j})


def nn_fields(spec: TanhNetSpec, X, Y):
    """``u = g b`` and ``f = b Lap g + 2 grad g . grad b + g Lap b`` at the given points."""
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64))
    v, g, H = tanh_net_jets(spec, X, Y)
    x, y = X.ravel(), Y.ravel()
    bump = x * (1 - x) * y * (1 - y)
    bx = (1 - 2 * x) * y * (1 - y)
    by = x * (1 - x) * (1 - 2 * y)
    lap_bump = -2 * y * (1 - y) - 2 * x * (1 - x)
    u = v * bump
    f = bump * (H[0, 0] + H[1, 1]) + 2 * (g[0] * bx + g[1] * by) + v * lap_bump
    return u.reshape(X.shape), f.reshape(X.shape)


def gen_nn_pair(spec: TanhNetSpec, grid: GridSpec) -> PairSample:
    X, Y = grid.mesh()
    u, f = nn_fields(spec, X, Y)
    return PairSample(ScalarField(grid, f), ScalarField(grid, u), "nn", {"seed": spec.seed})


def parse_mix(mix) -> dict[str, float]:
    """Accept a mapping or a string like ``"nn=0.5,type1=0.5"``; ``"nn"`` means 100%."""
    if isinstance(mix, str):
        out = {}
        for part in filter(None, (p.strip() for p in mix.split(","))):
            name, _, w = part.partition("=")
            out[name.strip()] = float(w) if w else 1.0
        mix = out
    mix = {str(k): float(v) for k, v in dict(mix).items() if float(v) != 0.0}
    if not mix:
        raise ValueError("empty mix")
    for name, w in mix.items():
        if name not in ANALYTICAL_KINDS + ("nn",):
            raise ValueError(f"unknown provenance {name!r} in mix")
        if w < 0:
            raise ValueError(f"negative proportion for {name!r}")
    if abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ValueError(f"mix proportions sum to {sum(mix.values())}, expected 1")
    return mix


def sample_rng(seed: int, index: int, split: str = "train") -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([seed, SPLITS[split], index]))


def gen_sample(index: int, mix: Mapping[str, float], seed: int, grid: GridSpec,
               split: str = "train", nn_width: int = 32, max_param: int = 8) -> PairSample:
    rng = sample_rng(seed, index, split)
    names = sorted(mix)
    probs = np.array([mix[k] for k in names])
    kind = names[min(int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(),
                                          side="right")), len(names) - 1)]
    if kind == "nn":
        net_seed = int(rng.integers(0, 2**63))
        spec = TanhNetSpec.random(np.random.default_rng(net_seed), width=nn_width, seed=net_seed)
        return gen_nn_pair(spec, grid)
    top = max(1, min(max_param, grid.n_interior // 2))
    n, k, j = (int(v) for v in rng.integers(1, top + 1, size=3))
    return gen_analytical(AnalyticalSpec(kind, n, k, j), grid)


def gen_dataset(count: int, mix, seed: int, grid: GridSpec = GridSpec(),
                split: str = "train", **kwargs) -> list[PairSample]:
    if count < 1:
        raise ValueError("count must be >= 1")
    mix = parse_mix(mix)
    return [gen_sample(i, mix, seed, grid, split, **kwargs) for i in range(count)]


def stack_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    """``(F, U)`` arrays of shape ``(count, N, N)``."""
    return (np.stack([p.f.values for p in pairs]), np.stack([p.u.values for p in pairs]))
