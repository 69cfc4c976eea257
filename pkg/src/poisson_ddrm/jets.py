"""Second-order forward-mode derivatives through small tanh networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray   # (2,)
    hess: np.ndarray   # (2, 2)


@dataclass(frozen=True, eq=False)
class TanhNetSpec:
    """A fully connected net ``2 -> w -> ... -> 1`` with tanh hidden layers."""

    weights: tuple
    biases: tuple
    seed: int | None = None

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty and of equal length")
        if np.shape(self.weights[0])[1] != 2 or np.shape(self.weights[-1])[0] != 1:
            raise ValueError("network must map R^2 to R")

    @property
    def layer_widths(self) -> list[int]:
        return [np.shape(self.weights[0])[1]] + [np.shape(W)[0] for W in self.weights]

    @classmethod
    def random(cls, rng: np.random.Generator, width: int = 32, hidden: int = 3,
               seed: int | None = None) -> "TanhNetSpec":
        """Weights and biases drawn from ``N(0, 1/fan_in)`` per layer."""
        sizes = [2] + [width] * hidden + [1]
        W, b = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            std = 1.0 / np.sqrt(fan_in)
            W.append(rng.normal(0.0, std, (fan_out, fan_in)))
            b.append(rng.normal(0.0, std, fan_out))
        return cls(tuple(W), tuple(b), seed)


def tanh_net_jets(spec: TanhNetSpec, x, y):
    """Value, gradient and Hessian of the network at many points at once.

    Returns ``value (P,)``, ``grad (2, P)``, ``hess (2, 2, P)`` for the
    flattened broadcast of ``x`` and ``y``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    a = np.stack([x.ravel(), y.ravel()])
    P = a.shape[1]
    # per-unit derivative rows: d/dx, d/dy, d2/dx2, d2/dxdy, d2/dy2; the input
    # layer's are constant, so they start as broadcastable columns
    gx = np.array([[1.0], [0.0]])
    gy = np.array([[0.0], [1.0]])
    hxx = hxy = hyy = np.zeros((2, 1))
    last = len(spec.weights) - 1
    for k, (W, b) in enumerate(zip(spec.weights, spec.biases)):
        W = np.asarray(W)
        z = W @ a + np.asarray(b)[:, None]
        zgx, zgy = W @ gx, W @ gy
        zxx, zxy, zyy = W @ hxx, W @ hxy, W @ hyy
        if k == last:
            a, gx, gy, hxx, hxy, hyy = z, zgx, zgy, zxx, zxy, zyy
            break
        t = np.tanh(z)
        t1 = 1.0 - t * t
        t2 = -2.0 * t * t1
        a = t
        gx, gy = t1 * zgx, t1 * zgy
        hxx = t2 * zgx * zgx + t1 * zxx
        hxy = t2 * zgx * zgy + t1 * zxy
        hyy = t2 * zgy * zgy + t1 * zyy
    gx, gy, hxx, hxy, hyy = (np.broadcast_to(v[0], (P,)) for v in (gx, gy, hxx, hxy, hyy))
    grad = np.stack([gx, gy])
    # one shared array for both mixed partials keeps them bitwise equal
    hess = np.stack([np.stack([hxx, hxy]), np.stack([hxy, hyy])])
    return a[0], grad, hess


def tanh_net_jet(spec: TanhNetSpec, x: float, y: float) -> Jet2:
    v, g, H = tanh_net_jets(spec, x, y)
    return Jet2(float(v[0]), g[:, 0].copy(), H[:, :, 0].copy())
