"""Numeric substrate: float64 tensors, splitmix64 RNG and a few primitives.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. Functions here
never mutate their inputs.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ArgumentError, DimensionError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def as_tensor(values) -> np.ndarray:
    return np.array(values, dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def sign(t: np.ndarray) -> np.ndarray:
    # np.sign maps 0.0 (and -0.0) to 0.0
    return np.sign(np.asarray(t, dtype=np.float64))


def clip(t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if lo > hi:
        raise ArgumentError(f"clip bounds inverted: lo={lo} > hi={hi}")
    return np.minimum(np.maximum(np.asarray(t, dtype=np.float64), lo), hi)


def norms(t: np.ndarray) -> tuple[float, float]:
    """Return ``(l2, linf)`` of the flattened tensor."""
    v = np.asarray(t, dtype=np.float64).ravel()
    if v.size == 0:
        return 0.0, 0.0
    return float(np.sqrt(np.dot(v, v))), float(np.max(np.abs(v)))


def batch_norms(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise l2 and linf norms of a 2-D array."""
    t = np.asarray(t, dtype=np.float64)
    return np.sqrt(np.einsum("ij,ij->i", t, t)), np.max(np.abs(t), axis=1)


# ---------------------------------------------------------------- RNG


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns ``(output, next_state)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


class RngStream:
    """Seeded splitmix64 stream.

    ``next_u64`` is the only primitive; everything else (uniforms, bounded
    integers, Gaussians, shuffles) is derived from it so the same seed gives
    the same numbers on every platform.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64
        self._spare: float | None = None

    def next_u64(self) -> int:
        value, self.state = splitmix64_next(self.state)
        return value

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Integer in [0, n) via the high half of a 64x64 product."""
        if n <= 0:
            raise ArgumentError(f"bound must be positive, got {n}")
        return (self.next_u64() * n) >> 64

    def gauss(self) -> float:
        """Standard normal by Box-Muller; the second variate is cached."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def uniform_array(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        return np.array([lo + (hi - lo) * self.uniform() for _ in range(n)])

    def gauss_array(self, n: int) -> np.ndarray:
        return np.array([self.gauss() for _ in range(n)])

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(idx, dtype=np.int64)


def rng_next(state: int) -> tuple[int, int]:
    """Pure form of :meth:`RngStream.next_u64`: ``(value, next_state)``."""
    return splitmix64_next(int(state) & MASK64)


# ------------------------------------------------------ softmax / loss


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, max-shifted for stability."""
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, y) -> tuple:
    """Cross-entropy of logits against class index ``y``.

    Works on a single logit vector (``y`` an int) or a batch of shape
    ``(n, C)`` (``y`` an int array); in the batched case the per-example
    losses and gradients are returned, not their mean.
    """
    z = np.asarray(logits, dtype=np.float64)
    num_classes = z.shape[-1]
    y_arr = np.asarray(y)
    if np.any(y_arr < 0) or np.any(y_arr >= num_classes):
        raise ArgumentError(f"label {y} out of range for {num_classes} classes")
    logp = log_softmax(z)
    grad = np.exp(logp)
    if z.ndim == 1:
        y = int(y)
        grad[y] -= 1.0
        return float(-logp[y]), grad
    rows = np.arange(z.shape[0])
    loss = -logp[rows, y_arr]
    grad[rows, y_arr] -= 1.0
    return loss, grad


# ------------------------------------------------------------- oracle


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``."""
    if h <= 0:
        raise ArgumentError(f"step must be positive, got {h}")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = f(x.copy())
        flat[i] = orig - h
        f_minus = f(x.copy())
        flat[i] = orig
        g[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def gradient_mismatch(
    analytic: np.ndarray, numeric: np.ndarray, rel_tol: float = 1e-5, abs_tol: float = 1e-8,
    small: float = 1e-6,
) -> float:
    """Worst violation ratio between two gradients (<= 1 means they agree).

    Components with ``|analytic| > small`` are held to ``rel_tol`` relative
    error, the rest to ``abs_tol`` absolute error.
    """
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    diff = np.abs(a - n)
    big = np.abs(a) > small
    ratio = np.where(big, diff / (rel_tol * np.maximum(np.abs(a), 1e-300)), diff / abs_tol)
    return float(ratio.max()) if ratio.size else 0.0
