"""Deterministic numeric substrate shared by every other module.

Matrices are plain 2-D float64 numpy arrays with row-major semantics.
Randomness comes from counter-based Philox streams, so a (seed, stream)
pair fully determines every draw no matter how calls interleave elsewhere.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


class ShapeError(ValueError):
    """Operand dimensions do not chain."""


def as_matrix(data):
    """Coerce to a non-empty 2-D C-contiguous float64 array with finite entries."""
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def matmul(a, b):
    """Matrix product with explicit shape checking.

    Delegates the reduction to numpy, which is bitwise reproducible for
    identical inputs on a fixed platform.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
        # one allocation-free reduction: any inf/nan entry poisons the sum
        if not np.isfinite(out.sum()):
            raise FloatingPointError("matmul produced non-finite entries")
    return out


def _splitmix64(z):
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class RngStream:
    """Counter-based random stream keyed by (seed, stream).

    Philox is a counter-based generator: distinct keys give statistically
    independent streams, and the draw sequence for a key is identical on
    every run of the same platform.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, child):
        """Derive an independent stream; (seed, parent stream, child) determine it."""
        return RngStream(self.seed, _splitmix64(self.stream ^ _splitmix64(int(child))))

    def uniform(self, low, high, shape=None):
        return self._gen.uniform(low, high, shape)

    def permutation(self, n):
        return self._gen.permutation(n)

    def integers(self, low, high, shape=None):
        return self._gen.integers(low, high, shape)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def glorot_init(rng, fan_in, fan_out):
    """Uniform Glorot initialization on [-sqrt(6/(fan_in+fan_out)), +...]."""
    if fan_in < 1 or fan_out < 1:
        raise ShapeError(f"fan_in and fan_out must be >= 1, got {fan_in}, {fan_out}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))
