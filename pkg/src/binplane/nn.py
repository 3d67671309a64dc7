"""Feed-forward networks with manual backpropagation.

Dense layers keep full-precision latent weights that are binarized on the
fly when requested; batch normalization applies centering and variance
scaling only (no learnable parameters); the binary activations share a sign
forward pass and differ in their surrogate backward pass.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import ShapeError, glorot_init, matmul


class StateError(RuntimeError):
    """Backward pass requested without a cached forward pass."""


# ---------------------------------------------------------------------------
# activation math (vectorized over arrays)
# ---------------------------------------------------------------------------

def sign_forward(x):
    """Two-level sign: -1 for x <= 0, +1 for x > 0."""
    return np.where(np.asarray(x, dtype=np.float64) > 0.0, 1.0, -1.0)


def ste_backward(x):
    """Straight-through surrogate: 1 on [-1, +1], 0 elsewhere."""
    return np.where(np.abs(np.asarray(x, dtype=np.float64)) <= 1.0, 1.0, 0.0)


def approx_sign_backward(x):
    """Triangular surrogate 2 - 2|x| on [-1, +1], 0 elsewhere."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(ax <= 1.0, 2.0 - 2.0 * ax, 0.0)


def swish_sign_backward(x, beta=5.0):
    """Smooth surrogate beta*(2 - beta*x*tanh(beta*x/2)) / (1 + cosh(beta*x)).

    This is the exact derivative of sign_swish_forward. It dips below zero
    for moderate |x|; no clamping is applied.
    """
    bx = beta * np.asarray(x, dtype=np.float64)
    out = np.zeros_like(bx)
    # cosh overflows past ~710; the true value there is indistinguishable from 0
    safe = np.abs(bx) < 500.0
    b = bx[safe]
    out[safe] = beta * (2.0 - b * np.tanh(b / 2.0)) / (1.0 + np.cosh(b))
    return out


def tanh_forward(x):
    return np.tanh(np.asarray(x, dtype=np.float64))


def tanh_backward(x):
    """sech^2, computed as 1 - tanh^2 to avoid cosh overflow."""
    t = np.tanh(np.asarray(x, dtype=np.float64))
    return 1.0 - t * t


def hard_tanh_forward(x):
    return np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)


def hard_tanh_backward(x):
    """1 strictly inside (-1, +1), 0 outside (and at the kinks)."""
    x = np.asarray(x, dtype=np.float64)
    return np.where((x > -1.0) & (x < 1.0), 1.0, 0.0)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sign_swish_forward(x, beta=5.0):
    """2*sigma(beta x)*(1 + beta x*(1 - sigma(beta x))) - 1."""
    bx = beta * np.asarray(x, dtype=np.float64)
    s = _sigmoid(bx)
    return 2.0 * s * (1.0 + bx * (1.0 - s)) - 1.0


def binarize_weights(latent):
    """Element-wise sign with the zero-to--1 convention of sign_forward."""
    return np.where(np.asarray(latent, dtype=np.float64) > 0.0, 1.0, -1.0)


BINARY_KINDS = ("ste_sign", "approx_sign", "swish_sign")
REAL_KINDS = ("tanh", "hard_tanh", "sign_swish", "identity")

_FORWARD = {
    "ste_sign": lambda x, beta: sign_forward(x),
    "approx_sign": lambda x, beta: sign_forward(x),
    "swish_sign": lambda x, beta: sign_forward(x),
    "tanh": lambda x, beta: tanh_forward(x),
    "hard_tanh": lambda x, beta: hard_tanh_forward(x),
    "sign_swish": sign_swish_forward,
    "identity": lambda x, beta: np.asarray(x, dtype=np.float64),
}

_BACKWARD = {
    "ste_sign": lambda x, beta: ste_backward(x),
    "approx_sign": lambda x, beta: approx_sign_backward(x),
    "swish_sign": swish_sign_backward,
    "tanh": lambda x, beta: tanh_backward(x),
    "hard_tanh": lambda x, beta: hard_tanh_backward(x),
    # the surrogate formula is the exact derivative of the smooth forward
    "sign_swish": swish_sign_backward,
    "identity": lambda x, beta: np.ones_like(np.asarray(x, dtype=np.float64)),
}


@dataclass(frozen=True)
class Activation:
    """An activation kind plus the swish sharpness parameter where relevant."""

    kind: str
    beta: float = 5.0

    def __post_init__(self):
        if self.kind not in _FORWARD:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def is_binary(self):
        return self.kind in BINARY_KINDS

    def forward(self, x):
        return _FORWARD[self.kind](x, self.beta)

    def backward(self, x):
        return _BACKWARD[self.kind](x, self.beta)


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

class BatchNorm:
    """Per-feature standardization without learnable scale or shift.

    Train mode normalizes with batch statistics and folds them into running
    aggregates; eval mode replays the running aggregates so the map is a
    deterministic function of its input.
    """

    def __init__(self, width, momentum=0.9, eps=1e-5):
        self.width = int(width)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.running_mean = np.zeros(self.width)
        self.running_var = np.ones(self.width)
        self._cache = None

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.width:
            raise ShapeError(f"batchnorm expects (*, {self.width}), got {x.shape}")
        if not train:
            return (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
        if x.shape[0] < 2:
            raise ValueError("train-mode batchnorm needs a batch of at least 2")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv = 1.0 / np.sqrt(var + self.eps)
        y = (x - mean) * inv
        m = self.momentum
        self.running_mean = m * self.running_mean + (1.0 - m) * mean
        self.running_var = m * self.running_var + (1.0 - m) * var
        self._cache = (y, inv)
        return y

    def backward(self, upstream):
        """Exact gradient of the train-mode normalization map."""
        if self._cache is None:
            raise StateError("batchnorm backward without a cached train-mode forward")
        y, inv = self._cache
        g = np.asarray(upstream, dtype=np.float64)
        n = y.shape[0]
        return (inv / n) * (n * g - g.sum(axis=0) - y * (g * y).sum(axis=0))


class DenseLayer:
    """Dense layer with optional weight binarization, batchnorm and activation.

    Latent weights stay full precision. With ``binarize`` set, forward and
    backward matmuls use their element-wise sign while gradients land on the
    latent copy unchanged (straight-through). The head layer of a network
    uses ``activation=None`` and no batchnorm.
    """

    def __init__(self, latent_weights, activation=None, binarize=False, batchnorm=None):
        self.latent_weights = np.ascontiguousarray(latent_weights, dtype=np.float64)
        if self.latent_weights.ndim != 2:
            raise ShapeError("latent weights must be 2-D")
        self.activation = activation
        self.binarize = bool(binarize)
        self.batchnorm = batchnorm
        self._input = None
        self._act_input = None
        self._effective = None

    @property
    def fan_in(self):
        return self.latent_weights.shape[0]

    @property
    def fan_out(self):
        return self.latent_weights.shape[1]

    def effective_weights(self):
        return binarize_weights(self.latent_weights) if self.binarize else self.latent_weights

    def linear(self, x, keep=False):
        """Dense product against the effective weights; caches input when keep."""
        x = np.asarray(x, dtype=np.float64)
        w = self.effective_weights()
        z = matmul(x, w)
        if keep:
            self._input = x
            self._effective = w
        return z

    def linear_backward(self, upstream, need_input_grad=True):
        """(input gradient, latent weight gradient) for the cached input."""
        if self._input is None:
            raise StateError("dense backward without a cached forward")
        g = np.asarray(upstream, dtype=np.float64)
        dw = matmul(self._input.T, g)
        dx = matmul(g, self._effective.T) if need_input_grad else None
        return dx, dw

    def forward(self, x, train=False):
        """dense -> batchnorm (if present) -> activation (if present).

        Returns (pre-activation tap, output). The pre-activation tap is the
        post-batchnorm value when batchnorm is present, otherwise the dense
        output itself.
        """
        z = self.linear(x, keep=train)
        h = self.batchnorm.forward(z, train=train) if self.batchnorm else z
        if train:
            self._act_input = h
        a = self.activation.forward(h) if self.activation else h
        return h, a

    def backward(self, upstream, need_input_grad=True):
        """(input gradient, latent weight gradient) through act, bn and dense."""
        if self._act_input is None and self.activation is not None:
            raise StateError("layer backward without a cached forward")
        g = np.asarray(upstream, dtype=np.float64)
        if self.activation is not None:
            g = g * self.activation.backward(self._act_input)
        if self.batchnorm is not None:
            g = self.batchnorm.backward(g)
        return self.linear_backward(g, need_input_grad=need_input_grad)


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tap:
    """One instrumentation point captured during a forward pass."""

    layer: int
    kind: str  # post_bn | post_act | softmax
    values: np.ndarray


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs, labels):
    """Mean negative log-likelihood in nats."""
    n = len(labels)
    picked = probs[np.arange(n), np.asarray(labels, dtype=np.int64)]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def accuracy(probs, labels):
    return float((probs.argmax(axis=1) == np.asarray(labels)).mean())


class Network:
    """A stack of hidden dense layers plus a dense softmax head.

    The last layer in ``layers`` is the head: it has no activation and no
    batchnorm, and its output feeds the softmax.
    """

    def __init__(self, layers):
        if len(layers) < 1:
            raise ShapeError("network needs at least the head layer")
        for a, b in zip(layers[:-1], layers[1:]):
            if a.fan_out != b.fan_in:
                raise ShapeError(f"layer widths do not chain: {a.fan_out} -> {b.fan_in}")
        self.layers = list(layers)
        self.tape = None

    @property
    def hidden(self):
        return self.layers[:-1]

    @property
    def head(self):
        return self.layers[-1]

    @property
    def n_classes(self):
        return self.head.fan_out

    def forward(self, x, train=False, record_tape=False):
        """Softmax probabilities for a batch; optionally records layer taps."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.layers[0].fan_in:
            raise ShapeError(
                f"input must be (*, {self.layers[0].fan_in}), got {x.shape}")
        taps = [] if record_tape else None
        a = x
        for i, layer in enumerate(self.hidden):
            h, a = layer.forward(a, train=train)
            if record_tape:
                if layer.batchnorm is not None:
                    taps.append(Tap(i, "post_bn", h))
                taps.append(Tap(i, "post_act", a))
        logits = self.head.linear(a, keep=train)
        probs = softmax(logits)
        if record_tape:
            taps.append(Tap(len(self.hidden), "softmax", probs))
            self.tape = taps
        return probs

    def backward(self, probs, labels):
        """Mean cross-entropy gradient for every latent weight matrix.

        Returns one gradient per layer, in layer order (head last).
        """
        if self.head._input is None:
            raise StateError("network backward without a cached train-mode forward")
        labels = np.asarray(labels, dtype=np.int64)
        n = probs.shape[0]
        d = probs.copy()
        d[np.arange(n), labels] -= 1.0
        d /= n
        upstream, dw = self.head.linear_backward(d, need_input_grad=bool(self.hidden))
        grads = [dw]
        for i, layer in zip(range(len(self.hidden) - 1, -1, -1),
                            reversed(self.hidden)):
            upstream, dw = layer.backward(upstream, need_input_grad=i > 0)
            grads.append(dw)
        grads.reverse()
        return grads


def build_network(widths, activation, rng, binarize=False, batchnorm=None):
    """Construct a network for ``widths`` like [12, 10, 8, 6, 4, 2, 2].

    All entries but the last are layer input widths; the final entry is the
    class count. ``batchnorm`` defaults to the ``binarize`` flag: binary nets
    normalize between the dense product and the sign activation, real nets
    run plain dense + activation.
    """
    widths = [int(w) for w in widths]
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ShapeError(f"bad width chain {widths}")
    if batchnorm is None:
        batchnorm = binarize
    layers = []
    last = len(widths) - 2
    for i, (fi, fo) in enumerate(zip(widths[:-1], widths[1:])):
        w = glorot_init(rng.substream(i), fi, fo)
        if i == last:
            layers.append(DenseLayer(w, activation=None, binarize=binarize))
        else:
            bn = BatchNorm(fo) if batchnorm else None
            layers.append(DenseLayer(w, activation=activation, binarize=binarize,
                                     batchnorm=bn))
    return Network(layers)
