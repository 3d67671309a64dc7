"""Bias-corrected Adam over latent weight matrices with post-step clipping."""

import numpy as np

from .numerics import ShapeError


class AdamState:
    """Moment buffers and step counter for a single weight matrix."""

    def __init__(self, shape, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self._scratch = np.zeros(shape)


def adam_step(state, weights, grads, clip=False):
    """One in-place bias-corrected update; clips to [-1, +1] when asked.

    Clipping is the latent-weight device for binarized layers, keeping the
    full-precision shadow inside the binarization range. All intermediate
    work happens in a scratch buffer: the update is memory-bound on wide
    layers and must not mutate the caller's gradient array.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if weights.shape != grads.shape or weights.shape != state.m.shape:
        raise ShapeError(
            f"shape mismatch: weights {weights.shape}, grads {grads.shape}, "
            f"state {state.m.shape}")
    state.t += 1
    s = state._scratch
    state.m *= state.beta1
    np.multiply(grads, 1.0 - state.beta1, out=s)
    state.m += s
    state.v *= state.beta2
    np.multiply(grads, grads, out=s)
    s *= 1.0 - state.beta2
    state.v += s
    np.divide(state.v, 1.0 - state.beta2 ** state.t, out=s)
    np.sqrt(s, out=s)
    s += state.eps
    np.divide(state.m, s, out=s)
    s *= state.lr / (1.0 - state.beta1 ** state.t)
    weights -= s
    if clip:
        np.clip(weights, -1.0, 1.0, out=weights)
    return weights


class Adam:
    """Network-level optimizer: one AdamState per layer, head included."""

    def __init__(self, net, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.states = [AdamState(layer.latent_weights.shape, lr, beta1, beta2, eps)
                       for layer in net.layers]

    def step(self, net, grads):
        if len(grads) != len(net.layers):
            raise ShapeError(f"expected {len(net.layers)} gradients, got {len(grads)}")
        for layer, state, g in zip(net.layers, self.states, grads):
            adam_step(state, layer.latent_weights, g, clip=layer.binarize)

    @property
    def t(self):
        return self.states[0].t if self.states else 0
