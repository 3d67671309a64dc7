"""Manual backpropagation, verified against central finite differences.

For full-precision activations the analytic gradients must match finite
differences of the loss to high precision. For binary activations the
backward pass is a surrogate, so no such identity holds; instead we
demonstrate the straight-through behavior: saturated pre-activations
(|h| > 1 under STE) contribute exactly zero gradient.
"""

import numpy as np

from binplane.nn import Activation, build_network, cross_entropy
from binplane.numerics import RngStream

x = RngStream(1).uniform(-1, 1, (8, 12))
y = RngStream(2).integers(0, 2, 8)

for kind in ("tanh", "hard_tanh", "sign_swish"):
    net = build_network([12, 10, 8, 2], Activation(kind), RngStream(0, 1))
    probs = net.forward(x, train=True)
    grads = net.backward(probs, y)

    worst = 0.0
    eps = 1e-6
    for li, layer in enumerate(net.layers):
        w = layer.latent_weights
        for r in range(w.shape[0]):
            for c in range(w.shape[1]):
                orig = w[r, c]
                w[r, c] = orig + eps
                lp = cross_entropy(net.forward(x), y)
                w[r, c] = orig - eps
                lm = cross_entropy(net.forward(x), y)
                w[r, c] = orig
                fd = (lp - lm) / (2 * eps)
                denom = max(abs(fd), 1e-8)
                worst = max(worst, abs(grads[li][r, c] - fd) / denom)
    n_params = sum(l.latent_weights.size for l in net.layers)
    print(f"{kind:11s}: {n_params} weights, worst relative gradient error {worst:.2e}")

print()
print("straight-through estimator zeroing:")
net = build_network([3, 2, 2], Activation("ste_sign"), RngStream(3, 1),
                    binarize=True, batchnorm=False)
saturating = np.array([[4.0, 4.0, 4.0], [-4.0, -4.0, -4.0]] * 2)
probs = net.forward(saturating, train=True)
grads = net.backward(probs, np.array([0, 1, 0, 1]))
print("  pre-activations all exceed |1|; first-layer gradient:",
      np.abs(grads[0]).max())
