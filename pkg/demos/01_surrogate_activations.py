"""Tour of the activation zoo: sign forward passes and their surrogates.

Binary layers all share the same two-level sign in the forward direction;
what distinguishes them is the stand-in derivative used during
backpropagation. The full-precision cousins (tanh, hard-tanh, sign-swish)
are genuinely differentiable, and sign-swish shares its derivative formula
with the swish-sign surrogate exactly.
"""

import numpy as np

from binplane.nn import (approx_sign_backward, hard_tanh_backward,
                         hard_tanh_forward, sign_forward, sign_swish_forward,
                         ste_backward, swish_sign_backward, tanh_backward,
                         tanh_forward)

xs = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])

print("x        ", "  ".join(f"{x:7.2f}" for x in xs))
print("sign(x)  ", "  ".join(f"{v:7.2f}" for v in sign_forward(xs)))
print()
print("surrogate derivatives used in the backward pass:")
print("  STE        ", "  ".join(f"{v:7.2f}" for v in ste_backward(xs)))
print("  approx-sign", "  ".join(f"{v:7.2f}" for v in approx_sign_backward(xs)))
print("  swish-sign ", "  ".join(f"{v:7.3f}" for v in swish_sign_backward(xs, 5.0)))
print()
print("note the swish-sign surrogate goes negative around |x| ~ 0.4 (beta=5):")
print("  value at x=1:", float(swish_sign_backward(1.0, 5.0)))
print()

# The smooth sign-swish forward pass is the function whose derivative the
# swish-sign surrogate computes. Central differences confirm it.
grid = np.linspace(-3, 3, 601)
h = 1e-5
fd = (sign_swish_forward(grid + h, 5.0) - sign_swish_forward(grid - h, 5.0)) / (2 * h)
err = np.abs(fd - swish_sign_backward(grid, 5.0)).max()
print(f"max |finite-difference - swish_sign_backward| on [-3,3]: {err:.2e}")

# STE is the derivative of hard-tanh away from the kinks at +/-1.
off_kinks = grid[np.abs(np.abs(grid) - 1.0) > 1e-9]
assert np.array_equal(ste_backward(off_kinks), hard_tanh_backward(off_kinks))
print("STE == d/dx hard_tanh everywhere except |x| = 1: confirmed")

# tanh backward against finite differences
fd_tanh = (tanh_forward(grid + h) - tanh_forward(grid - h)) / (2 * h)
print(f"max tanh backward error: {np.abs(fd_tanh - tanh_backward(grid)).max():.2e}")

# the sign-swish overshoot: its codomain pokes past +/-1
ys = sign_swish_forward(grid, 5.0)
print(f"sign-swish codomain on this grid: [{ys.min():.4f}, {ys.max():.4f}]")
print("forward saturates to +/-1 far from 0:", float(sign_swish_forward(100.0, 5.0)))

print()
print("hard-tanh clamps:", hard_tanh_forward(np.array([-3.0, 0.4, 2.5])))
