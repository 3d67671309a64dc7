"""The binning estimator and its ceilings.

Layer activations are discretized into 30 equal-width bins per dimension;
the tuple of bin indices is a discrete symbol and mutual information is the
plug-in estimate over the empirical joint. For a deterministic network over
distinct inputs, I(T;X) is just H(T) and the estimator hits clean ceilings:
12 bits for the 4096-point input space, 1 bit for balanced binary labels,
log2(10) for ten balanced classes.
"""

import math

import numpy as np

from binplane.datasets import gen_synthetic
from binplane.infoplane import (BinningSpec, discretize, entropy_bits,
                                layer_mi_snapshot, mi_with_input,
                                mi_with_labels)
from binplane.nn import Activation, build_network
from binplane.numerics import RngStream

print("entropy of [1,1,1,1]:", entropy_bits([1, 1, 1, 1]), "bits")
print("entropy of [4]:      ", entropy_bits([4]), "bits")
print("entropy of [3,1]:    ", entropy_bits([3, 1]), "bits")
print()

ds = gen_synthetic(0)

# discretizing the raw inputs: every one of the 4096 rows is distinct, so
# the identity tap saturates at log2(4096) = 12 bits
symbols = discretize(ds.features, (0.0, 1.0), bins=30)
print("identity-tap I(T;X) over all 4096 inputs:",
      mi_with_input(symbols, ds.sample_ids), "bits")

# a perfect predictor's symbols are the labels themselves
print("perfect-predictor I(T;Y), balanced binary:",
      mi_with_labels(ds.labels.copy(), ds.labels), "bit")

ten = np.repeat(np.arange(10), 100)
print("ten balanced classes, symbols == labels:",
      mi_with_labels(ten.copy(), ten), f"(log2 10 = {math.log2(10):.6f})")
print()

# an untrained binary network already orders its layers by the data
# processing inequality: deeper taps cannot know more about X
net = build_network([12, 10, 8, 6, 4, 2, 2], Activation("ste_sign"),
                    RngStream(0, 1), binarize=True)
snaps = layer_mi_snapshot(net, ds, "train", BinningSpec(30), epoch=0)
print("untrained BNN, train split:")
for s in snaps:
    if s.tap == "post_act":
        print(f"  layer {s.layer} post-activation: "
          f"I(T;X) = {s.i_tx_bits:6.3f}  I(T;Y) = {s.i_ty_bits:6.3f}")
acts = [s for s in snaps if s.tap == "post_act"]
assert all(a.i_tx_bits >= b.i_tx_bits - 1e-9 for a, b in zip(acts, acts[1:]))
print("monotone non-increasing down the stack: confirmed")
