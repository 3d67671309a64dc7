"""Binning estimators for information-plane quantities of layer taps.

Each tap (post-batchnorm, post-activation, softmax output) is discretized
into equal-width bins over a range fixed per activation codomain, so the
resulting mutual-information trajectories stay comparable across epochs.
All entropies and mutual informations are in bits.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .nn import sign_swish_forward

# Post-batchnorm (and identity) taps are standardized but unbounded; a fixed
# +/-5 sigma window keeps the grid stable while clamping only far tails.
STANDARDIZED_RANGE = (-5.0, 5.0)


@dataclass(frozen=True)
class BinningSpec:
    """Bin count for the equal-width discretization grid."""

    bins: int = 30

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("need at least 2 bins")


@lru_cache(maxsize=None)
def sign_swish_range(beta=5.0):
    """Codomain extrema of the smooth sign-swish, found by dense grid scan.

    The forward map depends on x only through beta*x, so the overshoot
    height is one universal constant (about 1.1997); the scan runs in that
    product space. The extrema are symmetric because the map is odd.
    """
    z = np.linspace(-20.0, 20.0, 400001)
    m = float(np.abs(sign_swish_forward(z, 1.0)).max())
    return (-m, m)


def tap_range(tap_kind, activation=None):
    """Fixed binning range for a tap of the given kind."""
    if tap_kind == "softmax":
        return (0.0, 1.0)
    if tap_kind == "post_bn":
        return STANDARDIZED_RANGE
    if tap_kind != "post_act":
        raise ValueError(f"unknown tap kind {tap_kind!r}")
    if activation is None:
        raise ValueError("post_act range needs the layer activation")
    if activation.kind == "sign_swish":
        return sign_swish_range(activation.beta)
    if activation.kind == "identity":
        return STANDARDIZED_RANGE
    return (-1.0, 1.0)  # binary kinds, tanh, hard_tanh


def bin_indices(values, value_range, bins=30):
    """Equal-width bin index of every entry after clamping to the range.

    The index is floor((v - lo) / (hi - lo) * bins); v == hi lands in the
    top bin.
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    if not lo < hi:
        raise ValueError(f"invalid range ({lo}, {hi})")
    v = np.clip(np.asarray(values, dtype=np.float64), lo, hi)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    idx[idx == bins] = bins - 1
    return idx


def discretize(values, value_range, bins=30):
    """Map each row of ``values`` to a discrete symbol id.

    Rows with equal bin-index tuples share a symbol id; ids are dense
    integers starting at 0 (ordering is an implementation detail).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("tap values must be 2-D (samples x features)")
    idx = bin_indices(v, value_range, bins)
    _, symbols = np.unique(idx, axis=0, return_inverse=True)
    return symbols.astype(np.int64).ravel()


def entropy_bits(counts):
    """Shannon entropy in bits of a histogram; 0 log 0 is treated as 0."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    if c.size == 0 or c.sum() < 1:
        raise ValueError("empty histogram")
    if np.any(c < 0):
        raise ValueError("negative counts")
    p = c[c > 0] / c.sum()
    return float(-(p * np.log2(p)).sum() + 0.0)  # + 0.0 normalizes -0.0


def _dense_ids(values):
    _, inv = np.unique(np.asarray(values), return_inverse=True)
    return inv.ravel()


def _joint_mi_bits(a, b):
    """Plug-in MI from paired observations, as H(a) + H(b) - H(a, b)."""
    a = _dense_ids(a)
    b = _dense_ids(b)
    nb = int(b.max()) + 1
    # count only observed (a, b) cells; the full table can be huge but sparse
    _, joint = np.unique(a * nb + b, return_counts=True)
    h_a = entropy_bits(np.bincount(a))
    h_b = entropy_bits(np.bincount(b))
    h_ab = entropy_bits(joint)
    return h_a + h_b - h_ab


def mi_with_input(symbols, sample_ids):
    """I(T;X) in bits from the empirical joint distribution.

    Equals H(T) exactly when every sample id is unique, which is the case
    for deterministic eval-mode networks over distinct inputs.
    """
    symbols = np.asarray(symbols)
    sample_ids = np.asarray(sample_ids)
    if symbols.shape != sample_ids.shape:
        raise ValueError("symbols and sample ids must align")
    return _joint_mi_bits(symbols, sample_ids)


def mi_with_labels(symbols, labels):
    """I(T;Y) in bits from the empirical joint histogram."""
    symbols = np.asarray(symbols)
    labels = np.asarray(labels)
    if symbols.shape != labels.shape:
        raise ValueError("symbols and labels must align")
    return _joint_mi_bits(symbols, labels)


@dataclass(frozen=True)
class MISnapshot:
    """Both MI values for one (epoch, layer tap, split)."""

    epoch: int
    layer: int
    tap: str  # post_bn | post_act | softmax
    split: str  # train | test
    i_tx_bits: float
    i_ty_bits: float


def layer_mi_snapshot(net, dataset, split, spec, epoch):
    """Eval-mode MI snapshot of every tap of ``net`` on one dataset split.

    Runs a single tape-recording forward pass over the split using running
    batchnorm statistics, so the representation is a deterministic function
    of the input.
    """
    idx = dataset.train_idx if split == "train" else dataset.val_idx
    if len(idx) == 0:
        raise ValueError(f"split {split!r} is empty")
    x = dataset.features[idx]
    y = dataset.labels[idx]
    ids = dataset.sample_ids[idx]
    net.forward(x, train=False, record_tape=True)
    snaps = []
    for tap in net.tape:
        act = net.layers[tap.layer].activation if tap.kind == "post_act" else None
        rng = tap_range(tap.kind, act)
        symbols = discretize(tap.values, rng, spec.bins)
        snaps.append(MISnapshot(
            epoch=int(epoch), layer=tap.layer, tap=tap.kind, split=split,
            i_tx_bits=mi_with_input(symbols, ids),
            i_ty_bits=mi_with_labels(symbols, y)))
    return snaps
