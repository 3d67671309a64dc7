import math

import numpy as np
import pytest

from binplane.datasets import gen_synthetic
from binplane.infoplane import (BinningSpec, MISnapshot, bin_indices, discretize,
                                entropy_bits, layer_mi_snapshot, mi_with_input,
                                mi_with_labels, sign_swish_range, tap_range)
from binplane.nn import Activation, build_network, sign_swish_forward
from binplane.numerics import RngStream


def brute_force_mi(a, b):
    """Direct joint-probability-table MI, independent of the library path."""
    a = list(a)
    b = list(b)
    n = len(a)
    pab = {}
    pa = {}
    pb = {}
    for x, y in zip(a, b):
        pab[(x, y)] = pab.get((x, y), 0) + 1
        pa[x] = pa.get(x, 0) + 1
        pb[y] = pb.get(y, 0) + 1
    total = 0.0
    for (x, y), c in pab.items():
        pxy = c / n
        total += pxy * math.log2(pxy / ((pa[x] / n) * (pb[y] / n)))
    return total


class TestDiscretize:
    def test_lower_edge_is_bin_zero(self):
        assert bin_indices(np.array([-1.0]), (-1, 1), bins=30)[0] == 0

    def test_upper_edge_is_top_bin(self):
        assert bin_indices(np.array([1.0]), (-1, 1), bins=30)[0] == 29

    def test_formula_interior(self):
        # floor((v - lo)/(hi - lo) * bins): 0.0 on [-1, 1] with 30 bins -> 15
        got = bin_indices(np.array([0.0, -0.5, 0.96]), (-1, 1), bins=30)
        np.testing.assert_array_equal(got, [15, 7, 29])

    def test_clamping(self):
        got = bin_indices(np.array([5.0, 1.0, -7.0]), (-1, 1), bins=30)
        np.testing.assert_array_equal(got, [29, 29, 0])

    def test_binary_values_occupy_two_bins_per_dim(self):
        rng = RngStream(0)
        vals = np.where(rng.uniform(0, 1, (200, 3)) > 0.5, 1.0, -1.0)
        s30 = discretize(vals, (-1, 1), bins=30)
        s2 = discretize(vals, (-1, 1), bins=2)
        # binning resolution does not matter for two-valued data
        assert mi_with_labels(s30, s2) == pytest.approx(entropy_bits(np.bincount(s30)))

    def test_equal_rows_equal_symbols(self):
        vals = np.array([[0.1, 0.2], [0.1, 0.2], [0.3, 0.2]])
        s = discretize(vals, (0, 1), bins=10)
        assert s[0] == s[1] != s[2]

    def test_bad_range(self):
        with pytest.raises(ValueError):
            discretize(np.zeros((2, 2)), (1, 1), bins=10)


class TestEntropyBits:
    def test_uniform_four(self):
        assert entropy_bits([1, 1, 1, 1]) == 2.0

    def test_degenerate(self):
        assert entropy_bits([4]) == 0.0

    def test_three_one(self):
        expected = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
        assert entropy_bits([3, 1]) == pytest.approx(expected, abs=1e-12)

    def test_zero_counts_ignored(self):
        assert entropy_bits([2, 0, 2]) == 1.0

    def test_empty_histogram(self):
        with pytest.raises(ValueError):
            entropy_bits([])
        with pytest.raises(ValueError):
            entropy_bits([0, 0])


class TestMiWithInput:
    def test_four_distinct(self):
        assert mi_with_input([0, 1, 2, 3], [0, 1, 2, 3]) == 2.0

    def test_single_symbol(self):
        assert mi_with_input([7, 7, 7, 7], [0, 1, 2, 3]) == 0.0

    def test_twelve_bit_ceiling(self):
        ids = np.arange(4096)
        assert mi_with_input(ids, ids) == 12.0  # exactly, counts are powers of two

    def test_equals_entropy_when_ids_unique(self):
        rng = RngStream(1)
        symbols = rng.integers(0, 5, 64)
        h = entropy_bits(np.bincount(symbols))
        assert mi_with_input(symbols, np.arange(64)) == h

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mi_with_input([1, 2], [1, 2, 3])


class TestMiWithLabels:
    def test_balanced_binary_identity(self):
        labels = np.array([0, 1] * 32)
        assert mi_with_labels(labels.copy(), labels) == 1.0

    def test_independent(self):
        # constructed product distribution: every (symbol, label) cell equal
        symbols = np.repeat([0, 1], 8)
        labels = np.tile([0, 1], 8)
        assert mi_with_labels(symbols, labels) == pytest.approx(0.0, abs=1e-12)

    def test_ten_balanced_classes(self):
        labels = np.repeat(np.arange(10), 7)
        assert mi_with_labels(labels.copy(), labels) == pytest.approx(
            math.log2(10), abs=1e-9)

    def test_matches_brute_force_randomized(self):
        rng = RngStream(2)
        for case in range(60):
            n = int(rng.integers(2, 33, ()))
            symbols = rng.integers(0, 6, n)
            labels = rng.integers(0, 4, n)
            got = mi_with_labels(symbols, labels)
            assert got == pytest.approx(brute_force_mi(symbols, labels), abs=1e-12)

    def test_permutation_invariant(self):
        rng = RngStream(3)
        symbols = rng.integers(0, 5, 40)
        labels = rng.integers(0, 3, 40)
        perm = rng.permutation(40)
        assert mi_with_labels(symbols, labels) == pytest.approx(
            mi_with_labels(symbols[perm], labels[perm]), abs=1e-12)


class TestTapRanges:
    def test_softmax_unit_interval(self):
        assert tap_range("softmax") == (0.0, 1.0)

    def test_binary_and_saturating(self):
        for kind in ("ste_sign", "approx_sign", "swish_sign", "tanh", "hard_tanh"):
            assert tap_range("post_act", Activation(kind)) == (-1.0, 1.0)

    def test_sign_swish_overshoot(self):
        lo, hi = tap_range("post_act", Activation("sign_swish", beta=5.0))
        assert lo == -hi
        assert 1.0 < hi < 1.5
        x = np.linspace(-10, 10, 100001)
        assert np.abs(sign_swish_forward(x, 5.0)).max() <= hi + 1e-12

    def test_sign_swish_range_independent_of_beta(self):
        # the forward map is a function of beta*x alone, so the overshoot
        # height is shared by every beta
        assert sign_swish_range(1.0) == sign_swish_range(5.0)
        for beta in (0.3, 2.0, 9.0):
            x = np.linspace(-40 / beta, 40 / beta, 200001)
            peak = np.abs(sign_swish_forward(x, beta)).max()
            assert peak == pytest.approx(sign_swish_range(beta)[1], abs=1e-6)

    def test_unknown_tap(self):
        with pytest.raises(ValueError):
            tap_range("pre_act")


def _snapshot_net(seed=0):
    return build_network([12, 10, 8, 6, 4, 2, 2], Activation("ste_sign"),
                         RngStream(seed, 1), binarize=True)


class TestLayerMiSnapshot:
    def test_untrained_net_yields_all_taps(self):
        ds = gen_synthetic(0)
        snaps = layer_mi_snapshot(_snapshot_net(), ds, "train", BinningSpec(30), 0)
        kinds = {(s.layer, s.tap) for s in snaps}
        assert (5, "softmax") in kinds
        assert {(i, "post_bn") for i in range(5)} <= kinds
        assert {(i, "post_act") for i in range(5)} <= kinds
        for s in snaps:
            assert np.isfinite(s.i_tx_bits) and np.isfinite(s.i_ty_bits)
            assert 0.0 <= s.i_ty_bits <= s.i_tx_bits + 1e-9

    def test_width_two_tap_capped_at_two_bits(self):
        ds = gen_synthetic(0)
        snaps = layer_mi_snapshot(_snapshot_net(), ds, "train", BinningSpec(30), 0)
        last = [s for s in snaps if s.layer == 4 and s.tap == "post_act"]
        assert last and last[0].i_tx_bits <= 2.0 + 1e-12

    def test_binary_taps_insensitive_to_bin_count(self):
        ds = gen_synthetic(0)
        net = _snapshot_net()
        s30 = {(s.layer, s.tap): s for s in
               layer_mi_snapshot(net, ds, "train", BinningSpec(30), 0)}
        s2 = {(s.layer, s.tap): s for s in
              layer_mi_snapshot(net, ds, "train", BinningSpec(2), 0)}
        for key, snap in s30.items():
            if key[1] == "post_act":  # binary codomain: only 2 bins ever active
                assert snap.i_tx_bits == pytest.approx(s2[key].i_tx_bits, abs=1e-12)
                assert snap.i_ty_bits == pytest.approx(s2[key].i_ty_bits, abs=1e-12)

    def test_dpi_along_binary_chain(self):
        # eval-mode net: each binary tap is a deterministic function of the
        # previous one, so the plug-in estimate cannot gain information
        ds = gen_synthetic(1)
        snaps = layer_mi_snapshot(_snapshot_net(3), ds, "train", BinningSpec(30), 0)
        acts = {s.layer: s for s in snaps if s.tap == "post_act"}
        for layer in range(4):
            assert acts[layer + 1].i_tx_bits <= acts[layer].i_tx_bits + 1e-9
            assert acts[layer + 1].i_ty_bits <= acts[layer].i_ty_bits + 1e-9

    def test_sample_order_does_not_matter(self):
        ds = gen_synthetic(0)
        net = _snapshot_net()
        a = layer_mi_snapshot(net, ds, "test", BinningSpec(30), 5)
        b = layer_mi_snapshot(net, ds, "test", BinningSpec(30), 5)
        assert a == b

    def test_empty_split_rejected(self):
        from binplane.datasets import Dataset
        ds = Dataset("t", np.zeros((4, 12)), np.zeros(4, dtype=int), 2,
                     np.arange(4), np.arange(0))
        with pytest.raises(ValueError):
            layer_mi_snapshot(_snapshot_net(), ds, "test", BinningSpec(30), 0)


class TestBinningSpec:
    def test_default(self):
        assert BinningSpec().bins == 30

    def test_too_few_bins(self):
        with pytest.raises(ValueError):
            BinningSpec(bins=1)
