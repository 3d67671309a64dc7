import numpy as np
import pytest

from binplane.nn import (Activation, BatchNorm, DenseLayer, Network, StateError,
                         accuracy, approx_sign_backward, binarize_weights,
                         build_network, cross_entropy, hard_tanh_backward,
                         hard_tanh_forward, sign_forward, sign_swish_forward,
                         softmax, ste_backward, swish_sign_backward,
                         tanh_backward, tanh_forward)
from binplane.numerics import RngStream, ShapeError


def central_diff(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


class TestSignForward:
    def test_positive(self):
        assert sign_forward(0.3) == 1.0

    def test_zero_maps_to_minus_one(self):
        assert sign_forward(0.0) == -1.0

    def test_negative(self):
        assert sign_forward(-2.0) == -1.0

    def test_codomain(self):
        vals = sign_forward(np.linspace(-4, 4, 101))
        assert set(np.unique(vals)) == {-1.0, 1.0}


class TestSteBackward:
    def test_interior(self):
        assert ste_backward(0.5) == 1.0

    def test_inclusive_bounds(self):
        assert ste_backward(-1.0) == 1.0
        assert ste_backward(1.0) == 1.0

    def test_outside(self):
        assert ste_backward(1.5) == 0.0

    def test_matches_hard_tanh_derivative_off_kinks(self):
        # exact equality away from |x| = 1
        x = np.concatenate([np.linspace(-3, 3, 601)])
        x = x[np.abs(np.abs(x) - 1.0) > 1e-12]
        np.testing.assert_array_equal(ste_backward(x), hard_tanh_backward(x))


class TestApproxSignBackward:
    def test_peak(self):
        assert approx_sign_backward(0.0) == 2.0

    def test_halfway(self):
        assert approx_sign_backward(0.5) == 1.0

    def test_outside(self):
        assert approx_sign_backward(1.5) == 0.0

    def test_even_and_continuous(self):
        x = np.linspace(-2, 2, 2001)
        y = approx_sign_backward(x)
        np.testing.assert_allclose(y, approx_sign_backward(-x), atol=0)
        assert np.abs(np.diff(y)).max() < 0.01  # no jumps on a fine grid

    def test_integrates_to_two(self):
        x = np.linspace(-1, 1, 20001)
        y = approx_sign_backward(x)
        area = float(((y[1:] + y[:-1]) / 2 * np.diff(x)).sum())
        assert abs(area - 2.0) < 1e-3


class TestSwishSignBackward:
    def test_value_at_origin(self):
        assert float(swish_sign_backward(0.0, 5.0)) == 5.0

    def test_value_at_one(self):
        assert abs(float(swish_sign_backward(1.0, 5.0)) - (-0.195)) < 1e-3

    def test_vanishes_at_infinity(self):
        assert float(swish_sign_backward(60.0, 5.0)) == pytest.approx(0.0, abs=1e-12)
        assert float(swish_sign_backward(-1e6, 5.0)) == 0.0

    def test_negative_lobe_preserved(self):
        # the formula dips below zero; no clamping
        assert float(swish_sign_backward(1.0, 5.0)) < 0.0

    def test_is_derivative_of_sign_swish(self):
        x = np.linspace(-3, 3, 601)
        fd = central_diff(lambda v: sign_swish_forward(v, 5.0), x, h=1e-5)
        np.testing.assert_allclose(swish_sign_backward(x, 5.0), fd, atol=1e-4)


class TestTanh:
    def test_origin(self):
        assert tanh_forward(0.0) == 0.0
        assert tanh_backward(0.0) == 1.0

    def test_saturation(self):
        assert abs(float(tanh_forward(10.0)) - 1.0) < 1e-6

    def test_backward_matches_finite_difference(self):
        x = np.linspace(-3, 3, 301)
        fd = central_diff(tanh_forward, x)
        np.testing.assert_allclose(tanh_backward(x), fd, atol=1e-6)


class TestHardTanh:
    def test_linear_region(self):
        assert hard_tanh_forward(0.4) == 0.4

    def test_saturates(self):
        assert hard_tanh_forward(-3.0) == -1.0
        assert hard_tanh_forward(2.5) == 1.0

    def test_backward_outside(self):
        assert hard_tanh_backward(2.0) == 0.0
        assert hard_tanh_backward(0.0) == 1.0


class TestSignSwishForward:
    def test_origin(self):
        assert float(sign_swish_forward(0.0, 5.0)) == 0.0

    def test_limits(self):
        assert float(sign_swish_forward(100.0, 5.0)) == pytest.approx(1.0, abs=1e-9)
        assert float(sign_swish_forward(-100.0, 5.0)) == pytest.approx(-1.0, abs=1e-9)

    def test_odd(self):
        x = np.linspace(-4, 4, 101)
        np.testing.assert_allclose(sign_swish_forward(x, 5.0),
                                   -sign_swish_forward(-x, 5.0), atol=1e-12)


class TestBinarizeWeights:
    def test_signs(self):
        np.testing.assert_array_equal(binarize_weights([[0.3, -0.7]]), [[1.0, -1.0]])

    def test_zero_convention(self):
        np.testing.assert_array_equal(binarize_weights([[0.0]]), [[-1.0]])

    def test_all_positive(self):
        np.testing.assert_array_equal(binarize_weights(np.full((2, 3), 0.2)),
                                      np.ones((2, 3)))


class TestActivationRegistry:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Activation("relu")

    def test_bad_beta(self):
        with pytest.raises(ValueError):
            Activation("swish_sign", beta=0.0)

    def test_binary_kinds_share_sign_forward(self):
        x = np.array([-0.5, 0.0, 2.0])
        for kind in ("ste_sign", "approx_sign", "swish_sign"):
            np.testing.assert_array_equal(Activation(kind).forward(x),
                                          sign_forward(x))

    def test_smooth_swish_backward_is_exact_derivative(self):
        act = Activation("sign_swish", beta=2.5)
        x = np.linspace(-2, 2, 101)
        fd = central_diff(act.forward, x, h=1e-5)
        np.testing.assert_allclose(act.backward(x), fd, atol=1e-4)


class TestBatchNorm:
    def test_train_standardizes(self):
        rng = RngStream(0)
        x = rng.uniform(-3, 9, (64, 5))
        bn = BatchNorm(5)
        y = bn.forward(x, train=True)
        np.testing.assert_allclose(y.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.var(axis=0), 1.0, atol=1e-4)

    def test_constant_column_goes_to_zero(self):
        x = np.ones((16, 3)) * np.array([2.0, -1.0, 0.5])
        y = BatchNorm(3).forward(x, train=True)
        np.testing.assert_allclose(y, 0.0, atol=1e-9)

    def test_already_standardized_passthrough(self):
        rng = RngStream(1)
        x = rng.uniform(-1, 1, (256, 4))
        x = (x - x.mean(axis=0)) / x.std(axis=0)
        y = BatchNorm(4).forward(x, train=True)
        np.testing.assert_allclose(y, x, atol=1e-4)  # only the eps effect

    def test_batch_of_one_rejected(self):
        with pytest.raises(ValueError):
            BatchNorm(3).forward(np.ones((1, 3)), train=True)

    def test_eval_uses_running_stats(self):
        bn = BatchNorm(2, momentum=0.5)
        rng = RngStream(2)
        for _ in range(50):
            bn.forward(rng.uniform(0, 4, (32, 2)), train=True)
        x = np.array([[2.0, 2.0], [2.0, 2.0]])
        y1 = bn.forward(x, train=False)
        y2 = bn.forward(x, train=False)
        np.testing.assert_array_equal(y1, y2)  # eval mode is stateless

    def test_backward_matches_finite_difference(self):
        rng = RngStream(3)
        x = rng.uniform(-2, 2, (4, 3))
        up = rng.uniform(-1, 1, (4, 3))

        def loss(xv):
            bn = BatchNorm(3)
            return float((bn.forward(xv, train=True) * up).sum())

        bn = BatchNorm(3)
        bn.forward(x, train=True)
        got = bn.backward(up)
        eps = 1e-6
        for i in range(4):
            for j in range(3):
                xp = x.copy(); xp[i, j] += eps
                xm = x.copy(); xm[i, j] -= eps
                fd = (loss(xp) - loss(xm)) / (2 * eps)
                assert got[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_backward_zero_upstream(self):
        bn = BatchNorm(3)
        bn.forward(RngStream(4).uniform(-1, 1, (8, 3)), train=True)
        np.testing.assert_array_equal(bn.backward(np.zeros((8, 3))), np.zeros((8, 3)))

    def test_backward_constant_upstream_columns_sum_to_zero(self):
        bn = BatchNorm(3)
        bn.forward(RngStream(5).uniform(-1, 1, (8, 3)), train=True)
        g = bn.backward(np.ones((8, 3)))
        np.testing.assert_allclose(g.sum(axis=0), 0.0, atol=1e-12)

    def test_backward_without_forward(self):
        with pytest.raises(StateError):
            BatchNorm(3).backward(np.zeros((4, 3)))


class TestDenseLayer:
    def test_forward_hand_case(self):
        layer = DenseLayer(np.ones((2, 2)), binarize=True)
        out = layer.linear(np.array([[1.0, -1.0]]))
        np.testing.assert_array_equal(out, [[0.0, 0.0]])

    def test_binarized_matches_prebinarized(self):
        rng = RngStream(6)
        w = rng.uniform(-1, 1, (5, 4))
        x = rng.uniform(-1, 1, (3, 5))
        a = DenseLayer(w, binarize=True).linear(x)
        b = DenseLayer(binarize_weights(w), binarize=False).linear(x)
        np.testing.assert_array_equal(a, b)

    def test_batch_rows_independent(self):
        # BLAS may reorder the reduction with batch shape; rows agree to
        # float noise, and run-to-run determinism is exact either way
        rng = RngStream(7)
        w = rng.uniform(-1, 1, (5, 4))
        x = rng.uniform(-1, 1, (6, 5))
        full = DenseLayer(w).linear(x)
        one = DenseLayer(w).linear(x[2:3])
        np.testing.assert_allclose(full[2:3], one, atol=1e-12)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            DenseLayer(np.ones((3, 2))).linear(np.ones((4, 5)))

    def test_backward_needs_forward(self):
        with pytest.raises(StateError):
            DenseLayer(np.ones((3, 2))).linear_backward(np.ones((4, 2)))

    def test_zero_upstream_gives_zero_grads(self):
        layer = DenseLayer(RngStream(8).uniform(-1, 1, (3, 2)))
        layer.linear(np.ones((4, 3)), keep=True)
        dx, dw = layer.linear_backward(np.zeros((4, 2)))
        np.testing.assert_array_equal(dx, np.zeros((4, 3)))
        np.testing.assert_array_equal(dw, np.zeros((3, 2)))

    def test_straight_through_uses_binary_weights_for_grads(self):
        rng = RngStream(9)
        w = rng.uniform(-1, 1, (3, 2))
        x = rng.uniform(-1, 1, (4, 3))
        up = rng.uniform(-1, 1, (4, 2))
        lb = DenseLayer(w.copy(), binarize=True)
        lb.linear(x, keep=True)
        dxb, dwb = lb.linear_backward(up)
        lf = DenseLayer(binarize_weights(w), binarize=False)
        lf.linear(x, keep=True)
        dxf, dwf = lf.linear_backward(up)
        np.testing.assert_array_equal(dxb, dxf)
        np.testing.assert_array_equal(dwb, dwf)


def _loss_for(net, x, y):
    return cross_entropy(net.forward(x, train=False), y)


def _check_gradients_against_fd(net, x, y, rel=1e-4):
    probs = net.forward(x, train=True)
    grads = net.backward(probs, y)
    eps = 1e-6
    for li, layer in enumerate(net.layers):
        w = layer.latent_weights
        for r in range(w.shape[0]):
            for c in range(w.shape[1]):
                orig = w[r, c]
                w[r, c] = orig + eps
                lp = _loss_for(net, x, y)
                w[r, c] = orig - eps
                lm = _loss_for(net, x, y)
                w[r, c] = orig
                fd = (lp - lm) / (2 * eps)
                assert grads[li][r, c] == pytest.approx(fd, rel=rel, abs=1e-7), \
                    f"layer {li} weight ({r},{c})"


class TestNetwork:
    def test_softmax_rows_sum_to_one(self):
        net = build_network([12, 10, 8, 6, 4, 2, 2], Activation("ste_sign"),
                            RngStream(0, 1), binarize=True)
        x = RngStream(1).uniform(0, 1, (16, 12))
        probs = net.forward(x)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_binary_taps_two_valued(self):
        net = build_network([12, 10, 8, 6, 4, 2, 2], Activation("approx_sign"),
                            RngStream(2, 1), binarize=True)
        x = RngStream(3).uniform(0, 1, (32, 12))
        net.forward(x, train=False, record_tape=True)
        for tap in net.tape:
            if tap.kind == "post_act":
                assert set(np.unique(tap.values)) <= {-1.0, 1.0}

    def test_tape_layout(self):
        net = build_network([12, 10, 8, 6, 4, 2, 2], Activation("ste_sign"),
                            RngStream(4, 1), binarize=True)
        net.forward(RngStream(5).uniform(0, 1, (8, 12)), record_tape=True)
        kinds = [(t.layer, t.kind) for t in net.tape]
        assert kinds[-1] == (5, "softmax")
        assert (0, "post_bn") in kinds and (4, "post_act") in kinds

    def test_no_batchnorm_tape_for_plain_nets(self):
        net = build_network([6, 4, 2], Activation("tanh"), RngStream(6, 1))
        net.forward(RngStream(7).uniform(-1, 1, (8, 6)), record_tape=True)
        assert all(t.kind != "post_bn" for t in net.tape)

    def test_width_mismatch(self):
        net = build_network([6, 4, 2], Activation("tanh"), RngStream(8, 1))
        with pytest.raises(ShapeError):
            net.forward(np.ones((4, 5)))

    def test_backward_without_forward(self):
        net = build_network([6, 4, 2], Activation("tanh"), RngStream(9, 1))
        with pytest.raises(StateError):
            net.backward(np.full((4, 2), 0.5), np.zeros(4, dtype=int))

    def test_confident_correct_prediction_small_gradient(self):
        net = build_network([4, 2], Activation("tanh"), RngStream(10, 1))
        # force huge logit separation so probs are one-hot
        net.head.latent_weights[:] = np.array([[40.0, -40.0]] * 4)
        x = np.ones((3, 4))
        y = np.zeros(3, dtype=int)
        probs = net.forward(x, train=True)
        grads = net.backward(probs, y)
        assert np.abs(grads[0]).max() < 1e-12

    @pytest.mark.parametrize("kind", ["tanh", "hard_tanh", "sign_swish"])
    def test_full_precision_gradients_match_fd(self, kind):
        net = build_network([6, 5, 4, 2], Activation(kind), RngStream(11, 1))
        x = RngStream(12).uniform(-1, 1, (8, 6))
        y = RngStream(13).integers(0, 2, 8)
        _check_gradients_against_fd(net, x, y)

    def test_gradients_with_batchnorm_match_fd(self):
        # train-mode loss as a function of weights, batch statistics included
        net = build_network([5, 4, 2], Activation("tanh"), RngStream(14, 1),
                            batchnorm=True)
        x = RngStream(15).uniform(-1, 1, (6, 5))
        y = RngStream(16).integers(0, 2, 6)
        probs = net.forward(x, train=True)
        grads = net.backward(probs, y)
        eps = 1e-6

        def train_loss():
            fresh = build_network([5, 4, 2], Activation("tanh"), RngStream(14, 1),
                                  batchnorm=True)
            for a, b in zip(fresh.layers, net.layers):
                a.latent_weights[:] = b.latent_weights
            return cross_entropy(fresh.forward(x, train=True), y)

        for li, layer in enumerate(net.layers):
            w = layer.latent_weights
            for r in range(w.shape[0]):
                for c in range(w.shape[1]):
                    orig = w[r, c]
                    w[r, c] = orig + eps
                    lp = train_loss()
                    w[r, c] = orig - eps
                    lm = train_loss()
                    w[r, c] = orig
                    fd = (lp - lm) / (2 * eps)
                    assert grads[li][r, c] == pytest.approx(fd, rel=1e-3, abs=1e-8)

    def test_ste_zeroes_gradient_where_preactivation_saturates(self):
        net = build_network([3, 2, 2], Activation("ste_sign"), RngStream(17, 1),
                            binarize=True, batchnorm=False)
        x = np.array([[4.0, 4.0, 4.0], [-4.0, -4.0, -4.0]] * 2)
        probs = net.forward(x, train=True)
        pre = net.layers[0]._act_input
        assert np.all(np.abs(pre) > 1.0)  # all saturated by construction
        grads = net.backward(probs, np.array([0, 1, 0, 1]))
        np.testing.assert_array_equal(grads[0], np.zeros((3, 2)))

    def test_synthetic_widths_accepted(self):
        net = build_network([12, 10, 8, 6, 4, 2, 2], Activation("ste_sign"),
                            RngStream(18, 1), binarize=True)
        assert [l.fan_out for l in net.layers] == [10, 8, 6, 4, 2, 2]


class TestHeads:
    def test_cross_entropy_uniform(self):
        probs = np.full((4, 2), 0.5)
        assert cross_entropy(probs, np.array([0, 1, 0, 1])) == pytest.approx(np.log(2))

    def test_accuracy(self):
        probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]])
        assert accuracy(probs, np.array([0, 1, 1])) == pytest.approx(2 / 3)

    def test_softmax_stable_for_large_logits(self):
        p = softmax(np.array([[1000.0, 0.0]]))
        assert np.isfinite(p).all() and p[0, 0] == pytest.approx(1.0)
