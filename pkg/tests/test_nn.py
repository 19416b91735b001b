import math

import numpy as np
import pytest

from candlekit import nn
from candlekit.errors import (
    InvalidShape,
    MalformedHeader,
    NonFiniteValue,
    ShapeMismatch,
    TruncatedPixelData,
)

SMOOTH_LAYERS = [
    nn.Conv2D(2, 3, 3),
    nn.Conv2D(2, 3, 3, stride=2, pad=1),
    nn.Conv1D(2, 3, 3, pad=1),
    nn.Dense(5, 4),
    nn.Sigmoid(),
    nn.Flatten(),
    nn.Reshape((2, 6)),
    nn.NearestUpsample2D(2),
]
KINKED_LAYERS = [nn.ReLU(), nn.MaxPool2D(2, 2), nn.MaxPool2D(3, 2), nn.MaxPool1D(2, 2)]


class TestShapeLaw:
    def test_conv_floor_formula(self):
        assert nn.output_shape(nn.Conv2D(3, 8, 3, stride=1, pad=1), (3, 64, 64)) == (8, 64, 64)
        assert nn.output_shape(nn.Conv2D(3, 8, 3, stride=2, pad=0), (3, 7, 7)) == (8, 3, 3)
        assert nn.output_shape(nn.MaxPool2D(2, 2), (8, 5, 5)) == (8, 2, 2)

    def test_nonpositive_dim_fails_at_build(self):
        with pytest.raises(InvalidShape):
            nn.output_shape(nn.Conv2D(3, 8, 5), (3, 4, 4))
        with pytest.raises(InvalidShape):
            nn.Sequential([nn.MaxPool1D(2, 2)] * 6, (4, 28), seed=0)

    def test_channel_mismatch(self):
        with pytest.raises(InvalidShape):
            nn.output_shape(nn.Conv2D(3, 8, 3), (4, 8, 8))


class TestInit:
    def test_deterministic_per_seed(self):
        a = nn.init_params(nn.Dense(4, 2), seed=9)
        b = nn.init_params(nn.Dense(4, 2), seed=9)
        c = nn.init_params(nn.Dense(4, 2), seed=10)
        assert np.array_equal(a.weight, b.weight)
        assert not np.array_equal(a.weight, c.weight)

    def test_shapes_and_zero_bias(self):
        p = nn.init_params(nn.Dense(4, 2), seed=0)
        assert p.weight.shape == (4, 2) and p.weight.size == 8
        assert p.bias.shape == (2,) and (p.bias == 0).all()
        q = nn.init_params(nn.Conv2D(3, 8, 3), seed=0)
        assert q.weight.shape == (8, 3, 3, 3) and (q.bias == 0).all()

    def test_he_uniform_bound(self):
        p = nn.init_params(nn.Dense(6, 50), seed=5)
        bound = math.sqrt(6.0 / 6)
        assert (np.abs(p.weight) < bound).all()


class TestForward:
    def test_identity_kernel_conv(self):
        spec = nn.Conv2D(1, 1, 1)
        p = nn.init_params(spec, 0)
        p.weight[...] = 1.0
        x = np.arange(9, dtype=np.float32).reshape(1, 1, 3, 3)
        y, _ = nn.forward(spec, p, x)
        assert np.array_equal(y, x)

    def test_maxpool_example(self):
        y, _ = nn.forward(nn.MaxPool2D(2, 2), nn.init_params(nn.MaxPool2D(2, 2), 0),
                          np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        assert y.reshape(()) == 4.0

    def test_dense_hand_example(self):
        spec = nn.Dense(2, 2)
        p = nn.init_params(spec, 0)
        p.weight[...] = np.eye(2)
        p.bias[...] = (1.0, 1.0)
        y, _ = nn.forward(spec, p, np.array([[3.0, -2.0]], dtype=np.float32))
        assert np.allclose(y, [[4.0, -1.0]])

    def test_sigmoid_strictly_inside_unit_interval(self):
        spec = nn.Sigmoid()
        x = np.array([-80.0, -1.0, 0.0, 1.0, 80.0], dtype=np.float32)
        y, _ = nn.forward(spec, nn.init_params(spec, 0), x)
        assert ((y > 0) & (y < 1)).all()

    def test_relu_backward_routing(self):
        spec = nn.ReLU()
        p = nn.init_params(spec, 0)
        x = np.array([2.0, -3.0, 0.5])
        y, cache = nn.forward(spec, p, x)
        g = nn.backward(spec, p, cache, np.ones_like(x))
        assert np.array_equal(g, [1.0, 0.0, 1.0])

    def test_shape_mismatch(self):
        spec = nn.Dense(3, 2)
        with pytest.raises(ShapeMismatch):
            nn.forward(spec, nn.init_params(spec, 0), np.zeros((1, 4), dtype=np.float32))

    def test_dense_weight_gradient_outer_product(self):
        spec = nn.Dense(2, 3)
        p = nn.init_params(spec, 1)
        x = np.array([[1.0, 0.0]])
        _, cache = nn.forward(spec, p, x)
        g_out = np.array([[0.3, -0.7, 2.0]])
        nn.backward(spec, p, cache, g_out)
        assert np.allclose(p.grad_w[0], g_out[0])
        assert np.allclose(p.grad_w[1], 0.0)


class TestGradChecks:
    @pytest.mark.parametrize("spec", SMOOTH_LAYERS, ids=lambda s: type(s).__name__ + repr(s))
    def test_smooth_layers(self, spec):
        for seed in (1, 2, 3):
            assert nn.grad_check(spec, seed) < 1e-6

    @pytest.mark.parametrize("spec", KINKED_LAYERS, ids=lambda s: type(s).__name__ + repr(s))
    def test_kinked_layers(self, spec):
        for seed in (1, 2, 3):
            assert nn.grad_check(spec, seed) < 1e-4

    def test_losses(self):
        for seed in (1, 2, 3):
            assert nn.grad_check_loss("bce", seed) < 1e-4
            assert nn.grad_check_loss("mse", seed) < 1e-4

    def test_overlapping_pool_windows(self):
        assert nn.grad_check(nn.MaxPool2D(3, 1), 7, in_shape=(1, 2, 5, 5)) < 1e-4


class TestLosses:
    def test_bce_half_is_ln2(self):
        value, _ = nn.loss_bce(np.array([0.5]), np.array([1.0]))
        assert value == pytest.approx(math.log(2.0), rel=1e-12)

    def test_bce_perfect_prediction_near_zero(self):
        value, _ = nn.loss_bce(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert 0 <= value <= -math.log(1.0 - nn.BCE_EPS) + 1e-12

    def test_mse_examples(self):
        assert nn.loss_mse(np.ones(4), np.ones(4))[0] == 0.0
        value, grad = nn.loss_mse(np.full(4, 3.0), np.full(4, 1.0))
        assert value == 4.0
        assert np.allclose(grad, 2.0 * 2.0 / 4)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            nn.loss_bce(np.zeros(3), np.zeros(4))


class TestOptimizers:
    def _dense(self):
        p = nn.init_params(nn.Dense(2, 2), seed=3)
        return p

    def test_zero_gradient_is_noop(self):
        for step in (lambda ps: nn.sgd_step(ps, 0.1), lambda ps: nn.adam_step(ps, 0.1)):
            p = self._dense()
            before = p.weight.copy()
            step([p])
            assert np.array_equal(p.weight, before)

    def test_sgd_example(self):
        p = self._dense()
        p.weight[...] = 1.0
        p.grad_w[...] = 0.5
        nn.sgd_step([p], lr=0.1)
        assert np.allclose(p.weight, 0.95)
        assert (p.grad_w == 0).all()

    def test_adam_first_step_magnitude_is_lr(self):
        p = self._dense()
        p.grad_w[...] = 1.0
        before = p.weight.copy()
        nn.adam_step([p], lr=1e-3)
        # bias-corrected first step: m_hat = v_hat = 1 -> update = lr/(1+eps)
        assert np.allclose(np.abs(before - p.weight), 1e-3, atol=1e-6)
        assert (p.grad_w == 0).all()

    def test_adam_gradients_zeroed_and_t_advances(self):
        p = self._dense()
        p.grad_w[...] = 1.0
        nn.adam_step([p], lr=1e-3)
        assert p.step == 1
        p.grad_w[...] = 1.0
        nn.adam_step([p], lr=1e-3)
        assert p.step == 2


class TestSequential:
    def test_seeded_determinism(self):
        specs = [nn.Dense(4, 3), nn.ReLU(), nn.Dense(3, 1), nn.Sigmoid()]
        a = nn.Sequential(specs, (4,), seed=11)
        b = nn.Sequential(specs, (4,), seed=11)
        x = np.linspace(-1, 1, 8).reshape(2, 4).astype(np.float32)
        assert np.array_equal(a.predict(x), b.predict(x))

    def test_finite_guard_trips(self):
        specs = [nn.Dense(2, 2)]
        net = nn.Sequential(specs, (2,), seed=0)
        net.params[0].weight[...] = np.inf
        with pytest.raises(NonFiniteValue):
            net.forward(np.ones((1, 2), dtype=np.float32))

    def test_set_arrays_round_trip(self):
        specs = [nn.Conv2D(1, 2, 3, pad=1), nn.ReLU(), nn.Flatten(), nn.Dense(32, 1)]
        a = nn.Sequential(specs, (1, 4, 4), seed=5)
        b = nn.Sequential(specs, (1, 4, 4), seed=6)
        b.set_arrays(a.arrays())
        x = np.random.default_rng(0).random((3, 1, 4, 4)).astype(np.float32)
        assert np.array_equal(a.predict(x), b.predict(x))


class TestCheckpoint:
    def test_bit_exact_round_trip(self, tmp_path):
        arrays = [
            np.linspace(-2, 2, 24, dtype=np.float32).reshape(2, 3, 4),
            np.array([1.5], dtype=np.float32),
        ]
        path = tmp_path / "model.ckpt"
        nn.save_arrays(path, arrays)
        back = nn.load_arrays(path)
        assert len(back) == 2
        for a, b in zip(arrays, back):
            assert a.dtype == b.dtype and np.array_equal(a, b)

    def test_header_and_truncation_errors(self):
        with pytest.raises(MalformedHeader):
            nn.bytes_to_arrays(b"NOPE" + b"\x00" * 8)
        good = nn.arrays_to_bytes([np.zeros(4, dtype=np.float32)])
        with pytest.raises(TruncatedPixelData):
            nn.bytes_to_arrays(good[:-3])
