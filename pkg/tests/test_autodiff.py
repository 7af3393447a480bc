"""Autodiff engine tests: forward oracles first, then gradient checks against
central finite differences, then the second-order path."""

import numpy as np
import pytest

from dyntex.autodiff import (
    BatchNormState,
    Tensor,
    batchnorm3d,
    clamp,
    conv3d,
    grad,
    grad_check,
    leaky_relu,
    no_grad,
    tanh,
    tsum,
    upsample_spatial,
)
from dyntex.errors import ShapeError


def conv3d_loop_oracle(x, w, b, pad):
    """Direct nested-loop convolution; the reference conv3d is checked against."""
    B, Ci, T, H, W = x.shape
    Co, _, kt, kh, kw = w.shape
    pt, ph, pw = pad
    To, Ho, Wo = T + 2 * pt - kt + 1, H + 2 * ph - kh + 1, W + 2 * pw - kw + 1
    out = np.zeros((B, Co, To, Ho, Wo), dtype=np.float64)
    for bb in range(B):
        for o in range(Co):
            for t in range(To):
                for i in range(Ho):
                    for j in range(Wo):
                        acc = 0.0
                        for c in range(Ci):
                            for dt in range(kt):
                                for dh in range(kh):
                                    for dw in range(kw):
                                        tt = t + dt - pt
                                        ii = i + dh - ph
                                        jj = j + dw - pw
                                        if 0 <= tt < T and 0 <= ii < H and 0 <= jj < W:
                                            acc += x[bb, c, tt, ii, jj] * w[o, c, dt, dh, dw]
                        out[bb, o, t, i, j] = acc + (b[o] if b is not None else 0.0)
    return out


class TestConv3d:
    def test_zero_input_gives_bias(self, rng):
        x = Tensor(np.zeros((1, 2, 3, 4, 4), dtype=np.float32))
        w = Tensor(rng.standard_normal((3, 2, 3, 3, 3)).astype(np.float32))
        b = np.array([0.5, -1.0, 2.0], dtype=np.float32)
        out = conv3d(x, w, Tensor(b)).data
        for o in range(3):
            assert np.allclose(out[:, o], b[o])

    def test_scalar_multiply_add(self):
        x = Tensor(np.full((1, 1, 1, 1, 1), 2.0, dtype=np.float32))
        w = Tensor(np.full((1, 1, 1, 1, 1), 3.0, dtype=np.float32))
        out = conv3d(x, w, Tensor(np.array([1.0], dtype=np.float32)))
        assert out.data.reshape(()) == pytest.approx(7.0)

    def test_matches_loop_oracle(self, rng):
        # both sides in float64 so the 1e-6 bound tests the algorithm, not
        # float32 accumulation order
        x = rng.standard_normal((1, 2, 3, 4, 4))
        w = rng.standard_normal((3, 2, 3, 3, 3))
        b = rng.standard_normal(3)
        out = conv3d(Tensor(x), Tensor(w), Tensor(b)).data
        oracle = conv3d_loop_oracle(x, w, b, (1, 1, 1))
        assert np.abs(out - oracle).max() <= 1e-6

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_oracle_random_shapes(self, seed):
        rng = np.random.default_rng(seed)
        B, Ci, Co = rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4)
        T, H, W = rng.integers(3, 6, size=3)
        k = int(rng.choice([1, 3]))
        x = rng.standard_normal((B, Ci, T, H, W))
        w = rng.standard_normal((Co, Ci, k, k, k))
        out = conv3d(Tensor(x), Tensor(w)).data
        p = (k - 1) // 2
        oracle = conv3d_loop_oracle(x, w, None, (p, p, p))
        assert np.abs(out - oracle).max() <= 1e-6

    def test_float32_close_to_oracle(self, rng):
        x = rng.standard_normal((1, 2, 3, 4, 4)).astype(np.float32)
        w = rng.standard_normal((3, 2, 3, 3, 3)).astype(np.float32)
        out = conv3d(Tensor(x), Tensor(w)).data
        oracle = conv3d_loop_oracle(x, w, None, (1, 1, 1))
        assert np.abs(out - oracle).max() <= 1e-5

    def test_same_padding_preserves_dims(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 5, 7, 6)).astype(np.float32))
        w = Tensor(rng.standard_normal((4, 3, 3, 3, 3)).astype(np.float32))
        assert conv3d(x, w).shape == (2, 4, 5, 7, 6)

    def test_channel_mismatch_raises(self, rng):
        x = Tensor(np.zeros((1, 2, 3, 4, 4), dtype=np.float32))
        w = Tensor(np.zeros((1, 3, 3, 3, 3), dtype=np.float32))
        with pytest.raises(ShapeError, match="channel"):
            conv3d(x, w)

    def test_nonfinite_input_rejected(self):
        x = np.zeros((1, 1, 1, 3, 3), dtype=np.float32)
        x[0, 0, 0, 0, 0] = np.nan
        w = Tensor(np.ones((1, 1, 1, 1, 1), dtype=np.float32))
        with pytest.raises(ValueError, match="finite"):
            conv3d(Tensor(x), w)

    def test_backward_populates_grads(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 2, 3, 3)).astype(np.float32), requires_grad=True)
        w = Tensor(rng.standard_normal((2, 2, 3, 3, 3)).astype(np.float32), requires_grad=True)
        b = Tensor(np.zeros(2, dtype=np.float32), requires_grad=True)
        conv3d(x, w, b).sum().backward()
        assert x.grad is not None and x.grad.shape == x.shape
        assert w.grad is not None and w.grad.shape == w.shape
        assert b.grad is not None and b.grad.shape == b.shape


class TestUpsample:
    def test_identity_when_same_dims(self, rng):
        x = Tensor(rng.standard_normal((1, 1, 2, 3, 4)).astype(np.float32))
        out = upsample_spatial(x, 3, 4)
        assert np.array_equal(out.data, x.data)

    def test_frame_and_channel_axes_unchanged(self, rng):
        x = Tensor(rng.standard_normal((1, 3, 16, 5, 5)).astype(np.float32))
        out = upsample_spatial(x, 9, 11)
        assert out.shape == (1, 3, 16, 9, 11)

    def test_hand_computed_bilinear_grid(self):
        # 2x2 frame [[0,1],[2,3]] to 4x4: endpoints aligned, so target (i, j)
        # samples source (i/3, j/3); row interp of [0,1] is j/3, column adds 2*i/3
        frame = np.array([[0.0, 1.0], [2.0, 3.0]], dtype=np.float32)
        x = Tensor(frame.reshape(1, 1, 1, 2, 2))
        out = upsample_spatial(x, 4, 4).data[0, 0, 0]
        jj, ii = np.meshgrid(np.arange(4), np.arange(4))
        expected = jj / 3.0 + 2.0 * ii / 3.0
        assert np.abs(out - expected).max() < 1e-6

    def test_downscale_rejected(self, rng):
        x = Tensor(np.zeros((1, 1, 1, 4, 4), dtype=np.float32))
        with pytest.raises(ShapeError, match="smaller"):
            upsample_spatial(x, 2, 4)


class TestBatchNorm:
    def test_constant_input_normalizes_to_zero(self):
        x = Tensor(np.full((1, 2, 3, 4, 4), 5.0, dtype=np.float32))
        out = batchnorm3d(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=1e-5)
        assert np.abs(out.data).max() <= 1e-3

    def test_idempotent_on_normalized_input(self, rng):
        x = rng.standard_normal((1, 3, 4, 8, 8)).astype(np.float64)
        x -= x.mean(axis=(0, 2, 3, 4), keepdims=True)
        x /= x.std(axis=(0, 2, 3, 4), keepdims=True)
        out = batchnorm3d(Tensor(x.astype(np.float32)), Tensor(np.ones(3)), Tensor(np.zeros(3)))
        assert np.abs(out.data - x).max() <= 1e-4

    def test_eval_mode_uses_running_stats(self, rng):
        state = BatchNormState(2)
        x = Tensor(rng.standard_normal((1, 2, 2, 4, 4)).astype(np.float32))
        batchnorm3d(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), state, update_stats=True)
        assert not np.allclose(state.mean, 0.0)
        y = batchnorm3d(x, Tensor(np.ones(2)), Tensor(np.zeros(2)), state, training=False)
        expected = (x.data - state.mean.reshape(1, 2, 1, 1, 1)) / np.sqrt(
            state.var.reshape(1, 2, 1, 1, 1) + 1e-5
        )
        assert np.abs(y.data - expected).max() <= 1e-5

    def test_zero_variance_channel_stays_finite(self):
        x = np.zeros((1, 2, 2, 3, 3), dtype=np.float32)
        x[:, 1] = 7.0  # constant channel: zero variance
        out = batchnorm3d(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)))
        assert np.all(np.isfinite(out.data))


class TestActivations:
    def test_leaky_relu_definition(self):
        out = leaky_relu(Tensor(np.array([-1.0], dtype=np.float32)), 0.2)
        assert out.data[0] == pytest.approx(-0.2)

    def test_leaky_relu_continuous_at_zero(self):
        eps = 1e-4
        lo = leaky_relu(Tensor(np.array([-eps], dtype=np.float32)), 0.2).data[0]
        hi = leaky_relu(Tensor(np.array([eps], dtype=np.float32)), 0.2).data[0]
        assert abs(hi - lo) < 1e-3

    def test_tanh_zero(self):
        assert tanh(Tensor(np.zeros(1, dtype=np.float32))).data[0] == 0.0

    def test_tanh_saturation_strictly_inside(self):
        out = tanh(Tensor(np.array([100.0, -100.0], dtype=np.float64))).data
        assert np.all(np.abs(out) < 1.0)
        assert np.all(np.abs(out) > 0.9999)

    def test_bad_slope_rejected(self):
        with pytest.raises(ValueError):
            leaky_relu(Tensor(np.zeros(1)), 1.5)

    def test_clamp_gradient_masks_outside(self, rng):
        x = Tensor(np.array([-2.0, 0.0, 2.0], dtype=np.float32), requires_grad=True)
        clamp(x, -1.0, 1.0).sum().backward()
        assert np.array_equal(x.grad.data, [0.0, 1.0, 0.0])


class TestGradCheck:
    def test_quadratic_exact(self, rng):
        x = Tensor(rng.standard_normal((2, 3)).astype(np.float32))
        assert grad_check(lambda t: (t * t).sum(), x) <= 1e-6

    def test_conv_then_mean(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 3, 4, 4)).astype(np.float32))
        w = Tensor(rng.standard_normal((2, 2, 3, 3, 3)).astype(np.float32))
        assert grad_check(lambda t: conv3d(t, w).mean(), x) <= 1e-4

    def test_batchnorm_then_mean(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 2, 4, 4)).astype(np.float32))
        probe = Tensor(rng.standard_normal((2, 3, 2, 4, 4)).astype(np.float32))
        g, b = Tensor(np.ones(3)), Tensor(np.zeros(3))
        err = grad_check(lambda t: (batchnorm3d(t, g, b) * probe).mean(), x, step=1e-3)
        assert err <= 1e-4

    def test_nonscalar_function_rejected(self, rng):
        x = Tensor(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ShapeError, match="scalar"):
            grad_check(lambda t: t * 2.0, x)


class TestEngineMechanics:
    def test_no_grad_blocks_graph(self, rng):
        x = Tensor(rng.standard_normal(4).astype(np.float32), requires_grad=True)
        with no_grad():
            y = (x * x).sum()
        assert not y.requires_grad
        assert y._parents == ()

    def test_grad_of_unreachable_input_is_zero(self, rng):
        x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
        y = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
        (gx, gy) = grad((x * 2.0).sum(), [x, y])
        assert np.allclose(gx.data, 2.0)
        assert np.allclose(gy.data, 0.0)

    def test_repeated_use_accumulates(self, rng):
        x = Tensor(np.array([3.0], dtype=np.float32), requires_grad=True)
        (g,) = grad((x * x).sum(), [x])  # d(x^2)/dx = 2x
        assert g.data[0] == pytest.approx(6.0)

    def test_broadcasting_reduces_gradient(self, rng):
        x = Tensor(rng.standard_normal((2, 3)).astype(np.float32), requires_grad=True)
        b = Tensor(rng.standard_normal((1, 3)).astype(np.float32), requires_grad=True)
        (gb,) = grad((x + b).sum(), [b])
        assert gb.shape == (1, 3)
        assert np.allclose(gb.data, 2.0)

    def test_tsum_axis_keepdims(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 4)).astype(np.float32), requires_grad=True)
        out = tsum(x, axis=(0, 2), keepdims=True)
        assert out.shape == (1, 3, 1)
        (g,) = grad(out.sum(), [x])
        assert np.allclose(g.data, 1.0)

    def test_grads_do_not_leak_between_calls(self, rng):
        x = Tensor(rng.standard_normal(3).astype(np.float32), requires_grad=True)
        loss = (x * x).sum()
        (g1,) = grad(loss, [x])
        (g2,) = grad(loss, [x])
        assert np.allclose(g1.data, g2.data)
        assert x.grad is None  # functional grad never touches .grad


class TestSecondOrder:
    """The gradient-of-gradient path the critic penalty depends on."""

    @staticmethod
    def _fd_wrt(fn, param, h=1e-5):
        fd = np.zeros_like(param.data)
        flat, fdf = param.data.ravel(), fd.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = fn().item()
            flat[i] = orig - h
            lo = fn().item()
            flat[i] = orig
            fdf[i] = (hi - lo) / (2 * h)
        return fd

    def test_grad_norm_sq_wrt_weights_linear_critic(self, rng):
        x = Tensor(rng.standard_normal((1, 1, 2, 4, 4)).astype(np.float64))
        w = Tensor(rng.standard_normal((1, 1, 3, 3, 3)).astype(np.float64) * 0.5,
                   requires_grad=True)

        def gnorm2():
            xt = Tensor(x.data.copy(), requires_grad=True)
            s = conv3d(xt, w).mean()
            (gx,) = grad(s, [xt], create_graph=True)
            return (gx * gx).sum()

        (analytic,) = grad(gnorm2(), [w])
        fd = self._fd_wrt(gnorm2, w)
        rel = np.abs(analytic.data - fd) / np.maximum(
            np.maximum(np.abs(analytic.data), np.abs(fd)), 1e-8
        )
        assert rel.max() <= 1e-6

    def test_grad_norm_sq_wrt_weights_nonlinear_critic(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 2, 5, 5)).astype(np.float64))
        w1 = Tensor(rng.standard_normal((3, 2, 3, 3, 3)).astype(np.float64) * 0.4,
                    requires_grad=True)
        w2 = Tensor(rng.standard_normal((1, 3, 3, 3, 3)).astype(np.float64) * 0.4,
                    requires_grad=True)

        def gnorm2():
            xt = Tensor(x.data.copy(), requires_grad=True)
            h = leaky_relu(conv3d(xt, w1), 0.2)
            s = conv3d(h, w2).mean()
            (gx,) = grad(s, [xt], create_graph=True)
            return (gx * gx).sum()

        for w in (w1, w2):
            (analytic,) = grad(gnorm2(), [w])
            fd = self._fd_wrt(gnorm2, w)
            rel = np.abs(analytic.data - fd) / np.maximum(
                np.maximum(np.abs(analytic.data), np.abs(fd)), 1e-8
            )
            assert rel.max() <= 1e-3

    def test_second_order_through_batchnorm(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 2, 4, 4)).astype(np.float64))
        w = Tensor(rng.standard_normal((2, 2, 3, 3, 3)).astype(np.float64) * 0.4,
                   requires_grad=True)
        gmm = Tensor(np.ones(2), requires_grad=True)
        bt = Tensor(np.zeros(2), requires_grad=True)

        def gnorm2():
            xt = Tensor(x.data.copy(), requires_grad=True)
            h = batchnorm3d(conv3d(xt, w), gmm, bt)
            s = leaky_relu(h, 0.2).mean()
            (gx,) = grad(s, [xt], create_graph=True)
            return (gx * gx).sum()

        (analytic,) = grad(gnorm2(), [w])
        fd = self._fd_wrt(gnorm2, w)
        rel = np.abs(analytic.data - fd) / np.maximum(
            np.maximum(np.abs(analytic.data), np.abs(fd)), 1e-8
        )
        assert rel.max() <= 1e-3
