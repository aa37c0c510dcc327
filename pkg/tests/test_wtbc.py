"""Tests for wavelet-domain binary convolution"""

from fractions import Fraction

import numpy as np
import pytest

from layers.wtbc import (
    BinaryConv2d,
    DepthwiseSeparableBlock,
    WaveletBinaryConv,
    binarize,
    binary_weight,
    equivalent_receptive_field,
    frequency_attention,
    kernel_pair,
    ratio_for_levels,
    wtbc_param_count,
)
from layers.primitives import Conv2d, zero_parameters
from tensor_core import ops
from tensor_core.gradcheck import grad_check
from tensor_core.tensor import GradTape, Tensor
from utils.errors import DimensionError, PreconditionError
from utils.validators import AttentionWiring, KernelSet, PaddingMode
from wavelets import DB2, HAAR
from wavelets.transform import analysis_bands, synthesis_bands


def conv_same(x, w, b=None):
    """Grouped 'same' cross-correlation of (N, C_in, H, W) with (C_out, C_in / groups, k, k)"""
    k = w.shape[-1]
    p = k // 2
    per_group = w.shape[1]
    groups = x.shape[1] // per_group
    out_per_group = w.shape[0] // groups
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    out = np.zeros((x.shape[0], w.shape[0], x.shape[2], x.shape[3]))
    for o in range(w.shape[0]):
        g = o // out_per_group
        xs = xp[:, g * per_group:(g + 1) * per_group]
        for i, j in np.ndindex(x.shape[2], x.shape[3]):
            out[:, o, i, j] = np.sum(xs[:, :, i:i + k, j:j + k] * w[o], axis=(1, 2, 3))
        if b is not None:
            out[:, o] += b[o]
    return out


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def level_oracle(level, x_ll, x_h):
    """Fused (LL, H) of one level computed from raw weights"""
    signs_ll, alpha_ll = binarize(level.bc_ll.weight)
    signs_h, alpha_h = binarize(level.bc_h.weight)
    y_ll = conv_same(x_ll, signs_ll * alpha_ll.reshape(-1, 1, 1, 1))
    y_h = conv_same(x_h, signs_h * alpha_h.reshape(-1, 1, 1, 1))
    src_ll, src_h = (x_h, x_ll) if level.wiring is AttentionWiring.CROSS_BAND else (x_ll, x_h)
    a_ll = sigmoid(conv_same(src_ll, level.attn_ll.weight.data, level.attn_ll.bias.data))
    a_h = sigmoid(conv_same(src_h, level.attn_h.weight.data, level.attn_h.bias.data))
    return a_ll * y_ll, a_h * y_h


def split(x, family):
    ll, lh, hl, hh = analysis_bands(x, family)
    return ll, np.concatenate([lh, hl, hh], axis=1)


def merge(ll, xh, family):
    c = ll.shape[1]
    return synthesis_bands(ll, xh[:, :c], xh[:, c:2 * c], xh[:, 2 * c:], family)


class TestBinarize:
    """Test sign binarization and the straight-through estimator"""

    def test_positive_constant(self):
        """Test W = 0.5 everywhere"""
        signs, alpha = binarize(np.full((2, 1, 3, 3), 0.5))
        assert np.all(signs == 1.0)
        np.testing.assert_allclose(alpha, [0.5, 0.5])

    def test_zero_maps_to_plus_one(self):
        """Test sign(0) = +1 and alpha = 0"""
        signs, alpha = binarize(np.zeros((1, 1, 3, 3)))
        assert np.all(signs == 1.0)
        assert alpha.tolist() == [0.0]

    def test_alpha_is_least_squares_scale(self):
        """Test mean|W| minimises ||W - a sign(W)||^2 per output channel"""
        w = np.random.default_rng(0).standard_normal((3, 1, 3, 3))
        signs, alpha = binarize(w)
        for c in range(3):
            def error(a):
                return float(np.sum((w[c] - a * signs[c]) ** 2))

            assert error(alpha[c]) <= error(alpha[c] + 1e-3)
            assert error(alpha[c]) <= error(alpha[c] - 1e-3)
            assert alpha[c] == pytest.approx(float(np.sum(w[c] * signs[c])) / signs[c].size)

    def test_straight_through_gradient_is_clipped(self):
        """Test gradient passes where |W| <= 1 and stops elsewhere"""
        w = Tensor(np.array([0.5, -1.5, 1.0, -0.2]).reshape(4, 1, 1, 1), requires_grad=True)
        with GradTape() as tape:
            y = ops.sum_all(binary_weight(w))
        tape.backward(y)
        assert w.grad.reshape(-1).tolist() == [1.0, 0.0, 1.0, 1.0]

    def test_binary_conv_uses_effective_weight(self):
        """Test BinaryConv2d equals a depthwise conv with alpha * sign(W)"""
        rng = np.random.default_rng(1)
        layer = BinaryConv2d("bc", 2, 3, rng)
        x = rng.standard_normal((1, 2, 4, 4))
        signs, alpha = binarize(layer.weight)
        expected = conv_same(x, signs * alpha.reshape(-1, 1, 1, 1))
        np.testing.assert_allclose(layer(Tensor(x)).data, expected, atol=1e-12)
        assert layer.parameter_count() == 2 * 9


class TestFrequencyAttention:
    """Test the attention maps of one level"""

    def setup_method(self):
        """Setup same-band attention convs"""
        rng = np.random.default_rng(2)
        self.attn_ll = Conv2d("a_ll", 2, 2, 3, rng, groups=2)
        self.attn_h = Conv2d("a_h", 6, 6, 3, rng, groups=6)
        self.x_ll = Tensor(rng.standard_normal((1, 2, 4, 4)))
        self.x_h = Tensor(rng.standard_normal((1, 6, 4, 4)))

    def test_zero_weights_give_half(self):
        """Test zeroed attention convs yield maps of exactly 0.5"""
        zero_parameters(self.attn_ll)
        zero_parameters(self.attn_h)
        a_ll, a_h = frequency_attention(self.x_ll, self.x_h, self.attn_ll, self.attn_h)
        assert np.all(a_ll.data == 0.5)
        assert np.all(a_h.data == 0.5)

    def test_maps_lie_in_unit_interval(self):
        """Test sigmoid range and shapes"""
        a_ll, a_h = frequency_attention(self.x_ll, self.x_h, self.attn_ll, self.attn_h)
        assert a_ll.shape == self.x_ll.shape
        assert a_h.shape == self.x_h.shape
        assert np.all((a_ll.data > 0) & (a_ll.data < 1))
        assert np.all((a_h.data > 0) & (a_h.data < 1))

    def test_spatial_mismatch(self):
        """Test LL and H must share their spatial extent"""
        with pytest.raises(DimensionError):
            frequency_attention(self.x_ll, Tensor(np.ones((1, 6, 2, 2))), self.attn_ll, self.attn_h)


class TestWaveletBinaryConv:
    """Test the multi-level WTBC block"""

    def setup_method(self):
        """Setup seeded generator"""
        self.rng = np.random.default_rng(3)

    def test_output_shape(self):
        """Test Tensor[N,C_in,H,W] -> Tensor[N,C_out,H,W]"""
        block = WaveletBinaryConv("w", 3, 5, 2, self.rng)
        out = block(Tensor(self.rng.standard_normal((2, 3, 8, 8))))
        assert out.shape == (2, 5, 8, 8)

    def test_kernel_sets(self):
        """Test kernel pairs per kernel set"""
        assert kernel_pair(KernelSet.K3) == (3, 3)
        assert kernel_pair(KernelSet.K5) == (5, 5)
        assert kernel_pair(KernelSet.BOTH) == (5, 3)
        block = WaveletBinaryConv("w", 1, 1, 1, self.rng, kernel_set=KernelSet.BOTH)
        assert block.level_layers[0].bc_ll.spec.kernel == (5, 5)
        assert block.level_layers[0].bc_h.spec.kernel == (3, 3)

    @pytest.mark.parametrize(
        "seed, levels, size, kernel_set, wiring, family",
        [
            (0, 1, 8, KernelSet.K3, AttentionWiring.SAME_BAND, HAAR),
            (1, 2, 8, KernelSet.K3, AttentionWiring.SAME_BAND, HAAR),
            (2, 2, 16, KernelSet.BOTH, AttentionWiring.SAME_BAND, HAAR),
            (3, 1, 16, KernelSet.K5, AttentionWiring.SAME_BAND, DB2),
            (4, 2, 32, KernelSet.BOTH, AttentionWiring.SAME_BAND, DB2),
            (5, 1, 8, KernelSet.BOTH, AttentionWiring.CROSS_BAND, HAAR),
            (6, 2, 16, KernelSet.K3, AttentionWiring.CROSS_BAND, DB2),
            (7, 2, 32, KernelSet.K5, AttentionWiring.SAME_BAND, HAAR),
            (8, 1, 32, KernelSet.K3, AttentionWiring.CROSS_BAND, HAAR),
            (9, 2, 8, KernelSet.BOTH, AttentionWiring.CROSS_BAND, DB2),
            (10, 2, 16, KernelSet.K3, AttentionWiring.SAME_BAND, DB2),
        ],
    )
    def test_matches_unrolled_oracle(self, seed, levels, size, kernel_set, wiring, family):
        """Test decomposition, fusion and deepest-first aggregation against raw numpy"""
        rng = np.random.default_rng(seed)
        block = WaveletBinaryConv("w", 2, 3, levels, rng, kernel_set=kernel_set, wiring=wiring, family=family)
        x = rng.standard_normal((1, 2, size, size))

        fused = []
        current = x
        for level in block.level_layers:
            ll, h = split(current, family)
            fused.append(level_oracle(level, ll, h))
            current = ll
        z = None
        for f_ll, f_h in reversed(fused):
            z = merge(f_ll if z is None else f_ll + z, f_h, family)
        w = block.projection.weight.data[:, :, 0, 0]
        expected = np.einsum("oc,nchw->nohw", w, z) + block.projection.bias.data.reshape(1, -1, 1, 1)

        np.testing.assert_allclose(block(Tensor(x)).data, expected, atol=1e-10)

    def test_single_level_aggregation(self):
        """Test L = 1 reduces to IWT(Fused_LL, Fused_H)"""
        block = WaveletBinaryConv("w", 1, 1, 1, self.rng, kernel_set=KernelSet.K3)
        x = Tensor(self.rng.standard_normal((1, 1, 4, 4)))
        fused = block.decompose(x)
        assert len(fused) == 1
        np.testing.assert_allclose(
            block.aggregate(fused).data, merge(fused[0][0].data, fused[0][1].data, HAAR), atol=1e-12
        )

    def test_indivisible_extent(self):
        """Test H and W must divide by 2^L"""
        block = WaveletBinaryConv("w", 1, 1, 3, self.rng)
        with pytest.raises(PreconditionError):
            block(Tensor(np.ones((1, 1, 12, 12))))

    def test_cross_band_wiring(self):
        """Test the alternative attention wiring keeps shapes"""
        block = WaveletBinaryConv("w", 2, 2, 1, self.rng, wiring=AttentionWiring.CROSS_BAND)
        assert block(Tensor(self.rng.standard_normal((1, 2, 4, 4)))).shape == (1, 2, 4, 4)

    def test_input_gradient(self):
        """Test gradients w.r.t. the input and an attention weight"""
        block = WaveletBinaryConv("w", 1, 2, 1, self.rng, kernel_set=KernelSet.K3)
        x = Tensor(self.rng.standard_normal((1, 1, 4, 4)))
        readout = Tensor(self.rng.standard_normal((1, 2, 4, 4)))

        def closure():
            return ops.sum_all(block(x) * readout)

        assert grad_check(closure, x) < 1e-5
        assert grad_check(closure, block.level_layers[0].attn_h.weight) < 1e-5

    def test_depthwise_separable_replacement(self):
        """Test the ablation stand-in keeps shapes and uses an odd kernel"""
        block = DepthwiseSeparableBlock("ds", 3, 4, equivalent_receptive_field(1, 3), self.rng)
        assert block.kernel == 7
        assert block(Tensor(self.rng.standard_normal((1, 3, 8, 8)))).shape == (1, 4, 8, 8)


class TestParameterCount:
    """Test WTBC versus standard convolution parameter counts"""

    @pytest.mark.parametrize(
        "levels, expected",
        [(1, Fraction(1)), (2, Fraction(1, 2)), (3, Fraction(3, 16)), (4, Fraction(1, 16))],
    )
    def test_ratio_by_levels(self, levels, expected):
        """Test ratio L / 4^(L-1) for several kernels"""
        assert ratio_for_levels(levels) == expected
        for k in (1, 3, 5):
            report = wtbc_param_count((2 ** levels) * k, levels, 2, measure=False)
            assert report.ratio == expected

    def test_decimal_ratios(self):
        """Test the ratios in decimal form"""
        assert [float(ratio_for_levels(L)) for L in (1, 2, 3, 4)] == [1.0, 0.5, 0.1875, 0.0625]

    def test_single_level_count(self):
        """Test L = 1, k = 3, C_in = 16"""
        report = wtbc_param_count(6, 1, 16)
        assert report.P_WTBC == 576
        assert report.P_std == 576
        assert report.measured == 576
        assert report.warning == ""

    @pytest.mark.parametrize(
        "R, L, C_in",
        [(6, 1, 2), (12, 2, 3), (8, 3, 1), (40, 3, 1), (20, 2, 2), (24, 3, 2), (10, 1, 4), (16, 4, 1)],
    )
    def test_measured_matches_closed_form(self, R, L, C_in):
        """Test instantiated binary parameters equal L * 4 * k^2 * C_in"""
        report = wtbc_param_count(R, L, C_in)
        assert report.measured == report.P_WTBC
        assert report.measured_total == report.measured + report.measured_attention + report.measured_projection

    @pytest.mark.parametrize("R, L, C_in", [(8, 1, 1), (16, 2, 3), (32, 1, 2), (32, 3, 1)])
    def test_even_kernel_is_measured_with_warning(self, R, L, C_in):
        """Test even k still gets the instantiated cross-check"""
        report = wtbc_param_count(R, L, C_in)
        assert report.k % 2 == 0
        assert "even" in report.warning
        assert report.measured == report.P_WTBC
        assert report.as_row()["measured"] == report.P_WTBC

    def test_even_kernel_block_is_valid_padded(self):
        """Test the audit-only instance shrinks the spatial extent"""
        block = WaveletBinaryConv("w", 1, 1, 1, np.random.default_rng(0), kernels=(4, 4), padding=PaddingMode.VALID)
        assert block.level_layers[0].bc_ll.spec.pads() == (0, 0)
        with pytest.raises(PreconditionError):
            WaveletBinaryConv("w", 1, 1, 1, np.random.default_rng(0), kernels=(4, 4))

    def test_indivisible_receptive_field(self):
        """Test R not divisible by 2^L is refused"""
        with pytest.raises(PreconditionError):
            wtbc_param_count(10, 2, 1)
