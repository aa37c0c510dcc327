"""Tests for the assembled encoder-decoder network"""

import math

import numpy as np
import pytest

from layers.network import CWSSNet, l2_penalty, segmentation_loss
from layers.primitives import Conv2d
from tensor_core import ops
from tensor_core.gradcheck import grad_check
from tensor_core.tensor import GradTape, Tensor
from tests.conftest import tiny_model_config
from utils.errors import ConfigError, DimensionError


class TestCWSSNet:
    """Test CWSSNet construction and forward pass"""

    def setup_method(self):
        """Setup a tiny network: S=8, B=4, 3 classes, one WTBC level"""
        self.config = tiny_model_config()
        self.net = CWSSNet(4, 3, self.config, seed=0)
        self.rng = np.random.default_rng(0)
        self.batch = self.rng.standard_normal((2, 8, 8, 4))

    def test_stage_shapes_match_forward(self):
        """Test the computed shape ledger against a traced forward pass"""
        stages = self.net.run_stages(Tensor(self.batch))
        expected = self.net.stage_shapes(8, batch=2)
        assert list(stages) == list(expected)
        for name, tensor in stages.items():
            assert tensor.shape == expected[name], name

    def test_logits_shape(self):
        """Test Tensor[N,S,S,B] -> Tensor[N,C,S,S]"""
        assert self.net(Tensor(self.batch)).shape == (2, 3, 8, 8)

    def test_accepts_trailing_pseudo_depth(self):
        """Test Tensor[N,S,S,B,1] gives the same logits"""
        self.net.eval()
        plain = self.net(Tensor(self.batch)).data
        expanded = self.net(Tensor(self.batch[..., None])).data
        np.testing.assert_array_equal(plain, expanded)

    @pytest.mark.parametrize(
        "shape",
        [(1, 8, 8, 4, 2), (1, 8, 4, 4), (1, 8, 8, 5), (1, 6, 6, 4), (8, 8, 4)],
    )
    def test_rejects_bad_input(self, shape):
        """Test rank, squareness, band count and divisibility checks"""
        with pytest.raises((DimensionError, ValueError)):
            self.net(Tensor(np.ones(shape)))

    @pytest.mark.parametrize(
        "toggles",
        [
            dict(use_mca=False),
            dict(use_wtbc=False),
            dict(use_fusion=False),
            dict(use_mca=False, use_wtbc=False, use_fusion=False),
        ],
    )
    def test_ablation_variants_keep_shapes(self, toggles):
        """Test every module toggle keeps the output contract"""
        net = CWSSNet(4, 3, tiny_model_config(**toggles), seed=0)
        assert net(Tensor(self.batch)).shape == (2, 3, 8, 8)

    def test_same_seed_same_network(self):
        """Test construction and forward pass are deterministic"""
        other = CWSSNet(4, 3, self.config, seed=0)
        for (name, a), (_, b) in zip(self.net.named_parameters(), other.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data, err_msg=name)
        np.testing.assert_array_equal(
            self.net.predict_logits(self.batch), other.predict_logits(self.batch)
        )

    def test_predict_logits_restores_mode(self):
        """Test predict_logits runs in eval mode and restores training mode"""
        self.net.train()
        self.net.predict_logits(self.batch)
        assert self.net.training
        assert self.net.level1.mca.bn.training

    def test_state_round_trip(self):
        """Test state_dict then load_state reproduces outputs"""
        state = self.net.state_dict()
        other = CWSSNet(4, 3, self.config, seed=99)
        other.load_state(state)
        np.testing.assert_array_equal(self.net.predict_logits(self.batch), other.predict_logits(self.batch))

    def test_float32_network(self):
        """Test a float32 network casts parameters and buffers and keeps float32 logits"""
        net = CWSSNet(4, 3, self.config, seed=0, dtype="float32")
        assert all(value.dtype == np.float32 for value in net.state_dict().values())
        batch = self.batch.astype(np.float32)
        assert net(Tensor(batch)).dtype == np.float32
        assert net.predict_logits(batch).dtype == np.float32
        np.testing.assert_allclose(
            net.predict_logits(batch), self.net.predict_logits(self.batch), rtol=1e-3, atol=1e-3
        )

    def test_cast_keeps_batch_norm_stats_in_use(self):
        """Test running statistics read after a cast are the cast buffers"""
        bn = self.net.level1.mca.bn
        self.net.cast(np.float32)
        assert bn.running.mean is bn._buffers["running_mean"]
        assert bn.running.var.dtype == np.float32

    def test_state_mismatch(self):
        """Test loading a state from another architecture is a config error"""
        other = CWSSNet(4, 3, tiny_model_config(use_fusion=False), seed=0)
        with pytest.raises(ConfigError):
            other.load_state(self.net.state_dict())

    def test_end_to_end_gradient(self):
        """Test analytic gradients of the full loss on coordinate subsets"""
        self.net.eval()
        x = Tensor(self.rng.standard_normal((1, 8, 8, 4)))
        labels = self.rng.integers(0, 3, size=(1, 8, 8))

        def closure():
            return segmentation_loss(self.net(x), labels, self.net, 1e-3)

        assert grad_check(closure, x, max_coords=6) < 1e-4
        for param in (self.net.head.weight, self.net.merge2.weight, self.net.level1.fusion.refine_a.weight,
                      self.net.level2.mca.conv3d.weight, self.net.up1.weight):
            assert grad_check(closure, param, max_coords=4) < 1e-4, param.name


class TestLoss:
    """Test the segmentation loss and the L2 term"""

    def test_l2_single_weight(self):
        """Test lambda = 1 and one weight of 2.0 gives 4.0; biases are not decayed"""
        layer = Conv2d("one", 1, 1, 1, np.random.default_rng(0))
        layer.weight.data[...] = 2.0
        layer.bias.data[...] = 5.0
        assert l2_penalty(layer).item() == 4.0

    def test_loss_without_l2_is_cross_entropy(self):
        """Test lambda = 0 leaves plain cross entropy"""
        net = CWSSNet(4, 3, tiny_model_config(), seed=1)
        logits = Tensor(np.zeros((1, 3, 8, 8)))
        labels = np.zeros((1, 8, 8), dtype=np.int64)
        assert segmentation_loss(logits, labels, net, 0.0).item() == pytest.approx(math.log(3))

    def test_l2_adds_penalty(self):
        """Test the penalty is added with weight lambda"""
        net = CWSSNet(4, 3, tiny_model_config(), seed=1)
        logits = Tensor(np.zeros((1, 3, 8, 8)))
        labels = np.zeros((1, 8, 8), dtype=np.int64)
        total = segmentation_loss(logits, labels, net, 0.5).item()
        assert total == pytest.approx(math.log(3) + 0.5 * l2_penalty(net).item())

    def test_loss_gradient_reaches_every_decayed_weight(self):
        """Test backward populates gradients of all parameters"""
        net = CWSSNet(4, 3, tiny_model_config(), seed=2)
        batch = Tensor(np.random.default_rng(2).standard_normal((2, 8, 8, 4)))
        labels = np.random.default_rng(3).integers(0, 3, size=(2, 8, 8))
        with GradTape() as tape:
            loss = segmentation_loss(net(batch), labels, net, 1e-4)
        tape.backward(loss)
        missing = [name for name, p in net.named_parameters() if p.grad is None]
        assert missing == []
        assert all(np.all(np.isfinite(p.grad)) for p in net.parameters())

    def test_decay_excludes_bias_and_batch_norm(self):
        """Test only weights carry the decay flag"""
        net = CWSSNet(4, 3, tiny_model_config(), seed=0)
        decayed = {name for name, p in net.named_parameters() if p.decay}
        assert "head.weight" in decayed
        assert "head.bias" not in decayed
        assert not any(name.endswith(("gamma", "beta")) for name in decayed)
        assert ops.square_sum(net.head.weight).item() > 0
