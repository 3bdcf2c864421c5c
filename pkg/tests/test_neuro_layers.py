"""Layer behaviors plus the per-layer finite-difference battery."""
import numpy as np
import pytest

from esgnews.neuro import (
    BatchNorm1d,
    Dense,
    Dropout,
    Flatten,
    MultiHeadSelfAttention,
    Tensor,
    TransformerBlock,
)
from gradient_battery import TOL, build_cases, run_battery

LABELS = sorted({label for label, _, _ in build_cases(50_000)})


@pytest.mark.parametrize("label", LABELS)
def test_gradients_match_finite_differences(label):
    from esgnews.neuro import max_relative_error

    for seed in range(50_000, 50_020):
        for case_label, f, tensors in build_cases(seed):
            if case_label != label:
                continue
            err = max_relative_error(f, tensors)
            assert err <= TOL, f"{label} seed {seed}: {err:.3e}"


def test_battery_covers_every_layer_kind():
    # one case per layer class, plus the train/eval split where modes differ
    assert LABELS == sorted(
        [
            "dense",
            "conv1d_same",
            "batchnorm_train",
            "batchnorm_eval",
            "relu",
            "softmax",
            "maxpool1d",
            "global_maxpool",
            "flatten",
            "dropout_train",
            "dropout_eval",
            "layer_norm",
            "mha",
            "transformer_block",
            "transformer_block_ffn",
        ]
    )


class TestBatchNormState:
    def test_running_stats_updated_with_momentum(self):
        rng = np.random.default_rng(0)
        bn = BatchNorm1d(2, momentum=0.9)
        x = rng.normal(3.0, 2.0, size=(4, 5, 2))
        bn.forward(Tensor(x), train=True)
        np.testing.assert_allclose(bn.running_mean, 0.1 * x.mean(axis=(0, 1)), atol=1e-12)
        np.testing.assert_allclose(
            bn.running_var, 0.9 * 1.0 + 0.1 * x.var(axis=(0, 1)), atol=1e-12
        )

    def test_eval_does_not_touch_running_stats(self):
        bn = BatchNorm1d(2)
        before = (bn.running_mean.copy(), bn.running_var.copy())
        bn.forward(Tensor(np.random.default_rng(1).normal(size=(4, 5, 2))), train=False)
        np.testing.assert_array_equal(bn.running_mean, before[0])
        np.testing.assert_array_equal(bn.running_var, before[1])

    def test_state_arrays_named_per_layer(self):
        bn = BatchNorm1d(2, name="bn7")
        assert set(bn.state_arrays()) == {"bn7.running_mean", "bn7.running_var"}


class TestDropout:
    def test_eval_is_identity(self):
        x = np.random.default_rng(2).normal(size=(3, 4))
        drop = Dropout(0.5)
        np.testing.assert_array_equal(drop.forward(Tensor(x), train=False).data, x)

    def test_train_scales_kept_units(self):
        x = np.ones((2000,))
        drop = Dropout(0.25, rng=np.random.default_rng(3))
        out = drop.forward(Tensor(x), train=True).data
        kept = out[out != 0.0]
        np.testing.assert_allclose(kept, 1.0 / 0.75)
        assert kept.size == pytest.approx(1500, abs=120)  # ~keep-rate share

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            Dropout(1.0)
        with pytest.raises(ValueError):
            Dropout(-0.1)

    def test_zero_rate_is_identity_even_in_train(self):
        x = np.random.default_rng(4).normal(size=(3, 4))
        out = Dropout(0.0).forward(Tensor(x), train=True).data
        np.testing.assert_array_equal(out, x)


class TestShapes:
    def test_dense(self):
        rng = np.random.default_rng(5)
        assert Dense(6, 3, rng).forward(Tensor(np.zeros((4, 6))), False).shape == (4, 3)

    def test_flatten(self):
        out = Flatten().forward(Tensor(np.zeros((4, 3, 5))), False)
        assert out.shape == (4, 15)

    def test_mha_preserves_shape(self):
        rng = np.random.default_rng(6)
        mha = MultiHeadSelfAttention(8, 2, 5, rng)
        out = mha.forward(Tensor(rng.normal(size=(2, 4, 8))), False)
        assert out.shape == (2, 4, 8)

    def test_mha_attention_rows_are_distributions(self):
        rng = np.random.default_rng(7)
        mha = MultiHeadSelfAttention(6, 3, 4, rng)
        mha.forward(Tensor(rng.normal(size=(2, 5, 6))), False)
        assert len(mha.last_attention) == 3
        for attn in mha.last_attention:
            assert attn.shape == (2, 5, 5)
            np.testing.assert_allclose(attn.sum(axis=-1), 1.0, atol=1e-9)

    def test_transformer_block_preserves_shape(self):
        rng = np.random.default_rng(8)
        block = TransformerBlock(6, 2, 4, 0.1, rng)
        out = block.forward(Tensor(rng.normal(size=(2, 5, 6))), False)
        assert out.shape == (2, 5, 6)

    def test_transformer_block_param_count_grows_with_ffn(self):
        rng = np.random.default_rng(9)
        plain = TransformerBlock(6, 2, 4, 0.1, rng)
        with_ffn = TransformerBlock(6, 2, 4, 0.1, rng, ffn_dim=12)
        assert len(with_ffn.params()) == len(plain.params()) + 6


def test_full_battery_runtime_is_modest():
    import time

    t0 = time.time()
    results = run_battery(n_seeds=3, base_seed=55_000)
    assert all(err <= TOL for _, _, err in results)
    assert time.time() - t0 < 30.0
