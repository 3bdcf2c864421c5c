"""Network construction: parameter budgets recomputed from layer shape rules,
forward sanity on degenerate input, persistence, and prediction decoding."""
import numpy as np
import pytest

from esgnews.features import CompanyYearSeries
from esgnews.models import (
    Arch,
    Head,
    ModelSpec,
    Network,
    build,
    predict_rating,
    predict_ratings,
    quantize_target,
)

ROWS = 9


def dense_params(fan_in, fan_out):
    return fan_in * fan_out + fan_out


def conv_params(ch_in, ch_out, kernel):
    return ch_out * kernel * ch_in + ch_out


def block_params(dim, heads, head_size, ffn_dim=None):
    per_head = 3 * dense_params(dim, head_size)  # q, k, v
    mha = heads * per_head + dense_params(heads * head_size, dim)
    norms = 2 * (2 * dim)  # ln1, ln2 each carry gamma + beta
    total = mha + norms
    if ffn_dim is not None:
        total += dense_params(dim, ffn_dim) + dense_params(ffn_dim, dim) + 2 * dim
    return total


def head_params(fan_in, head):
    return dense_params(fan_in, 100 if head is Head.CLASSIFICATION else 1)


def expected_param_count(arch: Arch, head: Head) -> int:
    if arch is Arch.BASIC_CNN:
        flat = (12 // 2) * 64
        return conv_params(ROWS, 64, 2) + dense_params(flat, 265) + head_params(265, head)
    if arch is Arch.DEEP_CNN:
        total, ch = 0, ROWS
        for filters, kernel in zip((32, 64, 128), (3, 2, 1)):
            total += conv_params(ch, filters, kernel) + 2 * filters  # + batchnorm
            ch = filters
        return total + head_params(ch, head)
    # transformer variants share the conv front-end
    total, ch = 0, ROWS
    for filters, kernel in zip((64, 128), (3, 1)):
        total += conv_params(ch, filters, kernel) + 2 * filters
        ch = filters
    blocks = 1 if arch is Arch.CNN_TRANSFORMER else 3
    total += blocks * block_params(ch, heads=8, head_size=200)
    return total + head_params(ch, head)


ALL_COMBOS = [(a, h) for a in Arch for h in Head]


class TestParameterBudgets:
    @pytest.mark.parametrize("arch,head", ALL_COMBOS, ids=lambda v: v.value)
    def test_count_matches_shape_arithmetic(self, arch, head):
        net = build(ModelSpec(arch, head), input_rows=ROWS, seed=0)
        assert net.parameter_count() == expected_param_count(arch, head)

    def test_classification_anchors(self):
        # pinned totals for the published configurations
        anchors = {
            Arch.BASIC_CNN: 129_841,
            Arch.DEEP_CNN: 26_724,
            Arch.CNN_TRANSFORMER: 848_036,
            Arch.CNN_DEEP_TRANSFORMER: 2_497_316,
        }
        for arch, want in anchors.items():
            net = build(ModelSpec(arch, Head.CLASSIFICATION))
            assert net.parameter_count() == want, arch

    def test_ffn_adds_two_denses_and_a_norm(self):
        base = build(ModelSpec(Arch.CNN_TRANSFORMER, Head.REGRESSION))
        ffn = build(ModelSpec(Arch.CNN_TRANSFORMER, Head.REGRESSION, ffn_dim=16))
        extra = dense_params(128, 16) + dense_params(16, 128) + 2 * 128
        assert ffn.parameter_count() - base.parameter_count() == extra


class TestForward:
    @pytest.mark.parametrize("arch,head", ALL_COMBOS, ids=lambda v: v.value)
    def test_finite_on_zero_input(self, arch, head):
        net = build(ModelSpec(arch, head), input_rows=ROWS, seed=1)
        out = net.forward(np.zeros((3, ROWS, 12)), train=False).data
        assert np.all(np.isfinite(out))
        if head is Head.CLASSIFICATION:
            assert out.shape == (3, 100)
            np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(out >= 0.0)
        else:
            assert out.shape == (3, 1)

    def test_two_dim_input_gets_batched(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION), seed=2)
        single = net.forward(np.zeros((ROWS, 12))).data
        assert single.shape == (1, 1)

    def test_wrong_row_count_rejected(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION), input_rows=ROWS)
        with pytest.raises(ValueError, match="expected"):
            net.forward(np.zeros((2, ROWS + 1, 12)))

    def test_same_seed_same_parameters(self):
        spec = ModelSpec(Arch.DEEP_CNN, Head.CLASSIFICATION)
        a = build(spec, seed=11)
        b = build(spec, seed=11)
        for name, arr in a.named_arrays().items():
            np.testing.assert_array_equal(arr, b.named_arrays()[name])
        c = build(spec, seed=12)
        assert any(
            not np.array_equal(arr, c.named_arrays()[name])
            for name, arr in a.named_arrays().items()
        )


class TestModelSpec:
    def test_json_roundtrip(self):
        spec = ModelSpec(Arch.CNN_DEEP_TRANSFORMER, Head.REGRESSION, ffn_dim=32)
        again = ModelSpec.from_json(spec.to_json())
        assert again == spec
        assert isinstance(again.deep_filters, tuple)

    def test_block_counts(self):
        assert ModelSpec(Arch.BASIC_CNN, Head.REGRESSION).n_transformer_blocks == 0
        assert ModelSpec(Arch.CNN_TRANSFORMER, Head.REGRESSION).n_transformer_blocks == 1
        assert ModelSpec(Arch.CNN_DEEP_TRANSFORMER, Head.REGRESSION).n_transformer_blocks == 3

    def test_tiny_class_count_rejected(self):
        with pytest.raises(ValueError):
            ModelSpec(Arch.BASIC_CNN, Head.CLASSIFICATION, n_classes=1)


class TestQuantizeTarget:
    @pytest.mark.parametrize(
        "rating,want", [(0.0, 0), (0.9, 0), (37.5, 37), (99.0, 99), (99.999, 99), (100.0, 99)]
    )
    def test_anchors(self, rating, want):
        assert quantize_target(rating) == want

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            quantize_target(-0.1)
        with pytest.raises(ValueError):
            quantize_target(100.1)


class TestPrediction:
    def test_classification_decodes_to_class_midpoint(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.CLASSIFICATION), seed=3)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, ROWS, 12))
        probs = net.forward(x, train=False).data
        got = predict_ratings(net, x)
        np.testing.assert_array_equal(got, probs.argmax(axis=1) + 0.5)

    def test_regression_clamps_to_rating_range(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION), seed=4)
        rng = np.random.default_rng(1)
        x = rng.normal(size=(8, ROWS, 12)) * 50.0  # drive outputs out of range
        raw = net.forward(x, train=False).data[:, 0]
        got = predict_ratings(net, x)
        np.testing.assert_array_equal(got, np.clip(raw, 0.0, 100.0))
        assert got.min() >= 0.0 and got.max() <= 100.0

    def test_unscaled_series_rejected(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION))
        series = CompanyYearSeries("acme", 2019, np.zeros((ROWS, 12)), target=50.0)
        with pytest.raises(ValueError, match="acme.*unscaled"):
            predict_rating(net, series)

    def test_scaled_series_accepted(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION))
        series = CompanyYearSeries("acme", 2019, np.zeros((ROWS, 12)), target=50.0, scaled=True)
        value = predict_rating(net, series)
        assert 0.0 <= value <= 100.0


class TestSnapshotRestore:
    def test_restore_covers_params_and_running_stats(self):
        net = build(ModelSpec(Arch.DEEP_CNN, Head.REGRESSION), seed=5)
        rng = np.random.default_rng(2)
        net.forward(rng.normal(size=(4, ROWS, 12)), train=True)  # move BN stats
        snap = net.snapshot()
        ref = net.forward(np.ones((2, ROWS, 12)), train=False).data.copy()

        net.forward(rng.normal(size=(4, ROWS, 12)) * 3.0, train=True)
        for p in net.params():
            p.data += 0.25
        assert not np.allclose(net.forward(np.ones((2, ROWS, 12))).data, ref)

        net.restore(snap)
        for name, arr in net.named_arrays().items():
            np.testing.assert_array_equal(arr, snap[name])
        np.testing.assert_array_equal(net.forward(np.ones((2, ROWS, 12))).data, ref)

    def test_snapshot_is_a_copy(self):
        net = build(ModelSpec(Arch.BASIC_CNN, Head.REGRESSION), seed=6)
        snap = net.snapshot()
        for p in net.params():
            p.data += 1.0
        name = net.params()[0].name
        assert not np.array_equal(snap[name], net.params()[0].data)


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        net = build(ModelSpec(Arch.DEEP_CNN, Head.CLASSIFICATION), seed=7)
        rng = np.random.default_rng(3)
        net.forward(rng.normal(size=(4, ROWS, 12)), train=True)
        net.save(tmp_path / "ck", extra={"epoch": 3})

        loaded = Network.load(tmp_path / "ck")
        assert loaded.spec == net.spec
        assert loaded.input_rows == net.input_rows
        for name, arr in net.named_arrays().items():
            np.testing.assert_array_equal(loaded.named_arrays()[name], arr)
        x = rng.normal(size=(2, ROWS, 12))
        np.testing.assert_array_equal(
            loaded.forward(x, train=False).data, net.forward(x, train=False).data
        )
