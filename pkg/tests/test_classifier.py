import math

import numpy as np
import pytest

from toxkit.classifier import (
    AdamState,
    LabeledEmbedding,
    MlpConfig,
    MlpModel,
    TrainConfig,
    adam_update,
    bce_with_logits,
    forward_logit,
    init_model,
    load_model,
    loss_and_grad,
    param_count,
    persist_model,
    score_batch,
    sigmoid,
    train,
)
from toxkit.corpus import EmbeddingRecord
from toxkit.errors import FormatError, ValidationError
from toxkit.evaluation import roc_auc


def toy_model(w_hidden, b_hidden, w_out, b_out):
    """1-d input, one hidden unit, scalar output."""
    return MlpModel(
        config=MlpConfig(input_dim=1, hidden_dims=(1,)),
        weights=[np.array([[w_hidden]]), np.array([[w_out]])],
        biases=[np.array([b_hidden]), np.array([b_out])],
    )


def numerical_grad(model, X, y, pw=1.0, h=1e-4):
    """Central finite differences over every parameter."""
    grads = []
    for li in range(len(model.weights)):
        dw = np.zeros_like(model.weights[li])
        for idx in np.ndindex(*model.weights[li].shape):
            orig = model.weights[li][idx]
            model.weights[li][idx] = orig + h
            lp, _ = loss_and_grad(model, X, y, pw)
            model.weights[li][idx] = orig - h
            lm, _ = loss_and_grad(model, X, y, pw)
            model.weights[li][idx] = orig
            dw[idx] = (lp - lm) / (2 * h)
        db = np.zeros_like(model.biases[li])
        for idx in np.ndindex(*model.biases[li].shape):
            orig = model.biases[li][idx]
            model.biases[li][idx] = orig + h
            lp, _ = loss_and_grad(model, X, y, pw)
            model.biases[li][idx] = orig - h
            lm, _ = loss_and_grad(model, X, y, pw)
            model.biases[li][idx] = orig
            db[idx] = (lp - lm) / (2 * h)
        grads.append((dw, db))
    return grads


class TestParamCount:
    def test_default_geometry(self):
        assert param_count(MlpConfig(input_dim=1024, hidden_dims=(512, 128))) == 590_593

    def test_tiny(self):
        assert param_count(MlpConfig(input_dim=3, hidden_dims=(2,))) == 11

    def test_minimal(self):
        assert param_count(MlpConfig(input_dim=1, hidden_dims=(1,))) == 4

    def test_no_hidden_rejected(self):
        with pytest.raises(ValidationError):
            MlpConfig(input_dim=1, hidden_dims=())

    def test_flat_params_length_matches(self):
        cfg = MlpConfig(input_dim=7, hidden_dims=(5, 3), seed=1)
        model = init_model(cfg)
        assert len(model.flat_params()) == param_count(cfg)


class TestForward:
    def test_zero_network(self):
        model = MlpModel(
            config=MlpConfig(input_dim=2, hidden_dims=(3,)),
            weights=[np.zeros((3, 2)), np.zeros((1, 3))],
            biases=[np.zeros(3), np.zeros(1)],
        )
        z = forward_logit(model, np.array([5.0, -2.0]))
        assert z == 0.0
        assert sigmoid(z) == 0.5

    def test_hand_evaluated_toy(self):
        model = toy_model(3.0, -1.0, 1.0, 0.0)
        z = forward_logit(model, np.array([2.0]))
        assert z == pytest.approx(5.0)
        assert float(sigmoid(z)) == pytest.approx(0.993307, abs=1e-6)

    def test_relu_clamp(self):
        model = toy_model(-1.0, 0.0, 7.0, 0.25)
        assert forward_logit(model, np.array([1.0])) == pytest.approx(0.25)

    def test_dimension_mismatch(self):
        model = toy_model(1, 0, 1, 0)
        with pytest.raises(ValidationError):
            forward_logit(model, np.array([1.0, 2.0]))

    def test_non_finite_input(self):
        model = toy_model(1, 0, 1, 0)
        with pytest.raises(ValidationError):
            forward_logit(model, np.array([np.nan]))


class TestBce:
    def test_ln2_at_zero(self):
        assert bce_with_logits(0.0, 1) == pytest.approx(math.log(2), abs=1e-12)

    def test_large_positive_logit(self):
        assert bce_with_logits(20.0, 1) == pytest.approx(math.log1p(math.exp(-20)), abs=1e-12)
        assert bce_with_logits(20.0, 1) == pytest.approx(2.061e-9, rel=1e-3)

    def test_large_negative_logit(self):
        assert bce_with_logits(-20.0, 1) == pytest.approx(20.0 + 2.061e-9, abs=1e-9)

    def test_no_overflow_at_1e4(self):
        for z in (1e4, -1e4):
            for y in (0, 1):
                assert math.isfinite(bce_with_logits(z, y))

    def test_matches_naive_form(self):
        # the naive form itself cancels catastrophically in float64 for
        # large |z|, so the oracle is evaluated in high precision
        import mpmath

        mpmath.mp.dps = 50
        rng = np.random.default_rng(3)
        for z in rng.uniform(-30, 30, size=200):
            for y in (0, 1):
                p = 1 / (1 + mpmath.exp(-mpmath.mpf(z)))
                naive = float(-(y * mpmath.log(p) + (1 - y) * mpmath.log(1 - p)))
                assert bce_with_logits(z, y) == pytest.approx(naive, abs=1e-12)

    def test_positive_weight_scales_positive_terms(self):
        assert bce_with_logits(0.3, 1, positive_weight=2.5) == pytest.approx(
            2.5 * bce_with_logits(0.3, 1)
        )
        assert bce_with_logits(0.3, 0, positive_weight=2.5) == bce_with_logits(0.3, 0)


class TestLossAndGrad:
    def test_zero_network_output_bias_grad(self):
        model = MlpModel(
            config=MlpConfig(input_dim=2, hidden_dims=(3,)),
            weights=[np.zeros((3, 2)), np.zeros((1, 3))],
            biases=[np.zeros(3), np.zeros(1)],
        )
        _, grads = loss_and_grad(model, np.array([[1.0, 1.0]]), np.array([1.0]))
        assert grads[-1][1][0] == pytest.approx(-0.5)

    def test_duplicated_batch_invariance(self):
        model = init_model(MlpConfig(input_dim=4, hidden_dims=(3,), seed=5))
        rng = np.random.default_rng(0)
        X = rng.normal(size=(6, 4))
        y = rng.integers(0, 2, size=6).astype(float)
        l1, g1 = loss_and_grad(model, X, y)
        l2, g2 = loss_and_grad(model, np.vstack([X, X]), np.concatenate([y, y]))
        assert l1 == pytest.approx(l2)
        for (dw1, db1), (dw2, db2) in zip(g1, g2):
            np.testing.assert_allclose(dw1, dw2, atol=1e-12)
            np.testing.assert_allclose(db1, db2, atol=1e-12)

    def test_empty_batch(self):
        model = init_model(MlpConfig(input_dim=2, hidden_dims=(2,), seed=1))
        with pytest.raises(ValidationError):
            loss_and_grad(model, np.empty((0, 2)), np.empty(0))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        model = init_model(MlpConfig(input_dim=5, hidden_dims=(4, 3), seed=11))
        X = rng.normal(size=(8, 5))
        y = rng.integers(0, 2, size=8).astype(float)
        _, analytic = loss_and_grad(model, X, y, 1.5)
        numeric = numerical_grad(model, X, y, 1.5)
        for (dw_a, db_a), (dw_n, db_n) in zip(analytic, numeric):
            for a, n in ((dw_a, dw_n), (db_a, db_n)):
                scale = np.maximum(np.abs(n), 1e-8)
                assert np.max(np.abs(a - n) / scale) < 1e-4


class TestAdam:
    def fresh(self):
        model = MlpModel(
            config=MlpConfig(input_dim=1, hidden_dims=(1,)),
            weights=[np.array([[0.5]]), np.array([[0.5]])],
            biases=[np.array([0.0]), np.array([0.0])],
        )
        return model, AdamState.zeros_like(model)

    def test_zero_gradient_is_noop(self):
        model, state = self.fresh()
        before = model.flat_params().copy()
        zero = [(np.zeros((1, 1)), np.zeros(1)), (np.zeros((1, 1)), np.zeros(1))]
        adam_update(state, model, zero, t=1)
        np.testing.assert_array_equal(model.flat_params(), before)
        assert all(np.all(m == 0) for pair in state.m for m in pair)

    def test_first_step_bias_correction(self):
        model, state = self.fresh()
        grads = [(np.array([[1.0]]), np.zeros(1)), (np.zeros((1, 1)), np.zeros(1))]
        adam_update(state, model, grads, t=1, lr=0.001)
        delta = model.weights[0][0, 0] - 0.5
        assert delta == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)

    def test_coordinate_independence(self):
        model = MlpModel(
            config=MlpConfig(input_dim=2, hidden_dims=(1,)),
            weights=[np.array([[0.5, 0.5]]), np.array([[0.5]])],
            biases=[np.array([0.0]), np.array([0.0])],
        )
        state = AdamState.zeros_like(model)
        grads = [(np.array([[1.0, 0.0]]), np.zeros(1)), (np.zeros((1, 1)), np.zeros(1))]
        adam_update(state, model, grads, t=1)
        assert model.weights[0][0, 0] != 0.5
        assert model.weights[0][0, 1] == 0.5


def two_gaussian_items(n, dim=16, seed=0, sigma=0.5):
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        label = int(rng.random() < 0.5)
        mean = np.zeros(dim)
        mean[0] = 1.0 if label else -1.0
        vec = rng.normal(loc=mean, scale=sigma)
        items.append(
            LabeledEmbedding(
                utterance_id=f"g{i}", lang="eng", modality="speech", vector=vec, label=label
            )
        )
    return items


class TestTrain:
    def config(self, **kw):
        defaults = dict(batch_size=64, max_epochs=200, early_stop_patience=10, seed=3)
        defaults.update(kw)
        return TrainConfig(**defaults)

    def test_two_gaussian_separation(self):
        train_items = two_gaussian_items(1000, seed=1)
        dev_items = two_gaussian_items(400, seed=2)
        test_items = two_gaussian_items(400, seed=3)
        model, report = train(
            train_items, dev_items, MlpConfig(input_dim=16, hidden_dims=(8, 4)), self.config()
        )
        X = np.stack([it.vector for it in test_items]).astype(np.float32)
        y = np.array([it.label for it in test_items])
        from toxkit.classifier import forward_logits

        auc = roc_auc(sigmoid(forward_logits(model, X)), y)
        assert auc >= 0.99
        assert report.stopped_epoch <= 200

    def test_zero_epochs_returns_init(self):
        model, report = train(
            two_gaussian_items(50, seed=1),
            two_gaussian_items(50, seed=2),
            MlpConfig(input_dim=16, hidden_dims=(4,)),
            self.config(max_epochs=0),
        )
        assert report.epoch_losses == []
        ref = init_model(
            MlpConfig(input_dim=16, hidden_dims=(4,),
                      seed=model.config.seed)
        ).astype(np.float32)
        assert model.param_checksum() == ref.param_checksum()

    def test_deterministic_checksum(self):
        args = (
            two_gaussian_items(200, seed=1),
            two_gaussian_items(100, seed=2),
            MlpConfig(input_dim=16, hidden_dims=(4,)),
            self.config(max_epochs=5),
        )
        m1, r1 = train(*args)
        m2, r2 = train(*args)
        assert r1.param_checksum == r2.param_checksum
        assert m1.param_checksum() == m2.param_checksum()

    def test_single_class_dev_rejected(self):
        items = two_gaussian_items(50, seed=1)
        dev = [it for it in two_gaussian_items(50, seed=2) if it.label == 1]
        with pytest.raises(ValidationError, match="single class"):
            train(items, dev, MlpConfig(input_dim=16, hidden_dims=(4,)), self.config())

    def test_language_filter_can_empty_train(self):
        items = two_gaussian_items(20, seed=1)
        with pytest.raises(ValidationError, match="empty"):
            train(
                items,
                items,
                MlpConfig(input_dim=16, hidden_dims=(4,)),
                self.config(language_filter=frozenset({"swh"})),
            )


class TestScoreBatchAndPersistence:
    def model(self):
        return init_model(MlpConfig(input_dim=6, hidden_dims=(4,), seed=9),
                          metadata={"name": "head"}).astype(np.float32)

    def embeddings(self, n=10, seed=0):
        rng = np.random.default_rng(seed)
        return [
            EmbeddingRecord(utterance_id=f"u{i}", vector=rng.normal(size=6).astype(np.float32))
            for i in range(n)
        ]

    def test_empty_input(self):
        assert score_batch(self.model(), []) == []

    def test_matches_single_forward(self):
        model = self.model()
        recs = self.embeddings()
        scores = score_batch(model, recs)
        for rec, sc in zip(recs, scores):
            assert sc.score == pytest.approx(
                float(sigmoid(forward_logit(model, rec.vector))), abs=1e-7
            )
            assert 0.0 < sc.score < 1.0
            assert sc.provider == "head"

    def test_dimension_mismatch_names_utterance(self):
        bad = [EmbeddingRecord(utterance_id="odd", vector=np.zeros(3, dtype=np.float32))]
        with pytest.raises(ValidationError, match="odd"):
            score_batch(self.model(), bad)

    def test_round_trip_scores_bit_identical(self, tmp_path):
        model = self.model()
        recs = self.embeddings(100, seed=5)
        persist_model(model, tmp_path / "m.mtxm")
        loaded = load_model(tmp_path / "m.mtxm")
        s1 = [s.score for s in score_batch(model, recs)]
        s2 = [s.score for s in score_batch(loaded, recs)]
        assert s1 == s2
        assert loaded.param_checksum() == model.param_checksum()
        assert loaded.metadata == model.metadata

    def test_payload_count_mismatch(self, tmp_path):
        persist_model(self.model(), tmp_path / "m.mtxm")
        data = (tmp_path / "m.mtxm").read_bytes()
        (tmp_path / "m.mtxm").write_bytes(data[:-8])
        with pytest.raises(FormatError, match="parameters"):
            load_model(tmp_path / "m.mtxm")

    def test_flipped_magic(self, tmp_path):
        persist_model(self.model(), tmp_path / "m.mtxm")
        data = bytearray((tmp_path / "m.mtxm").read_bytes())
        data[0] ^= 1
        (tmp_path / "m.mtxm").write_bytes(bytes(data))
        with pytest.raises(FormatError, match="magic"):
            load_model(tmp_path / "m.mtxm")

    def test_checksum_failure(self, tmp_path):
        persist_model(self.model(), tmp_path / "m.mtxm")
        data = bytearray((tmp_path / "m.mtxm").read_bytes())
        data[-1] ^= 0xFF
        (tmp_path / "m.mtxm").write_bytes(bytes(data))
        with pytest.raises(FormatError, match="checksum"):
            load_model(tmp_path / "m.mtxm")
