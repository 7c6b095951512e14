from __future__ import annotations

import numpy as np
import pytest

from cuekit.dataset import LabeledEmbeddings, compute_prior
from cuekit.losses import LossConfig, cue_loss_batch
from cuekit.trainer import (
    HeadModel,
    MlpHead,
    TrainConfig,
    TrainingDivergedError,
    cosine_lr,
    init_head,
    load_head,
    predict,
    save_head,
    sgd_step,
    train,
)


class TestCosineLr:
    def test_start_is_lr0(self):
        assert cosine_lr(0.01, 0, 100) == pytest.approx(0.01)

    def test_end_is_zero(self):
        assert cosine_lr(0.01, 100, 100) == pytest.approx(0.0, abs=1e-18)

    def test_midpoint_is_half(self):
        assert cosine_lr(0.01, 50, 100) == pytest.approx(0.005)

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            cosine_lr(0.01, 5, 4)
        with pytest.raises(ValueError):
            cosine_lr(0.01, 0, 0)


class TestSgdStep:
    def test_no_signal_no_change(self):
        w = np.array([1.0, -2.0])
        new_w, v = sgd_step(w, np.zeros(2), np.zeros(2), lr=0.1, momentum=0.9, weight_decay=0.0)
        assert np.array_equal(new_w, w)
        assert np.array_equal(v, np.zeros(2))

    def test_single_step(self):
        w, v = sgd_step(np.zeros(1), np.ones(1), np.zeros(1), lr=0.1, momentum=0.9, weight_decay=0.0)
        assert v[0] == pytest.approx(1.0)
        assert w[0] == pytest.approx(-0.1)

    def test_two_steps_accumulate_momentum(self):
        w, v = np.zeros(1), np.zeros(1)
        for _ in range(2):
            w, v = sgd_step(w, np.ones(1), v, lr=0.1, momentum=0.9, weight_decay=0.0)
        assert v[0] == pytest.approx(1.9)
        assert w[0] == pytest.approx(-0.29)

    def test_coupled_weight_decay(self):
        w = np.array([2.0])
        new_w, v = sgd_step(w, np.zeros(1), np.zeros(1), lr=0.1, momentum=0.0, weight_decay=0.5)
        # g' = 0 + 0.5 * 2 = 1; w <- 2 - 0.1
        assert v[0] == pytest.approx(1.0)
        assert new_w[0] == pytest.approx(1.9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sgd_step(np.zeros(2), np.zeros(3), np.zeros(2), 0.1, 0.9, 0.0)


class TestPredict:
    def test_identity_head(self):
        model = HeadModel(W=np.eye(3), b=np.zeros(3))
        x = np.array([[0.0, 1.0, 0.0]])
        assert predict(model, x).tolist() == [1]

    def test_zero_head_tie_goes_to_class_zero(self):
        model = HeadModel(W=np.zeros((4, 2)), b=np.zeros(4))
        assert predict(model, np.ones((3, 2))).tolist() == [0, 0, 0]

    def test_argmax(self):
        model = HeadModel(W=np.array([[1.0, 0.0], [0.0, 1.0]]), b=np.array([0.2, 0.9]))
        assert predict(model, np.array([[0.0, 0.0]])).tolist() == [1]

    def test_dimension_mismatch(self):
        model = HeadModel(W=np.zeros((2, 3)), b=np.zeros(2))
        with pytest.raises(ValueError, match="dim"):
            predict(model, np.zeros((1, 4)))


def two_gaussians(n_per_class=40, gap=8.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per_class, 4)) + np.array([gap, 0, 0, 0])
    b = rng.normal(size=(n_per_class, 4)) - np.array([gap, 0, 0, 0])
    feats = np.concatenate([a, b]).astype(np.float32)
    labels = np.concatenate([np.zeros(n_per_class, int), np.ones(n_per_class, int)])
    return LabeledEmbeddings(feats, labels, ["pos", "neg"])


class TestTrain:
    def baseline_config(self, **kw):
        defaults = dict(
            epochs=5, batch_size=16, seed=0, init="zero",
            loss=LossConfig(lambda_zs=0.0, lambda_llm=0.0),
        )
        defaults.update(kw)
        return TrainConfig(**defaults)

    def test_zero_epochs_returns_initial_head(self):
        data = two_gaussians()
        prior = compute_prior(np.array([40, 40]))
        report = train(data, prior, None, None, self.baseline_config(epochs=0))
        assert report.epoch_losses == []
        assert np.array_equal(report.model.W, np.zeros((2, 4)))
        assert np.array_equal(report.model.b, np.zeros(2))

    def test_bitwise_determinism(self):
        data = two_gaussians()
        prior = compute_prior(np.array([40, 40]))
        config = self.baseline_config(epochs=4)
        r1 = train(data, prior, None, None, config)
        r2 = train(data, prior, None, None, config)
        assert r1.model.W.tobytes() == r2.model.W.tobytes()
        assert r1.model.b.tobytes() == r2.model.b.tobytes()
        assert r1.epoch_losses == r2.epoch_losses
        r3 = train(data, prior, None, None, self.baseline_config(epochs=4, seed=1))
        assert r3.model.W.tobytes() != r1.model.W.tobytes()

    def test_solves_separable_problem(self):
        data = two_gaussians()
        prior = compute_prior(np.array([40, 40]))
        report = train(data, prior, None, None, self.baseline_config(epochs=50))
        preds = predict(report.model, data.features)
        assert np.mean(preds == data.labels) == 1.0
        assert report.epoch_losses[-1]["total"] < report.epoch_losses[0]["total"]

    def test_loss_history_length_equals_epochs(self):
        data = two_gaussians(n_per_class=10)
        prior = compute_prior(np.array([10, 10]))
        report = train(data, prior, None, None, self.baseline_config(epochs=7))
        assert len(report.epoch_losses) == 7

    def test_divergence_reports_step(self):
        data = two_gaussians(n_per_class=10)
        prior = compute_prior(np.array([10, 10]))
        config = self.baseline_config(epochs=5, lr0=1e200)
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(
            TrainingDivergedError
        ) as err:
            train(data, prior, None, None, config)
        assert err.value.step > 0

    def test_prototype_init_rows_are_scaled_unit_prototypes(self):
        rng = np.random.default_rng(0)
        protos = rng.normal(size=(3, 5))
        config = TrainConfig(init="prototype", proto_scale=2.0)
        head = init_head(5, 3, config, prototypes=protos)
        norms = np.linalg.norm(head.W, axis=1)
        assert np.allclose(norms, 2.0)
        assert np.allclose(
            head.W / norms[:, None], protos / np.linalg.norm(protos, axis=1, keepdims=True)
        )

    def test_prototype_init_requires_prototypes(self):
        with pytest.raises(ValueError, match="prototype"):
            init_head(5, 3, TrainConfig(init="prototype"))

    def test_cue_targets_change_the_solution(self):
        data = two_gaussians()
        prior = compute_prior(np.array([40, 40]))
        t = np.ones((data.num_samples, 2), dtype=np.uint8)
        config = self.baseline_config(loss=LossConfig(lambda_zs=1.0, lambda_llm=0.0))
        with_cues = train(data, prior, t, None, config)
        baseline = train(data, prior, None, None, self.baseline_config())
        assert with_cues.model.W.tobytes() != baseline.model.W.tobytes()


class TestMlpHead:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(1)
        n, d, h, c = 12, 5, 6, 4
        X = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        pi = np.full(c, 1.0 / c)
        t_zs = (rng.random((n, c)) < 0.4).astype(float)
        t_zs[np.arange(n), y] = 1
        config = LossConfig(lambda_zs=0.7, lambda_llm=0.0)
        head = MlpHead(
            W1=rng.normal(size=(h, d)), b1=rng.normal(size=h),
            W2=rng.normal(size=(c, h)), b2=rng.normal(size=c),
        )

        def batch_loss():
            means, _ = cue_loss_batch(head.logits(X), y, t_zs, None, pi, config)
            return means["total"]

        from cuekit.trainer import _backward

        means, grad_logits = cue_loss_batch(head.logits(X), y, t_zs, None, pi, config)
        grads = _backward(head, X, grad_logits)

        eps = 1e-6
        for name, arr, _ in head.params():
            flat = arr.reshape(-1)
            for idx in rng.choice(flat.size, size=min(10, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = batch_loss()
                flat[idx] = orig - eps
                down = batch_loss()
                flat[idx] = orig
                fd = (up - down) / (2 * eps)
                assert grads[name].reshape(-1)[idx] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_trains_on_separable_data(self):
        data = two_gaussians()
        prior = compute_prior(np.array([40, 40]))
        config = TrainConfig(
            epochs=30, batch_size=16, seed=0, init="zero", hidden_dim=8,
            loss=LossConfig(lambda_zs=0.0, lambda_llm=0.0),
        )
        report = train(data, prior, None, None, config)
        assert isinstance(report.model, MlpHead)
        preds = predict(report.model, data.features)
        assert np.mean(preds == data.labels) == 1.0


class TestPersistence:
    def test_linear_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        model = HeadModel(W=rng.normal(size=(3, 4)), b=rng.normal(size=3))
        save_head(tmp_path / "m", model)
        loaded = load_head(tmp_path / "m")
        assert np.array_equal(loaded.W, model.W.astype(np.float32).astype(np.float64))
        assert np.array_equal(loaded.b, model.b.astype(np.float32).astype(np.float64))

    def test_mlp_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        model = MlpHead(
            W1=rng.normal(size=(5, 4)), b1=rng.normal(size=5),
            W2=rng.normal(size=(2, 5)), b2=rng.normal(size=2),
        )
        save_head(tmp_path / "m", model)
        loaded = load_head(tmp_path / "m")
        assert isinstance(loaded, MlpHead)
        assert np.allclose(loaded.W1, model.W1, atol=1e-6)

    def test_save_is_deterministic(self, tmp_path):
        model = HeadModel(W=np.ones((2, 2)), b=np.zeros(2))
        save_head(tmp_path / "a", model)
        save_head(tmp_path / "b", model)
        for name in ("head.json", "W.cuet", "b.cuet"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr0=0.0)
    with pytest.raises(ValueError):
        TrainConfig(momentum=1.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(init="xavier")
    config = TrainConfig(epochs=3, hidden_dim=16)
    assert TrainConfig.from_dict(config.to_dict()) == config
