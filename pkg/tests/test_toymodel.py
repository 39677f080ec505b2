import math

import numpy as np
import pytest

from reliabench.errors import DivergedLoss
from reliabench.toymodel import (
    ID_GENERATORS,
    OOD_GENERATORS,
    ToyModel,
    TrainConfig,
    bce_loss,
    forward,
    gen_synthetic,
    gradient_check,
    loss_and_grads,
    predict_log,
    train,
    train_ensemble,
)


@pytest.fixture(scope="module")
def small_data():
    return gen_synthetic(n=800, seed=3, overlap=0.5, ood_shift=0.5)


@pytest.fixture(scope="module")
def trained(small_data):
    return train(small_data, TrainConfig(seed=1, max_epochs=8))


class TestGenerator:
    def test_class_balance(self):
        ds = gen_synthetic(n=4000, seed=42, overlap=1.0)
        in_dist = ds.split != "ood"
        assert (ds.y[in_dist] == 0).sum() == 2000 and (ds.y[in_dist] == 1).sum() == 2000

    def test_splits_disjoint_and_balanced(self, small_data):
        assert len(set(small_data.ids)) == len(small_data.ids)
        for split in ("train", "val", "test", "ood"):
            y = small_data.y[small_data.indices(split)]
            assert abs(int((y == 0).sum()) - int((y == 1).sum())) <= 1

    def test_same_seed_same_bytes(self):
        a, b = gen_synthetic(200, seed=5), gen_synthetic(200, seed=5)
        assert a.X.tobytes() == b.X.tobytes() and a.strata == b.strata

    def test_zero_shift_matches_test_distribution(self):
        ds = gen_synthetic(n=20000, seed=0, overlap=1.0, ood_shift=0.0)
        for label, centre in ((0, -1.0), (1, 1.0)):
            for split in ("test", "ood"):
                pts = ds.X[(ds.split == split) & (ds.y == label)]
                assert pts[:, 0].mean() == pytest.approx(centre, abs=0.1)
                assert pts[:, 0].std() == pytest.approx(1.0, abs=0.1)

    def test_shift_moves_ood_means(self):
        ds = gen_synthetic(n=20000, seed=0, overlap=0.25, ood_shift=1.5)
        pts = ds.X[(ds.split == "ood") & (ds.y == 0)]
        assert pts[:, 0].mean() == pytest.approx(0.5, abs=0.05)

    def test_strata(self, small_data):
        gens = {s["generator"] for s, sp in zip(small_data.strata, small_data.split) if sp != "ood"}
        ood_gens = {s["generator"] for s, sp in zip(small_data.strata, small_data.split) if sp == "ood"}
        assert gens <= set(ID_GENERATORS) and ood_gens <= set(OOD_GENERATORS)
        assert {"jpeg_quality", "noise_level"} <= set(small_data.strata[0])

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_synthetic(n=11)
        with pytest.raises(ValueError):
            gen_synthetic(n=10, overlap=0.0)


class TestForward:
    def test_zero_model(self):
        m = ToyModel.zeros()
        assert forward(m, np.array([0.3, -2.0])) == 0.0

    def test_zero_dropout_bit_equal(self, rng):
        m = ToyModel.init(rng, dropout_p=0.0)
        X = rng.normal(size=(50, 2))
        det = forward(m, X)
        sto = forward(m, X, "stochastic", rng=np.random.default_rng(1), dropout_p=0.0)
        assert det.tobytes() == sto.tobytes()

    def test_expectation_preserved(self):
        rng = np.random.default_rng(11)
        m = ToyModel.init(rng, dropout_p=0.3)
        x = np.tile([0.4, -0.2], (100_000, 1))
        z = forward(m, x, "stochastic", rng=np.random.default_rng(12))
        det = forward(m, x[:1])[0]
        se = z.std() / math.sqrt(z.size)
        assert abs(z.mean() - det) < 3 * se

    def test_stochastic_needs_rng(self, rng):
        with pytest.raises(ValueError):
            forward(ToyModel.init(rng), np.zeros((2, 2)), "stochastic")


class TestLoss:
    def test_closed_forms(self):
        assert bce_loss([0.0], [1]) == pytest.approx(math.log(2), abs=1e-15)
        assert bce_loss([20.0], [1]) == pytest.approx(math.log1p(math.exp(-20.0)), rel=1e-12)
        assert bce_loss([20.0], [1]) == pytest.approx(2.06e-9, rel=0.01)

    def test_logit_gradient(self):
        m = ToyModel.zeros()
        _, grads = loss_and_grads(m, np.zeros((1, 2)), np.array([1.0]))
        assert float(grads[3]) == -0.5

    def test_zero_model_gradient_closed_form(self, rng):
        X = rng.normal(size=(6, 2))
        y = np.array([1, 0, 1, 1, 0, 0], dtype=float)
        _, grads = loss_and_grads(ToyModel.zeros(), X, y)
        assert float(grads[3]) == pytest.approx(np.mean(0.5 - y), abs=1e-15)
        assert np.all(grads[0] == 0) and np.all(grads[2] == 0)


class TestGradientCheck:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_models(self, seed):
        rng = np.random.default_rng(seed)
        m = ToyModel.init(rng, hidden=8, dropout_p=0.0)
        X, y = rng.normal(size=(16, 2)), rng.integers(0, 2, 16).astype(float)
        assert gradient_check(m, X, y, 1e-5) < 1e-4

    def test_kink_exclusion(self):
        m = ToyModel.zeros(hidden=4)
        with pytest.raises(ValueError):
            gradient_check(m, np.ones((3, 2)), np.ones(3))

    def test_epsilon_range(self, rng):
        with pytest.raises(ValueError):
            gradient_check(ToyModel.init(rng), np.ones((2, 2)), np.ones(2), epsilon=1e-2)


class TestTrain:
    def test_reproducible(self, small_data):
        cfg = TrainConfig(seed=4, max_epochs=3, patience=3)
        a, b = train(small_data, cfg), train(small_data, cfg)
        for pa, pb in zip(a.model.params(), b.model.params()):
            assert pa.tobytes() == pb.tobytes()

    def test_trace_and_patience(self, small_data):
        res = train(small_data, TrainConfig(seed=2, max_epochs=30, patience=2, lr=0.05))
        assert res.epochs_run == len(res.trace)
        assert res.epochs_run - res.best_epoch <= 2
        best_val = min(r.val_nll for r in res.trace)
        assert res.trace[res.best_epoch - 1].val_nll == best_val

    def test_returns_best_checkpoint(self, small_data, trained):
        X, y = small_data.subset("val")
        best = trained.trace[trained.best_epoch - 1].val_nll
        assert bce_loss(forward(trained.model, X), y) == pytest.approx(best, rel=1e-12)

    def test_diverged_loss(self, small_data):
        with pytest.raises(DivergedLoss) as info:
            train(small_data, TrainConfig(seed=0, lr=1e300, max_epochs=2, patience=2))
        assert isinstance(info.value.trace, list)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(lr=0.0)
        with pytest.raises(ValueError):
            TrainConfig(patience=40, max_epochs=30)

    def test_ensemble(self, small_data):
        cfg = TrainConfig(max_epochs=2, patience=2)
        models = train_ensemble(small_data, cfg, seeds=[1, 2, 3])
        assert len(models) == 3
        assert not np.array_equal(models[0].W1, models[1].W1)
        with pytest.raises(ValueError):
            train_ensemble(small_data, cfg, seeds=[1, 1])


class TestPredictLog:
    def test_deterministic(self, small_data, trained):
        log = predict_log(trained.model, small_data, "test")
        assert len(log) == len(small_data.indices("test"))
        assert all(r.logit is not None for r in log)
        assert log.meta["mode"] == "deterministic"

    def test_mc_one(self, small_data, trained):
        log = predict_log(trained.model, small_data, "test", "mc", T=1)
        assert all(len(r.mc_probs) == 1 for r in log)

    def test_p_zero_is_constant(self, small_data, trained):
        log = predict_log(trained.model, small_data, "test", "mc", T=20, dropout_p=0.0)
        mat = log.mc_matrix()
        assert np.all(mat == mat[:, :1])
        det = predict_log(trained.model, small_data, "test").probs()
        np.testing.assert_allclose(mat[:, 0], det, rtol=0, atol=1e-15)

    def test_variance_grows_with_p(self, small_data, trained):
        from reliabench.stochastic import summarize_log
        means = []
        for p in (0.0, 0.1, 0.2, 0.5):
            log = summarize_log(predict_log(trained.model, small_data, "test", "mc", T=20, dropout_p=p))
            means.append(float(np.mean(log.columns().mc_var)))
        assert means[0] == 0.0
        assert all(a < b for a, b in zip(means, means[1:]))

    def test_strata_copied(self, small_data, trained):
        log = predict_log(trained.model, small_data, "ood")
        i = small_data.indices("ood")[0]
        assert dict(log[0].strata) == small_data.strata[i]

    def test_mc_seeded(self, small_data, trained):
        a = predict_log(trained.model, small_data, "test", "mc", T=5, seed=3)
        b = predict_log(trained.model, small_data, "test", "mc", T=5, seed=3)
        assert a == b
