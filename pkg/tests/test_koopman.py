import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopman_pde.errors import ArchitectureMismatch, ConfigError, NumericError, TrainingDiverged
from koopman_pde.koopman import (
    KoopmanModel,
    LossWeights,
    ModelArch,
    TrainConfig,
    choose_starts,
    compute_losses,
    evaluate,
    homotopy_chain,
    train,
    warm_start,
)
from koopman_pde.nn import AdamState
from koopman_pde.nn.gradcheck import numeric_gradient, relative_error, sample_indices
from koopman_pde.numerics import make_rng, matpow
from koopman_pde.pde import Dataset, Grid1D, Heat, generate_dataset

ARCHS = [
    ModelArch(16, 5, None, "diagonal"),
    ModelArch(16, 5, None, "full"),
    ModelArch(16, 5, "mlp", "diagonal"),
    ModelArch(16, 5, "mlp", "full"),
    ModelArch(16, 5, "conv", "diagonal"),
    ModelArch(16, 5, "conv", "full"),
]


def identity_model(arch):
    return KoopmanModel(arch, outer_init="zero_last")


def perturbed_model(arch, seed=1, scale=0.1):
    m = KoopmanModel(arch, rng=make_rng(seed))
    rng = make_rng(seed, 99)
    for v in m.parameters().values():
        v += scale * rng.standard_normal(v.shape)
    return m


# ---- architecture ------------------------------------------------------------------------


@pytest.mark.parametrize("kw", [dict(n=8, r=9), dict(n=8, r=0), dict(n=8, r=2, outer="rnn"), dict(n=12, r=2, outer="conv")])
def test_arch_validation(kw):
    with pytest.raises(ConfigError):
        ModelArch(**kw)


def test_diagonal_k_has_r_parameters():
    m = KoopmanModel(ModelArch(16, 5))
    assert m.K.shape == (5,)
    assert np.array_equal(m.K_matrix(), np.eye(5))
    assert set(m.parameters()) == {"psi.W", "psi.b", "K", "psi_inv.W", "psi_inv.b"}


def test_skip_variants_have_equal_parameter_counts():
    a = KoopmanModel(ModelArch(16, 5, "mlp", residual=True), rng=make_rng(0))
    b = KoopmanModel(ModelArch(16, 5, "mlp", residual=False), rng=make_rng(0))
    assert a.n_params() == b.n_params()
    assert all(np.array_equal(a.parameters()[k], b.parameters()[k]) for k in a.parameters())


def test_conv_layout():
    m = KoopmanModel(ModelArch(16, 5, "conv"), rng=make_rng(0))
    kinds = [l.kind for l in m.chi.layers]
    assert kinds == ["reshape", "conv1d", "avgpool1d", "conv1d", "avgpool1d", "conv1d", "avgpool1d", "conv1d",
                     "flatten", "dense", "dense"]
    assert m.chi.layers[-2].n_in == 64 * 2 and m.chi.layers[-2].n_out == 128


# ---- identity initialization -----------------------------------------------------------------


@pytest.mark.parametrize("arch", ARCHS[::2])
def test_identity_configured_full_rank(arch):
    arch = ModelArch(16, 16, arch.outer, arch.k_constraint)
    m = identity_model(arch)
    u = make_rng(2).standard_normal((7, 16))
    assert np.max(np.abs(m.encode(u) - u)) <= 1e-14
    assert np.max(np.abs(m.decode(m.encode(u)) - u)) <= 1e-14
    for p in (0, 1, 5):
        assert np.max(np.abs(m.predict(u, p) - u)) <= 1e-14


@pytest.mark.parametrize("arch", ARCHS)
def test_truncated_identity_encode(arch):
    m = identity_model(arch)
    u = make_rng(3).standard_normal((4, 16))
    np.testing.assert_array_equal(m.encode(u), u[:, :5])
    y = make_rng(4).standard_normal((4, 5))
    np.testing.assert_array_equal(m.decode(y)[:, :5], y)
    np.testing.assert_array_equal(m.decode(y)[:, 5:], 0.0)


def test_identical_rows_identical_outputs():
    m = KoopmanModel(ModelArch(16, 5, "mlp"), rng=make_rng(0))
    u = np.tile(make_rng(5).standard_normal(16), (2, 1))
    out = m.encode(u)
    assert np.array_equal(out[0], out[1])


def test_random_outer_init_departure_is_bounded():
    m = KoopmanModel(ModelArch(16, 16, "mlp"), rng=make_rng(0))
    u = make_rng(6).standard_normal((5, 16))
    dev = np.linalg.norm(m.outer_encode(u) - u, axis=1)
    branch = np.linalg.norm(m.chi.forward(u)[0] - u, axis=1)
    assert np.all(np.isfinite(dev)) and np.allclose(dev, branch)


def test_shape_errors():
    m = KoopmanModel(ModelArch(16, 5))
    with pytest.raises(ValueError):
        m.encode(np.zeros((2, 15)))
    with pytest.raises(ValueError):
        m.decode(np.zeros((2, 4)))
    with pytest.raises(ValueError):
        m.predict(np.zeros(16), -1)


# ---- prediction ---------------------------------------------------------------------------------


@pytest.mark.parametrize("arch", ARCHS)
def test_predict_is_latent_iteration(arch):
    m = perturbed_model(arch)
    u = make_rng(7).standard_normal((3, 16))
    y = m.encode(u)
    K = m.K_matrix()
    for p in range(6):
        assert np.array_equal(m.predict(u, p), m.decode(y))
        y = y @ K.T if arch.k_constraint == "full" else y * np.diag(K)
    allp = m.predict_all(u, 5)
    for p in range(6):
        assert np.array_equal(allp[:, p], m.predict(u, p))


@pytest.mark.parametrize("arch", ARCHS[:2])
def test_predict_matches_matrix_power_route(arch):
    m = perturbed_model(arch)
    u = make_rng(8).standard_normal((3, 16))
    for p in (2, 7, 20):
        via_power = m.decode(m.encode(u) @ matpow(m.K_matrix(), p).T)
        np.testing.assert_allclose(m.predict(u, p), via_power, rtol=1e-12, atol=1e-12)


def test_predict_single_state_shape():
    m = KoopmanModel(ModelArch(16, 5))
    assert m.predict(np.zeros(16), 3).shape == (16,)


# ---- losses ----------------------------------------------------------------------------------------


@pytest.mark.parametrize("arch", ARCHS)
def test_losses_vanish_for_constant_trajectories(arch):
    m = identity_model(ModelArch(16, 16, arch.outer, arch.k_constraint))
    c = make_rng(9).standard_normal((3, 1, 16))
    rep = compute_losses(m, np.repeat(c, 6, axis=1), LossWeights(l2=0.0))
    assert rep.loss1 == rep.loss2 == rep.loss3 == rep.loss4 == rep.loss5 == 0.0


def test_identity_model_losses_on_moving_trajectories():
    m = identity_model(ModelArch(16, 16, "mlp"))
    X = make_rng(10).standard_normal((4, 5, 16))
    rep = compute_losses(m, X, LossWeights(l2=0.0))
    assert rep.loss1 == 0.0 and rep.loss4 == 0.0 and rep.loss5 == 0.0
    per_p = []
    for p in range(1, 5):
        d = X[:, p:] - X[:, :-p]
        per_p.append(np.mean(d * d))
    assert rep.loss2 == pytest.approx(np.mean(per_p), rel=1e-12)
    assert rep.loss3 == pytest.approx(np.mean(per_p), rel=1e-12)


def test_total_is_weighted_sum():
    m = perturbed_model(ARCHS[3])
    w = LossWeights(0.3, 1.7, 0.2, 2.0, 0.9, l2=1e-3, P=2)
    rep = compute_losses(m, make_rng(11).standard_normal((3, 5, 16)), w)
    parts = [rep.loss1, rep.loss2, rep.loss3, rep.loss4, rep.loss5]
    expect = sum(wi * li for wi, li in zip(w.as_tuple(), parts)) + w.l2 * rep.l2_term
    assert abs(rep.total - expect) <= 1e-12 * max(1.0, abs(expect))


def test_l2_excludes_biases():
    m = KoopmanModel(ModelArch(16, 5))
    m.parameters()["psi.b"][...] = 100.0
    rep = compute_losses(m, np.zeros((1, 3, 16)))
    assert rep.l2_term == pytest.approx(5 + 5 + 5)  # psi.W, K, psi_inv.W


def test_horizon_and_starts_options():
    m = perturbed_model(ARCHS[0])
    X = make_rng(12).standard_normal((2, 6, 16))
    full = compute_losses(m, X, LossWeights(P=1))
    # with P = 1 only one-step pairs exist, one per start
    y = m.encode(X.reshape(-1, 16)).reshape(2, 6, 5)
    d3 = y[:, 1:] - y[:, :-1] * m.K
    assert full.loss3 == pytest.approx(np.mean(d3**2), rel=1e-12)
    with pytest.raises(ConfigError):
        compute_losses(m, X, LossWeights(P=6))
    assert list(choose_starts(10, 9, None)) == list(range(9))
    assert list(choose_starts(10, 9, 3)) == [0, 4, 8]
    s = choose_starts(10, 9, 4, make_rng(0))
    assert s[0] == 0 and len(set(s)) == 4 and s.max() <= 8


def test_nonfinite_loss_names_trajectory():
    m = KoopmanModel(ModelArch(16, 5))
    X = np.zeros((4, 3, 16))
    X[2, 1, 3] = np.nan
    with pytest.raises(NumericError, match="trajectory 12") as info:
        compute_losses(m, X, index=np.array([10, 11, 12, 13]))
    assert info.value.trajectory == 12


def test_loss_weight_validation():
    with pytest.raises(ConfigError):
        LossWeights(0, 0, 0, 0, 0)
    with pytest.raises(ConfigError):
        LossWeights(w1=-1)


# ---- gradients --------------------------------------------------------------------------------------


@pytest.mark.parametrize("arch", ARCHS, ids=lambda a: f"{a.outer}-{a.k_constraint}")
def test_full_model_gradient(arch):
    m = perturbed_model(arch)
    X = make_rng(13).standard_normal((3, 4, 16))
    w = LossWeights(1.0, 0.7, 1.3, 0.5, 0.9, l2=1e-3)
    _, grads = compute_losses(m, X, w, grad=True)
    rng = make_rng(14)
    for name, p in m.parameters().items():
        idx = sample_indices(p.size, 12, rng)
        num = numeric_gradient(lambda: compute_losses(m, X, w).total, p, indices=idx)
        assert relative_error(grads[name].reshape(-1)[idx], num) <= 1e-6, name


def test_gradient_with_start_subset():
    m = perturbed_model(ARCHS[1])
    X = make_rng(15).standard_normal((2, 7, 16))
    w = LossWeights(starts=3, P=4)
    _, grads = compute_losses(m, X, w, grad=True)  # no rng: deterministic spread starts
    for name, p in m.parameters().items():
        num = numeric_gradient(lambda: compute_losses(m, X, w).total, p)
        assert relative_error(grads[name], num) <= 1e-6, name


# ---- training ----------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def heat_small():
    tr = generate_dataset(Heat(), 1, 64, 8, 0.0025, seed=0, n=16)
    va = generate_dataset(Heat(), 1, 16, 8, 0.0025, seed=1, n=16)
    return tr, va


def test_zero_epochs_leaves_model_unchanged(heat_small):
    m = KoopmanModel(ModelArch(16, 5))
    before = m.get_state()
    res = train(m, *heat_small, TrainConfig(epochs=0))
    assert res.history == [] and res.best_epoch == 0
    assert all(np.array_equal(before[k], v) for k, v in m.get_state().items())


def test_training_reduces_validation_loss(heat_small):
    m = KoopmanModel(ModelArch(16, 5))
    res = train(m, *heat_small, TrainConfig(epochs=5, batch_size=16, lr=1e-2))
    assert res.best_val.total < res.initial_val.total
    assert len(res.history) == 10
    assert evaluate(m, heat_small[1], LossWeights()).total == res.best_val.total


def test_training_is_deterministic(heat_small, tmp_path):
    runs = []
    for i in range(2):
        m = KoopmanModel(ModelArch(16, 5, "mlp"), rng=make_rng(0))
        train(m, *heat_small, TrainConfig(epochs=2, batch_size=16, weights=LossWeights(starts=2)),
              metrics_path=tmp_path / f"m{i}.csv")
        runs.append((tmp_path / f"m{i}.csv").read_bytes())
    assert runs[0] == runs[1]
    lines = runs[0].decode().splitlines()
    assert lines[0] == "epoch,loss1,loss2,loss3,loss4,loss5,l2_term,total,split" and len(lines) == 5


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_diagonal_stays_diagonal(seed):
    tr = generate_dataset(Heat(), 1, 8, 4, 0.0025, seed=seed, n=16)
    m = KoopmanModel(ModelArch(16, 5, "mlp", "diagonal"), rng=make_rng(seed))
    opt = AdamState(lr=1e-2)
    from koopman_pde.nn import adam_step

    for _ in range(3):
        _, g = compute_losses(m, tr.states, grad=True)
        adam_step(m.parameters(), g, opt)
        K = m.K_matrix()
        assert np.all(K[~np.eye(5, dtype=bool)] == 0.0)


def test_divergence_raises_with_diagnostics(heat_small):
    m = KoopmanModel(ModelArch(16, 5))
    tr, va = heat_small
    bad = Dataset(tr.grid, tr.dt, tr.states.copy(), tr.pde_tag, tr.ic_tags)
    bad.states[5, 2, 0] = np.inf
    with pytest.raises(TrainingDiverged) as info:
        train(m, bad, va, TrainConfig(epochs=1, batch_size=64))
    assert info.value.diagnostics["epoch"] == 1
    assert info.value.diagnostics["trajectory"] == 5


def test_width_mismatch_rejected(heat_small):
    with pytest.raises(Exception, match="n=16"):
        train(KoopmanModel(ModelArch(8, 3)), *heat_small, TrainConfig(epochs=1))


# ---- checkpoints ----------------------------------------------------------------------------------------


@pytest.mark.parametrize("arch", ARCHS[::2])
def test_save_load_bitwise(arch, tmp_path):
    m = perturbed_model(arch)
    m.save(tmp_path / "m.kpm", extra={"dt": 0.1})
    back = KoopmanModel.load(tmp_path / "m.kpm")
    assert back.arch == m.arch
    for k, v in m.parameters().items():
        assert np.array_equal(back.parameters()[k], v)


def test_warm_start_loads_and_resets_optimizer(tmp_path):
    src = perturbed_model(ARCHS[2])
    src.save(tmp_path / "m.kpm")
    dst = KoopmanModel(ARCHS[2], rng=make_rng(5))
    opt = AdamState(step=7, m={"K": np.ones(5)}, v={"K": np.ones(5)})
    warm_start(dst, tmp_path / "m.kpm", opt)
    assert opt.step == 0 and not opt.m
    assert all(np.array_equal(dst.parameters()[k], v) for k, v in src.parameters().items())


def test_warm_start_mismatch_lists_fields(tmp_path):
    KoopmanModel(ModelArch(16, 5, "mlp"), rng=make_rng(0)).save(tmp_path / "m.kpm")
    with pytest.raises(ArchitectureMismatch) as info:
        warm_start(KoopmanModel(ModelArch(16, 4, None, "full")), tmp_path / "m.kpm")
    assert info.value.fields == ["k_constraint", "outer", "r"]


def test_homotopy_chain_rows(tmp_path):
    stages = []
    for dt in (0.0025, 0.005):
        stages.append((dt, generate_dataset(Heat(), 1, 32, 5, dt, seed=0, n=16),
                       generate_dataset(Heat(), 1, 8, 5, dt, seed=1, n=16)))
    rows = homotopy_chain(ModelArch(16, 5), stages, TrainConfig(epochs=1, batch_size=16), workdir=str(tmp_path))
    assert [(r.dt, r.start) for r in rows] == [(0.0025, "cold"), (0.005, "warm"), (0.005, "cold")]
    # the cold run at the second stage starts from the same initialization as stage 0
    assert rows[2].initial_val_total != rows[1].initial_val_total
