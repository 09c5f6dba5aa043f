import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopman_pde.errors import DataError, NumericError, SolverDivergence
from koopman_pde.numerics import make_rng
from koopman_pde.pde import (
    IC_TAGS,
    KS,
    Burgers,
    Dataset,
    Grid1D,
    Heat,
    ICParams,
    InitialCondition,
    burgers_solve_colehopf,
    burgers_solve_numeric,
    colehopf_decode,
    colehopf_encode,
    generate_dataset,
    heat_solve,
    ks_solve,
    read_dataset,
    sample_ic,
    sample_ics,
    write_dataset,
)
from koopman_pde.pde.solvers import burgers_operators, integrate


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def smooth_zero_mean(grid, rng, modes=3, amp=0.5):
    """Random low-mode trigonometric polynomial with zero mean and max|u| <= amp."""
    u = np.zeros(grid.n)
    for m in range(1, modes + 1):
        a, b = rng.standard_normal(2) / m
        u += a * np.cos(m * grid.x) + b * np.sin(m * grid.x)
    return amp * u / np.max(np.abs(u))


def observed_order(solve, base):
    a, b, c = solve(base), solve(base / 2), solve(base / 4)
    return np.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))


# ---- grid ------------------------------------------------------------------------


def test_grid_points():
    g = Grid1D(8, -np.pi, np.pi)
    np.testing.assert_allclose(g.x, -np.pi + np.arange(8) * np.pi / 4)
    assert g.dx == pytest.approx(np.pi / 4)


@pytest.mark.parametrize("n,a,b", [(6, 0, 1), (2, 0, 1), (8, 1, 1), (8, 1, 0)])
def test_grid_validation(n, a, b):
    with pytest.raises(ValueError):
        Grid1D(n, a, b)


def test_spectral_derivative_and_antiderivative():
    g = Grid1D(64)
    u = np.sin(3 * g.x) + 0.5 * np.cos(g.x)
    np.testing.assert_allclose(g.derivative(u), 3 * np.cos(3 * g.x) - 0.5 * np.sin(g.x), atol=1e-12)
    prim = g.antiderivative(u)
    np.testing.assert_allclose(prim, -np.cos(3 * g.x) / 3 + 0.5 * np.sin(g.x), atol=1e-13)
    assert g.interpolate(np.cos(2 * g.x), 0.3) == pytest.approx(np.cos(0.6), abs=1e-13)


# ---- heat ----------------------------------------------------------------------------


def test_heat_constant_unchanged():
    g = Grid1D(32)
    np.testing.assert_allclose(heat_solve(np.full(32, 1.7), 3.0, g), 1.7, rtol=1e-14)


def test_heat_sine_mode():
    g = Grid1D(128)
    for t in (0.0, 0.01, 0.1, 1.0):
        np.testing.assert_allclose(heat_solve(np.sin(4 * g.x), t, g), np.exp(-16 * t) * np.sin(4 * g.x), atol=1e-13)


@pytest.mark.parametrize("omega", [0, 1, 3, 10])
def test_heat_discrete_eigenvalue(omega):
    g = Grid1D(128)
    dt = 0.0025
    for mode in (np.cos(omega * g.x), np.sin(omega * g.x)):
        if not np.any(mode):
            continue
        stepped = heat_solve(mode, dt, g)
        ratio = (stepped @ mode) / (mode @ mode)
        assert abs(ratio - np.exp(-(omega**2) * dt)) <= 1e-12


def test_heat_mean_conserved_and_modes_decay():
    g = Grid1D(64)
    u = make_rng(0).standard_normal(64)
    from koopman_pde.numerics import rfft

    prev = np.abs(rfft(u))
    for t in (0.01, 0.02, 0.05):
        v = heat_solve(u, t, g)
        assert abs(v.mean() - u.mean()) <= 1e-14
        cur = np.abs(rfft(v))
        assert np.all(cur[1:] <= prev[1:] + 1e-14)
        prev = cur


def test_heat_chaining():
    g = Grid1D(64)
    u = make_rng(1).standard_normal(64)
    np.testing.assert_allclose(heat_solve(heat_solve(u, 0.01, g), 0.01, g), heat_solve(u, 0.02, g), atol=1e-10)


# ---- Cole-Hopf -----------------------------------------------------------------------


def test_colehopf_zero_state():
    g = Grid1D(64)
    assert np.array_equal(colehopf_encode(np.zeros(64), 10, 1, g), np.ones(64))
    np.testing.assert_array_equal(burgers_solve_colehopf(np.zeros(64), 10, 1, 0.3, g), 0.0)


def test_colehopf_roundtrip():
    g = Grid1D(64)
    u = smooth_zero_mean(g, make_rng(2))
    np.testing.assert_allclose(colehopf_decode(colehopf_encode(u, 10, 1, g), 10, 1, g), u, atol=1e-10)


def test_colehopf_anchor_at_zero():
    g = Grid1D(64)
    v = colehopf_encode(np.sin(g.x), 10, 1, g)
    # int_0^x sin = 1 - cos x, so v = exp(-5 (1 - cos x)) and v(0) = 1
    np.testing.assert_allclose(v, np.exp(-5 * (1 - np.cos(g.x))), rtol=1e-12)


def test_colehopf_rejects_nonzero_mean():
    g = Grid1D(32)
    with pytest.raises(DataError, match="mean"):
        burgers_solve_colehopf(np.ones(32), 10, 1, 0.1, g)


def test_colehopf_decode_rejects_sign_change():
    with pytest.raises(NumericError, match="crossed zero"):
        colehopf_decode(np.linspace(-1, 1, 16), 10, 1)


def test_colehopf_vs_numeric_reference_case():
    g = Grid1D(128)
    u0 = 0.5 * np.sin(g.x)
    ch = burgers_solve_colehopf(u0, 10, 1, 0.05, g)
    num = burgers_solve_numeric(u0, 10, 1, 5e-4, 100, g).states[-1]
    assert rel_l2(num, ch) <= 1e-6


def test_burgers_cross_oracle_20_ics():
    g = Grid1D(128)
    rng = make_rng(42)
    u0 = np.stack([smooth_zero_mean(g, rng) for _ in range(20)])
    ops = burgers_operators(g, 10.0, 1.0)
    states, diverged = integrate(u0, g, *ops, 5e-4, 200, save_every=100)
    assert np.all(diverged < 0)
    for i in range(20):
        for j, t in ((1, 0.05), (2, 0.1)):
            assert rel_l2(states[i, j], burgers_solve_colehopf(u0[i], 10, 1, t, g)) <= 1e-6


# ---- Burgers numeric -------------------------------------------------------------------


def test_burgers_eps_zero_is_heat():
    g = Grid1D(64)
    u0 = make_rng(3).standard_normal(64)
    traj = burgers_solve_numeric(u0, 0.0, 0.7, 1e-3, 50, g)
    np.testing.assert_allclose(traj.states[-1], heat_solve(u0, 0.7 * 0.05, g), atol=1e-10)


def test_burgers_temporal_order():
    g = Grid1D(128)
    u0 = 0.5 * np.sin(g.x) + 0.3 * np.cos(2 * g.x + 1)

    def solve(dt):
        return burgers_solve_numeric(u0, 10, 1, dt, int(round(0.1 / dt)), g).states[-1]

    assert abs(observed_order(solve, 2e-3) - 4) <= 0.5


def test_burgers_mean_conserved():
    g = Grid1D(64)
    u0 = 0.4 + 0.5 * make_rng(4).standard_normal(64)
    traj = burgers_solve_numeric(u0, 10, 1, 2e-4, 500, g, save_every=50)
    assert np.max(np.abs(traj.states.mean(axis=1) - u0.mean())) <= 1e-10 * 0.1


def test_burgers_chaining():
    g = Grid1D(64)
    u0 = 0.5 * np.sin(g.x + 0.3)
    full = burgers_solve_numeric(u0, 10, 1, 2e-4, 20, g).states[-1]
    half = burgers_solve_numeric(u0, 10, 1, 2e-4, 10, g).states[-1]
    again = burgers_solve_numeric(half, 10, 1, 2e-4, 10, g).states[-1]
    np.testing.assert_allclose(again, full, atol=1e-10)


def test_divergence_reports_step():
    g = Grid1D(32)
    with pytest.raises(SolverDivergence) as info:
        burgers_solve_numeric(1e200 * np.sin(g.x), 10, 1, 1e-2, 10, g)
    assert info.value.step >= 1


# ---- KS ---------------------------------------------------------------------------------


def test_ks_zero_stays_zero():
    traj = ks_solve(np.zeros(64), 0.05, 20)
    assert not np.any(traj.states)


@pytest.mark.parametrize("m", [2, 3, 6])
def test_ks_linear_growth_rate(m):
    g = Grid1D(64, -4 * np.pi, 4 * np.pi)
    k = m / 4
    u0 = 1e-8 * np.cos(k * g.x)
    traj = ks_solve(u0, 0.01, 200, g, save_every=20)
    amp = [(s @ np.cos(k * g.x)) / (np.cos(k * g.x) @ np.cos(k * g.x)) for s in traj.states]
    slope = np.polyfit(traj.times, np.log(np.abs(amp)), 1)[0]
    assert slope == pytest.approx(k**2 - k**4, abs=1e-6)


def test_ks_temporal_order():
    g = Grid1D(64, -4 * np.pi, 4 * np.pi)
    u0 = np.cos(g.x / 4) * (1 + np.sin(g.x / 4))

    def solve(dt):
        return ks_solve(u0, dt, int(round(1.0 / dt)), g).states[-1]

    assert abs(observed_order(solve, 0.025) - 4) <= 0.5


def test_batched_matches_single():
    g = Grid1D(32)
    u0 = 0.3 * make_rng(5).standard_normal((4, 32))
    ops = burgers_operators(g, 10, 1)
    batch, _ = integrate(u0, g, *ops, 1e-4, 20)
    for i in range(4):
        single, _ = integrate(u0[i], g, *ops, 1e-4, 20)
        assert np.array_equal(single[0], batch[i])


# ---- initial conditions --------------------------------------------------------------------


def test_sine_batch_consumes_one_stratum_set():
    g = Grid1D(64)
    m = 20
    rng = make_rng(6)
    u = sample_ics("sine", g, m, rng)
    amps = np.max(np.abs(u), axis=1)  # ~A for omega >= 1 on a fine grid
    bins = np.floor(amps * m).astype(int)
    assert len(set(bins.tolist())) >= m - 2  # grid sampling can shave a sample just below a stratum edge


def test_sine_parameters_stratified():
    from koopman_pde.numerics import latin_hypercube

    rng_a, rng_b = make_rng(7), make_rng(7)
    m = 16
    unit = latin_hypercube(2, m, rng_a)
    u = sample_ics("sine", Grid1D(64), m, rng_b)
    amp = unit[:, 0]
    assert np.array_equal(np.sort(np.floor(amp * m)), np.arange(m))
    assert u.shape == (m, 64)


def test_square_two_values():
    g = Grid1D(64)
    u = sample_ics("square", g, 30, make_rng(8))
    for row in u:
        vals = np.unique(row)
        assert len(vals) == 2 and vals[0] == 0.0 and 0.2 <= vals[1] <= 1.0


def test_square_wraps_periodically():
    g = Grid1D(64)
    u = InitialCondition("square", {"height": 1.0, "width": 1.0, "center": np.pi - 0.1}).evaluate(g)
    assert u[0] == 1.0 and u[-1] == 1.0 and u[32] == 0.0


def test_white_noise_reproducible():
    g = Grid1D(32)
    a = sample_ic("white_noise", g, make_rng(9), ICParams(sigma=0.3))
    assert np.array_equal(a, sample_ic("white_noise", g, make_rng(9), ICParams(sigma=0.3)))


@pytest.mark.parametrize("kind", ["gaussian", "triangle"])
def test_test_only_kinds_are_bounded(kind):
    u = sample_ics(kind, Grid1D(64), 10, make_rng(10))
    assert np.all(u >= 0) and np.all(u.max(axis=1) <= 1.0) and np.all(u.max(axis=1) > 0)


def test_initial_condition_parse():
    ic = InitialCondition.parse("sine:A=1,omega=4")
    g = Grid1D(32)
    np.testing.assert_allclose(ic.evaluate(g), np.sin(4 * g.x))
    with pytest.raises(ValueError):
        InitialCondition.parse("sine:A").evaluate(g)
    with pytest.raises(ValueError):
        InitialCondition("sine", {"A": 1}).evaluate(g)


# ---- datasets ----------------------------------------------------------------------------------


def test_heat_dataset_exact():
    ds = generate_dataset(Heat(), "1", 10, 50, 0.0025, seed=0, n=64)
    assert ds.states.shape == (10, 50, 64)
    for traj in ds.states:
        for t in (1, 17, 49):
            np.testing.assert_allclose(traj[t], heat_solve(traj[0], t * 0.0025, ds.grid), atol=1e-10)


def test_mix3_class_balance():
    ds = generate_dataset(Heat(), 3, 9, 3, 0.0025, seed=0, n=32)
    assert ds.class_counts() == {"white_noise": 3, "sine": 3, "square": 3}


def test_burgers_mix3_bounded():
    ds = generate_dataset(Burgers(), 3, 30, 11, 0.002, seed=1, n=64)
    assert np.all(np.isfinite(ds.states))
    assert np.max(np.abs(ds.states)) <= 3 * np.max(np.abs(ds.states[:, 0])) + 1e-12


def test_ks_dataset_finite():
    ds = generate_dataset(KS(), 3, 6, 5, 0.25, seed=1, n=64)
    assert np.all(np.isfinite(ds.states)) and ds.grid.a == pytest.approx(-4 * np.pi)


def test_dataset_threads_identical():
    a = generate_dataset(Burgers(), "test", 25, 6, 0.002, seed=3, n=32)
    b = generate_dataset(Burgers(), "test", 25, 6, 0.002, seed=3, n=32, threads=4)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.ic_tags, b.ic_tags)


def test_dataset_rejects_incommensurate_dt():
    with pytest.raises(ValueError, match="multiple"):
        generate_dataset(Burgers(), 1, 2, 3, 0.002, seed=0, n=32, dt_solver=0.0003)


def test_dataset_retry_on_divergence(monkeypatch):
    import koopman_pde.pde.dataset as dsmod

    calls = {"n": 0}
    real = dsmod._solve_rows

    def flaky(pde, u0, grid, T, dt, dt_solver, threads):
        states, div = real(pde, u0, grid, T, dt, dt_solver, threads)
        calls["n"] += 1
        if calls["n"] == 1:
            div[1] = 3
        return states, div

    monkeypatch.setattr(dsmod, "_solve_rows", flaky)
    ds = generate_dataset(Burgers(), 1, 3, 3, 0.002, seed=0, n=32)
    assert ds.provenance["retries"] == 1 and calls["n"] == 2


def test_kpd1_roundtrip_and_layout(tmp_path):
    ds = generate_dataset(Burgers(), 3, 3, 4, 0.002, seed=0, n=16)
    path = tmp_path / "d.kpd"
    write_dataset(path, ds)
    raw = path.read_bytes()
    assert raw[:4] == b"KPD1"
    assert np.frombuffer(raw[4:20], "<u4").tolist() == [1, 16, 4, 3]
    assert np.frombuffer(raw[20:44], "<f8").tolist() == [0.002, -np.pi, np.pi]
    assert np.frombuffer(raw[44:48], "<u4")[0] == 1
    assert np.frombuffer(raw[48:60], "<u4").tolist() == [IC_TAGS["white_noise"], IC_TAGS["sine"], IC_TAGS["square"]]
    assert np.array_equal(np.frombuffer(raw[60:], "<f8").reshape(3, 4, 16), ds.states)
    back = read_dataset(path)
    assert np.array_equal(back.states, ds.states) and back.dt == ds.dt and back.pde_tag == 1
    path.write_bytes(raw[:-8])
    with pytest.raises(DataError):
        read_dataset(path)


def test_dataset_invariants():
    g = Grid1D(8)
    with pytest.raises(DataError):
        Dataset(g, 0.1, np.zeros((0, 3, 8)), 0, [])
    with pytest.raises(DataError):
        Dataset(g, 0.1, np.zeros((2, 3, 4)), 0, [0, 0])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["1", "2", "3", "test"]), st.integers(1, 12))
def test_dataset_determinism_property(seed, mix, count):
    a = generate_dataset(Heat(), mix, count, 3, 0.0025, seed=seed, n=16)
    b = generate_dataset(Heat(), mix, count, 3, 0.0025, seed=seed, n=16)
    assert np.array_equal(a.states, b.states)
    assert sum(a.class_counts().values()) == count
