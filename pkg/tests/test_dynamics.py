import numpy as np
import pytest

from chainsync import (
    GaussianState,
    InstabilityError,
    NetworkConfig,
    ProbePair,
    QuadraticForm,
    StepTooLarge,
    UncertaintyViolation,
    assemble_full_potential,
    chain_ground_state,
    evolve,
    initial_composite_state,
    mean_energy,
    propagator,
    reduce,
    rk4_reference,
    squeezed_vacuum_local,
    symplectic_defect,
    symplectic_form,
    symplectic_spectrum,
    uncertainty_defect,
)
from chainsync.trajectory import NormalModeTrajectory


def small_system(M=10, K=0.2, lam=0.5, omega2=1.1, r=(0.0, 0.0), x0=(0.14, 1.4)):
    cfg = NetworkConfig(M=M, omega0=0.4, g=1.2)
    probes = ProbePair(omega2=omega2, lam=lam, K=K, site_m=1, site_n=1)
    qf = assemble_full_potential(cfg, probes)
    state = initial_composite_state(
        ((x0[0], 0.0), (x0[1], 0.0)),
        (squeezed_vacuum_local(1.0, r[0]), squeezed_vacuum_local(omega2, r[1])),
        cfg,
    )
    return cfg, qf, state


def test_symplectic_form_properties():
    J = symplectic_form(3)
    assert np.array_equal(J.T, -J)
    assert np.array_equal(J @ J, -np.eye(6))


def test_squeezed_vacuum_values():
    vac = squeezed_vacuum_local(0.8, 0.0)
    assert np.allclose(vac, np.diag([1 / 1.6, 0.4]))
    assert symplectic_spectrum(vac)[0] == pytest.approx(0.5, abs=1e-12)
    sq = squeezed_vacuum_local(1.0, 2.0)
    assert sq[0, 0] == pytest.approx(np.exp(-4.0) / 2.0, rel=1e-12)
    assert sq[0, 0] == pytest.approx(0.00916, abs=1e-5)
    for r in (-1.0, 0.0, 0.5, 2.0):
        assert np.linalg.det(squeezed_vacuum_local(1.3, r)) == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(ValueError):
        squeezed_vacuum_local(0.0, 1.0)


def test_chain_ground_state_decoupled_limit():
    cfg = NetworkConfig(M=4, omega0=0.7, g=1e-9)
    cov = chain_ground_state(cfg)
    assert np.allclose(cov[:4, :4], np.eye(4) / 1.4, atol=1e-8)
    assert np.allclose(cov[4:, 4:], 0.35 * np.eye(4), atol=1e-8)
    assert np.allclose(cov[:4, 4:], 0.0)


def test_chain_ground_state_is_the_ground_state():
    # the T=0 state satisfies sigma_pp = V sigma_xx with sigma_xp = 0 and is pure
    cfg = NetworkConfig(M=7, omega0=0.5, g=1.1)
    cov = chain_ground_state(cfg)
    M = cfg.M
    from chainsync.lattice import build_chain_potential

    V = build_chain_potential(cfg)
    assert np.allclose(V @ cov[:M, :M], cov[M:, M:], atol=1e-12)
    nus = symplectic_spectrum(cov)
    assert np.allclose(nus, 0.5, atol=1e-10)


def test_chain_ground_state_two_sites_bruteforce():
    cfg = NetworkConfig(M=2, omega0=0.9, g=0.6)
    cov = chain_ground_state(cfg)
    # brute-force two-mode diagonalization with explicit 2x2 rotation
    from chainsync.lattice import build_chain_potential

    V = build_chain_potential(cfg)
    w, O = np.linalg.eigh(V)
    sxx = O @ np.diag(0.5 / np.sqrt(w)) @ O.T
    spp = O @ np.diag(0.5 * np.sqrt(w)) @ O.T
    assert np.allclose(cov[:2, :2], sxx, atol=1e-12)
    assert np.allclose(cov[2:, 2:], spp, atol=1e-12)


def test_initial_composite_state_layout():
    cfg = NetworkConfig(M=3, omega0=0.6, g=1.0)
    state = initial_composite_state(
        ((0.14, 0.25), (1.4, -0.5)),
        (squeezed_vacuum_local(1.0, 0.0), squeezed_vacuum_local(1.1, 0.0)),
        cfg,
    )
    N = 5
    mean = np.zeros(2 * N)
    mean[0], mean[1], mean[N], mean[N + 1] = 0.14, 1.4, 0.25, -0.5
    assert np.array_equal(state.mean, mean)
    assert state.cov[0, 0] == pytest.approx(0.5)
    assert state.cov[N + 1, N + 1] == pytest.approx(1.1 / 2)
    # probe marginal reproduces the inputs
    probe = reduce(state, (0, 1))
    assert np.allclose(probe.cov, np.diag([0.5, 1 / 2.2, 0.5, 0.55]), atol=1e-12)


def test_vacuum_product_state_is_stationary_when_decoupled():
    cfg = NetworkConfig(M=5, omega0=0.6, g=1.0)
    probes = ProbePair(omega2=1.3, lam=0.0, K=0.0, site_m=1, site_n=1)
    qf = assemble_full_potential(cfg, probes)
    state = initial_composite_state(
        ((0.0, 0.0), (0.0, 0.0)),
        (squeezed_vacuum_local(1.0, 0.0), squeezed_vacuum_local(1.3, 0.0)),
        cfg,
    )
    out = evolve(state, propagator(qf, 17.3))
    assert np.allclose(out.mean, 0.0, atol=1e-14)
    assert np.allclose(out.cov, state.cov, atol=1e-10)
    assert np.allclose(symplectic_spectrum(out.cov), 0.5, atol=1e-10)


def test_initial_state_rejects_subvacuum_covariance():
    cfg = NetworkConfig(M=3, omega0=0.6, g=1.0)
    with pytest.raises(UncertaintyViolation):
        initial_composite_state(
            ((0.0, 0.0), (0.0, 0.0)),
            (np.diag([0.1, 0.1]), squeezed_vacuum_local(1.1, 0.0)),
            cfg,
        )


def test_propagator_identity_and_quarter_period():
    qf = QuadraticForm(np.array([[1.0]]))
    assert np.allclose(propagator(qf, 0.0).S, np.eye(2), atol=1e-15)
    S = propagator(qf, np.pi / 2).S
    assert np.allclose(S, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-12)


def test_propagator_zero_mode_limit():
    # free particle: x -> x + t p, needs the sin(nu t)/nu -> t branch
    qf = QuadraticForm(np.array([[0.0]]))
    S = propagator(qf, 2.5, check=False).S
    assert np.allclose(S, [[1.0, 2.5], [0.0, 1.0]], atol=1e-12)


def test_propagator_rejects_unstable_form():
    with pytest.raises(InstabilityError):
        propagator(QuadraticForm(np.array([[0.01, 1.0], [1.0, 0.16]])), 1.0)


def test_propagator_symplectic_and_composition_random():
    rng = np.random.default_rng(5)
    for _ in range(8):
        n = int(rng.integers(2, 7))
        B = rng.normal(size=(n, n))
        qf = QuadraticForm(B @ B.T + 0.1 * np.eye(n))
        t1, t2 = rng.uniform(0.1, 3.0, size=2)
        s1, s2, s12 = propagator(qf, t1), propagator(qf, t2), propagator(qf, t1 + t2)
        assert symplectic_defect(s1) <= 1e-10
        assert np.max(np.abs(s1.S @ s2.S - s12.S)) <= 1e-10


def test_evolve_identity_and_dimension_guard():
    cfg, qf, state = small_system(M=4)
    same = evolve(state, propagator(qf, 0.0))
    assert np.allclose(same.mean, state.mean, atol=1e-15)
    assert np.allclose(same.cov, state.cov, atol=1e-15)
    with pytest.raises(ValueError):
        evolve(state, propagator(QuadraticForm(np.eye(2)), 1.0))


def test_energy_purity_uncertainty_over_long_run():
    cfg, qf, state = small_system(M=16, r=(0.7, -0.3))
    smap = propagator(qf, 0.5)
    e0 = mean_energy(state, qf)
    nus0 = symplectic_spectrum(state.cov)
    s = state
    for _ in range(400):
        s = evolve(s, smap)
    assert mean_energy(s, qf) == pytest.approx(e0, rel=1e-9)
    nus = symplectic_spectrum(s.cov)
    assert np.allclose(np.sort(nus), np.sort(nus0), rtol=1e-8)  # global purity conserved
    assert uncertainty_defect(s.cov) > -1e-9


def test_trajectory_engine_matches_evolve():
    cfg, qf, state = small_system(M=12, r=(0.4, 0.0))
    eng = NormalModeTrajectory(qf, state)
    smap = propagator(qf, 7.3)
    ref = evolve(state, smap)
    direct = eng.state_at(7.3)
    assert np.allclose(direct.mean, ref.mean, atol=1e-12)
    assert np.allclose(direct.cov, ref.cov, atol=1e-12)
    X, P = eng.mean_series(np.array([7.3]))
    assert np.allclose(np.concatenate([X[0], P[0]]), ref.mean[[0, 1, qf.dim, qf.dim + 1]])
    covs = eng.covariance_series(np.array([7.3]))
    idx = np.array([0, 1, qf.dim, qf.dim + 1])
    assert np.allclose(covs[0], ref.cov[np.ix_(idx, idx)], atol=1e-12)


def test_rk4_free_oscillator_hundred_periods():
    # one mode at frequency 2 pi: 100 periods at dt = 1e-3
    qf = QuadraticForm(np.array([[4.0 * np.pi**2]]))
    state = GaussianState(np.array([1.0, 0.0]), 0.5 * np.eye(2))
    out = rk4_reference(state, qf, 100.0, 1e-3)
    assert out.mean[0] == pytest.approx(1.0, abs=1e-8)
    assert out.mean[1] == pytest.approx(0.0, abs=1e-7)


def test_rk4_matches_exact_propagator():
    cfg, qf, state = small_system(M=10)
    exact = evolve(state, propagator(qf, 50.0))
    approx = rk4_reference(state, qf, 50.0, 0.01)
    scale = np.max(np.abs(exact.cov))
    assert np.max(np.abs(approx.mean - exact.mean)) < 1e-6
    assert np.max(np.abs(approx.cov - exact.cov)) / scale < 1e-6


def test_rk4_fourth_order_convergence():
    cfg, qf, state = small_system(M=4)
    exact = evolve(state, propagator(qf, 5.0))

    def err(dt):
        out = rk4_reference(state, qf, 5.0, dt)
        return np.max(np.abs(out.mean - exact.mean))

    assert 10.0 < err(0.02) / err(0.01) < 22.0


def test_rk4_step_guard():
    cfg, qf, state = small_system(M=4)
    with pytest.raises(StepTooLarge):
        rk4_reference(state, qf, 1.0, 0.5)


def test_reduce_identity_and_marginals():
    cfg, qf, state = small_system(M=6, r=(1.0, 0.0))
    full = reduce(state, range(state.n_modes))
    assert np.array_equal(full.cov, state.cov)
    probe = reduce(state, (0, 1))
    assert probe.n_modes == 2
    assert symplectic_spectrum(probe.cov)[0] == pytest.approx(0.5, abs=1e-10)
    # after evolving with coupling on, the probe pair is mixed
    evolved = evolve(state, propagator(qf, 12.0))
    nus = symplectic_spectrum(reduce(evolved, (0, 1)).cov)
    assert nus[0] > 0.5 + 1e-3
