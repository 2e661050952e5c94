import numpy as np
import pytest

from open_schwinger import dynamics as dyn
from open_schwinger import lattice as lat
from open_schwinger import liouvillian as lv
from open_schwinger.environment import EnvCorrelator, correlator_matrix


def small_model(n=2, m=0.5, e=0.8, beta=0.1, env_kind="delta", D0=1.0, sigma=1.0):
    params = lat.ModelParams(n_sites=n, mass=m, coupling=e)
    basis = lat.enumerate_basis(params)
    h = lat.build_hamiltonian(basis, params)
    env = EnvCorrelator(env_kind, D0=D0, sigma=sigma, beta=beta)
    gen = dyn.make_generator(h, basis, params, env)
    flux = lat.flux_table(basis).astype(float)
    return params, basis, h, env, gen, flux


class TestRK4:
    def test_closed_energy_conservation(self):
        params, basis, h, env, _, flux = small_model()
        gen = dyn.make_generator(h, basis, params, None)
        rho0 = lat.prepare_state(basis, "string", left=0, right=3)
        traj = dyn.rk4_evolve(rho0, gen, 10.0, 0.01, flux, entropy_stride=0,
                              snapshot_stride=100)
        energies = [np.trace(h @ traj.snapshots[k]).real for k in sorted(traj.snapshots)]
        assert np.max(np.abs(np.array(energies) - energies[0])) < 1e-8

    def test_fourth_order_convergence(self):
        params, basis, h, env, gen, flux = small_model()
        rho0 = lat.prepare_state(basis, "bare_vacuum")
        final = {}
        for dt in (0.08, 0.04, 0.01):
            traj = dyn.rk4_evolve(rho0, gen, 2.0, dt, flux, entropy_stride=0,
                                  snapshot_stride=0)
            final[dt] = traj.snapshots[max(traj.snapshots)]
        err_coarse = np.linalg.norm(final[0.08] - final[0.01])
        err_fine = np.linalg.norm(final[0.04] - final[0.01])
        assert 8.0 <= err_coarse / err_fine <= 32.0

    def test_steady_state_is_fixed_point(self):
        params, basis, h, env, gen, flux = small_model()
        l_list = lat.build_lindblad_operators(
            h, lat.build_charge_operators(basis, params), env.beta)
        corr = correlator_matrix(env, basis.n_fermion_sites)
        result = lv.full_spectrum(lv.build_superoperator(h, l_list, corr, 1.0))
        rho0 = lv.steady_states(result)[0]
        traj = dyn.rk4_evolve(rho0, gen, 5.0, 0.01, flux, entropy_stride=0,
                              snapshot_stride=0)
        assert np.linalg.norm(traj.snapshots[max(traj.snapshots)] - rho0) <= 1e-7

    def test_residual_columns_bounded(self):
        params, basis, h, env, gen, flux = small_model()
        rho0 = lat.prepare_state(basis, "bare_vacuum")
        traj = dyn.rk4_evolve(rho0, gen, 5.0, 0.01, flux, entropy_stride=0)
        assert np.max(traj.trace_residual) < 1e-9 * 5.0
        assert np.max(traj.herm_residual) < 1e-10 * 5.0

    def test_trace_drift_aborts(self):
        class Drifting:
            dim = 4

            def apply(self, rho):
                return rho  # trace grows like e^t: not a Lindblad generator

        rho0 = np.eye(4, dtype=complex) / 4.0
        with pytest.raises(RuntimeError, match="reduce dt"):
            dyn.rk4_evolve(rho0, Drifting(), 1.0, 0.1, entropy_stride=0)

    def test_validation(self):
        params, basis, h, env, gen, flux = small_model()
        rho0 = lat.prepare_state(basis, "bare_vacuum")
        with pytest.raises(ValueError):
            dyn.rk4_evolve(rho0, gen, 1.0, -0.01, flux)
        with pytest.raises(ValueError):
            dyn.rk4_evolve(rho0, gen, 0.005, 0.01, flux)

    def test_matches_spectral_evolution(self):
        params, basis, h, env, gen, flux = small_model()
        l_list = lat.build_lindblad_operators(
            h, lat.build_charge_operators(basis, params), env.beta)
        corr = correlator_matrix(env, basis.n_fermion_sites)
        result = lv.full_spectrum(lv.build_superoperator(h, l_list, corr, 1.0))
        rho0 = lat.prepare_state(basis, "string", left=0, right=1)
        c = lv.mode_coefficients(result, rho0)
        t = 1.0
        spectral = lv.unvec(result.right @ (c * np.exp(result.eigenvalues * t)),
                            basis.dimension)
        traj = dyn.rk4_evolve(rho0, gen, t, 0.01, flux, entropy_stride=0,
                              snapshot_stride=0)
        rk4 = traj.snapshots[max(traj.snapshots)]
        total_e = flux.sum(axis=1)
        assert abs(np.diag(spectral).real @ total_e
                   - np.diag(rk4).real @ total_e) < 1e-5
        assert np.max(np.abs(spectral - rk4)) < 1e-6

    def test_exact_closed_trajectory_matches_rk4(self):
        params, basis, h, env, _, flux = small_model()
        gen = dyn.make_generator(h, basis, params, None)
        rho0 = lat.prepare_state(basis, "string", left=0, right=3)
        traj = dyn.rk4_evolve(rho0, gen, 2.0, 0.01, flux, entropy_stride=0)
        exact = dyn.exact_closed_trajectory(h, rho0, traj.times, flux)
        assert np.max(np.abs(traj.fields - exact.fields)) < 1e-8


class TestEntropy:
    def test_pure_state_zero(self):
        rho = np.zeros((4, 4), dtype=complex)
        rho[2, 2] = 1.0
        assert dyn.von_neumann_entropy(rho) == 0.0

    def test_maximally_mixed(self):
        d = 7
        assert dyn.von_neumann_entropy(np.eye(d) / d) == pytest.approx(np.log(d))

    def test_clamps_tiny_negatives(self):
        rho = np.diag([1.0 + 5e-10, -5e-10])
        assert dyn.von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-8)

    def test_rejects_non_density(self):
        with pytest.raises(ValueError):
            dyn.von_neumann_entropy(np.diag([1.5, -0.5]))

    def test_orthogonal_mixture_formula(self):
        # equal mixture of sector steady states gains exactly log 2
        params, basis, h, env, gen, flux = small_model(env_kind="constant")
        l_list = lat.build_lindblad_operators(
            h, lat.build_charge_operators(basis, params), env.beta)
        corr = correlator_matrix(env, basis.n_fermion_sites)
        result = lv.full_spectrum(lv.build_superoperator(h, l_list, corr, 1.0))
        cp = lat.cp_operator(basis)
        rho_e, rho_o = lv.steady_states(result, cp=cp)
        s_e = dyn.von_neumann_entropy(rho_e)
        s_o = dyn.von_neumann_entropy(rho_o)
        mixture = 0.5 * rho_e + 0.5 * rho_o
        expected = 0.5 * (s_e + s_o) + np.log(2.0)
        assert dyn.von_neumann_entropy(mixture) == pytest.approx(expected, abs=1e-9)

    def test_entropy_monotone_for_delta_vacuum(self):
        params, basis, h, env, gen, flux = small_model()
        rho0 = lat.prepare_state(basis, "bare_vacuum")
        traj = dyn.rk4_evolve(rho0, gen, 3.0, 0.01, flux, entropy_stride=1,
                              snapshot_stride=0)
        assert traj.entropy[0] == 0.0
        assert np.all(np.diff(traj.entropy) > -1e-6)


class TestStringObservables:
    def test_subtraction_identities(self):
        params, basis, h, env, gen, flux = small_model(n=3)
        run = dyn.run_string_pair(params, env, left=2, right=3, t_final=0.5, dt=0.05)
        assert np.allclose(run.subtracted[0],
                           run.fields_string[0] - run.fields_vacuum[0])
        # t = 0: string links at -1, all others zero (vacuum field vanishes)
        assert run.subtracted[0, 2] == pytest.approx(-1.0)
        assert np.max(np.abs(np.delete(run.subtracted[0], 2))) < 1e-12
        same = dyn.vacuum_subtracted_fields(run.traj_vacuum, run.traj_vacuum)
        assert np.max(np.abs(same)) == 0.0

    def test_peak_time_static_field(self):
        times = np.linspace(0.0, 6.0, 61)
        fields = -np.ones((61, 3))
        assert np.all(dyn.string_peak_time(times, fields, 6.0) == 0.0)

    def test_peak_time_simple_profile(self):
        times = np.linspace(0.0, 6.0, 601)
        fields = np.zeros((601, 2))
        fields[:, 0] = np.exp(-(times - 2.0) ** 2)
        fields[:, 1] = -np.exp(-(times - 3.5) ** 2)
        t_star = dyn.string_peak_time(times, fields, 6.0)
        assert t_star[0] == pytest.approx(2.0, abs=0.011)
        assert t_star[1] == pytest.approx(3.5, abs=0.011)

    def test_peak_time_window_restriction(self):
        times = np.linspace(0.0, 6.0, 601)
        fields = np.zeros((601, 1))
        fields[:, 0] = times  # max at the end of any window
        assert dyn.string_peak_time(times, fields, 4.0)[0] == pytest.approx(4.0)
        with pytest.raises(ValueError):
            dyn.string_peak_time(times, fields, 7.0)

    def test_string_metric_frozen_string(self):
        times = np.linspace(0.0, 6.0, 601)
        fields = np.zeros((601, 11))
        fields[:, 4:7] = -1.0
        assert dyn.string_metric(times, fields) == pytest.approx(-1.0)

    def test_relaxation_time_exponential(self):
        times = np.linspace(0.0, 10.0, 1001)
        values = np.exp(-times)
        assert dyn.trajectory_relaxation_time(times, values, 0.0) == pytest.approx(1.0, abs=0.011)

    def test_relaxation_time_constant(self):
        times = np.linspace(0.0, 10.0, 101)
        assert dyn.trajectory_relaxation_time(times, np.ones(101), 1.0) == 0.0


def test_medium_subtraction_vanishes_at_late_times():
    # string and vacuum initializations thermalize to the same state, so the
    # subtracted fields tend to zero well past the relaxation time
    params = lat.ModelParams(n_sites=2, mass=0.5, coupling=0.8)
    env = EnvCorrelator("delta", D0=1.0, beta=0.1)
    run = dyn.run_string_pair(params, env, left=0, right=3, t_final=60.0, dt=0.02)
    assert np.max(np.abs(run.subtracted[0])) == pytest.approx(1.0)
    assert np.max(np.abs(run.subtracted[-1])) < 1e-3


def test_relaxation_time_tracks_inverse_gap():
    # slower generators (longer correlation lengths) relax later
    params = lat.ModelParams(n_sites=2, mass=0.5, coupling=0.8)
    basis = lat.enumerate_basis(params)
    h = lat.build_hamiltonian(basis, params)
    flux = lat.flux_table(basis).astype(float)
    rho0 = lat.prepare_state(basis, "string", left=0, right=3)
    taus, gaps_ = [], []
    for env in (EnvCorrelator("delta", D0=1.0, beta=0.1),
                EnvCorrelator("gaussian", D0=1.0, sigma=1.0, beta=0.1),
                EnvCorrelator("gaussian", D0=1.0, sigma=30.0, beta=0.1)):
        l_list = lat.build_lindblad_operators(
            h, lat.build_charge_operators(basis, params), env.beta)
        corr = correlator_matrix(env, basis.n_fermion_sites)
        result = lv.full_spectrum(lv.build_superoperator(h, l_list, corr, 1.0),
                                  keep_modes=False)
        gaps_.append(lv.gaps(result)[0])
        rho_ss = lv.steady_states(result)[0]
        steady = float(np.diag(rho_ss).real @ flux.sum(axis=1))
        traj = dyn.rk4_evolve(np.array(rho0), gen_for(h, basis, params, env),
                              60.0, 0.02, flux, entropy_stride=0,
                              snapshot_stride=0)
        taus.append(dyn.trajectory_relaxation_time(
            traj.times, traj.fields.sum(axis=1), steady))
    assert all(a > b for a, b in zip(gaps_, gaps_[1:]))   # gap shrinks
    assert all(a <= b for a, b in zip(taus, taus[1:]))    # relaxation lengthens
    # the per-trajectory time is finite and bounded by a few slow-mode lives
    assert all(0.0 < t <= 20.0 / g for t, g in zip(taus, gaps_))


def gen_for(h, basis, params, env):
    return dyn.make_generator(h, basis, params, env)


class TestPhaseDiagram:
    def test_vacuum_point_runs_and_continues_on_error(self):
        base = lat.ModelParams(n_sites=2)
        out = dyn.phase_diagram([0.5], [0.8], "vacuum", base, t1=0.2, t2=0.4, dt=0.02)
        assert len(out) == 1 and np.isfinite(out[0]["Ebar"])
        with pytest.raises(ValueError):
            dyn.phase_diagram([0.5], [0.8], "medium", base)

    def test_vacuum_and_medium_agree_at_zero_coupling_strength(self):
        base = lat.ModelParams(n_sites=2)
        env = EnvCorrelator("delta", D0=1e-12, beta=0.1)
        vac = dyn.phase_diagram([0.5], [0.8], "vacuum", base, t1=0.2, t2=0.4, dt=0.02)
        med = dyn.phase_diagram([0.5], [0.8], "medium", base, env=env,
                                t1=0.2, t2=0.4, dt=0.02)
        assert med[0]["Ebar"] == pytest.approx(vac[0]["Ebar"], abs=1e-6)
