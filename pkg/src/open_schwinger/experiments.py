"""Experiment drivers behind the CLI: each produces the CSV outputs for one
figure-level study from a resolved configuration."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from . import dilation as dil
from . import dynamics as dyn
from . import lattice as lat
from . import liouvillian as lv
from .csvio import write_csv
from .environment import EnvCorrelator, correlator_matrix, fourier_correlator

__all__ = ["EXPERIMENTS", "run_experiment", "model_params", "env_from_dict",
           "correlators_from_options", "fit_power_law", "gap_for_model"]


def model_params(cfg, **overrides) -> lat.ModelParams:
    p = dict(cfg["params"])
    p.update(overrides)
    return lat.ModelParams(n_sites=p["n_sites"], lattice_spacing=p["lattice_spacing"],
                           mass=p["mass"], coupling=p["coupling"],
                           flux_max=p["flux_max"])


def env_from_dict(d, beta=None) -> EnvCorrelator:
    return EnvCorrelator(d["kind"], D0=d.get("D0", 1.0), sigma=d.get("sigma", 1.0),
                         beta=beta if beta is not None else d.get("beta", 0.1))


def correlators_from_options(cfg) -> list:
    beta = cfg["env"]["beta"]
    return [env_from_dict(d, beta=beta) for d in cfg["options"]["correlators"]]


def _build_model(params, env):
    basis = lat.enumerate_basis(params)
    h = lat.build_hamiltonian(basis, params)
    o_list = lat.build_charge_operators(basis, params)
    l_list = lat.build_lindblad_operators(h, o_list, env.beta)
    corr = correlator_matrix(env, basis.n_fermion_sites)
    return basis, h, o_list, l_list, corr


def run_spectrum(cfg, manifest):
    params = model_params(cfg)
    out = manifest.out_dir
    for env in correlators_from_options(cfg):
        basis, h, o_list, l_list, corr = _build_model(params, env)
        if basis.dimension**2 > cfg["dense_cap"]:
            raise RuntimeError(f"dense spectrum needs d^2 <= {cfg['dense_cap']}")
        liouv = lv.build_superoperator(h, l_list, corr, params.lattice_spacing)
        result = lv.full_spectrum(liouv, cp=lat.cp_operator(basis),
                                  dense_cap=cfg["dense_cap"], keep_modes=False)
        rows = [(j, w.real, w.imag, abs(result.traces[j]), result.cp_labels[j])
                for j, w in enumerate(result.eigenvalues)]
        manifest.add(write_csv(out / f"spectrum_{env.tag()}.csv",
                               ("j", "re_lambda", "im_lambda", "trace_of_mode",
                                "cp_sector"), rows))


def _sigma_scan_envs(cfg):
    beta = cfg["env"]["beta"]
    d0 = cfg["env"]["D0"]
    opts = cfg["options"]
    envs = []
    if opts.get("include_delta", True):
        envs.append(EnvCorrelator("delta", D0=d0, beta=beta))
    for sigma in opts["sigma_grid"]:
        envs.append(EnvCorrelator("gaussian", D0=d0, sigma=float(sigma), beta=beta))
    if opts.get("include_constant", True):
        envs.append(EnvCorrelator("constant", D0=d0, beta=beta))
    return envs


def run_gaps_vs_sigma(cfg, manifest):
    params = model_params(cfg)
    rows = []
    for env in _sigma_scan_envs(cfg):
        basis, h, o_list, l_list, corr = _build_model(params, env)
        liouv = lv.build_superoperator(h, l_list, corr, params.lattice_spacing)
        result = lv.full_spectrum(liouv, dense_cap=cfg["dense_cap"], keep_modes=False)
        d1, d2 = lv.gaps(result)
        sigma = env.sigma if env.kind == "gaussian" else ""
        rows.append((env.kind, sigma, d1, d2))
        _write_rates(cfg, manifest, env, l_list, basis.n_fermion_sites, params)
    manifest.add(write_csv(manifest.out_dir / "gaps.csv",
                           ("kind", "sigma", "delta1", "delta2"), rows))


def _write_rates(cfg, manifest, env, l_list, n_f, params):
    d_k = fourier_correlator(env, n_f)
    per_k = lv.rate_contributions(l_list, d_k, params.lattice_spacing)
    rows = [(k, d_k[k].real, per_k[k]) for k in range(n_f)]
    manifest.add(write_csv(manifest.out_dir / f"rates_{env.tag()}.csv",
                           ("k", "D_k", "gamma_diag_mean"), rows))


def run_rates(cfg, manifest):
    params = model_params(cfg)
    env0 = _sigma_scan_envs(cfg)[0]
    basis, h, o_list, l_list, corr = _build_model(params, env0)
    for env in _sigma_scan_envs(cfg):
        _write_rates(cfg, manifest, env, l_list, basis.n_fermion_sites, params)


def fit_power_law(n_values, gaps_):
    """Least-squares fit gap = prefactor * N^(-alpha); returns (alpha, prefactor)."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(gaps_, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return -slope, float(np.exp(intercept))


def gap_for_model(model, n, coupling, mass, beta, d0, a, dense_cap):
    """Delta-correlator Liouvillian gap for one model family and size; dense
    below the cap, Arnoldi on the matrix-free generator above it."""
    params = lat.ModelParams(n_sites=n, lattice_spacing=a, mass=mass,
                             coupling=coupling if model == "schwinger" else 0.0)
    if model == "schwinger":
        basis = lat.enumerate_basis(params)
        h = lat.build_hamiltonian(basis, params)
    elif model == "ff_constrained":
        basis = lat.free_fermion_basis("constrained", params)
        h = lat.build_free_fermion_hamiltonian("constrained", params, basis=basis)
    elif model == "ff_full":
        basis = lat.free_fermion_basis("full-zero-charge", params)
        h = lat.build_free_fermion_hamiltonian("full-zero-charge", params, basis=basis)
    else:
        raise ValueError(f"unknown model {model!r}")
    env = EnvCorrelator("delta", D0=d0, beta=beta)
    corr = correlator_matrix(env, basis.n_fermion_sites)
    if basis.dimension**2 <= dense_cap:
        o_list = lat.build_charge_operators(basis, params)
        l_list = lat.build_lindblad_operators(h, o_list, beta)
        liouv = lv.build_superoperator(h, l_list, corr, a)
        result = lv.full_spectrum(liouv, dense_cap=dense_cap, keep_modes=False)
        return lv.gaps(result)
    gen = lv.LindbladGenerator(h, lat.charge_diagonals(basis, params), corr, a, beta)
    lead, _ = lv.leading_spectrum(gen, 4)
    return abs(lead[1].real), abs(lead[2].real)


def run_gaps_vs_n(cfg, manifest):
    opts = cfg["options"]
    beta, d0 = cfg["env"]["beta"], cfg["env"]["D0"]
    mass, a = cfg["params"]["mass"], cfg["params"]["lattice_spacing"]
    models = [("schwinger", e) for e in opts["couplings"]]
    if opts.get("include_free_fermion", True):
        models += [("ff_constrained", 0.0), ("ff_full", 0.0)]
    gap_rows, fit_rows = [], []
    for model, coupling in models:
        tag = f"{model}_e{coupling:g}" if model == "schwinger" else model
        series = []
        for n in opts["n_values"]:
            d1, d2 = gap_for_model(model, n, coupling, mass, beta, d0, a,
                                   cfg["dense_cap"])
            gap_rows.append((tag, n, d1, d2))
            series.append(d1)
        alpha, prefactor = fit_power_law(opts["n_values"], series)
        fit_rows.append((tag, alpha, prefactor, len(series)))
    manifest.add(write_csv(manifest.out_dir / "gaps.csv",
                           ("model", "n_sites", "delta1", "delta2"), gap_rows))
    manifest.add(write_csv(manifest.out_dir / "fits.csv",
                           ("model", "alpha", "prefactor", "n_points"), fit_rows))


def _sector_initial_states(basis):
    """Pure states inside each CP sector: the (CP-even) bare vacuum and the
    antisymmetric combination of the first CP-swapped configuration pair."""
    d = basis.dimension
    perm = lat.cp_permutation(basis)
    even = lat.prepare_state(basis, "bare_vacuum")
    pair = next(i for i in range(d) if perm[i] != i)
    psi = np.zeros(d)
    psi[pair] = 1.0 / np.sqrt(2.0)
    psi[perm[pair]] = -1.0 / np.sqrt(2.0)
    odd = np.outer(psi, psi).astype(complex)
    return {"even": even, "odd": odd}


def run_entropy(cfg, manifest):
    params = model_params(cfg)
    basis = lat.enumerate_basis(params)
    h = lat.build_hamiltonian(basis, params)
    flux = lat.flux_table(basis).astype(float)
    t_final, dt = cfg["evolution"]["t_final"], cfg["evolution"]["dt"]
    stride = cfg["options"].get("entropy_stride", 5)
    rows = []
    panels = cfg["options"].get("panels", ["full", "sectors"])
    if "full" in panels:
        rho0 = lat.prepare_state(basis, "bare_vacuum")
        for env in correlators_from_options(cfg):
            gen = dyn.make_generator(h, basis, params, env)
            traj = dyn.rk4_evolve(np.array(rho0), gen, t_final, dt, flux,
                                  entropy_stride=stride, snapshot_stride=0)
            mask = ~np.isnan(traj.entropy)
            rows += [(t, s, env.tag(), "full")
                     for t, s in zip(traj.times[mask], traj.entropy[mask])]
    limits = [("full", float(np.log(basis.dimension)))]
    if "sectors" in panels:
        env = EnvCorrelator("constant", D0=cfg["env"]["D0"], beta=cfg["env"]["beta"])
        gen = dyn.make_generator(h, basis, params, env)
        cp = lat.cp_operator(basis)
        d_even = (basis.dimension + int(np.sum(lat.cp_permutation(basis)
                                               == np.arange(basis.dimension)))) // 2
        limits += [("even", float(np.log(d_even))),
                   ("odd", float(np.log(basis.dimension - d_even)))]
        for tag, rho0 in _sector_initial_states(basis).items():
            traj = dyn.rk4_evolve(np.array(rho0), gen, t_final, dt, flux,
                                  entropy_stride=stride, snapshot_stride=0)
            mask = ~np.isnan(traj.entropy)
            rows += [(t, s, "constant", tag)
                     for t, s in zip(traj.times[mask], traj.entropy[mask])]
    manifest.add(write_csv(manifest.out_dir / "entropy.csv",
                           ("t", "S", "correlator_tag", "sector_tag"), rows))
    manifest.add(write_csv(manifest.out_dir / "entropy_limits.csv",
                           ("sector_tag", "log_dim"), limits))


def _traj_rows(times, fields_raw, fields_sub):
    rows = []
    for it, t in enumerate(times):
        for link in range(fields_raw.shape[1]):
            rows.append((t, link, fields_raw[it, link], 0))
            rows.append((t, link, fields_sub[it, link], 1))
    return rows


def _string_run(cfg, env, params=None, method="rk4"):
    params = params or model_params(cfg)
    left, right = cfg["options"].get("string", (None, None))
    return dyn.run_string_pair(params, env, left=left, right=right,
                               t_final=cfg["evolution"]["t_final"],
                               dt=cfg["evolution"]["dt"], method=method)


def run_string_vacuum(cfg, manifest):
    run = _string_run(cfg, None)
    rows = _traj_rows(run.times, run.fields_string, run.subtracted)
    manifest.add(write_csv(manifest.out_dir / "traj_vacuum.csv",
                           ("t", "link", "E_in_units_of_e", "subtracted_flag"), rows))


def run_string_medium(cfg, manifest):
    beta = cfg["env"]["beta"]
    opts = cfg["options"]
    if "param_sets" in opts:  # regime panels: (m, e) pairs, vacuum + medium
        for m, e in opts["param_sets"]:
            params = model_params(cfg, mass=float(m), coupling=float(e))
            for mode, env in (("vacuum", None),
                              ("medium", EnvCorrelator("delta", D0=cfg["env"]["D0"],
                                                       beta=beta))):
                run = _string_run(cfg, env, params=params)
                rows = _traj_rows(run.times, run.fields_string, run.subtracted)
                manifest.add(write_csv(
                    manifest.out_dir / f"traj_m{m:g}_e{e:g}_{mode}.csv",
                    ("t", "link", "E_in_units_of_e", "subtracted_flag"), rows))
        return
    for d0 in opts["d0_values"]:
        env = EnvCorrelator("delta", D0=float(d0), beta=beta)
        run = _string_run(cfg, env)
        rows = _traj_rows(run.times, run.fields_string, run.subtracted)
        manifest.add(write_csv(manifest.out_dir / f"traj_D{d0:g}.csv",
                               ("t", "link", "E_in_units_of_e", "subtracted_flag"),
                               rows))


def run_tstar(cfg, manifest):
    beta = cfg["env"]["beta"]
    t_max = cfg["options"].get("t_max", 6.0)
    rows = []
    vac = _string_run(cfg, None)
    for link, t_star in enumerate(dyn.string_peak_time(vac.times, vac.subtracted, t_max)):
        rows.append((link, t_star, 0.0))
    for d0 in cfg["options"]["d0_values"]:
        env = EnvCorrelator("delta", D0=float(d0), beta=beta)
        run = _string_run(cfg, env)
        t_stars = dyn.string_peak_time(run.times, run.subtracted, t_max)
        rows += [(link, t_star, float(d0)) for link, t_star in enumerate(t_stars)]
    manifest.add(write_csv(manifest.out_dir / "tstar.csv",
                           ("site", "t_star", "D0"), rows))


def run_phase_diagram(cfg, manifest):
    opts = cfg["options"]
    base = model_params(cfg)
    env = env_from_dict(cfg["env"])
    rows = []
    failures = []
    for mode in opts.get("modes", ["vacuum", "medium"]):
        records = dyn.phase_diagram(
            [float(m) for m in opts["m_values"]],
            [float(e) for e in opts["e_values"]], mode, base,
            env=env if mode == "medium" else None,
            t1=opts.get("t1", 3.0), t2=opts.get("t2", 4.0),
            dt=cfg["evolution"]["dt"], n_jobs=cfg.get("n_jobs") or 1)
        for rec in records:
            rows.append((rec["m"], rec["e"], rec["mode"], rec["Ebar"]))
            if "error" in rec:
                failures.append(rec)
    manifest.add(write_csv(manifest.out_dir / "phase.csv",
                           ("m", "e", "mode", "Ebar"), rows))
    if failures:
        manifest.extras["failed_points"] = [
            {k: str(v) for k, v in rec.items()} for rec in failures]


def _r_label(r):
    return float("inf") if r is None else r


def run_dilation(cfg, manifest):
    params = model_params(cfg)
    basis, h, o_list, l_list, corr = _build_model(
        params, EnvCorrelator("delta", D0=cfg["env"]["D0"], beta=cfg["env"]["beta"]))
    setup = dil.make_dilation_setup(h, l_list, cfg["env"]["D0"],
                                    params.lattice_spacing)
    total_e = sum(lat.electric_field_observables(basis, params))
    rho0 = lat.prepare_state(basis, "bare_vacuum")
    t_final = cfg["options"].get("t_final", 2.0)
    ref_dt = cfg["options"].get("reference_dt", 0.001)
    gen = dyn.make_generator(h, basis, params,
                             EnvCorrelator("delta", D0=cfg["env"]["D0"],
                                           beta=cfg["env"]["beta"]))
    flux = lat.flux_table(basis).astype(float)
    ref = dyn.rk4_evolve(np.array(rho0), gen, t_final, ref_dt, flux,
                         entropy_stride=0, snapshot_stride=0)
    ref_obs = ref.fields.sum(axis=1)

    def ref_at(t):
        return ref_obs[int(round(t / ref_dt))]

    rows = []
    for n_cyl in cfg["options"].get("n_cyl_values", [1, 2, 3, 4]):
        times, _, obs = dil.dilated_evolve(rho0, setup, t_final, int(n_cyl),
                                           observable=total_e)
        rows += [(t, int(n_cyl), float("inf"), float("inf"), o, abs(o - ref_at(t)))
                 for t, o in zip(times, obs)]
    for r_h, r_j in cfg["options"].get("r_combos", []):
        r_h = None if r_h in (0, None, "inf") else int(r_h)
        r_j = None if r_j in (0, None, "inf") else int(r_j)
        n_cyl = int(cfg["options"].get("trotter_n_cyl", 4))
        times, _, obs = dil.dilated_evolve(rho0, setup, t_final, n_cyl,
                                           r_h=r_h, r_j=r_j, observable=total_e)
        rows += [(t, n_cyl, _r_label(r_h), _r_label(r_j), o, abs(o - ref_at(t)))
                 for t, o in zip(times, obs)]
    manifest.add(write_csv(manifest.out_dir / "dilation.csv",
                           ("t", "n_cyl", "r_H", "r_J", "observable_sum_E",
                            "error_vs_rk4"), rows))


def run_trotter_closed(cfg, manifest):
    params = model_params(cfg)
    basis = lat.enumerate_basis(params)
    h = lat.build_hamiltonian(basis, params)
    total_e = sum(lat.electric_field_observables(basis, params))
    rho0 = lat.prepare_state(basis, "bare_vacuum")
    opts = cfg["options"]
    grid = np.linspace(0.0, opts.get("t_max", 5.0), opts.get("n_points", 21))
    r_set = [int(r) for r in opts.get("r_values", [3, 5, 10])]
    exact, curves, errors = dil.compare_closed_trotter(rho0, h, grid, r_set, total_e)
    rows = [(t, 1, float("inf"), float("inf"), val, 0.0)
            for t, val in zip(grid, exact)]
    for r in r_set:
        rows += [(t, 1, r, float("inf"), val, err)
                 for t, val, err in zip(grid, curves[r], errors[r])]
    manifest.add(write_csv(manifest.out_dir / "dilation.csv",
                           ("t", "n_cyl", "r_H", "r_J", "observable_sum_E",
                            "error_vs_rk4"), rows))
    h_pad = dil.pad_matrix(h.astype(complex), dil.padded_dim(h.shape[0]))
    terms = dil.pauli_decompose(h_pad)
    bound_rows = []
    for r in r_set:
        for t in grid[1:]:
            bound = dil.trotter_error_bound(terms, t, r)
            measured = dil.spectral_norm(expm(-1j * h_pad * t)
                                         - dil.trotter_unitary(terms, t, r))
            bound_rows.append((r, t, bound, measured))
    manifest.add(write_csv(manifest.out_dir / "bounds.csv",
                           ("r", "t", "bound", "measured_norm_error"), bound_rows))


EXPERIMENTS = {
    "spectrum": run_spectrum,
    "gaps-vs-sigma": run_gaps_vs_sigma,
    "gaps-vs-N": run_gaps_vs_n,
    "entropy": run_entropy,
    "string-vacuum": run_string_vacuum,
    "string-medium": run_string_medium,
    "tstar": run_tstar,
    "phase-diagram": run_phase_diagram,
    "dilation": run_dilation,
    "trotter-closed": run_trotter_closed,
    "rates": run_rates,
}


def run_experiment(kind, cfg, manifest):
    EXPERIMENTS[kind](cfg, manifest)
