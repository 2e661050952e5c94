"""Density-matrix time evolution and the string/entropy observables.

A trajectory is produced by classic fourth-order Runge-Kutta on
d rho/dt = L rho using the matrix-free generator, with re-Hermitization each
step.  Link electric fields are reported in units of e (diagonal operators,
so they cost O(d) per step); the von Neumann entropy needs a Hermitian
eigendecomposition per sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import lattice
from .environment import EnvCorrelator, correlator_matrix
from .liouvillian import CommutatorGenerator, LindbladGenerator

__all__ = [
    "Trajectory", "rk4_evolve", "von_neumann_entropy", "make_generator",
    "exact_closed_trajectory", "vacuum_subtracted_fields", "string_peak_time",
    "string_metric", "trajectory_relaxation_time", "StringRunResult",
    "run_string_pair", "phase_diagram",
]


@dataclass
class Trajectory:
    """Uniform-grid record of a single evolution."""

    times: np.ndarray
    fields: np.ndarray            # (T, n_links)
    entropy: np.ndarray
    trace_residual: np.ndarray
    herm_residual: np.ndarray
    dt: float
    snapshots: dict = field(default_factory=dict, repr=False)

def von_neumann_entropy(rho: np.ndarray) -> float:
    """-sum p log p (natural log) over the eigenvalues of the Hermitized
    input, clamped to [0, 1]; 0 log 0 = 0."""
    herm = 0.5 * (rho + rho.conj().T)
    p = eigh(herm, eigvals_only=True)
    if p.min() < -1e-8:
        raise ValueError(f"matrix is not a density matrix (eigenvalue {p.min():g})")
    p = np.clip(p.real, 0.0, 1.0)
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


def make_generator(h, basis, params, env: EnvCorrelator = None):
    """Lindblad generator for the given environment, or the bare commutator
    generator when env is None / D0 = 0."""
    if env is None or env.D0 == 0.0:
        return CommutatorGenerator(h)
    o_diags = lattice.charge_diagonals(basis, params)
    corr = correlator_matrix(env, basis.n_fermion_sites)
    return LindbladGenerator(h, o_diags, corr, params.lattice_spacing, env.beta)


def rk4_evolve(rho0, generator, t_final, dt, flux_cols=None,
               snapshot_stride=50, entropy_stride=1,
               trace_drift_tol=1e-6) -> Trajectory:
    """Classic RK4 with per-step re-Hermitization and observable sampling.
    Aborts if the trace drifts beyond trace_drift_tol (step size too large)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final < dt:
        raise ValueError("t_final must be at least one step")
    n_steps = int(round(t_final / dt))
    rho = np.array(rho0, dtype=complex)
    d = rho.shape[0]
    n_links = flux_cols.shape[1] if flux_cols is not None else 0

    times = np.arange(n_steps + 1) * dt
    fields = np.zeros((n_steps + 1, n_links))
    entropy = np.full(n_steps + 1, np.nan)
    trace_res = np.zeros(n_steps + 1)
    herm_res = np.zeros(n_steps + 1)
    snapshots = {}

    def sample(step):
        diag = np.real(np.diag(rho))
        if n_links:
            fields[step] = diag @ flux_cols
        trace_res[step] = abs(diag.sum() - 1.0)
        herm_res[step] = np.max(np.abs(rho - rho.conj().T))
        if entropy_stride and step % entropy_stride == 0:
            entropy[step] = von_neumann_entropy(rho)
        if snapshot_stride and step % snapshot_stride == 0:
            snapshots[step] = rho.copy()

    sample(0)
    for step in range(1, n_steps + 1):
        k1 = generator.apply(rho)
        k2 = generator.apply(rho + 0.5 * dt * k1)
        k3 = generator.apply(rho + 0.5 * dt * k2)
        k4 = generator.apply(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        sample(step)
        if trace_res[step] > trace_drift_tol:
            raise RuntimeError(
                f"trace drifted by {trace_res[step]:.3e} at t={step * dt:g}; "
                f"reduce dt (currently {dt:g})")
    snapshots[n_steps] = rho.copy()
    return Trajectory(times, fields, entropy, trace_res, herm_res, dt, snapshots)


def exact_closed_trajectory(h, rho0, times, flux_cols) -> Trajectory:
    """Closed-system link fields via the eigenbasis propagator
    rho(t) = e^{-iHt} rho e^{+iHt}; only diagonals of rho(t) are formed."""
    energies, u = eigh(np.asarray(h))
    rho_tilde = u.conj().T @ np.asarray(rho0, dtype=complex) @ u
    times = np.asarray(times, dtype=float)
    fields = np.zeros((len(times), flux_cols.shape[1]))
    for it, t in enumerate(times):
        phased = u * np.exp(-1j * energies * t)[None, :]
        diag = np.einsum("ib,ib->i", phased @ rho_tilde, phased.conj()).real
        fields[it] = diag @ flux_cols
    dt = times[1] - times[0] if len(times) > 1 else 0.0
    zeros = np.zeros(len(times))
    return Trajectory(times, fields, zeros.copy(), zeros.copy(), zeros.copy(), dt)


def vacuum_subtracted_fields(traj_string: Trajectory, traj_vacuum: Trajectory) -> np.ndarray:
    """Pointwise <E_n>(string) - <E_n>(vacuum) on the shared time grid."""
    if traj_string.fields.shape != traj_vacuum.fields.shape:
        raise ValueError("trajectories do not share a time grid")
    if not np.allclose(traj_string.times, traj_vacuum.times):
        raise ValueError("trajectories do not share a time grid")
    return traj_string.fields - traj_vacuum.fields


def string_peak_time(times, fields, t_max=6.0):
    """t*(x): first time in [0, t_max] at which |<E(x, t)>| is maximal,
    per link."""
    times = np.asarray(times)
    if t_max > times[-1] + 1e-12:
        raise ValueError(f"t_max={t_max:g} outside the trajectory range")
    window = times <= t_max + 1e-12
    sub = np.abs(np.asarray(fields)[window])
    return times[window][np.argmax(sub, axis=0)]


def string_metric(times, fields, t1=3.0, t2=4.0, links=(4, 5, 6)) -> float:
    """Ebar: the central-link electric field averaged over links and over the
    window [t1, t2] (trapezoidal rule on the sample grid)."""
    times = np.asarray(times)
    window = (times >= t1 - 1e-12) & (times <= t2 + 1e-12)
    if window.sum() < 2:
        raise ValueError("time window contains fewer than two samples")
    tw = times[window]
    summed = np.asarray(fields)[window][:, list(links)].sum(axis=1)
    integral = np.trapezoid(summed, tw)
    return float(integral / (len(links) * (tw[-1] - tw[0])))


def trajectory_relaxation_time(times, values, steady_value) -> float:
    """Largest sampled t with |<O>(t) - <O>_inf| >= e^{-1} |<O>(0) - <O>_inf|
    for this trajectory; 0 for a constant observable."""
    values = np.asarray(values, dtype=float)
    dev = np.abs(values - steady_value)
    if dev[0] < 1e-15:
        return 0.0
    hits = np.flatnonzero(dev >= dev[0] / np.e)
    return float(np.asarray(times)[hits[-1]]) if len(hits) else 0.0


@dataclass
class StringRunResult:
    times: np.ndarray
    fields_string: np.ndarray
    fields_vacuum: np.ndarray
    subtracted: np.ndarray
    traj_string: Trajectory
    traj_vacuum: Trajectory


def run_string_pair(params, env, left=None, right=None, t_final=6.0, dt=0.01,
                    method="rk4", entropy_stride=0, snapshot_stride=0) -> StringRunResult:
    """Evolve a string initial state and the bare vacuum under the same
    generator and return both trajectories plus the subtraction.  The string
    defaults to the three central links."""
    basis = lattice.enumerate_basis(params)
    n_f = basis.n_fermion_sites
    if left is None or right is None:
        # three-link string as centred as the staggering allows
        centre = (n_f - 2) // 2
        left = centre - 1 if (centre - 1) % 2 == 0 else centre
        right = left + 3
    h = lattice.build_hamiltonian(basis, params)
    flux_cols = lattice.flux_table(basis).astype(float)
    rho_string = lattice.prepare_state(basis, "string", left=left, right=right)
    rho_vacuum = lattice.prepare_state(basis, "bare_vacuum")

    closed = env is None or env.D0 == 0.0
    if method == "eig" and closed:
        times = np.arange(int(round(t_final / dt)) + 1) * dt
        traj_s = exact_closed_trajectory(h, rho_string, times, flux_cols)
        traj_v = exact_closed_trajectory(h, rho_vacuum, times, flux_cols)
    else:
        gen = make_generator(h, basis, params, env)
        traj_s = rk4_evolve(rho_string, gen, t_final, dt, flux_cols,
                            entropy_stride=entropy_stride, snapshot_stride=snapshot_stride)
        traj_v = rk4_evolve(rho_vacuum, gen, t_final, dt, flux_cols,
                            entropy_stride=entropy_stride, snapshot_stride=snapshot_stride)
    sub = vacuum_subtracted_fields(traj_s, traj_v)
    return StringRunResult(traj_s.times, traj_s.fields, traj_v.fields, sub,
                           traj_s, traj_v)


def _phase_point(args):
    m, e, base, env, mode, t1, t2, dt, vacuum_method = args
    params = lattice.ModelParams(n_sites=base.n_sites, lattice_spacing=base.lattice_spacing,
                                 mass=m, coupling=e, flux_max=base.flux_max)
    point_env = None if mode == "vacuum" else env
    method = vacuum_method if mode == "vacuum" else "rk4"
    run = run_string_pair(params, point_env, t_final=t2, dt=dt, method=method)
    links = _central_links(params.n_fermion_sites)
    ebar = string_metric(run.times, run.subtracted, t1=t1, t2=t2, links=links)
    return {"m": m, "e": e, "mode": mode, "Ebar": ebar}


def _central_links(n_f):
    mid = n_f // 2
    return (mid - 2, mid - 1, mid)


def phase_diagram(m_values, e_values, mode, base_params, env=None,
                  t1=3.0, t2=4.0, dt=0.01, vacuum_method="eig", n_jobs=1):
    """Ebar over an (m, e) grid from vacuum-subtracted central-string runs.
    Per-point failures are recorded and the sweep continues."""
    if mode not in ("vacuum", "medium"):
        raise ValueError(f"mode must be vacuum or medium, got {mode!r}")
    if mode == "medium" and env is None:
        raise ValueError("medium mode needs an environment correlator")
    jobs = [(m, e, base_params, env, mode, t1, t2, dt, vacuum_method)
            for m in m_values for e in e_values]
    results = []
    if n_jobs > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_phase_point, j) for j in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # per-point failure: record, continue
                    results.append({"m": job[0], "e": job[1], "mode": mode,
                                    "Ebar": np.nan, "error": str(exc)})
    else:
        for job in jobs:
            try:
                results.append(_phase_point(job))
            except Exception as exc:
                results.append({"m": job[0], "e": job[1], "mode": mode,
                                "Ebar": np.nan, "error": str(exc)})
    return results
