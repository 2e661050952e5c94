"""Lindblad generator as a superoperator: construction, spectra, CP sectors.

Vectorization convention: column stacking, vec(rho)[i + d*j] = rho[i, j], so
vec(A rho B) = (B^T kron A) vec(rho).  The dense superoperator is assembled
from the literal double sum over site pairs; the matrix-free application uses
an exact algebraic rewrite (all O(n) are diagonal, so every jump-sandwich
term collapses to a Hadamard product with W = V^T D V) and the two routes are
cross-checked in the tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eig, eigh

__all__ = [
    "vec", "unvec", "LiouvillianMatrix", "build_superoperator",
    "apply_liouvillian", "LindbladGenerator", "SpectrumResult",
    "full_spectrum", "leading_spectrum", "gaps", "steady_states",
    "mode_coefficients", "CPSectorReport", "cp_sector_analysis",
    "relaxation_rate_estimate", "rate_contributions",
    "eigenstate_dissipation_rate",
]

DEFAULT_DENSE_CAP = 5000


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")

def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass
class LiouvillianMatrix:
    """d^2 x d^2 generator under the column-stacking convention."""

    matrix: sp.csr_matrix
    dim: int
    convention: str = "column-stacking"
    refs: dict = field(default_factory=dict, repr=False)

    @property
    def superdim(self) -> int:
        return self.dim * self.dim

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)


def build_superoperator(h, l_list, corr_matrix, a) -> LiouvillianMatrix:
    """Literal assembly of
    L = -i(I kron H - H^T kron I)
        + a^2 sum_{n1,n2} D(n1-n2) [ conj(L1) kron L2
              - 1/2 I kron (L1^dag L2) - 1/2 (L1^dag L2)^T kron I ].
    """
    h = np.asarray(h)
    d = h.shape[0]
    n_f = len(l_list)
    corr = np.asarray(corr_matrix)
    if corr.shape != (n_f, n_f):
        raise ValueError(f"correlator matrix must be {n_f}x{n_f}, got {corr.shape}")
    for l_op in l_list:
        if l_op.shape != (d, d):
            raise ValueError("Lindblad operator dimension mismatch with H")
    eye = sp.identity(d, dtype=complex, format="csr")
    h_s = sp.csr_matrix(h.astype(complex))
    total = -1j * (sp.kron(eye, h_s, format="csr") - sp.kron(h_s.T, eye, format="csr"))
    l_sparse = [sp.csr_matrix(np.asarray(l, dtype=complex)) for l in l_list]
    for n1 in range(n_f):
        l1 = l_sparse[n1]
        l1_dag = l1.conjugate().T.tocsr()
        for n2 in range(n_f):
            w = corr[n1, n2]
            if w == 0.0:
                continue
            l2 = l_sparse[n2]
            anti = (l1_dag @ l2).tocsr()
            term = sp.kron(l1.conjugate(), l2, format="csr")
            term = term - 0.5 * sp.kron(eye, anti, format="csr")
            term = term - 0.5 * sp.kron(anti.T, eye, format="csr")
            total = total + (a * a * w) * term
    refs = {"h": h, "l_list": list(l_list), "corr_matrix": corr, "a": a}
    return LiouvillianMatrix(total.tocsr(), d, refs=refs)


def _effective_jumps(l_list, corr_matrix, clip=1e-12):
    """Diagonalize the (PSD) correlator matrix and fold the eigenvectors into
    the site-resolved operators: sum_{n1,n2} D L2 . L1^dag = sum_k Lt_k . Lt_k^dag
    with Lt_k = sqrt(w_k) sum_n u_k(n) L(n)."""
    corr = np.asarray(corr_matrix, dtype=float)
    w, u = eigh(corr)
    scale = max(abs(w[0]), abs(w[-1]), 1.0)
    if w[0] < -1e-9 * scale:
        raise ValueError(f"correlator matrix is not positive semi-definite (min eig {w[0]:g})")
    stack = np.array(l_list)
    jumps = []
    for k in range(len(w)):
        if w[k] <= clip * scale:
            continue
        jumps.append(np.sqrt(w[k]) * np.tensordot(u[:, k], stack, axes=(0, 0)))
    return jumps


def apply_liouvillian(rho, h, l_list, corr_matrix, a):
    """Right-hand side of the master equation, matrix-free.  Generic in the
    jump operators (no diagonality assumed); agrees with build_superoperator
    applied to vec(rho)."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if np.asarray(h).shape != (d, d):
        raise ValueError("dimension mismatch between rho and H")
    out = -1j * (h @ rho - rho @ h)
    a2 = a * a
    for lt in _effective_jumps(l_list, corr_matrix):
        lt_dag = lt.conj().T
        anti = lt_dag @ lt
        out += a2 * (lt @ rho @ lt_dag - 0.5 * (anti @ rho + rho @ anti))
    return out


def _lmul(m_real, x):
    """m_real @ x for real m and complex x with two real GEMMs."""
    if not np.iscomplexobj(x):
        return m_real @ x
    return m_real @ np.ascontiguousarray(x.real) + 1j * (m_real @ np.ascontiguousarray(x.imag))


def _rmul(x, m_real):
    if not np.iscomplexobj(x):
        return x @ m_real
    return np.ascontiguousarray(x.real) @ m_real + 1j * (np.ascontiguousarray(x.imag) @ m_real)


class LindbladGenerator:
    """Matrix-free Lindblad generator for jump operators of the structured
    form L(n) = O(n) - (beta/4)[H, O(n)] with diagonal O(n).

    Precomputes W = V^T D V (V = stacked O diagonals) and the anticommutator
    kernel K = a^2 sum D(n1-n2) L1^dag L2; each application then costs ten
    matrix products regardless of N_f.
    """

    def __init__(self, h, o_diags, corr_matrix, a, beta):
        self.h = np.ascontiguousarray(np.real_if_close(np.asarray(h)), dtype=float)
        self.dim = self.h.shape[0]
        self.a = float(a)
        self.beta = float(beta)
        o_diags = np.asarray(o_diags, dtype=float)
        self.n_sites_f = o_diags.shape[0]
        corr = np.asarray(corr_matrix, dtype=float)
        self.corr_matrix = corr
        self.w_kernel = o_diags.T @ corr @ o_diags
        l_ops = [np.diag(o) - 0.25 * beta * (self.h @ np.diag(o) - np.diag(o) @ self.h)
                 for o in o_diags]
        self.k_kernel = np.zeros((self.dim, self.dim))
        for lt in _effective_jumps(l_ops, corr):
            self.k_kernel += (a * a) * (lt.T @ lt)
        self._l_ops = l_ops

    @property
    def lindblad_operators(self):
        return list(self._l_ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h, w, k = self.h, self.w_kernel, self.k_kernel
        a2 = self.a * self.a
        b4 = 0.25 * self.beta
        hr = _lmul(h, rho)
        rh = _rmul(rho, h)
        hrh = _rmul(hr, h)
        p = w * rho
        hp = _lmul(h, p)
        ph = _rmul(p, h)
        hph = _rmul(hp, h)
        sandwich = p + b4 * (w * rh + w * hr - ph - hp) \
            - b4 * b4 * (_lmul(h, w * rh) + _rmul(w * hr, h) - hph - w * hrh)
        return -1j * (hr - rh) + a2 * sandwich - 0.5 * (_lmul(k, rho) + _rmul(rho, k))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return vec(self.apply(unvec(v, self.dim)))


class CommutatorGenerator:
    """Closed-system generator d rho/dt = -i [H, rho]."""

    def __init__(self, h):
        self.h = np.ascontiguousarray(np.real_if_close(np.asarray(h)), dtype=float)
        self.dim = self.h.shape[0]

    def apply(self, rho):
        return -1j * (_lmul(self.h, rho) - _rmul(rho, self.h))

    def matvec(self, v):
        return vec(self.apply(unvec(v, self.dim)))


def _sort_order(w: np.ndarray) -> np.ndarray:
    """Descending Re, then ascending |Im|, then ascending Im."""
    return np.lexsort((w.imag, np.abs(w.imag), -w.real))


@dataclass
class SpectrumResult:
    """Sorted Liouvillian spectrum with (optionally) biorthonormal modes."""

    eigenvalues: np.ndarray
    dim: int
    traces: np.ndarray
    steady_indices: np.ndarray
    right: np.ndarray = None      # (d^2, d^2) columns, biorthonormalized
    left: np.ndarray = None
    steady_modes: list = field(default_factory=list)  # unit-trace right modes
    cp_labels: list = None
    convention: str = "column-stacking"

    @property
    def delta1(self) -> float:
        return abs(self.eigenvalues[1].real)

    @property
    def delta2(self) -> float:
        return abs(self.eigenvalues[2].real)

    def right_mode(self, j: int) -> np.ndarray:
        if self.right is None:
            raise ValueError("modes were not kept for this spectrum")
        return unvec(self.right[:, j], self.dim)

    def left_mode(self, j: int) -> np.ndarray:
        if self.left is None:
            raise ValueError("modes were not kept for this spectrum")
        return unvec(self.left[:, j], self.dim)


def _biorthonormalize(w, vl, vr, cluster_tol):
    """Scale left modes so <rho_L_i | rho_R_j> = delta_ij, solving a small
    linear system inside each (near-)degenerate eigenvalue cluster."""
    n = len(w)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop] - w[start]) <= cluster_tol:
            stop += 1
        block = slice(start, stop)
        m = vl[:, block].conj().T @ vr[:, block]
        try:
            coeff = np.linalg.solve(m, np.eye(stop - start, dtype=complex))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                f"defective eigenvalue cluster near {w[start]:g}; cannot "
                "biorthonormalize") from exc
        # vl_new^dag = coeff @ vl^dag  =>  vl_new = vl @ coeff^dag
        vl[:, block] = vl[:, block] @ coeff.conj().T
        start = stop
    return vl


def full_spectrum(liouv, cp=None, dense_cap=DEFAULT_DENSE_CAP,
                  keep_modes=True, steady_tol_rel=1e-8) -> SpectrumResult:
    """Complete eigendecomposition of the (non-Hermitian) generator.  Left
    modes come from the adjoint problem; modes are sorted (descending real
    part, ties by |Im| then Im) and biorthonormalized; each steady-state
    right mode is rescaled to unit trace."""
    if isinstance(liouv, LiouvillianMatrix):
        d = liouv.dim
        mat = liouv.toarray()
    else:
        mat = np.asarray(liouv)
        d = int(round(np.sqrt(mat.shape[0])))
    if mat.shape[0] > dense_cap:
        raise ValueError(
            f"superoperator dimension {mat.shape[0]} exceeds the dense-solver "
            f"cap {dense_cap}; use leading_spectrum")
    if keep_modes:
        w, vl, vr = eig(mat, left=True, right=True)
    else:
        w, vr = eig(mat, right=True)
        vl = None
    order = _sort_order(w)
    w, vr = w[order], vr[:, order]
    if vl is not None:
        vl = vl[:, order]

    scale = np.max(np.abs(w.real)) if np.max(np.abs(w.real)) > 0 else 1.0
    steady = np.flatnonzero(np.abs(w.real) < steady_tol_rel * scale)

    trace_idx = np.arange(d) * (d + 1)
    traces = vr[trace_idx, :].sum(axis=0)

    steady_modes = []
    for j in steady:
        mode = unvec(vr[:, j], d)
        tr = np.trace(mode)
        if abs(tr) > 1e-12:
            mode = mode / tr
        mode = 0.5 * (mode + mode.conj().T)
        steady_modes.append(mode)

    cp_labels = None
    if cp is not None:
        perm2 = _superoperator_permutation(cp, d)
        cp_labels = []
        for j in range(len(w)):
            v = vr[:, j]
            s = np.real(np.vdot(v, v[perm2]) / np.vdot(v, v))
            cp_labels.append("even" if s > 0.99 else "odd" if s < -0.99 else "mixed")

    if not keep_modes:
        return SpectrumResult(w, d, traces, steady, steady_modes=steady_modes,
                              cp_labels=cp_labels)

    cluster_tol = 1e-8 * max(np.max(np.abs(w)), 1.0)
    vl = _biorthonormalize(w, vl, vr, cluster_tol)
    for j in steady:
        tr = traces[j]
        if abs(tr) > 1e-12:
            vr[:, j] = vr[:, j] / tr
            vl[:, j] = vl[:, j] * np.conj(tr)
    return SpectrumResult(w, d, traces, steady, right=vr, left=vl,
                          steady_modes=steady_modes, cp_labels=cp_labels)


def gaps(result: SpectrumResult):
    """(Delta_1, Delta_2) = |Re lambda_1|, |Re lambda_2| in the sorted order."""
    if len(result.eigenvalues) < 3:
        raise ValueError("spectrum too small to define two gaps")
    return result.delta1, result.delta2


def steady_states(result: SpectrumResult, tol=None, cp=None):
    """Zero modes as unit-trace Hermitian density matrices.  With two steady
    states and a CP operator given, the null space is split into the
    even-sector and odd-sector states (each block-confined)."""
    w = result.eigenvalues
    scale = np.max(np.abs(w.real)) if np.max(np.abs(w.real)) > 0 else 1.0
    if tol is None:
        tol = 1e-8 * scale
    idx = np.flatnonzero(np.abs(w.real) < tol)
    if len(idx) == 0:
        raise RuntimeError("no steady state found; eigensolver failure")
    raw = []
    for j in idx:
        pos = int(np.flatnonzero(result.steady_indices == j)[0]) \
            if j in result.steady_indices else None
        if pos is not None:
            raw.append(result.steady_modes[pos])
        else:
            raw.append(0.5 * (result.right_mode(j) + result.right_mode(j).conj().T))
    if len(raw) == 2 and cp is not None:
        d = result.dim
        p_even = 0.5 * (np.eye(d) + cp)
        p_odd = 0.5 * (np.eye(d) - cp)
        t = np.array([[np.trace(p_even @ m).real for m in raw],
                      [np.trace(p_odd @ m).real for m in raw]])
        out = []
        for row, other in ((0, 1), (1, 0)):
            coeff = np.linalg.solve(t[[row, other]], np.array([1.0, 0.0]))
            mode = coeff[0] * raw[0] + coeff[1] * raw[1]
            out.append(0.5 * (mode + mode.conj().T))
        return out
    out = []
    for mode in raw:
        tr = np.trace(mode)
        if abs(tr) > 1e-12:
            mode = mode / tr.real
        out.append(0.5 * (mode + mode.conj().T))
    return out


def mode_coefficients(result: SpectrumResult, rho_init: np.ndarray) -> np.ndarray:
    """c_j = <rho_L_j | rho_init> / <rho_L_j | rho_R_j> with <A|B> = tr(A^dag B)."""
    if result.left is None:
        raise ValueError("mode_coefficients requires a spectrum with modes kept")
    v0 = vec(np.asarray(rho_init, dtype=complex))
    overlaps = result.left.conj().T @ v0
    norms = np.einsum("ij,ij->j", result.left.conj(), result.right)
    return overlaps / norms


def _superoperator_permutation(cp: np.ndarray, d: int) -> np.ndarray:
    """Index permutation of vec space implementing rho -> CP rho CP^dag."""
    perm = np.argmax(cp, axis=0)  # CP e_i = e_perm[i]
    i_idx, j_idx = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    # column stacking: position i + d*j holds rho[i, j]
    src = (i_idx + d * j_idx).reshape(-1, order="F")
    dst = (perm[i_idx] + d * perm[j_idx]).reshape(-1, order="F")
    out = np.empty(d * d, dtype=np.int64)
    out[dst] = src
    return out


@dataclass
class CPSectorReport:
    """Two decompositions of operator space under the CP symmetry.

    The support split classifies operators by where they live relative to the
    CP eigenspaces of the Hilbert space: even-sector densities (ee block),
    odd-sector densities (oo) and the inter-sector coherences.  Its
    cross-coupling norm is the operational statement "CP sectors evolve
    independently" and is the headline `cross_norm`.  The conjugation-parity
    split uses the +-1 eigenspaces of C(rho) = CP rho CP^dag; its dimensions
    add up to d^2 and its coupling is reported as `parity_cross_norm`.
    """

    dim: int
    state_dims: tuple          # (d_even, d_odd) of the Hilbert space
    sector_dims: tuple         # (m_even, m_odd) of the +-1 parity split
    cross_norm: float          # max |entry| coupling ee/oo/coherence blocks
    parity_cross_norm: float   # max |entry| coupling the +-1 parity blocks
    sector_spectra: dict = None  # {"even","odd","coherence"} when decoupled


def _cp_state_basis(cp):
    """Orthonormal CP eigenbasis of the Hilbert space from the permutation:
    columns ordered [even ..., odd ...]."""
    cp = np.asarray(cp)
    d = cp.shape[0]
    perm = np.argmax(cp, axis=0)
    even_cols, odd_cols = [], []
    s = 1.0 / np.sqrt(2.0)
    for i in range(d):
        j = perm[i]
        if j == i:
            col = np.zeros(d)
            col[i] = 1.0
            even_cols.append(col)
        elif i < j:
            col = np.zeros(d)
            col[i] = s
            col[j] = s
            even_cols.append(col)
            col = np.zeros(d)
            col[i] = s
            col[j] = -s
            odd_cols.append(col)
    v = np.column_stack(even_cols + odd_cols)
    return v, len(even_cols), len(odd_cols)


def cp_sector_analysis(liouv, cp, spectra_threshold=1e-10) -> CPSectorReport:
    """Block analysis of the generator under the CP symmetry (see
    CPSectorReport).  Sector spectra come from the support split whenever its
    cross blocks vanish (the even/odd blocks are then the per-sector
    Liouvillians)."""
    if isinstance(liouv, LiouvillianMatrix):
        d = liouv.dim
        mat = liouv.matrix
    else:
        mat = sp.csr_matrix(liouv)
        d = int(round(np.sqrt(mat.shape[0])))
    d2 = d * d

    # conjugation-parity split from the vec-space permutation
    perm2 = _superoperator_permutation(np.asarray(cp), d)
    fixed = perm2 == np.arange(d2)
    m_even = int(fixed.sum()) + int((~fixed).sum()) // 2
    m_odd = d2 - m_even
    sym = mat[perm2][:, perm2]          # C L C^-1 in the vec basis
    parity_cross = 0.5 * abs(mat - sym)
    parity_cross_norm = parity_cross.max() if parity_cross.nnz else 0.0

    # support split in the CP-adapted state basis
    v, d_even, d_odd = _cp_state_basis(cp)
    big_v = np.kron(v, v)               # vec(V^T rho V) = (V kron V)^T vec(rho)
    rotated = big_v.T @ (mat @ big_v)
    labels = np.empty(d2, dtype="U9")
    is_odd = np.arange(d) >= d_even
    for j in range(d):
        for i in range(d):
            pos = i + d * j
            if not is_odd[i] and not is_odd[j]:
                labels[pos] = "even"
            elif is_odd[i] and is_odd[j]:
                labels[pos] = "odd"
            else:
                labels[pos] = "coherence"
    cross_norm = 0.0
    for tag_r in ("even", "odd", "coherence"):
        for tag_c in ("even", "odd", "coherence"):
            if tag_r == tag_c:
                continue
            block = rotated[np.ix_(labels == tag_r, labels == tag_c)]
            if block.size:
                cross_norm = max(cross_norm, float(np.max(np.abs(block))))

    spectra = None
    if cross_norm <= spectra_threshold:
        spectra = {}
        for tag in ("even", "odd", "coherence"):
            sel = labels == tag
            if not sel.any():
                spectra[tag] = np.array([], dtype=complex)
                continue
            w = np.linalg.eigvals(rotated[np.ix_(sel, sel)])
            spectra[tag] = w[_sort_order(w)]
    return CPSectorReport(d, (d_even, d_odd), (m_even, m_odd),
                          float(cross_norm), float(parity_cross_norm), spectra)


def _fourier_jump_operators(l_list):
    """L(k) = sum_x L(x) exp(-i 2 pi k x / N_f)."""
    n_f = len(l_list)
    stack = np.asarray(l_list, dtype=complex)
    k = np.arange(n_f)
    phases = np.exp(-2j * np.pi * np.outer(k, k) / n_f)  # phases[k, x]
    return np.tensordot(phases, stack, axes=(1, 0))


def rate_contributions(l_list, d_k, a):
    """Per-momentum mean-diagonal contributions to the relaxation-rate
    estimate: entry k is the mean diagonal of a^2/(2 N_f) D(k) L^dag(k) L(k).
    Only the k != 0 entries are monotone in the correlation length; the k=0
    entry grows with it."""
    n_f = len(l_list)
    d_k = np.asarray(d_k)
    out = np.empty(n_f)
    for k, l_k in enumerate(_fourier_jump_operators(l_list)):
        out[k] = d_k[k].real * np.mean(np.einsum("ij,ij->j", l_k.conj(), l_k).real)
    return out * a * a / (2.0 * n_f)


def relaxation_rate_estimate(l_list, d_k, a):
    """Gamma = a^2/(2 N_f) sum_k D(k) L^dag(k) L(k) and its mean diagonal."""
    n_f = len(l_list)
    d_k = np.asarray(d_k)
    l_k = _fourier_jump_operators(l_list)
    gamma = np.zeros_like(l_k[0])
    for k in range(n_f):
        gamma += d_k[k].real * (l_k[k].conj().T @ l_k[k])
    gamma *= a * a / (2.0 * n_f)
    gamma = 0.5 * (gamma + gamma.conj().T)
    return gamma, float(np.mean(np.diag(gamma).real))


def eigenstate_dissipation_rate(n, h, l_list, d_k, a):
    """Gamma_n = a^2/N_f sum_k D(k) sum_{m != n} |<E_m|L(k)|E_n>|^2 in the
    eigenbasis of H.  Warns when H has (near-)degenerate levels, where the
    estimate is ambiguous."""
    energies, u = eigh(np.asarray(h))
    diffs = np.diff(np.sort(energies))
    scale = max(1.0, np.max(np.abs(energies)))
    if len(diffs) and np.min(diffs) < 1e-10 * scale:
        warnings.warn("H has (near-)degenerate eigenvalues; the per-eigenstate "
                      "dissipation rate assumes a non-degenerate spectrum")
    n_f = len(l_list)
    d_k = np.asarray(d_k)
    rate = 0.0
    for k, l_k in enumerate(_fourier_jump_operators(l_list)):
        m_k = u.conj().T @ l_k @ u
        col = np.abs(m_k[:, n]) ** 2
        rate += d_k[k].real * (col.sum() - col[n])
    return a * a / n_f * rate


def _estimate_spectral_radius(generator, rng, n_iter=25):
    v = rng.standard_normal(generator.dim**2) + 1j * rng.standard_normal(generator.dim**2)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(n_iter):
        w = generator.matvec(v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


def leading_spectrum(generator, k, tol=1e-9, n_steps=24, arpack_tol=1e-12,
                     maxiter=100000, extra=4):
    """The k eigenvalues of a matrix-free generator nearest Re = 0.

    Arnoldi iteration runs on a short-time RK4 propagator of the generator
    (a rational function of it, hence with identical eigenvectors), whose
    largest-magnitude eigenvalues are exactly the slowest-decaying modes.
    Each eigenvalue is then evaluated as a Rayleigh quotient on the generator
    itself, so integrator step error cannot bias the result.
    """
    d2 = generator.dim**2
    if k > d2:
        raise ValueError(f"requested {k} eigenvalues from a {d2}-dimensional generator")
    rng = np.random.default_rng(7)
    radius = _estimate_spectral_radius(generator, rng)
    h_step = 1.5 / radius

    def propagate(v):
        rho = unvec(v.astype(complex), generator.dim)
        for _ in range(n_steps):
            k1 = generator.apply(rho)
            k2 = generator.apply(rho + 0.5 * h_step * k1)
            k3 = generator.apply(rho + 0.5 * h_step * k2)
            k4 = generator.apply(rho + h_step * k3)
            rho = rho + (h_step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return vec(rho)

    n_request = min(k + extra, d2 - 2)
    if n_request < k:
        raise ValueError("generator too small for the requested eigenvalue count")
    op = spla.LinearOperator((d2, d2), matvec=propagate, dtype=complex)
    v0 = rng.standard_normal(d2) + 1j * rng.standard_normal(d2)
    ncv = min(d2, max(2 * n_request + 12, 40))
    try:
        _, vecs = spla.eigs(op, k=n_request, which="LM", v0=v0, ncv=ncv,
                            maxiter=maxiter, tol=arpack_tol)
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError("Arnoldi iteration did not converge within the "
                           f"iteration cap ({maxiter})") from exc
    lams = np.empty(n_request, dtype=complex)
    for j in range(n_request):
        v = vecs[:, j] / np.linalg.norm(vecs[:, j])
        w = generator.matvec(v)
        lams[j] = np.vdot(v, w)
        resid = np.linalg.norm(w - lams[j] * v)
        if resid > max(tol * radius, 1e-8):
            raise RuntimeError(f"eigenpair {j} residual {resid:g} above tolerance")
    order = _sort_order(lams)
    return lams[order][:k], vecs[:, order][:, :k]
