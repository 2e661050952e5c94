"""Matrix-level emulation of the dilated Lindblad simulation algorithm.

One cycle applies U_H = exp(-i H dt) to the system, couples it to a fresh
ancilla register through U_J = exp(-i J sqrt(dt)) where J holds the scaled
jump operators in its first block row/column, and discards the ancillas.
Repeating N_cyl cycles approximates the Lindblad evolution with per-cycle
error O(dt^1.5).  Both unitaries can optionally be replaced by first-order
Trotter products over their Pauli decompositions.

Dimensions are padded to powers of two (system d -> 2^q_sys, ancilla
m+1 -> 2^q_anc) so Pauli strings apply; padded rows/columns are zero and the
exponentials act as the identity there.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.linalg import expm

__all__ = [
    "DilationSetup", "make_dilation_setup", "build_J", "pad_matrix",
    "padded_dim", "dilation_cycle", "dilated_evolve", "PauliTerm",
    "pauli_decompose", "pauli_matrix", "trotter_unitary",
    "trotter_error_bound", "compare_closed_trotter", "spectral_norm",
]

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_SYMBOLS = "IXYZ"


def _next_pow2(n: int) -> int:
    q = 0
    while (1 << q) < n:
        q += 1
    return q


def padded_dim(n: int) -> int:
    """Smallest power of two >= n."""
    return 1 << _next_pow2(n)


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def pad_matrix(m: np.ndarray, dim: int) -> np.ndarray:
    """Embed m in the top-left block of a dim x dim zero matrix."""
    d = m.shape[0]
    if dim < d:
        raise ValueError("target dimension smaller than the matrix")
    out = np.zeros((dim, dim), dtype=complex)
    out[:d, :d] = m
    return out


def build_J(l_scaled_list) -> np.ndarray:
    """Hermitian block matrix with L_k^dag along the first block row and L_k
    along the first block column, zero elsewhere."""
    m = len(l_scaled_list)
    d = l_scaled_list[0].shape[0]
    j = np.zeros(((m + 1) * d, (m + 1) * d), dtype=complex)
    for k, l_op in enumerate(l_scaled_list, start=1):
        j[k * d:(k + 1) * d, 0:d] = l_op
        j[0:d, k * d:(k + 1) * d] = l_op.conj().T
    return j


@dataclass
class DilationSetup:
    """Padded workspace for the dilated evolution of one model."""

    dim: int                  # physical system dimension d
    n_jumps: int              # m
    h_sys: np.ndarray         # d x d
    l_scaled: list            # m operators, a*sqrt(D0)*L(n)
    j_matrix: np.ndarray      # (m+1)d x (m+1)d
    q_sys: int
    q_anc: int

    @property
    def sys_dim(self):
        return 1 << self.q_sys

    @property
    def anc_dim(self):
        return 1 << self.q_anc

    @property
    def h_padded(self):
        return pad_matrix(self.h_sys, self.sys_dim)

    @property
    def j_padded(self):
        """J embedded in (anc_dim * sys_dim), ancilla block index major."""
        a_dim, s_dim = self.anc_dim, self.sys_dim
        d = self.dim
        j = np.zeros((a_dim * s_dim, a_dim * s_dim), dtype=complex)
        for k, l_op in enumerate(self.l_scaled, start=1):
            j[k * s_dim:k * s_dim + d, 0:d] = l_op
            j[0:d, k * s_dim:k * s_dim + d] = l_op.conj().T
        return j


def make_dilation_setup(h, l_list, d0, a) -> DilationSetup:
    """Scale the site-resolved jump operators by a*sqrt(D0) (delta
    correlator) so a single J block reproduces the master-equation
    dissipator."""
    l_scaled = [a * np.sqrt(d0) * np.asarray(l, dtype=complex) for l in l_list]
    d = np.asarray(h).shape[0]
    m = len(l_scaled)
    return DilationSetup(d, m, np.asarray(h, dtype=complex), l_scaled,
                         build_J(l_scaled), _next_pow2(d), _next_pow2(m + 1))


def _cycle(rho_pad, u_h, u_j, a_dim, s_dim):
    rho_pad = u_h @ rho_pad @ u_h.conj().T
    joint = np.zeros((a_dim * s_dim, a_dim * s_dim), dtype=complex)
    joint[:s_dim, :s_dim] = rho_pad          # ancilla reset to |0><0|
    joint = u_j @ joint @ u_j.conj().T
    return np.einsum("asat->st", joint.reshape(a_dim, s_dim, a_dim, s_dim))


def dilation_cycle(rho, h, j, delta_t) -> np.ndarray:
    """One exact cycle: ancilla in |0>, U_H on the system, U_J on the joint
    space, trace out the ancilla.  rho is d x d (unpadded); J is (m+1)d."""
    if delta_t <= 0:
        raise ValueError("delta_t must be positive")
    d = rho.shape[0]
    n_blocks = j.shape[0] // d
    u_h = expm(-1j * np.asarray(h) * delta_t)
    u_j = expm(-1j * np.asarray(j) * np.sqrt(delta_t))
    rho1 = u_h @ np.asarray(rho, dtype=complex) @ u_h.conj().T
    joint = np.zeros_like(j, dtype=complex)
    joint[:d, :d] = rho1
    joint = u_j @ joint @ u_j.conj().T
    return np.einsum("asat->st", joint.reshape(n_blocks, d, n_blocks, d))


def dilated_evolve(rho0, setup: DilationSetup, t, n_cyl, r_h=None, r_j=None,
                   observable=None):
    """N_cyl dilation cycles to time t.  Finite r_h / r_j replace the exact
    exponential with a first-order Trotter product of r sub-steps over the
    padded operator's Pauli decomposition; None keeps the exact exponential.

    Returns (times, states, obs) with states the padded system density
    matrices at cycle boundaries.
    """
    if n_cyl < 1:
        raise ValueError("need at least one cycle")
    delta_t = t / n_cyl
    s_dim, a_dim = setup.sys_dim, setup.anc_dim
    h_pad, j_pad = setup.h_padded, setup.j_padded
    if r_h is None:
        u_h = expm(-1j * h_pad * delta_t)
    else:
        u_h = trotter_unitary(pauli_decompose(h_pad), delta_t, r_h)
    if r_j is None:
        u_j = expm(-1j * j_pad * np.sqrt(delta_t))
    else:
        u_j = trotter_unitary(pauli_decompose(j_pad), np.sqrt(delta_t), r_j)

    rho = pad_matrix(np.asarray(rho0, dtype=complex), s_dim)
    times = [0.0]
    states = [rho.copy()]
    for cycle in range(1, n_cyl + 1):
        rho = _cycle(rho, u_h, u_j, a_dim, s_dim)
        times.append(cycle * delta_t)
        states.append(rho.copy())
    times = np.array(times)
    if observable is None:
        return times, states, None
    obs_pad = pad_matrix(np.asarray(observable, dtype=complex), s_dim)
    obs = np.array([np.trace(obs_pad @ s).real for s in states])
    return times, states, obs


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: str


def pauli_matrix(string: str) -> np.ndarray:
    out = _PAULIS[string[0]]
    for ch in string[1:]:
        out = np.kron(out, _PAULIS[ch])
    return out


def pauli_decompose(h: np.ndarray, drop=1e-14) -> list:
    """All 4^q coefficients a_j = tr(P_j H) / 2^q of a Hermitian matrix of
    dimension 2^q, in lexicographic string order; terms below `drop` are
    discarded."""
    h = np.asarray(h)
    dim = h.shape[0]
    q = _next_pow2(dim)
    if (1 << q) != dim:
        raise ValueError(f"dimension {dim} is not a power of two; pad first")
    if np.max(np.abs(h - h.conj().T)) > 1e-12:
        raise ValueError("Pauli decomposition expects a Hermitian matrix")
    terms = []
    for symbols in product(_SYMBOLS, repeat=q):
        p = pauli_matrix("".join(symbols))
        a_j = np.trace(p @ h).real / dim
        if abs(a_j) >= drop:
            terms.append(PauliTerm(float(a_j), "".join(symbols)))
    return terms


def trotter_unitary(terms, t, r) -> np.ndarray:
    """First-order product [prod_j exp(-i a_j P_j t/r)]^r in fixed term
    order.  Each factor is cos(a t/r) I - i sin(a t/r) P since P^2 = I."""
    if r < 1:
        raise ValueError("r must be at least 1")
    q = len(terms[0].string)
    dim = 1 << q
    u_step = np.eye(dim, dtype=complex)
    for term in terms:
        angle = term.coefficient * t / r
        p = pauli_matrix(term.string)
        factor = np.cos(angle) * np.eye(dim) - 1j * np.sin(angle) * p
        u_step = u_step @ factor
    return np.linalg.matrix_power(u_step, r)


def _strings_anticommute(s1: str, s2: str) -> bool:
    clashes = sum(1 for c1, c2 in zip(s1, s2)
                  if c1 != "I" and c2 != "I" and c1 != c2)
    return clashes % 2 == 1


def trotter_error_bound(terms, t, r) -> float:
    """(1/2) sum_{j>k} ||[H_j, H_k]|| t^2 / r with spectral norms.  For Pauli
    strings the commutator is 0 (commuting pair) or has norm 2|a_j a_k|
    (anticommuting pair), so the sum is analytic."""
    total = 0.0
    for jj in range(len(terms)):
        for kk in range(jj):
            if _strings_anticommute(terms[jj].string, terms[kk].string):
                total += 2.0 * abs(terms[jj].coefficient * terms[kk].coefficient)
    return 0.5 * total * t * t / r


def compare_closed_trotter(rho0, h, t_grid, r_set, observable):
    """Closed-system observable curves for each Trotter step count r against
    the exact exponential; returns {r: curve} plus the exact curve and
    per-time absolute differences."""
    h_pad = pad_matrix(np.asarray(h, dtype=complex), 1 << _next_pow2(h.shape[0]))
    dim = h_pad.shape[0]
    rho_pad = pad_matrix(np.asarray(rho0, dtype=complex), dim)
    obs_pad = pad_matrix(np.asarray(observable, dtype=complex), dim)
    terms = pauli_decompose(h_pad)

    def curve(u_of_t):
        vals = []
        for t in t_grid:
            u = u_of_t(t)
            vals.append(np.trace(obs_pad @ u @ rho_pad @ u.conj().T).real)
        return np.array(vals)

    exact = curve(lambda t: expm(-1j * h_pad * t))
    curves, errors = {}, {}
    for r in r_set:
        curves[r] = curve(lambda t: trotter_unitary(terms, t, r))
        errors[r] = np.abs(curves[r] - exact)
    return exact, curves, errors
