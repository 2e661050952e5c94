"""Physical Hilbert space and operators of the truncated lattice Schwinger model.

Staggered fermions in the Jordan-Wigner picture: N_f = 2N fermion sites,
electrons live on even sites, positrons on odd sites.  The occupation bit is
b(n) = (sigma_z(n)+1)/2, so the bare vacuum (no particles, no flux) is b=0 on
even and b=1 on odd sites.

N_f-1 gauge links; link n joins sites n and n+1 and carries an integer flux
l_n.  With zero flux outside the chain (open boundaries), Gauss's law fixes
the fluxes recursively,

    l_n = l_{n-1} - b(n) + [n odd],        l_{-1} = 0,

and zero net charge forces the accumulated flux back to zero past the last
site.  Flux magnitudes are capped at flux_max = 1 on every link; hopping
matrix elements that would leave the capped space are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "Configuration",
    "PhysicalBasis",
    "enumerate_basis",
    "enumerate_zero_charge_basis",
    "build_hamiltonian",
    "build_free_fermion_hamiltonian",
    "free_fermion_basis",
    "build_charge_operators",
    "charge_diagonals",
    "build_lindblad_operators",
    "total_charge_operator",
    "cp_operator",
    "cp_permutation",
    "electric_field_observables",
    "flux_table",
    "prepare_state",
    "vacuum_occupations",
    "string_occupations",
]


@dataclass(frozen=True)
class ModelParams:
    """Lattice and physics constants (all quoted in lattice units)."""

    n_sites: int
    lattice_spacing: float = 1.0
    mass: float = 0.5
    coupling: float = 0.8
    flux_max: int = 1

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if self.lattice_spacing <= 0:
            raise ValueError("lattice_spacing must be positive")
        if self.mass < 0:
            raise ValueError("mass must be non-negative")
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")
        if self.flux_max != 1:
            raise ValueError("only flux_max = 1 is supported")

    @property
    def n_fermion_sites(self) -> int:
        return 2 * self.n_sites

    @property
    def n_links(self) -> int:
        return self.n_fermion_sites - 1


@dataclass(frozen=True)
class Configuration:
    """One Gauss-law-satisfying occupation pattern with its derived fluxes."""

    occupations: tuple
    fluxes: tuple


def _flux_path(occupations) -> tuple:
    """Cumulative Gauss-law fluxes l_0..l_{N_f-1}; the last entry is the
    flux past the final site (zero for a zero-net-charge state)."""
    l = 0
    path = []
    for n, b in enumerate(occupations):
        l += -b + (1 if n % 2 == 1 else 0)
        path.append(l)
    return tuple(path)


def _bits(value: int, n_bits: int) -> tuple:
    return tuple((value >> (n_bits - 1 - n)) & 1 for n in range(n_bits))


@dataclass(frozen=True)
class PhysicalBasis:
    """Ordered basis of physical configurations; index space for all matrices."""

    n_fermion_sites: int
    configurations: tuple
    lookup: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.configurations)

    @property
    def n_links(self) -> int:
        return self.n_fermion_sites - 1

    def index(self, occupations) -> int:
        key = tuple(occupations)
        if key not in self.lookup:
            raise KeyError(f"configuration {key} not in basis")
        return self.lookup[key]


def _make_basis(n_fermion_sites, keep) -> PhysicalBasis:
    """Enumerate all 2^{N_f} occupation vectors in ascending integer order and
    keep those accepted by `keep(occupations, flux_path)`."""
    configs = []
    for v in range(1 << n_fermion_sites):
        occ = _bits(v, n_fermion_sites)
        path = _flux_path(occ)
        if keep(occ, path):
            configs.append(Configuration(occ, path[:-1]))
    lookup = {c.occupations: i for i, c in enumerate(configs)}
    return PhysicalBasis(n_fermion_sites, tuple(configs), lookup)


def enumerate_basis(params: ModelParams) -> PhysicalBasis:
    """All occupation vectors whose Gauss-law flux path stays within
    [-flux_max, +flux_max] on every link and returns to zero (zero net
    charge).  Deterministic ordering: ascending occupation integer."""
    cap = params.flux_max

    def keep(occ, path):
        return path[-1] == 0 and all(abs(l) <= cap for l in path[:-1])

    return _make_basis(params.n_fermion_sites, keep)


def enumerate_zero_charge_basis(params: ModelParams) -> PhysicalBasis:
    """All zero-net-charge occupation vectors, no flux cap (full free-fermion
    space).  Fluxes are still recorded and may exceed flux_max."""
    return _make_basis(params.n_fermion_sites, lambda occ, path: path[-1] == 0)


def flux_table(basis: PhysicalBasis) -> np.ndarray:
    """(d, N_f-1) integer array of link fluxes per configuration."""
    return np.array([c.fluxes for c in basis.configurations], dtype=np.int64)


def _hopping(basis: PhysicalBasis, amplitude: float, constrained: bool) -> np.ndarray:
    """Nearest-neighbour pair creation/annihilation.  Flipping (b_n, b_{n+1})
    between (0,1) and (1,0) changes only link n of the flux path; targets
    outside the basis (flux above the cap) contribute zero."""
    d = basis.dimension
    h = np.zeros((d, d))
    for i, cfg in enumerate(basis.configurations):
        occ = cfg.occupations
        for n in range(basis.n_fermion_sites - 1):
            if occ[n] == occ[n + 1]:
                continue
            target = occ[:n] + (occ[n + 1], occ[n]) + occ[n + 2:]
            j = basis.lookup.get(target)
            if j is not None:
                h[j, i] += amplitude
            elif not constrained:
                raise AssertionError("hopping left the unconstrained basis")
    return h


def build_hamiltonian(basis: PhysicalBasis, params: ModelParams) -> np.ndarray:
    """Schwinger Hamiltonian: hopping 1/(2a) + electric (a e^2/2) sum l_n^2
    + staggered mass (m/2) sum (-1)^n sigma_z(n).  Real symmetric."""
    if basis.n_fermion_sites != params.n_fermion_sites:
        raise ValueError("basis was built for a different lattice size")
    a = params.lattice_spacing
    h = _hopping(basis, 1.0 / (2.0 * a), constrained=True)
    fluxes = flux_table(basis)
    electric = 0.5 * a * params.coupling**2 * np.sum(fluxes**2, axis=1)
    stagger = np.array([(-1) ** n for n in range(basis.n_fermion_sites)])
    occ = np.array([c.occupations for c in basis.configurations])
    sigma_z = 2 * occ - 1
    mass = 0.5 * params.mass * (sigma_z @ stagger)
    h[np.diag_indices_from(h)] += electric + mass
    return h


def free_fermion_basis(basis_mode: str, params: ModelParams) -> PhysicalBasis:
    """constrained: the flux-capped Schwinger basis; full-zero-charge: every
    zero-net-charge occupation vector."""
    if basis_mode == "constrained":
        return enumerate_basis(params)
    if basis_mode == "full-zero-charge":
        return enumerate_zero_charge_basis(params)
    raise ValueError(f"unknown basis mode {basis_mode!r}")


def build_free_fermion_hamiltonian(basis_mode, params: ModelParams,
                                   basis: PhysicalBasis = None) -> np.ndarray:
    """Free-fermion Hamiltonian: hopping and staggered mass only, restricted
    to the selected basis.  Equals build_hamiltonian with e=0 on the
    constrained basis."""
    if basis is None:
        basis = free_fermion_basis(basis_mode, params)
    a = params.lattice_spacing
    h = _hopping(basis, 1.0 / (2.0 * a), constrained=(basis_mode == "constrained"))
    stagger = np.array([(-1) ** n for n in range(basis.n_fermion_sites)])
    occ = np.array([c.occupations for c in basis.configurations])
    mass = 0.5 * params.mass * ((2 * occ - 1) @ stagger)
    h[np.diag_indices_from(h)] += mass
    return h


def charge_diagonals(basis: PhysicalBasis, params: ModelParams) -> np.ndarray:
    """(N_f, d) diagonals of O(n) = (-1)^n (sigma_z(n)+1)/(2a)."""
    occ = np.array([c.occupations for c in basis.configurations])
    n_f = basis.n_fermion_sites
    signs = np.array([(-1) ** n for n in range(n_f)])
    return (signs[:, None] * occ.T) / params.lattice_spacing


def build_charge_operators(basis: PhysicalBasis, params: ModelParams) -> list:
    """The N_f diagonal operators O(n) entering the Lindblad operators."""
    return [np.diag(diag) for diag in charge_diagonals(basis, params)]


def build_lindblad_operators(h: np.ndarray, o_list, beta: float) -> list:
    """L(n) = O(n) - (beta/4) [H, O(n)] for every site; beta = 1/T > 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return [o - 0.25 * beta * (h @ o - o @ h) for o in o_list]


def total_charge_operator(basis: PhysicalBasis, params: ModelParams) -> np.ndarray:
    """Total staggered charge sum_n (sigma_z(n)+(-1)^n)/2: the conserved
    charge, identically zero on the physical (zero-net-charge) basis."""
    occ = np.array([c.occupations for c in basis.configurations])
    n_f = basis.n_fermion_sites
    q = np.zeros(basis.dimension)
    for n in range(n_f):
        q += occ[:, n] - (1 if n % 2 == 1 else 0)
    return np.diag(q.astype(float))


def _cp_occupations(occ) -> tuple:
    n_f = len(occ)
    return tuple(1 - occ[n_f - 1 - n] for n in range(n_f))


def cp_permutation(basis: PhysicalBasis) -> np.ndarray:
    """Index permutation pi with CP|i> = |pi(i)>: site map n -> N_f-1-n with
    occupation inversion (charge conjugation)."""
    perm = np.empty(basis.dimension, dtype=np.int64)
    for i, cfg in enumerate(basis.configurations):
        mapped = _cp_occupations(cfg.occupations)
        j = basis.lookup.get(mapped)
        if j is None:
            raise RuntimeError(
                f"CP image of configuration {cfg.occupations} missing from the "
                "basis; the enumeration is inconsistent")
        perm[i] = j
    return perm


def cp_operator(basis: PhysicalBasis, params: ModelParams = None) -> np.ndarray:
    """Permutation matrix implementing the CP transformation on the basis."""
    perm = cp_permutation(basis)
    d = basis.dimension
    cp = np.zeros((d, d))
    cp[perm, np.arange(d)] = 1.0
    return cp


def electric_field_observables(basis: PhysicalBasis, params: ModelParams = None) -> list:
    """N_f-1 diagonal link-field operators; eigenvalues are the integer
    fluxes (units of e)."""
    fluxes = flux_table(basis).astype(float)
    return [np.diag(fluxes[:, n]) for n in range(basis.n_links)]


def basis_csv_rows(basis: PhysicalBasis) -> list:
    """(index, occupation_bits, flux_vector) rows for the debug dump."""
    return [(i, "".join(map(str, c.occupations)),
             " ".join(map(str, c.fluxes)))
            for i, c in enumerate(basis.configurations)]


def vacuum_occupations(n_fermion_sites: int) -> tuple:
    """Bare vacuum: no particles, no flux."""
    return tuple(n % 2 for n in range(n_fermion_sites))


def string_occupations(n_fermion_sites: int, left: int, right: int) -> tuple:
    """Electron at even site `left`, positron at odd site `right`, all
    intervening links at flux -1."""
    if left % 2 != 0:
        raise ValueError(f"string left endpoint must be even, got {left}")
    if right % 2 != 1:
        raise ValueError(f"string right endpoint must be odd, got {right}")
    if not (0 <= left < right < n_fermion_sites):
        raise ValueError(f"string endpoints ({left}, {right}) out of range")
    occ = list(vacuum_occupations(n_fermion_sites))
    occ[left] = 1
    occ[right] = 0
    return tuple(occ)


def prepare_state(basis: PhysicalBasis, kind: str, left: int = None,
                  right: int = None) -> np.ndarray:
    """Rank-1 projector onto the bare vacuum or onto a string configuration."""
    if kind == "bare_vacuum":
        occ = vacuum_occupations(basis.n_fermion_sites)
    elif kind == "string":
        occ = string_occupations(basis.n_fermion_sites, left, right)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    i = basis.index(occ)
    rho = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    rho[i, i] = 1.0
    return rho
