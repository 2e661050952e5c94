"""Environment correlator D(x): delta, Gaussian, or constant profile.

All three families share the x=0 normalization D(0) = D0 and are even in x.
The inverse temperature beta lives here as the single source of truth and is
handed to the Lindblad-operator construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EnvCorrelator", "correlator_value", "correlator_matrix", "fourier_correlator"]

KINDS = ("delta", "gaussian", "constant")


@dataclass(frozen=True)
class EnvCorrelator:
    kind: str
    D0: float = 1.0
    sigma: float = 1.0
    beta: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"correlator kind must be one of {KINDS}, got {self.kind!r}")
        if self.D0 < 0:
            raise ValueError("D0 must be non-negative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def tag(self) -> str:
        """Short label used in file names and plot legends."""
        if self.kind == "gaussian":
            return f"gauss{self.sigma:g}"
        return self.kind


def correlator_value(env: EnvCorrelator, x: int) -> float:
    """D(x) at integer lattice displacement x."""
    if env.kind == "delta":
        return env.D0 if x == 0 else 0.0
    if env.kind == "gaussian":
        return env.D0 * float(np.exp(-(x * x) / (2.0 * env.sigma**2)))
    return env.D0


def correlator_matrix(env: EnvCorrelator, n_fermion_sites: int) -> np.ndarray:
    """Symmetric N_f x N_f matrix with entries D(n1 - n2)."""
    n = np.arange(n_fermion_sites)
    dx = np.abs(n[:, None] - n[None, :])
    if env.kind == "delta":
        return env.D0 * np.eye(n_fermion_sites)
    if env.kind == "gaussian":
        return env.D0 * np.exp(-(dx.astype(float) ** 2) / (2.0 * env.sigma**2))
    return env.D0 * np.ones((n_fermion_sites, n_fermion_sites))


def fourier_correlator(env: EnvCorrelator, n_fermion_sites: int) -> np.ndarray:
    """Periodic transform D(k) = sum_x D(x) exp(-i 2 pi k x / N_f), x over one
    period with D evaluated at the signed minimal displacement.  Diagnostic
    quantity for the relaxation-rate estimates, not used in the generator
    build.  Real (within roundoff) for these even correlators."""
    n_f = n_fermion_sites
    x = np.arange(n_f)
    x_min = np.where(x > n_f // 2, x - n_f, x)
    d_x = np.array([correlator_value(env, int(xi)) for xi in x_min])
    k = np.arange(n_f)
    phases = np.exp(-2j * np.pi * np.outer(k, x) / n_f)
    return phases @ d_x
