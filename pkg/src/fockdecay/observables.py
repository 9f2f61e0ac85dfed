"""Multi-particle observables from single-particle orbitals.

Everything reduces to an N x N overlap matrix: the non-escape probability is
its determinant (region overlaps), the survival probability the squared
modulus of the determinant of initial-vs-evolved overlaps, and the full
counting statistics follow from the eigenvalues of the region overlap matrix,
which act as independent Bernoulli occupation probabilities for a Slater
determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Grid, OrbitalSet

HERMITICITY_TOL = 1e-10
EIGENVALUE_TOL = 1e-6
DET_IMAG_TOL = 1e-10


class NumericsError(RuntimeError):
    """A numerical consistency check failed (conditioning, tolerance, ...)."""


@dataclass(frozen=True)
class RegionProjector:
    """Spatial counting region Delta = (-inf, cut]."""

    cut: float


def region_weights(grid: Grid, region: RegionProjector) -> np.ndarray:
    """Trapezoid quadrature weights restricted to Delta, cut snapped to the grid."""
    i_cut = grid.index_of(region.cut)
    w = np.zeros(grid.n_points)
    w[: i_cut + 1] = grid.dx
    w[0] = 0.5 * grid.dx
    w[i_cut] = 0.5 * grid.dx
    return w


@dataclass
class OverlapMatrix:
    """N x N orbital overlap matrix; kind 'region' or 'initial_vs_evolved'."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"overlap matrix must be square, got {self.entries.shape}")
        if self.kind not in ("region", "initial_vs_evolved"):
            raise ValueError(f"unknown overlap kind {self.kind!r}")


def overlap_matrix_region(orbs: OrbitalSet, region: RegionProjector,
                          weights: np.ndarray | None = None) -> OverlapMatrix:
    """M[n, k] = integral over Delta of phi_n^* phi_k (trapezoid quadrature)."""
    if weights is None:
        weights = region_weights(orbs.grid, region)
    m = orbs.values.conj().T @ (weights[:, None] * orbs.values)
    return OverlapMatrix(m, "region")


def overlap_matrix_initial(initial: OrbitalSet, evolved: OrbitalSet) -> OverlapMatrix:
    """M[n, k] = <phi_n(0)|phi_k(t)> over the full grid."""
    if initial.values.shape != evolved.values.shape:
        raise ValueError(
            f"orbital sets differ in size: {initial.values.shape} vs {evolved.values.shape}"
        )
    m = initial.values.conj().T @ evolved.values * initial.grid.dx
    return OverlapMatrix(m, "initial_vs_evolved")


def _check_hermitian(m: np.ndarray):
    dev = np.max(np.abs(m - m.conj().T))
    if dev > max(HERMITICITY_TOL, 1e-13 * np.max(np.abs(m))):
        raise NumericsError(f"region overlap matrix not Hermitian: deviation {dev:.2e}")


def nonescape_prob(m: OverlapMatrix) -> float:
    """P_N = det M for a region overlap matrix (real up to roundoff)."""
    if m.kind != "region":
        raise ValueError("nonescape_prob requires a region overlap matrix")
    _check_hermitian(m.entries)
    det = np.linalg.det(m.entries)
    if abs(det.imag) > DET_IMAG_TOL:
        raise NumericsError(f"determinant has imaginary residue {det.imag:.2e}")
    return float(det.real)


def survival_prob(m: OverlapMatrix) -> float:
    """S_N = |det M|^2 for an initial-vs-evolved overlap matrix."""
    if m.kind != "initial_vs_evolved":
        raise ValueError("survival_prob requires an initial_vs_evolved overlap matrix")
    return float(abs(np.linalg.det(m.entries)) ** 2)


def fcs(m: OverlapMatrix) -> np.ndarray:
    """Full counting statistics p(0..N) of the particle number inside Delta.

    The eigenvalues of the region overlap matrix are Bernoulli success
    probabilities; p(n) is the coefficient of z^n in prod_i (1 - lam_i + lam_i z),
    accumulated by stable polynomial convolution (Poisson binomial).
    """
    if m.kind != "region":
        raise ValueError("fcs requires a region overlap matrix")
    _check_hermitian(m.entries)
    lam = np.linalg.eigvalsh(0.5 * (m.entries + m.entries.conj().T))
    if np.any(lam < -EIGENVALUE_TOL) or np.any(lam > 1.0 + EIGENVALUE_TOL):
        raise NumericsError(
            f"overlap eigenvalues outside [0, 1]: range [{lam.min():.2e}, {lam.max():.2e}]"
        )
    p = np.array([1.0])
    for lam_i in lam:
        q = np.zeros(len(p) + 1)
        q[:-1] = p * (1.0 - lam_i)
        q[1:] += p * lam_i
        p = q
    return p


def fcs_mean(p: np.ndarray) -> float:
    """Mean particle number of a counting distribution."""
    return float(np.dot(np.arange(len(p)), p))
