"""Zeno times: the short-time quadratic decay scale and its extraction.

The multi-particle survival probability starts as 1 - (t/tau_Z)^2, where

    tau_Z = { sum_n Dh_n + 2 alpha sum_{n<k} |<phi_n|h|phi_k>|^2 }^{-1/2}

with Dh_n the energy variance of orbital n under the quenched Hamiltonian
and alpha = -1 / 0 / +1 for fermions (and the Tonks-Girardeau gas),
distinguishable particles, and same-orbital excited bosons.

The variance is evaluated in the residual form: with r_n = (h - eps_n) phi_n
one has Dh_n = <r_n|r_n> - <phi_n|r_n>^2 exactly, which removes the large
eps_n^2 terms algebraically.  Since phi_n is an eigenstate of the initial
Hamiltonian and both discretizations share the kinetic stencil, r_n is
supported only where the quench changed the potential; the sums run over a
thin tail region and are accumulated with compensated summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .lattice import OrbitalSet, TridiagonalHamiltonian
from .observables import NumericsError
from .propagator import DecayTimeSeries


class Statistics(IntEnum):
    """Exchange statistics parameter alpha in the Zeno-time formula."""

    FERMION = -1
    DISTINGUISHABLE = 0
    BOSON = 1

    @classmethod
    def parse(cls, token) -> "Statistics":
        if isinstance(token, cls):
            return token
        names = {
            "fermion": cls.FERMION, "fermions": cls.FERMION, "-1": cls.FERMION,
            "distinguishable": cls.DISTINGUISHABLE, "0": cls.DISTINGUISHABLE,
            "boson": cls.BOSON, "bosons": cls.BOSON, "1": cls.BOSON, "+1": cls.BOSON,
        }
        key = str(token).strip().lower()
        if key not in names:
            raise ValueError(f"unknown statistics {token!r} (fermion/distinguishable/boson)")
        return names[key]


class TransitionNotFound(RuntimeError):
    """The quadratic approximation holds over the whole recorded series."""

    def __init__(self, t_end: float):
        super().__init__(f"quadratic approximation holds to the end of the series (t={t_end})")
        self.t_end = t_end


@dataclass
class ZenoReport:
    """Per-run summary of the short-time analysis."""

    n_particles: int
    alpha: int
    tau_z_analytic: float
    tau_z_fit: float
    t_q: float                      # nan when not found within the series
    tau_q_estimate: float
    fidelity_at_tq: float
    per_orbital_variances: np.ndarray
    offdiag_sum: float


def _cdot(a: np.ndarray, b: np.ndarray, dx: float) -> complex:
    """Compensated trapezoid inner product <a|b> of grid functions."""
    prod = np.conj(a) * b
    return dx * complex(math.fsum(prod.real), math.fsum(prod.imag))


def energy_moments(orbs: OrbitalSet, h: TridiagonalHamiltonian):
    """Per-orbital variances Dh_n and the matrix <phi_n|h|phi_k> (n != k)."""
    if h.cap is not None:
        raise ValueError("Zeno time uses the Hermitian quenched Hamiltonian (no absorber)")
    dx = orbs.grid.dx
    norb = len(orbs)
    phi = orbs.values
    resid = h.apply(phi) - orbs.energies[None, :] * phi
    variances = np.empty(norb)
    for k in range(norb):
        variances[k] = (
            _cdot(resid[:, k], resid[:, k], dx).real
            - _cdot(phi[:, k], resid[:, k], dx).real ** 2
        )
    offdiag = np.zeros((norb, norb), dtype=complex)
    for i in range(norb):
        for j in range(norb):
            if i != j:
                offdiag[i, j] = _cdot(phi[:, i], resid[:, j], dx)
    return variances, offdiag


def offdiagonal_pair_sum(offdiag: np.ndarray) -> float:
    """sum_{n<k} |<phi_n|h|phi_k>|^2 from the off-diagonal matrix."""
    norb = offdiag.shape[0]
    return float(math.fsum(
        abs(offdiag[i, j]) ** 2 for i in range(norb) for j in range(i + 1, norb)
    ))


def zeno_time(orbs: OrbitalSet, h: TridiagonalHamiltonian,
              stats: Statistics = Statistics.FERMION) -> float:
    """Analytic multi-particle Zeno time of the orbital set under the quench."""
    variances, offdiag = energy_moments(orbs, h)
    pair_sum = offdiagonal_pair_sum(offdiag)
    bracket = float(np.sum(variances)) + 2.0 * int(stats) * pair_sum
    if bracket <= 0:
        raise NumericsError(
            f"non-positive Zeno bracket {bracket:.3e} (alpha={int(stats)})"
        )
    return bracket**-0.5


def parabola_fit(series: DecayTimeSeries, channel: str, window: tuple[float, float]) -> float:
    """Least-squares fit of 1 - (t/tau)^2 to a channel over [t_lo, t_hi].

    Linear in 1/tau^2, so the fit is exact for perfectly quadratic data.
    """
    t = series.times
    c = series.channel(channel)
    lo, hi = window
    m = (t > max(lo, 0.0)) & (t <= hi)
    if np.count_nonzero(m) < 10:
        raise ValueError(
            f"parabola fit needs >= 10 samples in ({lo}, {hi}], found {np.count_nonzero(m)}"
        )
    if np.any(c[m] < 0.5):
        raise ValueError("parabola fit window extends into deep decay (channel < 0.5)")
    if c[m][-1] > c[m][0]:
        raise ValueError("channel increasing over the fit window")
    tw, cw = t[m], c[m]
    curvature = np.sum((1.0 - cw) * tw**2) / np.sum(tw**4)
    if curvature <= 0:
        raise ValueError("channel does not decay quadratically in the window")
    return float(curvature**-0.5)


def transition_time(series: DecayTimeSeries, channel: str, tau_z: float,
                    epsilon: float = 0.05) -> float:
    """First sample where the parabola 1 - (t/tau_Z)^2 misses the channel by
    more than epsilon of the decay so far.

    Raises:
        TransitionNotFound: when the criterion is never met inside the series.
    """
    if tau_z <= 0:
        raise ValueError(f"tau_z must be positive, got {tau_z}")
    t = series.times
    c = series.channel(channel)
    model = 1.0 - (t / tau_z) ** 2
    decayed = 1.0 - c
    valid = (t > 0) & (decayed > 1e-12)
    exceeded = valid & (np.abs(model - c) > epsilon * decayed)
    idx = np.nonzero(exceeded)[0]
    if len(idx) == 0:
        raise TransitionNotFound(float(t[-1]))
    return float(t[idx[0]])


def derived_timescales(tau_z: float, gamma: float, tau_meas: float) -> tuple[float, float]:
    """Transition-scale estimate tau_q = tau_Z^2 Gamma and the measured-decay
    rate gamma_meas = tau_meas / tau_Z^2 under repeated checks every tau_meas."""
    for name, val in (("tau_z", tau_z), ("gamma", gamma), ("tau_meas", tau_meas)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    return tau_z**2 * gamma, tau_meas / tau_z**2


def fidelity_at_tq(series: DecayTimeSeries, t_q: float, channel: str = "P") -> float:
    """Channel value at t_q normalized by its value at t = 0 (nearest sample)."""
    t = series.times
    if not (t[0] <= t_q <= t[-1]):
        raise ValueError(f"t_q={t_q} outside the recorded series [{t[0]}, {t[-1]}]")
    c = series.channel(channel)
    idx = int(np.argmin(np.abs(t - t_q)))
    return float(c[idx] / c[0])
