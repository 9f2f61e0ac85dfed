"""Semiclassical (WKB) tunneling rates for the quenched trap.

For each initial-well level E_k the barrier action S(E_k) between the inner
and outer turning points sets the one-attempt transmission

    T = exp(-2S) / (1 + exp(-2S)/4)^2,

and the classical period of the bound motion sets the attempt frequency;
together 2 gamma_k = T(E_k)/tau_k and the multi-particle decay rate is
Gamma = 2 sum_k gamma_k.

Both integrals have inverse-square-root endpoint behavior; substituting
x = x_turn +/- u^2 regularizes them, after which composite Gauss-Legendre
converges fast.  Levels with S < 1 sit near the barrier brim where the
semiclassical transmission loses accuracy; they are flagged low-confidence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .potentials import TrapParams, eval_quenched, turning_points

logger = logging.getLogger(__name__)

GL_NODES = 200
LOW_CONFIDENCE_ACTION = 1.0


def _gauss(f, lo: float, hi: float, nodes: int) -> float:
    u, gw = leggauss(nodes)
    xm = 0.5 * (hi + lo) + 0.5 * (hi - lo) * u
    return 0.5 * (hi - lo) * float(np.dot(gw, f(xm)))


def barrier_action_integral(v, energy: float, x1: float, x2: float,
                            nodes: int = GL_NODES) -> float:
    """int_{x1}^{x2} sqrt(2 [v(x) - E]) dx with square-root turning-point ends.

    Substituting x = x_turn +/- u^2 absorbs the vanishing of the integrand,
    so plain Gauss-Legendre converges on each half.
    """
    mid = 0.5 * (x1 + x2)

    def left(u):
        return np.sqrt(np.maximum(2.0 * (v(x1 + u**2) - energy), 0.0)) * 2 * u

    def right(u):
        return np.sqrt(np.maximum(2.0 * (v(x2 - u**2) - energy), 0.0)) * 2 * u

    return _gauss(left, 0.0, np.sqrt(mid - x1), nodes) + _gauss(right, 0.0, np.sqrt(x2 - mid), nodes)


def bounce_period_integral(v, energy: float, x0: float, x1: float,
                           nodes: int = GL_NODES) -> float:
    """2 int_{x0}^{x1} dx / sqrt(2 [E - v(x)]): the same substitution absorbs
    the inverse-square-root endpoint singularities."""
    mid = 0.5 * (x0 + x1)

    def left(u):
        dv = np.maximum(2.0 * (energy - v(x0 + u**2)), 1e-300)
        return 2 * u / np.sqrt(dv)

    def right(u):
        dv = np.maximum(2.0 * (energy - v(x1 - u**2)), 1e-300)
        return 2 * u / np.sqrt(dv)

    return 2.0 * (
        _gauss(left, 0.0, np.sqrt(mid - x0), nodes) + _gauss(right, 0.0, np.sqrt(x1 - mid), nodes)
    )


def action(energy: float, p: TrapParams, nodes: int = GL_NODES) -> float:
    """Barrier action S(E) = int_{x1}^{x2} sqrt(2 [V(x) - E]) dx."""
    _, x1, x2 = turning_points(energy, p)
    return barrier_action_integral(lambda x: eval_quenched(x, p), energy, x1, x2, nodes)


def transmission(s: float) -> float:
    """One-attempt tunneling probability T(S) = e^{-2S} / (1 + e^{-2S}/4)^2."""
    if s < 0:
        raise ValueError(f"action must be non-negative, got {s}")
    e = np.exp(-2.0 * s)
    return float(e / (1.0 + e / 4.0) ** 2)


def period(energy: float, p: TrapParams, nodes: int = GL_NODES) -> float:
    """Classical round-trip period tau = 2 int_{x0}^{x1} dx / sqrt(2 [E - V(x)]).

    The classically allowed region requires E - V under the root (the well
    region has V < E by definition of the turning points).
    """
    x0, x1, _ = turning_points(energy, p)
    return bounce_period_integral(lambda x: eval_quenched(x, p), energy, x0, x1, nodes)


@dataclass
class LevelRate:
    """Semiclassical decay data of one level; error set when it was skipped."""

    k: int
    energy: float
    action: float = np.nan
    transmission: float = np.nan
    period: float = np.nan
    gamma: float = np.nan
    low_confidence: bool = False
    error: str | None = None


@dataclass
class RatePrediction:
    """Per-level rates and the total multi-particle decay rate Gamma."""

    per_level: list[LevelRate]
    gamma_total: float   # Gamma = 2 sum_k gamma_k over usable levels

    def level(self, k: int) -> LevelRate:
        return self.per_level[k - 1]


def rates(energies, p: TrapParams, nodes: int = GL_NODES) -> RatePrediction:
    """Semiclassical rate table for the given initial-well energies.

    Levels whose energy does not produce three turning points (above the
    barrier top) are excluded from the total with a logged warning.
    """
    per_level = []
    total = 0.0
    for k, energy in enumerate(energies, start=1):
        entry = LevelRate(k=k, energy=float(energy))
        try:
            s = action(energy, p, nodes)
            t = transmission(s)
            tau = period(energy, p, nodes)
            entry.action = s
            entry.transmission = t
            entry.period = tau
            entry.gamma = t / (2.0 * tau)
            entry.low_confidence = s < LOW_CONFIDENCE_ACTION
            total += 2.0 * entry.gamma
        except ValueError as exc:
            entry.error = str(exc)
            logger.warning("level %d (E=%.4f) excluded from semiclassical rate: %s",
                           k, energy, exc)
        per_level.append(entry)
    return RatePrediction(per_level, total)
