"""Trap geometry: the initial bathtub well and the quenched leaky trap.

All quantities are dimensionless (hbar = m = L = 1, energies in units of
hbar/t0 with t0 = m L^2 / hbar).  The initial well is a smooth flat-bottom
"bathtub" of depth v0 with tanh walls.  At t = 0 the right wall is replaced
by a barrier of finite width, so that every formerly bound level can leak
into the continuum shelf (which sits at depth -v0 on the escaping side).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect


class CapacityError(ValueError):
    """Requested more bound levels than the well supports."""


def depth_from_capacity(capacity: int) -> float:
    """Well depth v0 = C^2 pi^2 for a well of capacity C."""
    if capacity < 1:
        raise ValueError(f"capacity must be a positive integer, got {capacity}")
    return capacity**2 * np.pi**2


@dataclass(frozen=True)
class TrapParams:
    """Geometry of the initial well and the quenched barrier.

    Attributes:
        v0: well depth (also the barrier height scale).
        well_width: flat-bottom width L; 1 in dimensionless units.
        barrier_width: width L1 of the quenched barrier.
        sigma: smoothness of the inner walls after the quench.
        sigma1: smoothness of the initial walls / outer barrier wall.
        cut: position a of the barrier inner edge; also the boundary of
            the counting region Delta = (-inf, a].
        capacity: number of levels the well is rated for (sets v0 when
            constructed through ``from_capacity``).
    """

    v0: float
    well_width: float = 1.0
    barrier_width: float = 0.08
    sigma: float = 0.01
    sigma1: float = 0.01
    cut: float = 0.55
    capacity: int | None = None

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        for name in ("well_width", "barrier_width", "sigma", "sigma1"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.cut <= self.well_width / 2:
            raise ValueError(
                f"cut a={self.cut} must lie outside the well core (> L/2 = {self.well_width / 2})"
            )

    @classmethod
    def from_capacity(cls, capacity: int, **kwargs) -> "TrapParams":
        """Build the standard trap of a given capacity (v0 = C^2 pi^2)."""
        return cls(v0=depth_from_capacity(capacity), capacity=capacity, **kwargs)


def eval_initial(x, p: TrapParams):
    """Initial bathtub well V_I(x) = -(v0/2) [1 - tanh((|x| - L/2)/sigma1)]."""
    x = np.asarray(x, dtype=float)
    return -0.5 * p.v0 * (1.0 - np.tanh((np.abs(x) - p.well_width / 2) / p.sigma1))


def eval_quenched(x, p: TrapParams):
    """Quenched trap: inner well for x < a, finite barrier wall for x > a.

    The two branches are joined by sharp step functions at x = a; with the
    default geometry both branches are within ~3e-4 * v0 of zero there, so
    the residual seam jump is far below every energy scale of the problem.
    At the seam itself the two branches are averaged.
    """
    x = np.asarray(x, dtype=float)
    well = -0.5 * p.v0 * (1.0 - np.tanh((np.abs(x) - p.well_width / 2) / p.sigma))
    barrier = -0.5 * p.v0 * (
        1.0 + np.tanh((x - p.cut - p.barrier_width / 2) / p.sigma1)
    )
    return np.where(x < p.cut, well, np.where(x > p.cut, barrier, 0.5 * (well + barrier)))


def _quenched_minus_e(x: float, p: TrapParams, energy: float) -> float:
    return float(eval_quenched(np.asarray([x]), p)[0]) - energy


def turning_points(energy: float, p: TrapParams) -> tuple[float, float, float]:
    """Classical turning points x0 < x1 < x2 of the quenched trap at a given energy.

    (x0, x1) bound the classically allowed well region and (x1, x2) the
    forbidden barrier region.  Roots are bracketed on a mesh of spacing
    sigma/4 and refined by bisection to 1e-12.

    Raises:
        ValueError: if the energy lies outside (min V, 0) or does not cut
            the potential in exactly three points (e.g. above the barrier top).
    """
    scan_lo = -(p.well_width / 2 + 25 * p.sigma)
    scan_hi = p.cut + p.barrier_width / 2 + 25 * p.sigma1
    v_min = -p.v0
    if not (v_min < energy < 0.0):
        raise ValueError(
            f"energy {energy} outside the well range ({v_min}, 0); no three turning points"
        )
    step = min(p.sigma, p.sigma1) / 4
    xs = np.arange(scan_lo, scan_hi + step, step)
    f = eval_quenched(xs, p) - energy
    sign_change = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    exact = np.nonzero(f == 0.0)[0]
    if len(exact):
        roots = [float(xs[i]) for i in exact]
    else:
        roots = []
    for i in sign_change:
        roots.append(
            bisect(_quenched_minus_e, xs[i], xs[i + 1], args=(p, energy), xtol=1e-12)
        )
    roots = sorted(roots)
    if len(roots) != 3:
        raise ValueError(
            f"expected 3 turning points at E={energy}, found {len(roots)} "
            f"(energy above the barrier top or bracketing failed)"
        )
    return roots[0], roots[1], roots[2]
