"""Spatial grid, finite-difference Hamiltonian and bound states of the well.

The single-particle Hamiltonian h = -d^2/dx^2 / 2 + V(x) is discretized with
the second-order central stencil on a uniform grid with Dirichlet ends, which
makes it a real symmetric tridiagonal matrix (plus, optionally, a negative
imaginary absorber on the diagonal).  Bound states are obtained with the
bisection/inverse-iteration tridiagonal eigensolver, which computes only the
lowest few pairs out of a ~2e4-point matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .potentials import CapacityError, TrapParams, eval_initial, eval_quenched

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform spatial lattice covering the trap plus absorber margins."""

    x_min: float = -20.0
    x_max: float = 30.0
    n_points: int = 20001

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise ValueError(f"x_min {self.x_min} must be < x_max {self.x_max}")
        if self.n_points < 3:
            raise ValueError(f"need at least 3 grid points, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def index_of(self, x: float) -> int:
        """Nearest grid index to a position (snapping, not interpolation)."""
        i = int(round((x - self.x_min) / self.dx))
        if not 0 <= i < self.n_points:
            raise ValueError(f"position {x} outside grid [{self.x_min}, {self.x_max}]")
        return i


@dataclass
class TridiagonalHamiltonian:
    """h on the grid: real diagonal, uniform off-diagonal, optional -i W absorber."""

    grid: Grid
    diagonal: np.ndarray
    off_diagonal: float
    cap: np.ndarray | None = None   # W(x) >= 0, applied as -i W on the diagonal

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Matrix-vector product; psi may be (n,) or (n, k)."""
        if psi.shape[0] != self.grid.n_points:
            raise ValueError(
                f"shape mismatch: Hamiltonian has {self.grid.n_points} points, state has {psi.shape[0]}"
            )
        d = self.diagonal if self.cap is None else self.diagonal - 1j * self.cap
        out = (d[:, None] * psi) if psi.ndim == 2 else d * psi
        out[:-1] += self.off_diagonal * psi[1:]
        out[1:] += self.off_diagonal * psi[:-1]
        return out

    def hermitian(self) -> "TridiagonalHamiltonian":
        """The Hermitian part (absorber dropped)."""
        return TridiagonalHamiltonian(self.grid, self.diagonal, self.off_diagonal, None)

    def with_cap(self, cap: np.ndarray) -> "TridiagonalHamiltonian":
        if cap.shape != self.diagonal.shape:
            raise ValueError("absorber array must match the grid")
        return TridiagonalHamiltonian(self.grid, self.diagonal, self.off_diagonal, cap)


def discretize(p: TrapParams, which: str, grid: Grid) -> TridiagonalHamiltonian:
    """Finite-difference Hamiltonian of the initial or quenched potential.

    Dirichlet boundaries: the amplitude is pinned to zero at both grid ends
    (the absorber, when attached, removes any flux long before it gets there).
    """
    if which == "initial":
        v = eval_initial(grid.x, p)
    elif which == "quenched":
        v = eval_quenched(grid.x, p)
    else:
        raise ValueError(f"which must be 'initial' or 'quenched', got {which!r}")
    dx = grid.dx
    return TridiagonalHamiltonian(grid, 1.0 / dx**2 + v, -0.5 / dx**2)


@dataclass(frozen=True)
class Orbital:
    """Single-particle state on the grid with its construction energy."""

    values: np.ndarray
    energy: float


@dataclass
class OrbitalSet:
    """The N lowest well orbitals; the Slater determinant lives through these."""

    grid: Grid
    values: np.ndarray        # (n_points, N) columns
    energies: np.ndarray      # (N,) ascending

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values)
        self.energies = np.asarray(self.energies, dtype=float)

    def __len__(self) -> int:
        return self.values.shape[1]

    def __getitem__(self, k: int) -> Orbital:
        return Orbital(self.values[:, k], float(self.energies[k]))

    @property
    def n_particles(self) -> int:
        return len(self)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Make the first antinode positive (sign gauge for eigenvectors)."""
    threshold = 0.01 * np.max(np.abs(vec))
    first = np.nonzero(np.abs(vec) > threshold)[0][0]
    return -vec if vec[first] < 0 else vec


def bound_states(h: TridiagonalHamiltonian, count: int) -> OrbitalSet:
    """The `count` lowest bound (E < 0) eigenpairs of a Hermitian Hamiltonian.

    Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
    iteration (LAPACK stebz/stein through eigh_tridiagonal); only the lowest
    `count` pairs are computed.  Orbitals are trapezoid-normalized on the grid
    and carry the sign convention "first antinode positive".

    Raises:
        CapacityError: if fewer than `count` eigenvalues lie below zero.
    """
    if h.cap is not None:
        raise ValueError("bound_states requires the Hermitian Hamiltonian (no absorber)")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    n = h.grid.n_points
    off = np.full(n - 1, h.off_diagonal)
    below = eigh_tridiagonal(
        h.diagonal, off, eigvals_only=True, select="v", select_range=(-np.inf, 0.0)
    )
    if len(below) < count:
        raise CapacityError(
            f"requested {count} bound states but the well supports only {len(below)}"
        )
    w, v = eigh_tridiagonal(h.diagonal, off, select="i", select_range=(0, count - 1))
    dx = h.grid.dx
    phi = v / np.sqrt(dx)
    for k in range(count):
        phi[:, k] = _fix_sign(phi[:, k])
    gram = phi.T @ phi * dx
    err = np.max(np.abs(gram - np.eye(count)))
    if err > ORTHONORMALITY_TOL:
        raise RuntimeError(f"orbital set not orthonormal: max deviation {err:.2e}")
    if np.any(np.diff(w) <= 0):
        raise RuntimeError("eigenvalues not strictly increasing")
    return OrbitalSet(h.grid, phi.astype(complex), w)


def apply_hamiltonian(h: TridiagonalHamiltonian, phi: np.ndarray) -> np.ndarray:
    """Tridiagonal matrix-vector product h @ phi."""
    return h.apply(phi)


def export_orbitals(orbs: OrbitalSet) -> np.ndarray:
    """Plain matrix dump: one row per grid point, columns x, Re/Im of each orbital."""
    n = orbs.grid.n_points
    out = np.empty((n, 1 + 2 * len(orbs)))
    out[:, 0] = orbs.grid.x
    for k in range(len(orbs)):
        out[:, 1 + 2 * k] = orbs.values[:, k].real
        out[:, 2 + 2 * k] = orbs.values[:, k].imag
    return out
