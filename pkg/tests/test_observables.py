from itertools import combinations

import numpy as np
import pytest

from fockdecay.lattice import Grid, OrbitalSet
from fockdecay.observables import (
    NumericsError,
    OverlapMatrix,
    RegionProjector,
    fcs,
    fcs_mean,
    nonescape_prob,
    overlap_matrix_initial,
    overlap_matrix_region,
    region_weights,
    survival_prob,
)


def random_region_matrix(rng, n, spectrum=None):
    """Hermitian matrix with eigenvalues in [0, 1] wrapped as a region overlap."""
    if spectrum is None:
        spectrum = rng.uniform(0.0, 1.0, n)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    m = q @ np.diag(spectrum) @ q.conj().T
    return OverlapMatrix(0.5 * (m + m.conj().T), "region"), np.sort(spectrum)


def subset_oracle(m, n_total):
    """Counting distribution by brute force over all principal minors.

    det(I + (z-1)M) = sum_T (z-1)^{|T|} det M_TT; expanding (z-1)^k gives
    p(n) = sum_{k>=n} (-1)^{k-n} C(k, n) e_k with e_k the k-th minor sums.
    """
    from math import comb

    e = np.zeros(n_total + 1)
    e[0] = 1.0
    for k in range(1, n_total + 1):
        e[k] = sum(
            np.linalg.det(m[np.ix_(t, t)]).real
            for t in combinations(range(n_total), k)
        )
    p = np.zeros(n_total + 1)
    for n in range(n_total + 1):
        p[n] = sum((-1) ** (k - n) * comb(k, n) * e[k] for k in range(n, n_total + 1))
    return p


class TestRegionWeights:
    def test_trapezoid_up_to_snapped_cut(self):
        g = Grid(0.0, 1.0, 101)
        w = region_weights(g, RegionProjector(0.5004))
        assert w[0] == pytest.approx(0.5 * g.dx)
        assert w[50] == pytest.approx(0.5 * g.dx)
        assert np.all(w[1:50] == g.dx)
        assert np.all(w[51:] == 0.0)

    def test_cut_outside_grid(self):
        g = Grid(0.0, 1.0, 101)
        with pytest.raises(ValueError):
            region_weights(g, RegionProjector(40.0))


class TestOverlapMatrices:
    def test_full_region_is_identity(self, small_orbs):
        region = RegionProjector(small_orbs.grid.x_max)
        m = overlap_matrix_region(small_orbs, region)
        assert np.max(np.abs(m.entries - np.eye(len(small_orbs)))) < 1e-8

    def test_orbital_entirely_beyond_cut_gives_zero(self):
        g = Grid(-10.0, 10.0, 2001)
        psi = np.exp(-((g.x - 5.0) ** 2)).astype(complex)
        psi /= np.sqrt(g.dx * np.sum(np.abs(psi) ** 2))
        orbs = OrbitalSet(g, psi[:, None], np.array([1.0]))
        m = overlap_matrix_region(orbs, RegionProjector(-2.0))
        assert abs(m.entries[0, 0]) < 1e-12

    def test_initial_vs_itself_is_identity(self, small_orbs):
        m = overlap_matrix_initial(small_orbs, small_orbs)
        assert m.kind == "initial_vs_evolved"
        assert np.max(np.abs(m.entries - np.eye(len(small_orbs)))) < 1e-8

    def test_size_mismatch(self, small_orbs):
        g = small_orbs.grid
        other = OrbitalSet(g, small_orbs.values[:, :1], small_orbs.energies[:1])
        with pytest.raises(ValueError):
            overlap_matrix_initial(small_orbs, other)


class TestNonescape:
    def test_identity(self):
        m = OverlapMatrix(np.eye(3, dtype=complex), "region")
        assert nonescape_prob(m) == pytest.approx(1.0)

    def test_diagonal_product(self):
        m = OverlapMatrix(np.diag([0.9, 0.8]).astype(complex), "region")
        assert nonescape_prob(m) == pytest.approx(0.72, abs=1e-14)

    def test_kind_check(self):
        m = OverlapMatrix(np.eye(2, dtype=complex), "initial_vs_evolved")
        with pytest.raises(ValueError):
            nonescape_prob(m)

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.4], [0.0, 0.5]], dtype=complex)
        with pytest.raises(NumericsError):
            nonescape_prob(OverlapMatrix(bad, "region"))


class TestSurvival:
    def test_identity(self):
        m = OverlapMatrix(np.eye(4, dtype=complex), "initial_vs_evolved")
        assert survival_prob(m) == pytest.approx(1.0)

    def test_unimodular_phases(self, rng):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
        m = OverlapMatrix(np.diag(phases), "initial_vs_evolved")
        assert survival_prob(m) == pytest.approx(1.0, abs=1e-12)

    def test_per_orbital_phase_invariance(self, small_orbs, rng):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, len(small_orbs)))
        rotated = OrbitalSet(
            small_orbs.grid, small_orbs.values * phases[None, :], small_orbs.energies
        )
        m = overlap_matrix_initial(small_orbs, rotated)
        assert survival_prob(m) == pytest.approx(1.0, abs=1e-8)


class TestFcs:
    def test_identity_matrix(self):
        p = fcs(OverlapMatrix(np.eye(3, dtype=complex), "region"))
        np.testing.assert_allclose(p, [0, 0, 0, 1], atol=1e-14)

    def test_two_fair_bernoulli(self):
        m = OverlapMatrix(np.diag([0.5, 0.5]).astype(complex), "region")
        np.testing.assert_allclose(fcs(m), [0.25, 0.5, 0.25], atol=1e-14)

    def test_subset_minor_oracle(self, rng):
        for _ in range(6):
            m, _ = random_region_matrix(rng, 4)
            p = fcs(m)
            oracle = subset_oracle(m.entries, 4)
            np.testing.assert_allclose(p, oracle, atol=1e-12)

    def test_normalization_and_moments(self, rng):
        for n in (2, 5, 9):
            m, lam = random_region_matrix(rng, n)
            p = fcs(m)
            assert abs(p.sum() - 1.0) < 1e-12
            assert p[-1] == pytest.approx(nonescape_prob(m), abs=1e-10)
            assert fcs_mean(p) == pytest.approx(np.trace(m.entries).real, abs=1e-10)
            assert np.all(p > -1e-12)

    def test_eigenvalue_out_of_range_rejected(self, rng):
        m, _ = random_region_matrix(rng, 3, spectrum=np.array([0.2, 0.5, 1.5]))
        with pytest.raises(NumericsError, match="eigenvalue"):
            fcs(m)

    def test_kind_check(self):
        m = OverlapMatrix(np.eye(2, dtype=complex), "initial_vs_evolved")
        with pytest.raises(ValueError):
            fcs(m)
