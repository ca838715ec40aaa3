import math
import warnings

import numpy as np
import pytest

from escrate.errors import DegenerateHoleWarning, DepthMismatch, InsufficientDigits
from escrate.holes import (ESCAPE_COLUMNS, check_hole_family, eigenvalue_gap_ratio,
                           escape_rate, escape_rate_for_hole, escape_sweep,
                           hole_family_from_words, perturbed_eigenvalue, perturbed_matrix,
                           predicted_limit, pressure_gap_ratio, standard_hole_family,
                           survivor_spectrum, write_escape_csv)
from escrate.symbolic import Subshift, SymbolicPoint, champernowne_digits
from escrate.thermo import Potential, build_transfer_matrix, pressure

from conftest import LOG2, random_potential, three_symbol_shift

Z02 = SymbolicPoint.periodic((0, 1))


@pytest.fixture
def cantor_phi(cantor_shift):
    return Potential.constant(cantor_shift, -LOG2)


class TestHoleFamily:
    def test_periodic_prefixes(self, full2):
        fam = standard_hole_family(full2, SymbolicPoint.periodic((0, 1)), 3)
        assert fam.holes == (((0,),), ((0, 1),), ((0, 1, 0),))
        assert fam.lengths == (1, 2, 3)

    def test_cantor_second_hole(self, cantor_shift):
        fam = standard_hole_family(cantor_shift, Z02, 5)
        assert [cantor_shift.format_word(w) for w in fam.hole(2)] == ["02"]

    def test_prefix_runs_out(self, full2):
        with pytest.raises(InsufficientDigits):
            standard_hole_family(full2, SymbolicPoint.from_prefix((0, 1, 1)), 5)

    def test_unknown_index(self, full2):
        fam = standard_hole_family(full2, Z02, 3, n_min=2)
        with pytest.raises(KeyError):
            fam.hole(1)

    def test_inadmissible_center(self, golden):
        with pytest.raises(ValueError):
            standard_hole_family(golden, SymbolicPoint.periodic((1,)), 3)

    def test_standard_family_assumptions(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 10)
        rep = check_hole_family(cantor_shift, cantor_phi, fam)
        assert rep["nested"] and rep["contains_center"]
        assert rep["prefix_ratio_min"] == 1.0 and rep["prefix_ratio_ok"]
        assert rep["exponential_fit"]["rho"] == pytest.approx(0.5, rel=1e-9)
        assert rep["prime_period"] == 2
        assert rep["periodic_threshold"] <= 2

    def test_periodic_compatibility_from_p(self, full2, half):
        z = SymbolicPoint.periodic((0, 0, 1))
        fam = standard_hole_family(full2, z, 9)
        rep = check_hole_family(full2, half, fam)
        assert all(rep["periodic_compatible"][2:])

    def test_non_nested_detected(self, full2, half):
        fam = hole_family_from_words(full2, Z02, [[(0, 1)], [(1, 1, 0)]])
        assert not check_hole_family(full2, half, fam)["nested"]

    def test_from_words_refines(self, full2):
        fam = hole_family_from_words(full2, Z02, [[(0,), (0, 1, 1)]])
        assert fam.holes[0] == ((0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1))
        assert fam.prefix_depths == (1,)


class TestPerturbedMatrix:
    def test_delete_symbol(self, full2, half):
        M = build_transfer_matrix(full2, half, 1)
        np.testing.assert_allclose(perturbed_matrix(M, [(0,)]).toarray(),
                                   [[0, 0.5], [0, 0.5]], atol=1e-15)

    def test_empty_hole(self, full2, half):
        M = build_transfer_matrix(full2, half, 2)
        np.testing.assert_array_equal(perturbed_matrix(M, []).toarray(), M.toarray())

    def test_golden(self, golden):
        M = build_transfer_matrix(golden, Potential.constant(golden, 0), 1)
        np.testing.assert_array_equal(perturbed_matrix(M, [(1,)]).toarray(), [[1, 0], [1, 0]])

    def test_padding(self, full2, half):
        M = build_transfer_matrix(full2, half, 3)
        P = perturbed_matrix(M, [(0, 1)]).toarray()
        for i in range(M.size):
            w = M.word(i)
            assert (P[:, i] == 0).all() == (w[:2] == (0, 1))

    def test_depth_mismatch(self, full2, half):
        M = build_transfer_matrix(full2, half, 2)
        with pytest.raises(DepthMismatch):
            perturbed_matrix(M, [(0, 1, 1)])


class TestPerturbedEigenvalue:
    def test_single_symbol(self, full2, half):
        assert perturbed_eigenvalue(full2, half, [(0,)]).lambda_n == pytest.approx(0.5)

    def test_empty_survivors(self, full2, half):
        info = perturbed_eigenvalue(full2, half, [(0, 0), (0, 1), (1, 0), (1, 1)])
        assert info.empty and info.lambda_n == 0.0

    def test_golden(self, golden):
        info = perturbed_eigenvalue(golden, Potential.constant(golden, 0), [(1,)])
        assert info.lambda_n == pytest.approx(1.0)

    def test_two_components(self, cantor_shift, cantor_phi):
        # survivors of [02] are 2^a 0^inf: two fixed points, no mixing
        info = perturbed_eigenvalue(cantor_shift, cantor_phi, [(0, 1)])
        assert info.lambda_n == pytest.approx(0.5, abs=1e-14)
        assert not info.mixing and info.components == 2

    def test_periodic_component(self, full2, half):
        info = perturbed_eigenvalue(full2, half, [(0, 0), (1, 1)])
        assert info.lambda_n == pytest.approx(0.5, abs=1e-12)
        assert not info.mixing

    @pytest.mark.parametrize("seed", range(6))
    def test_dense_spectral_radius(self, seed):
        rng = np.random.default_rng(seed)
        s = [Subshift.full(2), three_symbol_shift(), Subshift.golden_mean()][seed % 3]
        phi = random_potential(s, 2, seed)
        M = build_transfer_matrix(s, phi, 3)
        hole = [M.word(i) for i in rng.choice(M.size, size=rng.integers(1, 4), replace=False)]
        info = survivor_spectrum(M, hole)
        dense = perturbed_matrix(M, hole).toarray()
        radius = float(np.max(np.abs(np.linalg.eigvals(dense))))
        assert info.lambda_n == pytest.approx(radius, rel=1e-10, abs=1e-14)


class TestEscapeRate:
    def test_log2(self, full2, half):
        fam = standard_hole_family(full2, SymbolicPoint.periodic((0,)), 1)
        r = escape_rate(full2, half, fam, 1)
        assert r.escape_rate == pytest.approx(LOG2)
        assert r.lambda_n <= r.lambda_

    def test_empty_hole(self, full2, half):
        r = escape_rate_for_hole(full2, half, [])
        assert r.escape_rate == 0.0

    def test_empty_survivors_infinite(self, full2, half):
        r = escape_rate_for_hole(full2, half, [(0,), (1,)])
        assert r.empty and math.isinf(r.escape_rate)

    def test_cantor_depth_two(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 2)
        r = escape_rate(cantor_shift, cantor_phi, fam, 2)
        assert r.mu_hole == pytest.approx(0.25)
        assert r.ratio == pytest.approx(4 * LOG2)
        assert r.predicted == pytest.approx(0.75)


class TestPredictedLimit:
    def test_cantor(self, cantor_shift, cantor_phi):
        assert predicted_limit(cantor_shift, cantor_phi, Z02) == pytest.approx(0.75)

    def test_non_periodic(self, full2):
        z = SymbolicPoint.from_prefix(champernowne_digits(50))
        assert predicted_limit(full2, random_potential(full2, 2, 0), z) == 1.0

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_parry(self, golden, p):
        z = SymbolicPoint.periodic((0,) * (p - 1) + (1,) if p > 1 else (0,))
        zero = Potential.constant(golden, 0.0)
        h = pressure(golden, zero)
        assert predicted_limit(golden, zero, z) == pytest.approx(1 - math.exp(-p * h))

    def test_constant_shift_invariance(self, golden):
        phi = random_potential(golden, 2, 11)
        z = SymbolicPoint.periodic((0, 1, 0))
        assert predicted_limit(golden, phi.scaled(1.0, 2.5), z) == pytest.approx(
            predicted_limit(golden, phi, z), abs=1e-12)


class TestSweep:
    def test_cantor_trend(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 12)
        sweep = escape_sweep(cantor_shift, cantor_phi, fam, range(2, 13))
        rep = sweep.report
        assert rep["predicted"] == pytest.approx(0.75)
        assert rep["deviation"] < 0.05
        assert rep["lambda_monotone"]
        devs = [r.deviation for r in sweep.rows[-5:]]
        assert all(b < a for a, b in zip(devs, devs[1:]))

    def test_non_periodic_trend(self, full2, half):
        z = SymbolicPoint.from_prefix(champernowne_digits(40))
        fam = standard_hole_family(full2, z, 12)
        rep = escape_sweep(full2, half, fam, range(2, 13)).report
        assert rep["predicted"] == 1.0
        assert rep["deviation"] < 0.05

    def test_single_row(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 4)
        sweep = escape_sweep(cantor_shift, cantor_phi, fam, [4])
        assert len(sweep.rows) == 1 and sweep.report["fit"] is None

    def test_empty_range(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 4)
        with pytest.raises(ValueError):
            escape_sweep(cantor_shift, cantor_phi, fam, [])

    def test_threads_same_rows(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 9)
        a = escape_sweep(cantor_shift, cantor_phi, fam, range(2, 10)).to_csv()
        b = escape_sweep(cantor_shift, cantor_phi, fam, range(2, 10), workers=3).to_csv()
        assert a == b

    def test_convergence_of_lambda_n(self, golden):
        phi = random_potential(golden, 1, 2)
        z = SymbolicPoint.periodic((0, 1))
        fam = standard_hole_family(golden, z, 12)
        rows = escape_sweep(golden, phi, fam, range(1, 13)).rows
        gaps = [r.lambda_ - r.lambda_n for r in rows]
        assert gaps[-1] < gaps[0] / 10
        assert all(b.lambda_n >= a.lambda_n - 1e-12 for a, b in zip(rows, rows[1:]))

    def test_csv_columns(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 4)
        text = write_escape_csv(escape_sweep(cantor_shift, cantor_phi, fam, [3, 4]).rows)
        lines = text.strip().split("\n")
        assert lines[0].split(",") == list(ESCAPE_COLUMNS)
        assert len(lines) == 3

    def test_gap_form_tracks_ratio(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 12)
        r = escape_rate(cantor_shift, cantor_phi, fam, 12)
        assert abs(r.gap_ratio - r.ratio) < 0.01
        assert eigenvalue_gap_ratio(cantor_shift, cantor_phi, fam, 12) == r.gap_ratio


class TestPressureGap:
    def test_cantor(self, cantor_shift, cantor_phi):
        fam = standard_hole_family(cantor_shift, Z02, 12)
        assert pressure_gap_ratio(cantor_shift, cantor_phi, fam, 12) == pytest.approx(0.75, abs=0.05)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_entropy_case(self, full2, p):
        z = SymbolicPoint.periodic((0,) * (p - 1) + (1,) if p > 1 else (1,))
        fam = standard_hole_family(full2, z, 12)
        zero = Potential.constant(full2, 0.0)
        assert pressure_gap_ratio(full2, zero, fam, 12) == pytest.approx(1 - 2.0 ** -p, abs=0.05)

    def test_empty_hole(self, full2, half):
        fam = hole_family_from_words(full2, Z02, [[]])
        with pytest.warns(DegenerateHoleWarning):
            assert math.isnan(pressure_gap_ratio(full2, half, fam, 1))
