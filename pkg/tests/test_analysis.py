import numpy as np
import pytest

from dmetsim.analysis import (
    EOSTable,
    GapSeries,
    eos_analyze,
    exchange_couplings,
    fm_afii_gap,
    mulliken_spin_density,
    qubit_estimate,
    read_eos_csv,
    read_gap_csv,
    tdl_extrapolate,
    write_eos_csv,
    write_gap_csv,
)


class TestMullikenSpinDensity:
    def test_equal_densities_zero(self, rng):
        d = rng.standard_normal((4, 4))
        d = 0.5 * (d + d.T)
        rho = mulliken_spin_density(d, d, [0, 0, 1, 1])
        assert all(abs(v) < 1e-14 for v in rho.values())

    def test_neel_diagonal(self):
        d_a = np.diag([1.0, 0.0])
        d_b = np.diag([0.0, 1.0])
        rho = mulliken_spin_density(d_a, d_b, [0, 1])
        assert rho[0] == pytest.approx(1.0)
        assert rho[1] == pytest.approx(-1.0)

    def test_random_matrices_match_double_loop_oracle(self, rng):
        n = 6
        atom_map = [0, 0, 1, 1, 2, 2]
        d_a = rng.standard_normal((n, n))
        d_b = rng.standard_normal((n, n))
        rho = mulliken_spin_density(d_a, d_b, atom_map)
        spin = d_a - d_b
        for x in set(atom_map):
            want = 0.0
            for i in range(n):
                if atom_map[i] != x:
                    continue
                want += spin[i, i]
                for j in range(n):
                    if atom_map[j] != x:
                        want += 0.5 * spin[i, j]
            assert rho[x] == pytest.approx(want, abs=1e-12)

    def test_diagonal_only_variant(self, rng):
        d_a = rng.standard_normal((4, 4))
        d_b = rng.standard_normal((4, 4))
        rho = mulliken_spin_density(d_a, d_b, [0, 0, 1, 1], diagonal_only=True)
        spin = d_a - d_b
        assert rho[0] == pytest.approx(spin[0, 0] + spin[1, 1], abs=1e-12)

    def test_unmapped_orbital_rejected(self):
        with pytest.raises(ValueError, match="atom map"):
            mulliken_spin_density(np.eye(3), np.eye(3), [0, 1])


class TestExchangeCouplings:
    def test_degenerate_states_zero(self):
        j1, j2 = exchange_couplings(1.23, 1.23, 1.23)
        assert j1 == 0.0 and j2 == 0.0

    def test_experiment_row(self):
        # Inputs constructed to land on J1 = 0.69, J2 = -9.51.
        e_fm = 0.0
        e_afi = 16.0 * 0.69
        e_afii = (48.0 * -9.51 + 3.0 * e_afi + e_fm) / 4.0
        j1, j2 = exchange_couplings(e_fm, e_afi, e_afii)
        assert j1 == pytest.approx(0.69, abs=1e-12)
        assert j2 == pytest.approx(-9.51, abs=1e-12)
        assert fm_afii_gap(j1, j2) == pytest.approx(105.84, abs=0.01)

    def test_random_inputs_match_duplicate_expression(self, rng):
        for _ in range(20):
            e_fm, e_afi, e_afii = rng.standard_normal(3) * 100
            j1, j2 = exchange_couplings(e_fm, e_afi, e_afii)
            assert j1 == pytest.approx((e_afi - e_fm) / 16.0, abs=1e-12)
            assert j2 == pytest.approx(
                (4.0 * e_afii - 3.0 * e_afi - e_fm) / 48.0, abs=1e-12
            )

    def test_heisenberg_identity(self, rng):
        # -12 (J1 + J2) reproduces E_FM - E_AFII exactly by construction.
        for _ in range(20):
            e_fm, e_afi, e_afii = rng.standard_normal(3) * 50
            j1, j2 = exchange_couplings(e_fm, e_afi, e_afii)
            assert fm_afii_gap(j1, j2) == pytest.approx(e_fm - e_afii, abs=1e-10)


class TestFmAfiiGap:
    def test_hf_row(self):
        assert fm_afii_gap(0.4, -2.3) == pytest.approx(22.8, abs=0.01)

    def test_b3lyp_row(self):
        assert fm_afii_gap(1.2, -13.35) == pytest.approx(145.8, abs=0.01)

    def test_zero(self):
        assert fm_afii_gap(0.0, 0.0) == 0.0


class TestTdlExtrapolate:
    def test_scdmet_unit_cell_row(self):
        series = GapSeries(((27, 51.9), (64, 57.4)))
        assert tdl_extrapolate(series) == pytest.approx(73.9, abs=0.2)

    def test_odmet_unit_cell_row(self):
        series = GapSeries(((27, 49.6), (64, 46.1)))
        assert tdl_extrapolate(series) == pytest.approx(35.6, abs=0.2)

    def test_constant_series(self):
        series = GapSeries(((8, 3.14), (27, 3.14), (64, 3.14)))
        assert tdl_extrapolate(series) == pytest.approx(3.14, abs=1e-12)

    def test_affine_equivariance(self, rng):
        pts = ((8, 10.0), (27, 12.5), (64, 13.7))
        base = tdl_extrapolate(GapSeries(pts))
        scaled = tdl_extrapolate(GapSeries(tuple((n, 2.5 * g) for n, g in pts)))
        shifted = tdl_extrapolate(GapSeries(tuple((n, g + 7.0) for n, g in pts)))
        assert scaled == pytest.approx(2.5 * base, abs=1e-10)
        assert shifted == pytest.approx(base + 7.0, abs=1e-10)

    def test_validation(self):
        with pytest.raises(ValueError):
            tdl_extrapolate(GapSeries(((27, 1.0),)))
        with pytest.raises(ValueError):
            GapSeries(((27, 1.0), (27, 2.0)))
        with pytest.raises(ValueError):
            GapSeries(((0, 1.0), (8, 2.0)))


class TestEosAnalyze:
    def test_parabola_vertex_recovery(self):
        rows = [(x, (x - 1.5) ** 2 + 2.0) for x in (1.0, 1.4, 1.8)]
        table = eos_analyze(rows)
        assert table.minimum[0] == pytest.approx(1.5, abs=1e-12)
        assert table.minimum[1] == pytest.approx(2.0, abs=1e-12)

    def test_shifted_minimum_is_origin(self):
        rows = [(x, (x - 2.0) ** 2 - 1.0) for x in (1.5, 1.9, 2.3, 2.7)]
        table = eos_analyze(rows)
        shifted_params = [p for p, _ in table.shifted]
        shifted_energies = [e for _, e in table.shifted]
        assert min(shifted_energies) >= -1e-12
        assert abs(min(shifted_params, key=abs)) < 0.5

    def test_shift_idempotent(self):
        rows = [(x, (x - 2.0) ** 2) for x in (1.0, 1.5, 2.0, 2.5, 3.0)]
        table = eos_analyze(rows)
        again = eos_analyze(table.shifted)
        assert again.minimum[0] == pytest.approx(0.0, abs=1e-12)
        assert again.minimum[1] == pytest.approx(0.0, abs=1e-12)

    def test_boundary_minimum_refused(self):
        rows = [(1.0, 0.5), (2.0, 1.0), (3.0, 2.0)]
        table = eos_analyze(rows)
        assert not table.shift_available
        assert "refused" in table.diagnostic
        assert table.rows == ((1.0, 0.5), (2.0, 1.0), (3.0, 2.0))

    def test_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            eos_analyze([(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)])
        with pytest.raises(ValueError, match="3"):
            eos_analyze([(1.0, 1.0), (2.0, 0.5)])


class TestQubitEstimate:
    def test_nio_row(self):
        assert qubit_estimate(78, 64, 5) == (9984, 20)

    def test_hbn_row(self):
        assert qubit_estimate(26, 49, 3) == (2548, 12)

    def test_hydrogen_chain_row(self):
        assert qubit_estimate(2, 11, 2) == (44, 8)

    def test_positive_counts_required(self):
        with pytest.raises(ValueError):
            qubit_estimate(0, 1, 1)


def test_csv_round_trips(tmp_path):
    rows = ((1.0, -2.5), (1.5, -2.75), (2.0, -2.6))
    path = tmp_path / "eos.csv"
    write_eos_csv(rows, path)
    assert read_eos_csv(path) == rows

    series = GapSeries(((27, 51.9), (64, 57.4)))
    gpath = tmp_path / "gaps.csv"
    write_gap_csv(series, gpath)
    assert read_gap_csv(gpath).points == series.points
