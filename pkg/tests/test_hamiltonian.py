import itertools

import numpy as np
import pytest

from dmetsim.hamiltonian import Hamiltonian, build_hubbard
from dmetsim.fcidump import (
    FcidumpError,
    load_fcidump,
    load_orbital_labels,
    write_fcidump,
    write_orbital_labels,
)
from dmetsim.solvers.fci import fci_ground_state

from conftest import random_hamiltonian


def test_hubbard_2site_noninteracting():
    ham = build_hubbard(2, 1.0, 0.0, periodic=False, n_alpha=1, n_beta=1)
    assert np.allclose(ham.h, [[0.0, -1.0], [-1.0, 0.0]])
    assert np.all(ham.g == 0.0)
    assert ham.e_const == 0.0


def test_hubbard_2site_u4_fci_closed_form():
    # Singlet ground energy 0.5 * (U - sqrt(U^2 + 16 t^2)) = 2 - 2 sqrt(2).
    ham = build_hubbard(2, 1.0, 4.0, periodic=False, n_alpha=1, n_beta=1)
    energy, _, _, _ = fci_ground_state(ham.h, ham.h, ham.g, 1, 1)
    assert energy == pytest.approx(2.0 - 2.0 * np.sqrt(2.0), abs=1e-10)


def test_hubbard_4site_ring_noninteracting_filling():
    ham = build_hubbard(4, 1.0, 0.0, periodic=True, n_alpha=2, n_beta=2)
    eigs = np.linalg.eigvalsh(ham.h)
    assert np.allclose(sorted(eigs), [-2.0, 0.0, 0.0, 2.0])
    energy, _, _, _ = fci_ground_state(ham.h, ham.h, ham.g, 2, 2)
    assert energy == pytest.approx(-4.0, abs=1e-10)


def test_hubbard_2site_periodic_no_double_bond():
    open_chain = build_hubbard(2, 1.0, 0.0, periodic=False, n_alpha=1, n_beta=1)
    ring = build_hubbard(2, 1.0, 0.0, periodic=True, n_alpha=1, n_beta=1)
    assert np.allclose(open_chain.h, ring.h)


def test_hubbard_rejects_bad_electron_counts():
    with pytest.raises(ValueError):
        build_hubbard(2, 1.0, 0.0, periodic=False, n_alpha=3, n_beta=0)


def test_g_symmetry_queries_identical():
    ham = random_hamiltonian(4, 2, 2, seed=7)
    g = ham.g
    for i, j, k, l in itertools.product(range(4), repeat=4):
        values = {
            g[i, j, k, l], g[j, i, k, l], g[i, j, l, k], g[j, i, l, k],
            g[k, l, i, j], g[l, k, i, j], g[k, l, j, i], g[l, k, j, i],
        }
        assert len(values) == 1


def test_asymmetric_inputs_rejected():
    h = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        Hamiltonian(n_orb=2, n_alpha=1, n_beta=1, e_const=0.0,
                    h=h, g=np.zeros((2, 2, 2, 2)))
    g_bad = np.zeros((2, 2, 2, 2))
    g_bad[0, 1, 0, 0] = 0.3
    with pytest.raises(ValueError):
        Hamiltonian(n_orb=2, n_alpha=1, n_beta=1, e_const=0.0,
                    h=np.zeros((2, 2)), g=g_bad)


class TestFcidump:
    def test_single_orbital_records(self, tmp_path):
        path = tmp_path / "one.fcidump"
        path.write_text(
            "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n"
            "1.5 1 1 1 1\n"
            "-1.0 1 1 0 0\n"
            "0.7 0 0 0 0\n"
        )
        ham = load_fcidump(path)
        assert ham.n_orb == 1
        assert ham.n_alpha == ham.n_beta == 1
        assert ham.g[0, 0, 0, 0] == pytest.approx(1.5)
        assert ham.h[0, 0] == pytest.approx(-1.0)
        assert ham.e_const == pytest.approx(0.7)

    def test_symmetry_completion(self, tmp_path):
        path = tmp_path / "two.fcidump"
        path.write_text("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.25 1 2 1 2\n")
        ham = load_fcidump(path)
        for i, j, k, l in [(0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0),
                           (0, 1, 1, 0), (1, 0, 0, 1)]:
            assert ham.g[i, j, k, l] == pytest.approx(0.25)

    def test_round_trip_identity(self, tmp_path):
        ham = random_hamiltonian(5, 3, 2, seed=11, e_const=0.625)
        path = tmp_path / "rt.fcidump"
        write_fcidump(ham, path)
        back = load_fcidump(path)
        assert back.n_alpha == 3 and back.n_beta == 2
        assert abs(back.e_const - ham.e_const) < 1e-12
        assert np.max(np.abs(back.h - ham.h)) < 1e-12
        assert np.max(np.abs(back.g - ham.g)) < 1e-12

    def test_write_hubbard_records(self, tmp_path):
        ham = build_hubbard(2, 1.0, 4.0, periodic=False, n_alpha=1, n_beta=1)
        path = tmp_path / "hub.fcidump"
        write_fcidump(ham, path)
        body = [line.split() for line in path.read_text().splitlines()
                if line and not line.lstrip().startswith("&") and "=" not in line]
        records = {tuple(int(x) for x in fields[1:]): float(fields[0]) for fields in body}
        assert records[(1, 1, 1, 1)] == pytest.approx(4.0)
        assert records[(2, 2, 2, 2)] == pytest.approx(4.0)
        assert records[(2, 1, 0, 0)] == pytest.approx(-1.0)
        assert records[(0, 0, 0, 0)] == pytest.approx(0.0)

    def test_write_zero_hamiltonian(self, tmp_path):
        ham = Hamiltonian(n_orb=2, n_alpha=1, n_beta=1, e_const=0.0,
                          h=np.zeros((2, 2)), g=np.zeros((2, 2, 2, 2)))
        path = tmp_path / "zero.fcidump"
        write_fcidump(ham, path)
        body = [line for line in path.read_text().splitlines()
                if line and not line.lstrip().startswith("&") and "=" not in line]
        assert len(body) == 1
        fields = body[0].split()
        assert float(fields[0]) == 0.0
        assert fields[1:] == ["0", "0", "0", "0"]

    def test_duplicate_agreeing_records_ok(self, tmp_path):
        path = tmp_path / "dup.fcidump"
        path.write_text(
            "&FCI NORB=1,NELEC=1,MS2=1,\n&END\n"
            "-1.0 1 1 0 0\n-1.0 1 1 0 0\n"
        )
        ham = load_fcidump(path)
        assert ham.h[0, 0] == pytest.approx(-1.0)

    def test_conflicting_duplicates_rejected(self, tmp_path):
        path = tmp_path / "conflict.fcidump"
        path.write_text(
            "&FCI NORB=1,NELEC=1,MS2=1,\n&END\n"
            "-1.0 1 1 0 0\n-1.5 1 1 0 0\n"
        )
        with pytest.raises(FcidumpError, match="conflict"):
            load_fcidump(path)

    def test_index_out_of_range(self, tmp_path):
        path = tmp_path / "oob.fcidump"
        path.write_text("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.1 3 1 0 0\n")
        with pytest.raises(FcidumpError, match="out of range"):
            load_fcidump(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.fcidump"
        path.write_text("NORB=2\n0.1 1 1 0 0\n")
        with pytest.raises(FcidumpError, match="header"):
            load_fcidump(path)

    def test_fortran_exponents(self, tmp_path):
        path = tmp_path / "fortran.fcidump"
        path.write_text("&FCI NORB=1,NELEC=1,MS2=1,\n&END\n-1.5D-01 1 1 0 0\n")
        ham = load_fcidump(path)
        assert ham.h[0, 0] == pytest.approx(-0.15)

    def test_labels_sidecar_round_trip(self, tmp_path):
        ham = build_hubbard(3, 1.0, 0.0, periodic=False, n_alpha=1, n_beta=1)
        path = tmp_path / "labels.json"
        write_orbital_labels(ham.orbital_labels, path)
        labels = load_orbital_labels(path)
        assert [lab.atom for lab in labels] == [0, 1, 2]

    def test_u0_fci_equals_meanfield(self):
        from dmetsim.meanfield import unrestricted_hartree_fock
        ham = build_hubbard(4, 1.0, 0.0, periodic=False, n_alpha=2, n_beta=2)
        mf = unrestricted_hartree_fock(ham, guess="CORE")
        energy, _, _, _ = fci_ground_state(ham.h, ham.h, ham.g, 2, 2)
        assert energy == pytest.approx(mf.e_total, abs=1e-10)
