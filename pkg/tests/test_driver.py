import json

import numpy as np
import pytest

from dmetsim.driver import (
    CorrelationPotential,
    DMETOptions,
    DmetError,
    fit_chemical_potential,
    fit_correlation_potential,
    run_dmet,
)
from dmetsim.embedding import build_bath, build_embedding_hamiltonian, fragment_energy
from dmetsim.hamiltonian import build_hubbard
from dmetsim.meanfield import fock_matrices, unrestricted_hartree_fock
from dmetsim.partition import Partition
from dmetsim.solvers.fci import fci_ground_state, solve_fci


def ring_partition(n_sites, frag_size, solver="FCI"):
    n_frag = n_sites // frag_size
    return Partition(
        fragments=tuple(
            tuple(range(k * frag_size, (k + 1) * frag_size)) for k in range(n_frag)
        ),
        solvers=(solver,) * n_frag,
        equivalence_classes=(tuple(range(n_frag)),),
    )


class TestFitChemicalPotential:
    def test_whole_system_needs_no_refinement(self):
        ham = build_hubbard(4, 1.0, 4.0, periodic=True, n_alpha=2, n_beta=2)
        part = Partition(fragments=((0, 1, 2, 3),), solvers=("FCI",))
        mf = unrestricted_hartree_fock(ham, guess="AFM")
        mu, results, projs, eps, info = fit_chemical_potential(ham, mf, part)
        assert mu == 0.0
        assert info["refinements"] == 0
        assert info["bracket"] is None

    def test_four_site_two_fragments_conserves_count(self):
        ham = build_hubbard(4, 1.0, 4.0, periodic=True, n_alpha=2, n_beta=2)
        part = ring_partition(4, 2)
        mf = unrestricted_hartree_fock(ham, guess="AFM")
        mu, results, projs, eps, info = fit_chemical_potential(ham, mf, part)
        total = 0.0
        for ci, res in results.items():
            frag = list(eps[ci].frag_indices)
            total += part.multiplicity(ci) * np.trace(res.rdm1_total[np.ix_(frag, frag)])
        assert abs(total - 4.0) < 1e-6

    def test_bracket_straddles_target_when_refined(self):
        # Break particle-hole symmetry so mu != 0 is actually required.
        ham = build_hubbard(6, 1.0, 4.0, periodic=True, n_alpha=2, n_beta=2)
        part = ring_partition(6, 2)
        mf = unrestricted_hartree_fock(ham, guess="CORE")
        mu, results, projs, eps, info = fit_chemical_potential(ham, mf, part)
        evals = dict(info["evaluations"])
        if info["bracket"] is not None:
            lo, hi = info["bracket"]
            f_lo = evals[lo] - ham.n_elec
            f_hi = evals[hi] - ham.n_elec
            assert f_lo * f_hi <= 0.0
        n_final = sum(
            part.multiplicity(ci)
            * np.trace(res.rdm1_total[np.ix_(list(eps[ci].frag_indices),
                                             list(eps[ci].frag_indices))])
            for ci, res in results.items()
        )
        assert abs(n_final - ham.n_elec) < 1e-6


class TestFitCorrelationPotential:
    def setup_method(self):
        self.ham = build_hubbard(4, 1.0, 4.0, periodic=True, n_alpha=2, n_beta=2)
        self.part = ring_partition(4, 2)
        self.mf = unrestricted_hartree_fock(self.ham, guess="AFM")
        f_a, f_b = fock_matrices(self.ham, self.mf.D_alpha, self.mf.D_beta)

        def builder(u):
            u_a, u_b = u.expand(self.part, 4)
            def fill(f, n):
                _, c = np.linalg.eigh(f)
                occ = c[:, :n]
                return occ @ occ.T
            return fill(f_a + u_a, 2), fill(f_b + u_b, 2)

        self.builder = builder

    def test_meanfield_targets_keep_u_zero(self):
        d_a, d_b = self.builder(CorrelationPotential.zeros(self.part))
        targets = {0: (d_a[:2, :2], d_b[:2, :2])}
        u, info = fit_correlation_potential(self.ham, self.part, targets, self.builder)
        assert info["cost_initial"] < 1e-16
        assert u.max_abs() < 1e-6

    def test_cost_nonnegative_and_descends(self):
        mf2 = unrestricted_hartree_fock(self.ham, guess="AFM")
        proj = build_bath(mf2.D_alpha, mf2.D_beta, fragment=[0, 1])
        ep = build_embedding_hamiltonian(self.ham, mf2, proj, mu=0.0)
        res = solve_fci(ep)
        targets = {0: (res.rdm1_alpha[:2, :2], res.rdm1_beta[:2, :2])}
        u, info = fit_correlation_potential(self.ham, self.part, targets, self.builder)
        assert info["cost_initial"] >= 0.0
        assert info["cost_final"] >= 0.0
        assert info["cost_final"] <= info["cost_initial"] + 1e-12

    def test_meanfield_fragments_excluded_from_residual(self):
        part = Partition(
            fragments=((0, 1), (2, 3)),
            solvers=("FCI", "MEANFIELD"),
            equivalence_classes=((0,), (1,)),
        )
        d_a, d_b = self.builder(CorrelationPotential.zeros(part))
        targets = {0: (d_a[:2, :2], d_b[:2, :2])}
        u, info = fit_correlation_potential(self.ham, part, targets, self.builder)
        # The mean-field class keeps a zero block by construction.
        assert np.max(np.abs(u.blocks[1][0])) == 0.0
        assert np.max(np.abs(u.blocks[1][1])) == 0.0


class TestRunDmet:
    def test_whole_fragment_matches_fci_both_modes(self):
        ham = build_hubbard(4, 1.0, 4.0, periodic=True, n_alpha=2, n_beta=2)
        part = Partition(fragments=((0, 1, 2, 3),), solvers=("FCI",))
        e_fci, _, _, _ = fci_ground_state(ham.h, ham.h, ham.g, 2, 2)
        for mode in ("oneshot", "selfconsistent"):
            state = run_dmet(ham, part, mode=mode)
            assert state.e_cell == pytest.approx(e_fci, abs=1e-8)
            assert state.converged

    def test_equivalence_class_member_consistency(self):
        # Solving a class member instead of its representative gives the same
        # fragment energy (translational copy under the converged mean field).
        ham = build_hubbard(10, 1.0, 4.0, periodic=True, n_alpha=5, n_beta=5)
        part = ring_partition(10, 2)
        state = run_dmet(ham, part, mode="oneshot", options=DMETOptions(mf_guess="CORE"))
        mf = state.mean_field
        energies = []
        for frag in ([0, 1], [2, 3], [6, 7]):
            proj = build_bath(mf.D_alpha, mf.D_beta, fragment=frag)
            ep = build_embedding_hamiltonian(ham, mf, proj, mu=state.mu)
            res = solve_fci(ep)
            energies.append(
                fragment_energy(ep, res.rdm1_alpha, res.rdm1_beta, res.rdm2, ham, proj)
            )
        assert abs(energies[1] - energies[0]) < 1e-9
        assert abs(energies[2] - energies[0]) < 1e-9

    def test_electron_conservation_recorded(self):
        ham = build_hubbard(6, 1.0, 4.0, periodic=True, n_alpha=3, n_beta=3)
        part = ring_partition(6, 2)
        state = run_dmet(ham, part, mode="oneshot")
        assert abs(state.electron_count - 6.0) < 1e-6
        assert state.e_cell == pytest.approx(
            sum(e["multiplicity"] * e["energy"] for e in state.per_fragment)
            + ham.e_const,
            abs=1e-12,
        )

    def test_mode_degeneracy_when_u_stays_zero(self):
        # Whole-system fragment embeddings are exact: if the u-fit stays at the
        # initial stationary point the sc energy equals the one-shot energy.
        ham = build_hubbard(2, 1.0, 4.0, periodic=False, n_alpha=1, n_beta=1)
        part = Partition(fragments=((0, 1),), solvers=("FCI",))
        one = run_dmet(ham, part, mode="oneshot")
        sc = run_dmet(ham, part, mode="selfconsistent")
        assert abs(one.e_cell - sc.e_cell) < 1e-9

    @pytest.mark.slow
    def test_ten_site_scdmet_oracle_band(self):
        ham = build_hubbard(10, 1.0, 4.0, periodic=True, n_alpha=5, n_beta=5)
        part = ring_partition(10, 2)
        state = run_dmet(ham, part, mode="selfconsistent",
                         options=DMETOptions(mf_guess="AFM"))
        e_fci = -5.834322635829907  # frozen from the determinant Davidson oracle
        assert state.converged
        assert abs(state.e_cell - e_fci) / abs(e_fci) < 0.05
        # Cost trajectory: accepted updates never increase L beyond tolerance.
        for record in state.history:
            if record["L"] is not None:
                assert record["L"] <= record["L_initial"] + 1e-10

    @pytest.mark.slow
    def test_ten_site_scdmet_vqe_cross_check(self):
        # Solver cross-check on the assembled cell energy.  The oracle
        # measurement puts the VQE-vs-FCI difference at 6.3e-3 hartree here
        # (Trotter-1 UCCSD leaves a few mHa on these half-filled embeddings),
        # so the frozen band is 2e-2, not the few-1e-4 a perfect embedding
        # solver would give.
        ham = build_hubbard(10, 1.0, 4.0, periodic=True, n_alpha=5, n_beta=5)
        opts = DMETOptions(mf_guess="CORE")
        fci_state = run_dmet(ham, ring_partition(10, 2, "FCI"),
                             mode="selfconsistent", options=opts)
        vqe_state = run_dmet(ham, ring_partition(10, 2, "VQE"),
                             mode="selfconsistent", options=opts)
        assert vqe_state.converged
        assert abs(vqe_state.e_cell - fci_state.e_cell) < 2e-2

    def test_history_and_jsonl_log(self, tmp_path):
        ham = build_hubbard(4, 1.0, 2.0, periodic=True, n_alpha=2, n_beta=2)
        part = ring_partition(4, 2)
        log = tmp_path / "conv.jsonl"
        state = run_dmet(ham, part, mode="selfconsistent",
                         options=DMETOptions(log_path=str(log)))
        lines = [json.loads(line) for line in log.read_text().splitlines()]
        assert len(lines) == len(state.history)
        for record in lines:
            assert {"cycle", "mu", "e_cell", "per_fragment"} <= set(record)

    def test_mixed_solver_run(self):
        # Correlated fragments fitted, the mean-field fragment contributes
        # energy only; needs a lattice with a real environment (6 sites, so
        # fragment+bath spans 4 of 6 orbitals).
        ham = build_hubbard(6, 1.0, 2.0, periodic=True, n_alpha=3, n_beta=3)
        part = Partition(
            fragments=((0, 1), (2, 3), (4, 5)),
            solvers=("FCI", "MEANFIELD", "FCI"),
            equivalence_classes=((0, 2), (1,)),
        )
        state = run_dmet(ham, part, mode="selfconsistent")
        assert state.converged
        assert abs(state.electron_count - 6.0) < 1e-6
        solvers = {e["solver"] for e in state.per_fragment}
        assert solvers == {"FCI", "MEANFIELD"}
        e_fci, _, _, _ = fci_ground_state(ham.h, ham.h, ham.g, 3, 3)
        assert abs(state.e_cell - e_fci) / abs(e_fci) < 0.05

    def test_quantum_classical_mixed_oneshot(self):
        # The headline orchestration pattern: quantum solver on the correlated
        # fragments, classical treatment elsewhere, one shot.
        ham = build_hubbard(6, 1.0, 2.0, periodic=True, n_alpha=3, n_beta=3)
        part = Partition(
            fragments=((0, 1), (2, 3), (4, 5)),
            solvers=("VQE", "MEANFIELD", "VQE"),
            equivalence_classes=((0, 2), (1,)),
        )
        state = run_dmet(ham, part, mode="oneshot")
        assert abs(state.electron_count - 6.0) < 1e-6
        tags = {e["solver"] for e in state.per_fragment}
        assert tags == {"VQE", "MEANFIELD"}
        fci_state = run_dmet(
            ham,
            Partition(fragments=((0, 1), (2, 3), (4, 5)),
                      solvers=("FCI", "MEANFIELD", "FCI"),
                      equivalence_classes=((0, 2), (1,))),
            mode="oneshot",
        )
        assert abs(state.e_cell - fci_state.e_cell) < 5e-3

    def test_partition_must_cover_all_orbitals(self):
        ham = build_hubbard(4, 1.0, 2.0, periodic=True, n_alpha=2, n_beta=2)
        part = Partition(fragments=((0, 1),), solvers=("FCI",))
        with pytest.raises(ValueError, match="no fragment"):
            run_dmet(ham, part, mode="oneshot")

    def test_u_symmetry_on_converged_ten_site(self):
        # Converged u on the U=4 ring: identical across class members by
        # construction; spin-antisymmetric under the AFM sublattice swap.
        ham = build_hubbard(10, 1.0, 4.0, periodic=True, n_alpha=5, n_beta=5)
        part = ring_partition(10, 2)
        state = run_dmet(ham, part, mode="selfconsistent",
                         options=DMETOptions(mf_guess="AFM"))
        u_a, u_b = state.u.blocks[0]
        assert u_a.shape == (2, 2)
        assert abs(u_a[0, 0] - u_b[1, 1]) < 1e-4
        assert abs(u_a[1, 1] - u_b[0, 0]) < 1e-4
        assert abs(u_a[0, 1] - u_b[0, 1]) < 1e-4
