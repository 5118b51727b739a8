"""Embedding-problem ground-state solvers and their shared result type."""
from __future__ import annotations

from ..partition import SolverKind
from .fci import CISpace, fci_ground_state, solve_fci
from .pauli import PauliSum, jordan_wigner, jordan_wigner_integrals, words_commute
from .result import SolverError, SolverResult
from .scf_solver import meanfield_rdm2, solve_meanfield
from .statevector import (
    apply_annihilation,
    apply_pauli_rotation,
    apply_word,
    hartree_fock_state,
    measure_rdm_blocks,
    measure_rdms,
)
from .uccsd import UCCSDAnsatz, VQEOptions, build_uccsd, solve_vqe_uccsd

__all__ = [
    "CISpace",
    "PauliSum",
    "SolverError",
    "SolverResult",
    "UCCSDAnsatz",
    "VQEOptions",
    "apply_annihilation",
    "apply_pauli_rotation",
    "apply_word",
    "build_uccsd",
    "fci_ground_state",
    "hartree_fock_state",
    "jordan_wigner",
    "jordan_wigner_integrals",
    "measure_rdm_blocks",
    "measure_rdms",
    "meanfield_rdm2",
    "solve",
    "solve_fci",
    "solve_meanfield",
    "solve_vqe_uccsd",
    "words_commute",
]


def solve(ep, kind, vqe_options=None):
    """Dispatch an embedding problem to the assigned solver."""
    kind = SolverKind(kind)
    if kind is SolverKind.FCI:
        return solve_fci(ep)
    if kind is SolverKind.VQE:
        return solve_vqe_uccsd(ep, vqe_options)
    return solve_meanfield(ep)
