"""Multi-fragment density-matrix embedding with a statevector quantum co-processor."""
from __future__ import annotations

from .hamiltonian import Hamiltonian, OrbitalLabel, build_hubbard
from .fcidump import load_fcidump, write_fcidump
from .partition import Partition, SolverKind
from .meanfield import MeanFieldState, dressed_fock, unrestricted_hartree_fock
from .embedding import (
    BathProjector,
    EmbeddingProblem,
    build_bath,
    build_embedding_hamiltonian,
    fragment_energy,
    transform_two_electron,
)
from .solvers import (
    SolverError,
    SolverResult,
    VQEOptions,
    jordan_wigner,
    measure_rdms,
    solve_fci,
    solve_meanfield,
    solve_vqe_uccsd,
)
from .driver import (
    CorrelationPotential,
    DMETOptions,
    DMETState,
    fit_chemical_potential,
    fit_correlation_potential,
    run_dmet,
)
from . import analysis

__version__ = "0.1.0"

__all__ = [
    "BathProjector",
    "CorrelationPotential",
    "DMETOptions",
    "DMETState",
    "EmbeddingProblem",
    "Hamiltonian",
    "MeanFieldState",
    "OrbitalLabel",
    "Partition",
    "SolverError",
    "SolverKind",
    "SolverResult",
    "VQEOptions",
    "analysis",
    "build_bath",
    "build_embedding_hamiltonian",
    "build_hubbard",
    "dressed_fock",
    "fit_chemical_potential",
    "fit_correlation_potential",
    "fragment_energy",
    "jordan_wigner",
    "load_fcidump",
    "measure_rdms",
    "run_dmet",
    "solve_fci",
    "solve_meanfield",
    "solve_vqe_uccsd",
    "transform_two_electron",
    "unrestricted_hartree_fock",
    "write_fcidump",
]
