"""Common solver result container and error type."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SolverResult", "SolverError"]


class SolverError(RuntimeError):
    """Solver-level failure: non-convergence, size caps, bad sectors."""


@dataclass
class SolverResult:
    """Ground-state data measured in the embedding basis.

    energy includes the -mu fragment term as solved; mu_contribution reports
    that term separately.  rdm2 is the spin-summed two-particle RDM in chemist
    ordering: rdm2[p,q,r,s] = sum_st <a+_p,s a+_r,t a_s,t a_q,s> so that the
    two-electron energy is 0.5 * sum (pq|rs) rdm2[p,q,r,s].
    """

    energy: float
    rdm1_alpha: np.ndarray
    rdm1_beta: np.ndarray
    rdm2: np.ndarray
    mu_contribution: float = 0.0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def rdm1_total(self):
        return self.rdm1_alpha + self.rdm1_beta

    def validate(self, n_alpha, n_beta, tol=1e-8):
        """Trace and partial-trace sum rules; raises on violation."""
        for rdm, n_occ, tag in (
            (self.rdm1_alpha, n_alpha, "alpha"),
            (self.rdm1_beta, n_beta, "beta"),
        ):
            if abs(np.trace(rdm) - n_occ) > tol:
                raise SolverError(
                    f"rdm1_{tag} trace {np.trace(rdm):.10f} != {n_occ}"
                )
            if np.max(np.abs(rdm - rdm.T)) > tol:
                raise SolverError(f"rdm1_{tag} is not symmetric")
        n_tot = n_alpha + n_beta
        partial = np.einsum("ijkk->ij", self.rdm2)
        if np.max(np.abs(partial - (n_tot - 1) * self.rdm1_total)) > tol:
            raise SolverError("rdm2 partial trace violates the (N-1) sum rule")
