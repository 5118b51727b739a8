"""Mean-field treatment of an embedding problem (the weakly correlated route)."""
from __future__ import annotations

import numpy as np

from ..meanfield import embedding_scf
from .result import SolverResult

__all__ = ["solve_meanfield", "meanfield_rdm2"]


def meanfield_rdm2(d_a, d_b):
    """Factorized chemist 2-RDM of a single determinant.

    rdm2[p,q,r,s] = D_tot[p,q] D_tot[r,s] - sum_s D_s[p,s] D_s[r,q]
    (Coulomb minus same-spin exchange).
    """
    d_tot = d_a + d_b
    rdm2 = np.einsum("pq,rs->pqrs", d_tot, d_tot)
    rdm2 -= np.einsum("ps,rq->pqrs", d_a, d_a)
    rdm2 -= np.einsum("ps,rq->pqrs", d_b, d_b)
    return rdm2


def solve_meanfield(ep):
    """Embedding-internal UHF; RDMs from the determinant factorization."""
    h_a, h_b = ep.solver_one_body()
    mf = embedding_scf(h_a, h_b, ep.g_emb, ep.n_elec_alpha, ep.n_elec_beta)
    rdm2 = meanfield_rdm2(mf.D_alpha, mf.D_beta)
    frag = list(ep.frag_indices)
    mu_contrib = -ep.mu * float(
        np.trace((mf.D_alpha + mf.D_beta)[np.ix_(frag, frag)])
    )
    result = SolverResult(
        energy=mf.e_total,
        rdm1_alpha=mf.D_alpha,
        rdm1_beta=mf.D_beta,
        rdm2=rdm2,
        mu_contribution=mu_contrib,
        converged=mf.converged,
        diagnostics={"solver": "MEANFIELD", "iterations": mf.iterations},
    )
    result.validate(ep.n_elec_alpha, ep.n_elec_beta)
    return result
