"""Determinant-basis exact diagonalization in a fixed (n_alpha, n_beta) sector.

The CI vector is stored as a matrix C[alpha_string, beta_string].  Spin-string
excitation operators are materialized once as sparse matrices, which gives a
compact sigma build

    sigma = K_a C + C K_b^T
          + 1/2 sum_pq E_pq [ sum_rs g(pq|rs) (S_a[rs] C + C S_b[rs]^T) ]

with the one-body matrices corrected by k_pq = h_pq - 1/2 sum_r (pr|rq) to
absorb the normal-ordering term of E_pq E_rs.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .result import SolverError, SolverResult

__all__ = ["CISpace", "solve_fci", "fci_ground_state"]

MAX_SPATIAL = 16
DENSE_DET_LIMIT = 2000
DAVIDSON_MAX_ITER = 200
DAVIDSON_TOL = 1e-9


def bit_strings(n_orb, n_elec):
    """All n_orb-bit masks with n_elec bits set, ascending as integers."""
    if not 0 <= n_elec <= n_orb:
        raise SolverError(f"cannot place {n_elec} electrons in {n_orb} orbitals")
    masks = [sum(1 << p for p in occ) for occ in combinations(range(n_orb), n_elec)]
    return np.array(sorted(masks), dtype=np.int64)


def _parity(mask, below):
    """(-1)^(number of set bits of mask strictly below orbital `below`)."""
    return 1 - 2 * (bin(mask & ((1 << below) - 1)).count("1") & 1)


class CISpace:
    """Fixed-sector determinant space with cached string excitation operators."""

    def __init__(self, n_orb, n_alpha, n_beta):
        self.n_orb = n_orb
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.strings_a = bit_strings(n_orb, n_alpha)
        self.strings_b = bit_strings(n_orb, n_beta)
        self.index_a = {int(s): i for i, s in enumerate(self.strings_a)}
        self.index_b = {int(s): i for i, s in enumerate(self.strings_b)}
        self._ops = {}

    @property
    def n_det(self):
        return len(self.strings_a) * len(self.strings_b)

    def excitation_op(self, spin, p, q):
        """Sparse matrix of a+_p a_q on the given spin's string space."""
        key = (spin, p, q)
        if key in self._ops:
            return self._ops[key]
        strings = self.strings_a if spin == 0 else self.strings_b
        index = self.index_a if spin == 0 else self.index_b
        rows, cols, vals = [], [], []
        for col, s in enumerate(strings):
            s = int(s)
            if not (s >> q) & 1:
                continue
            s1 = s & ~(1 << q)
            if (s1 >> p) & 1:
                continue
            sign = _parity(s, q) * _parity(s1, p)
            rows.append(index[s1 | (1 << p)])
            cols.append(col)
            vals.append(float(sign))
        n = len(strings)
        op = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        self._ops[key] = op
        return op

    def occupancy(self, spin):
        """(n_strings, n_orb) 0/1 occupation table."""
        strings = self.strings_a if spin == 0 else self.strings_b
        return ((strings[:, None] >> np.arange(self.n_orb)[None, :]) & 1).astype(float)

    def apply_e(self, spin, p, q, c):
        """E^spin_pq applied to a CI matrix."""
        op = self.excitation_op(spin, p, q)
        return op @ c if spin == 0 else c @ op.T

    def diagonal(self, h_a, h_b, g):
        occ_a = self.occupancy(0)
        occ_b = self.occupancy(1)
        gd = np.einsum("ppqq->pq", g)
        gx = np.einsum("pqqp->pq", g)
        e1a = occ_a @ np.diag(h_a)
        e1b = occ_b @ np.diag(h_b)
        same_a = 0.5 * (np.einsum("ip,pq,iq->i", occ_a, gd, occ_a)
                        - np.einsum("ip,pq,iq->i", occ_a, gx, occ_a))
        same_b = 0.5 * (np.einsum("ip,pq,iq->i", occ_b, gd, occ_b)
                        - np.einsum("ip,pq,iq->i", occ_b, gx, occ_b))
        cross = (occ_a @ gd) @ occ_b.T
        return (e1a + same_a)[:, None] + (e1b + same_b)[None, :] + cross

    def _one_body_ops(self, h_a, h_b, g):
        k_corr = 0.5 * np.einsum("prrq->pq", g)
        k_a = h_a - k_corr
        k_b = h_b - k_corr
        n = self.n_orb
        op_a = sum(k_a[p, q] * self.excitation_op(0, p, q)
                   for p in range(n) for q in range(n) if abs(k_a[p, q]) > 1e-14)
        op_b = sum(k_b[p, q] * self.excitation_op(1, p, q)
                   for p in range(n) for q in range(n) if abs(k_b[p, q]) > 1e-14)
        zero = sp.csr_matrix((len(self.strings_a), len(self.strings_a)))
        zero_b = sp.csr_matrix((len(self.strings_b), len(self.strings_b)))
        return (op_a if sp.issparse(op_a) else zero,
                op_b if sp.issparse(op_b) else zero_b)

    def sigma_builder(self, h_a, h_b, g):
        """Returns sigma(C) for H = h1 + 1/2 g, all in chemist notation."""
        n = self.n_orb
        k_op_a, k_op_b = self._one_body_ops(h_a, h_b, g)
        g_mat = g.reshape(n * n, n * n)
        pairs = [(p, q) for p in range(n) for q in range(n)]

        def sigma(c):
            out = k_op_a @ c + c @ k_op_b.T
            t = np.empty((n * n, c.size))
            for idx, (r, s) in enumerate(pairs):
                t[idx] = (self.apply_e(0, r, s, c) + self.apply_e(1, r, s, c)).ravel()
            gt = g_mat @ t
            for idx, (p, q) in enumerate(pairs):
                block = gt[idx].reshape(c.shape)
                out += 0.5 * (self.excitation_op(0, p, q) @ block
                              + block @ self.excitation_op(1, p, q).T)
            return out

        return sigma

    def dense_hamiltonian(self, h_a, h_b, g):
        sigma = self.sigma_builder(h_a, h_b, g)
        na, nb = len(self.strings_a), len(self.strings_b)
        basis = np.eye(self.n_det)
        cols = [sigma(basis[:, j].reshape(na, nb)).ravel() for j in range(self.n_det)]
        return np.array(cols).T

    def rdm1(self, c):
        n = self.n_orb
        d_a = np.empty((n, n))
        d_b = np.empty((n, n))
        for p in range(n):
            for q in range(n):
                d_a[p, q] = np.sum(c * self.apply_e(0, p, q, c))
                d_b[p, q] = np.sum(c * self.apply_e(1, p, q, c))
        return 0.5 * (d_a + d_a.T), 0.5 * (d_b + d_b.T)

    def rdm12(self, c):
        """Spin-resolved 1-RDMs plus the spin-summed chemist 2-RDM."""
        n = self.n_orb
        d_a, d_b = self.rdm1(c)
        t = np.empty((n, n, c.size))
        for r in range(n):
            for s in range(n):
                t[r, s] = (self.apply_e(0, r, s, c) + self.apply_e(1, r, s, c)).ravel()
        gram = np.einsum("ax,bx->ab", t.reshape(n * n, -1), t.reshape(n * n, -1))
        gram = gram.reshape(n, n, n, n)
        # <E_pq E_rs> = gram[(q,p),(r,s)] since E_pq^dagger = E_qp.
        rdm2 = gram.transpose(1, 0, 2, 3).copy()
        d_tot = d_a + d_b
        for q in range(n):
            rdm2[:, q, q, :] -= d_tot
        return d_a, d_b, rdm2


def _davidson_lowest(sigma, diag, shape, tol=DAVIDSON_TOL, max_iter=DAVIDSON_MAX_ITER,
                     max_subspace=40):
    """Lowest eigenpair of the implicitly defined symmetric matrix."""
    n = diag.size
    start = int(np.argmin(diag.ravel()))
    v0 = np.zeros(n)
    v0[start] = 1.0
    basis = [v0]
    sigmas = [sigma(v0.reshape(shape)).ravel()]
    theta = float(basis[0] @ sigmas[0])
    x = v0
    for iteration in range(1, max_iter + 1):
        m = len(basis)
        h_sub = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                h_sub[i, j] = basis[i] @ sigmas[j]
        h_sub = 0.5 * (h_sub + h_sub.T)
        evals, evecs = np.linalg.eigh(h_sub)
        theta = float(evals[0])
        coeff = evecs[:, 0]
        x = sum(ci * vi for ci, vi in zip(coeff, basis))
        hx = sum(ci * wi for ci, wi in zip(coeff, sigmas))
        residual = hx - theta * x
        rnorm = float(np.linalg.norm(residual))
        if rnorm < tol:
            return theta, x / np.linalg.norm(x), iteration, rnorm
        denom = diag.ravel() - theta
        denom = np.where(np.abs(denom) < 1e-8, 1e-8, denom)
        d = residual / denom
        # Re-orthogonalize twice for numerical safety.
        for _ in range(2):
            for v in basis:
                d -= (v @ d) * v
        dnorm = np.linalg.norm(d)
        if dnorm < 1e-12:
            d = np.random.default_rng(iteration).standard_normal(n)
            for v in basis:
                d -= (v @ d) * v
            dnorm = np.linalg.norm(d)
        d /= dnorm
        if m + 1 > max_subspace:
            basis = [x / np.linalg.norm(x)]
            sigmas = [sigma(basis[0].reshape(shape)).ravel()]
            d -= (basis[0] @ d) * basis[0]
            d /= np.linalg.norm(d)
        basis.append(d)
        sigmas.append(sigma(d.reshape(shape)).ravel())
    raise SolverError(
        f"Davidson failed to converge in {max_iter} iterations (residual {rnorm:.3e})"
    )


def fci_ground_state(h_a, h_b, g, n_alpha, n_beta):
    """Lowest eigenpair in the sector; returns (energy, C, space, diagnostics)."""
    n = h_a.shape[0]
    if n > MAX_SPATIAL:
        raise SolverError(f"{n} spatial orbitals exceeds the FCI cap of {MAX_SPATIAL}")
    space = CISpace(n, n_alpha, n_beta)
    shape = (len(space.strings_a), len(space.strings_b))
    if space.n_det <= DENSE_DET_LIMIT:
        h_mat = space.dense_hamiltonian(h_a, h_b, g)
        evals, evecs = np.linalg.eigh(h_mat)
        energy = float(evals[0])
        c = evecs[:, 0].reshape(shape)
        diag = {"method": "dense", "iterations": 1, "residual": 0.0}
    else:
        sigma = space.sigma_builder(h_a, h_b, g)
        d = space.diagonal(h_a, h_b, g)
        energy, vec, iters, rnorm = _davidson_lowest(sigma, d, shape)
        c = vec.reshape(shape)
        diag = {"method": "davidson", "iterations": iters, "residual": rnorm}
    return energy, c, space, diag


def solve_fci(ep):
    """Exact ground state of an embedding problem, RDMs included."""
    h_a, h_b = ep.solver_one_body()
    energy, c, space, diag = fci_ground_state(
        h_a, h_b, ep.g_emb, ep.n_elec_alpha, ep.n_elec_beta
    )
    d_a, d_b, rdm2 = space.rdm12(c)
    frag = list(ep.frag_indices)
    mu_contrib = -ep.mu * float(np.trace((d_a + d_b)[np.ix_(frag, frag)]))
    result = SolverResult(
        energy=energy,
        rdm1_alpha=d_a,
        rdm1_beta=d_b,
        rdm2=rdm2,
        mu_contribution=mu_contrib,
        converged=True,
        diagnostics={"solver": "FCI", **diag},
    )
    result.validate(ep.n_elec_alpha, ep.n_elec_beta)
    return result
