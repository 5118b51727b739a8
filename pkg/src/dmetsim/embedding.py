"""Bath construction and embedding-space Hamiltonians.

The bath comes from an SVD of the spin-averaged density block between the
fragment and its environment; the supercell Hamiltonian is then projected
into fragment+bath space with the environment density folded into a
Coulomb-minus-same-spin-exchange potential.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .hamiltonian import symmetrize_two_body
from .meanfield import coulomb, exchange

__all__ = [
    "BathProjector",
    "EmbeddingProblem",
    "build_bath",
    "build_embedding_hamiltonian",
    "transform_two_electron",
    "fragment_energy",
]

BATH_THRESHOLD = 1e-9
# Singular values closer than this are treated as one degenerate block.
DEGENERACY_TOL = 1e-12
ROUNDING_LIMIT = 0.35


@dataclass(frozen=True)
class BathProjector:
    """Columns: fragment unit vectors first, then environment-supported bath."""

    P: np.ndarray
    singular_values: np.ndarray
    fragment: tuple[int, ...]
    n_frag: int
    n_bath: int

    @property
    def n_emb(self):
        return self.n_frag + self.n_bath


@dataclass(frozen=True)
class EmbeddingProblem:
    """Projected integrals plus the bookkeeping solvers need.

    h_emb_alpha/h_emb_beta exclude the chemical potential; solvers subtract
    mu on the fragment diagonal themselves (see solver_one_body).
    e_const_emb collects the environment energy and the supercell offset; it
    never enters fragment energies.
    """

    h_emb_alpha: np.ndarray
    h_emb_beta: np.ndarray
    g_emb: np.ndarray
    mu: float
    n_frag: int
    n_elec_alpha: int
    n_elec_beta: int
    e_const_emb: float
    rounding_residual: float = 0.0

    @property
    def n_emb(self):
        return self.h_emb_alpha.shape[0]

    @property
    def frag_indices(self):
        return tuple(range(self.n_frag))

    @property
    def n_elec(self):
        return self.n_elec_alpha + self.n_elec_beta

    def with_mu(self, mu):
        return replace(self, mu=float(mu))

    def solver_one_body(self):
        """(h_alpha, h_beta) with -mu applied on the fragment diagonal."""
        shift = np.zeros(self.n_emb)
        shift[: self.n_frag] = -self.mu
        return self.h_emb_alpha + np.diag(shift), self.h_emb_beta + np.diag(shift)


def _check_density(d, tag):
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"{tag} density must be square")
    if np.max(np.abs(d - d.T)) > 1e-8:
        raise ValueError(f"{tag} density is not symmetric")
    d = 0.5 * (d + d.T)
    eigs = np.linalg.eigvalsh(d)
    if eigs[0] < -1e-8 or eigs[-1] > 1.0 + 1e-8:
        raise ValueError(
            f"{tag} density has eigenvalues outside [0, 1]: "
            f"[{eigs[0]:.3e}, {eigs[-1]:.3e}]"
        )
    return d


def build_bath(d_alpha, d_beta, fragment, threshold=BATH_THRESHOLD):
    """SVD bath from the fragment/environment block of the averaged density.

    Degenerate singular values straddling the threshold are kept as a whole
    block so the retained space is deterministic.
    """
    d_alpha = _check_density(d_alpha, "alpha")
    d_beta = _check_density(d_beta, "beta")
    n = d_alpha.shape[0]
    fragment = tuple(int(i) for i in fragment)
    if len(fragment) == 0:
        raise ValueError("empty fragment")
    if len(set(fragment)) != len(fragment):
        raise ValueError("fragment indices repeat")
    if any(not 0 <= i < n for i in fragment):
        raise ValueError("fragment index out of range")
    env = sorted(set(range(n)) - set(fragment))
    n_frag = len(fragment)

    if not env:
        p = np.zeros((n, n_frag))
        for col, i in enumerate(fragment):
            p[i, col] = 1.0
        return BathProjector(
            P=p, singular_values=np.zeros(0), fragment=fragment,
            n_frag=n_frag, n_bath=0,
        )

    d_bar = 0.5 * (d_alpha + d_beta)
    block = d_bar[np.ix_(list(fragment), env)]
    _, sigma, vt = np.linalg.svd(block, full_matrices=False)
    n_keep = int(np.sum(sigma > threshold))
    while 0 < n_keep < len(sigma) and sigma[n_keep - 1] - sigma[n_keep] < DEGENERACY_TOL:
        n_keep += 1

    p = np.zeros((n, n_frag + n_keep))
    for col, i in enumerate(fragment):
        p[i, col] = 1.0
    for col in range(n_keep):
        p[env, n_frag + col] = vt[col]

    ortho = np.max(np.abs(p.T @ p - np.eye(n_frag + n_keep)))
    if ortho > 1e-10:
        raise ValueError(f"bath projector lost orthonormality ({ortho:.3e})")
    return BathProjector(
        P=p, singular_values=sigma[:n_keep].copy(), fragment=fragment,
        n_frag=n_frag, n_bath=n_keep,
    )


def transform_two_electron(g, p):
    """Four-index transform of a chemist-notation tensor by projector columns."""
    g_emb = np.einsum("pqrs,pi,qj,rk,sl->ijkl", g, p, p, p, p, optimize=True)
    # Exact resymmetrization keeps downstream symmetry checks bit-clean.
    return symmetrize_two_body(g_emb)


def build_embedding_hamiltonian(ham, mf, proj, mu=0.0):
    """Project onto fragment+bath space with the environment potential folded in.

    The environment density D_env = D - P (P^T D P) P^T generates a
    Coulomb-minus-same-spin-exchange one-body potential per spin channel.
    Electron counts come from rounding the embedded mean-field occupancies.
    """
    p = proj.P
    if p.shape[0] != ham.n_orb:
        raise ValueError("projector does not match the Hamiltonian dimension")
    d_emb = {}
    d_env = {}
    for spin, d in (("a", mf.D_alpha), ("b", mf.D_beta)):
        d_emb[spin] = p.T @ d @ p
        d_env[spin] = d - p @ d_emb[spin] @ p.T
    j_env = coulomb(ham.g, d_env["a"] + d_env["b"])
    h_emb = {}
    for spin in ("a", "b"):
        k_env = exchange(ham.g, d_env[spin])
        h_s = p.T @ (ham.h + j_env - k_env) @ p
        h_emb[spin] = 0.5 * (h_s + h_s.T)
    g_emb = transform_two_electron(ham.g, p)

    n_elec = {}
    residual = 0.0
    for spin in ("a", "b"):
        occ = float(np.trace(d_emb[spin]))
        n_elec[spin] = int(round(occ))
        residual = max(residual, abs(occ - n_elec[spin]))
    if residual >= ROUNDING_LIMIT:
        raise ValueError(
            f"embedding occupancy is {residual:.3f} away from an integer; "
            "refit the chemical potential or choose a different fragmentation"
        )

    e_env = 0.0
    for spin in ("a", "b"):
        k_env = exchange(ham.g, d_env[spin])
        e_env += np.einsum("ij,ji->", ham.h, d_env[spin])
        e_env += 0.5 * np.einsum("ij,ji->", j_env - k_env, d_env[spin])
    return EmbeddingProblem(
        h_emb_alpha=h_emb["a"],
        h_emb_beta=h_emb["b"],
        g_emb=g_emb,
        mu=float(mu),
        n_frag=proj.n_frag,
        n_elec_alpha=n_elec["a"],
        n_elec_beta=n_elec["b"],
        e_const_emb=float(ham.e_const + e_env),
        rounding_residual=residual,
    )


def fragment_energy(ep, rdm1_alpha, rdm1_beta, rdm2, ham, proj):
    """Democratic fragment energy: only terms with the first index in the fragment.

    E_x = sum_{i in frag, j} 1/2 (h_bare + h_emb,s)[i,j] rdm1_s[j,i]   (both spins)
        + 1/2 sum_{i in frag, jkl} g_emb(ij|kl) rdm2[i,j,k,l]
    with h_bare = P^T h P and h_emb excluding the chemical potential.
    """
    frag = list(ep.frag_indices)
    h_bare = proj.P.T @ ham.h @ proj.P
    energy = 0.0
    for h_s, rdm in ((ep.h_emb_alpha, rdm1_alpha), (ep.h_emb_beta, rdm1_beta)):
        weighted = 0.5 * (h_bare + h_s)
        energy += np.einsum("ij,ji->", weighted[frag, :], rdm[:, frag])
    energy += 0.5 * np.einsum("ijkl,ijkl->", ep.g_emb[frag], rdm2[frag])
    return float(energy)
