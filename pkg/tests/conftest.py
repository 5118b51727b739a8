import numpy as np
import pytest

from dmetsim.hamiltonian import Hamiltonian, symmetrize_two_body


def random_hamiltonian(n_orb, n_alpha, n_beta, seed, one_body_scale=1.0,
                       two_body_scale=0.3, e_const=0.0):
    """Random symmetric integrals, weak enough for stable SCF."""
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((n_orb, n_orb)) * one_body_scale
    h = 0.5 * (h + h.T)
    g = symmetrize_two_body(rng.standard_normal((n_orb,) * 4) * two_body_scale)
    return Hamiltonian(n_orb=n_orb, n_alpha=n_alpha, n_beta=n_beta,
                       e_const=e_const, h=h, g=g)


def random_idempotent_density(n_orb, n_occ, seed):
    """D = C C^T with orthonormal occupied columns."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n_orb, n_orb)))
    occ = q[:, :n_occ]
    return occ @ occ.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
