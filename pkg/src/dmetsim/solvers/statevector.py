"""Dense statevector kernels: Pauli application, rotations, RDM measurement.

Basis-state index bit q is the occupation of qubit q (little-endian), matching
the Jordan-Wigner convention in pauli.py.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "hartree_fock_state",
    "apply_word",
    "apply_pauli_rotation",
    "apply_annihilation",
    "measure_rdm_spin_orbital",
    "measure_rdm_blocks",
    "measure_rdms",
    "norm_check",
]


def hartree_fock_state(n_qubits, occupied):
    """Computational basis state with the listed qubits occupied."""
    amps = np.zeros(1 << n_qubits, dtype=complex)
    index = 0
    for q in occupied:
        index |= 1 << q
    amps[index] = 1.0
    return amps


def norm_check(amps, tol=1e-12):
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"statevector norm drifted to {norm}")
    return amps


def apply_word(amps, xmask, zmask, n_qubits):
    """Letter-form Pauli word acting on the statevector."""
    idx = np.arange(amps.size, dtype=np.int64)
    n_y = bin(xmask & zmask).count("1")
    pref = (1j) ** n_y
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)
    out = np.empty_like(amps)
    out[idx ^ xmask] = pref * signs * amps
    return out


def apply_pauli_rotation(amps, angle, xmask, zmask, n_qubits):
    """exp(i * angle * W) |psi> for a hermitian Pauli word W."""
    if xmask == 0 and zmask == 0:
        return np.exp(1j * angle) * amps
    return np.cos(angle) * amps + 1j * np.sin(angle) * apply_word(
        amps, xmask, zmask, n_qubits
    )


def apply_annihilation(amps, qubit):
    """a_q |psi> with the Jordan-Wigner sign string on qubits < q."""
    dim = amps.size
    idx = np.arange(dim, dtype=np.int64)
    occupied = ((idx >> qubit) & 1).astype(bool)
    below = np.int64((1 << qubit) - 1)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & below) & 1)
    out = np.zeros_like(amps)
    src = idx[occupied]
    out[src ^ (1 << qubit)] = signs[occupied] * amps[src]
    return out


def measure_rdm_spin_orbital(amps, n_so):
    """Spin-orbital RDMs: rdm1_so[u,v] = <a+_u a_v> and the chemist tensor
    gamma_so[p,q,r,s] = <a+_p a+_r a_s a_q>."""
    singles = [apply_annihilation(amps, u) for u in range(n_so)]
    single_mat = np.array(singles)
    rdm1_so = np.conj(single_mat) @ single_mat.T  # <a_u psi | a_v psi>

    pairs = np.empty((n_so, n_so, amps.size), dtype=complex)
    for v in range(n_so):
        for u in range(n_so):
            pairs[u, v] = apply_annihilation(singles[v], u) if u != v else 0.0
    flat = pairs.reshape(n_so * n_so, -1)
    gram2 = (np.conj(flat) @ flat.T).reshape(n_so, n_so, n_so, n_so)
    # <a+_p a+_r a_s a_q> = <a_r a_p psi | a_s a_q psi> = gram2[(r,p),(s,q)]
    gamma_so = gram2.transpose(1, 3, 0, 2)
    return rdm1_so, gamma_so


def measure_rdm_blocks(amps, n_spatial):
    """Spin-resolved 1-RDMs and chemist 2-RDM blocks from a statevector.

    Returns (rdm1_a, rdm1_b, blocks) with blocks = {(sigma, tau): G_st} and
    G_st[p,q,r,s] = <a+_ps a+_rt a_st a_qs> in spatial indices.
    """
    rdm1_so, gamma_so = measure_rdm_spin_orbital(amps, 2 * n_spatial)
    rdm1_a = rdm1_so[0::2, 0::2].real
    rdm1_b = rdm1_so[1::2, 1::2].real
    blocks = {
        (0, 0): gamma_so[0::2, 0::2, 0::2, 0::2].real,
        (0, 1): gamma_so[0::2, 0::2, 1::2, 1::2].real,
        (1, 0): gamma_so[1::2, 1::2, 0::2, 0::2].real,
        (1, 1): gamma_so[1::2, 1::2, 1::2, 1::2].real,
    }
    return rdm1_a, rdm1_b, blocks


def measure_rdms(amps, n_spatial):
    """Spin-resolved 1-RDMs plus the spin-summed chemist 2-RDM."""
    rdm1_a, rdm1_b, blocks = measure_rdm_blocks(amps, n_spatial)
    rdm2 = blocks[(0, 0)] + blocks[(0, 1)] + blocks[(1, 0)] + blocks[(1, 1)]
    return rdm1_a, rdm1_b, rdm2
