"""Pauli-word algebra and the Jordan-Wigner map.

Spin orbitals are interleaved onto qubits: qubit(p, alpha) = 2p,
qubit(p, beta) = 2p + 1, with qubit q stored as bit q of the basis-state
index (|0> empty, |1> occupied).  Words are kept as (xmask, zmask) pairs in
letter form: bit patterns (x,z) = (1,0) -> X, (0,1) -> Z, (1,1) -> Y.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .result import SolverError

__all__ = [
    "PauliSum",
    "jordan_wigner",
    "jordan_wigner_integrals",
    "ladder_terms",
    "product_terms",
    "word_to_string",
    "words_commute",
]

QUBIT_CAP = 24
COEFF_CUTOFF = 1e-12


def word_to_string(xmask, zmask, n_qubits):
    letters = []
    for q in range(n_qubits):
        x = (xmask >> q) & 1
        z = (zmask >> q) & 1
        letters.append("IXZY"[x + 2 * z])
    return "".join(letters)


def _popcount(value):
    return bin(value).count("1")


def _to_xz(coeff, xmask, zmask):
    """Letter form -> X^x Z^z product form (Y = i X Z)."""
    return coeff * (1j) ** _popcount(xmask & zmask), xmask, zmask


def _to_letter(coeff, xmask, zmask):
    return coeff * (-1j) ** _popcount(xmask & zmask), xmask, zmask


def _multiply(t1, t2):
    """Product of two letter-form terms, returned in letter form."""
    c1, x1, z1 = _to_xz(*t1)
    c2, x2, z2 = _to_xz(*t2)
    sign = -1.0 if _popcount(z1 & x2) & 1 else 1.0
    return _to_letter(c1 * c2 * sign, x1 ^ x2, z1 ^ z2)


def ladder_terms(qubit, dagger):
    """a(+)_q as two letter-form terms with the Z string on qubits < q."""
    zstring = (1 << qubit) - 1
    sign = -1j if dagger else 1j
    return [
        (0.5, 1 << qubit, zstring),
        (0.5 * sign, 1 << qubit, zstring | (1 << qubit)),
    ]


def product_terms(operators):
    """Expand a product of ladder operators [(qubit, dagger), ...] into terms."""
    terms = [(1.0 + 0.0j, 0, 0)]
    for qubit, dagger in operators:
        factors = ladder_terms(qubit, dagger)
        terms = [_multiply(t, f) for t in terms for f in factors]
    return terms


class PauliSum:
    """Real-coefficient sum of Pauli words for a hermitian operator."""

    def __init__(self, n_qubits):
        if n_qubits > QUBIT_CAP:
            raise SolverError(f"{n_qubits} qubits exceeds the cap of {QUBIT_CAP}")
        self.n_qubits = n_qubits
        self._terms = {}

    def add(self, coeff, xmask, zmask):
        key = (xmask, zmask)
        self._terms[key] = self._terms.get(key, 0.0) + coeff

    def add_operator_product(self, coeff, operators):
        for c, x, z in product_terms(operators):
            self.add(coeff * c, x, z)

    def finalize(self):
        """Merge, drop negligible terms, and enforce real coefficients."""
        cleaned = {}
        for (x, z), c in self._terms.items():
            if abs(c.imag) > 1e-9:
                raise SolverError(
                    f"non-hermitian input: word {word_to_string(x, z, self.n_qubits)} "
                    f"has imaginary coefficient {c.imag:.3e}"
                )
            if abs(c.real) > COEFF_CUTOFF:
                cleaned[(x, z)] = float(c.real)
        self._terms = cleaned
        return self

    def items(self):
        return sorted(self._terms.items())

    def raw_items(self):
        """Unfinalized (possibly complex) terms, for anti-hermitian generators."""
        return sorted(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def terms_as_strings(self):
        return [
            (c, word_to_string(x, z, self.n_qubits)) for (x, z), c in self.items()
        ]

    def coefficient(self, word):
        xmask = zmask = 0
        for q, letter in enumerate(word):
            if letter in "XY":
                xmask |= 1 << q
            if letter in "ZY":
                zmask |= 1 << q
        return self._terms.get((xmask, zmask), 0.0)

    def to_sparse(self):
        """Dense-basis sparse matrix (2^n x 2^n CSR)."""
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, data = [], [], []
        for (x, z), c in self._terms.items():
            pref = c * (1j) ** _popcount(x & z)
            signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
            rows.append(idx ^ x)
            cols.append(idx)
            data.append(pref * signs)
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        return sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        ).tocsr()

    def dump(self, path):
        """One term per line: "coeff word"."""
        with open(path, "w") as fh:
            for c, word in self.terms_as_strings():
                fh.write(f"{c!r} {word}\n")


def words_commute(x1, z1, x2, z2):
    """Pauli words commute iff they anticommute on an even number of qubits."""
    return (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2 == 0


def _spin_orbital(p, spin):
    return 2 * p + spin


def jordan_wigner_integrals(h_a, h_b, g_aa, g_ab, g_bb, constant=0.0):
    """Map spin-resolved chemist integrals onto interleaved qubits.

    H = sum_s h_s[pq] a+_ps a_qs
      + 1/2 sum_st sum_pqrs g_st(pq|rs) a+_ps a+_rt a_st a_qs + constant,
    with g_ba recovered from g_ab by the pair swap (pq|rs) -> (rs|pq).
    """
    n = h_a.shape[0]
    ps = PauliSum(2 * n)
    if constant:
        ps.add(complex(constant), 0, 0)
    for spin, h_s in ((0, h_a), (1, h_b)):
        for p in range(n):
            for q in range(n):
                if abs(h_s[p, q]) < 1e-14:
                    continue
                ps.add_operator_product(
                    h_s[p, q],
                    [(_spin_orbital(p, spin), True), (_spin_orbital(q, spin), False)],
                )
    blocks = (
        (0, 0, g_aa),
        (1, 1, g_bb),
        (0, 1, g_ab),
        (1, 0, np.transpose(g_ab, (2, 3, 0, 1))),
    )
    for sigma, tau, g in blocks:
        for p in range(n):
            for q in range(n):
                for r in range(n):
                    for s in range(n):
                        value = g[p, q, r, s]
                        if abs(value) < 1e-14:
                            continue
                        ps.add_operator_product(
                            0.5 * value,
                            [
                                (_spin_orbital(p, sigma), True),
                                (_spin_orbital(r, tau), True),
                                (_spin_orbital(s, tau), False),
                                (_spin_orbital(q, sigma), False),
                            ],
                        )
    return ps.finalize()


def jordan_wigner(ep, include_constant=False):
    """Qubit Hamiltonian of an embedding problem, -mu fragment term included."""
    h_a, h_b = ep.solver_one_body()
    g = ep.g_emb
    constant = ep.e_const_emb if include_constant else 0.0
    return jordan_wigner_integrals(h_a, h_b, g, g, g, constant=constant)
