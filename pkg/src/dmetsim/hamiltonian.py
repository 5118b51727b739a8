"""Orbital-space Hamiltonians over an orthonormal local basis.

The model is a quartic second-quantized Hamiltonian

    H = e_const + sum_ij h[i,j] a+_i a_j
              + 1/2 sum_ijkl g[i,j,k,l] a+_i a+_k a_l a_j

with real spin-restricted integrals, g in chemist notation (ij|kl) and
8-fold permutational symmetry.  Spin dependence lives in the densities,
amplitudes and correlation potentials downstream, never in the stored
integrals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Hamiltonian",
    "OrbitalLabel",
    "build_hubbard",
    "symmetrize_two_body",
    "two_body_symmetry_error",
]


@dataclass(frozen=True)
class OrbitalLabel:
    """Per-orbital annotation: which atom the orbital sits on, plus a shell tag."""

    orbital: int
    atom: int
    label: str = ""


def symmetrize_two_body(g):
    """Average a chemist-notation tensor over its 8 permutational images.

    Three sequential pairwise averages: each (a+b)/2 is commutative in IEEE
    arithmetic, so the result is machine-exactly 8-fold symmetric.
    """
    g = np.asarray(g, dtype=float)
    g = 0.5 * (g + g.transpose(1, 0, 2, 3))
    g = 0.5 * (g + g.transpose(0, 1, 3, 2))
    g = 0.5 * (g + g.transpose(2, 3, 0, 1))
    return g


def two_body_symmetry_error(g):
    """Largest deviation of g from exact 8-fold symmetry."""
    return float(np.max(np.abs(g - symmetrize_two_body(g))))


@dataclass(frozen=True)
class Hamiltonian:
    """Immutable supercell Hamiltonian in an orthonormal local-orbital basis.

    Attributes:
        n_orb: number of spatial orbitals.
        n_alpha, n_beta: electron counts per spin channel.
        e_const: scalar offset in hartree (nuclear repulsion / frozen core).
        h: (n_orb, n_orb) symmetric one-body matrix.
        g: (n_orb,)*4 chemist-notation two-electron tensor, 8-fold symmetric.
        orbital_labels: optional per-orbital (atom, shell) annotations.
    """

    n_orb: int
    n_alpha: int
    n_beta: int
    e_const: float
    h: np.ndarray
    g: np.ndarray
    orbital_labels: tuple[OrbitalLabel, ...] | None = field(default=None)

    def __post_init__(self):
        n = self.n_orb
        h = np.array(self.h, dtype=float)
        g = np.array(self.g, dtype=float)
        if h.shape != (n, n):
            raise ValueError(f"one-body matrix has shape {h.shape}, expected {(n, n)}")
        if g.shape != (n, n, n, n):
            raise ValueError(f"two-body tensor has shape {g.shape}, expected {(n,) * 4}")
        if np.max(np.abs(h - h.T), initial=0.0) > 1e-8:
            raise ValueError("one-body matrix is not symmetric")
        if two_body_symmetry_error(g) > 1e-8:
            raise ValueError("two-body tensor violates 8-fold permutational symmetry")
        if not (0 <= self.n_alpha <= n and 0 <= self.n_beta <= n):
            raise ValueError(
                f"electron counts ({self.n_alpha}, {self.n_beta}) do not fit in {n} orbitals"
            )
        if self.orbital_labels is not None and len(self.orbital_labels) != n:
            raise ValueError("orbital_labels length must equal n_orb")
        # Store machine-exact symmetric tensors so symmetric queries are bit-identical.
        h = 0.5 * (h + h.T)
        g = symmetrize_two_body(g)
        h.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "e_const", float(self.e_const))

    @property
    def n_elec(self):
        return self.n_alpha + self.n_beta

    def atom_of(self, orbital):
        """Atom index carrying `orbital` (defaults to the orbital index itself)."""
        if self.orbital_labels is None:
            return orbital
        return self.orbital_labels[orbital].atom

    def atom_map(self):
        """orbital -> atom mapping as a list, one entry per orbital."""
        return [self.atom_of(i) for i in range(self.n_orb)]


def build_hubbard(n_sites, t, u, periodic=False, n_alpha=None, n_beta=None):
    """Single-band Hubbard chain/ring: -t hopping on nearest neighbors, U on site.

    For a 2-site periodic ring the wrap-around bond coincides with the
    open-chain bond and is counted once.
    """
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    if n_alpha is None or n_beta is None:
        raise ValueError("explicit electron counts are required")
    h = np.zeros((n_sites, n_sites))
    bonds = {(i, i + 1) for i in range(n_sites - 1)}
    if periodic and n_sites > 2:
        bonds.add((n_sites - 1, 0))
    for i, j in bonds:
        h[i, j] = h[j, i] = -t
    g = np.zeros((n_sites,) * 4)
    for i in range(n_sites):
        g[i, i, i, i] = u
    labels = tuple(OrbitalLabel(orbital=i, atom=i, label="s") for i in range(n_sites))
    return Hamiltonian(
        n_orb=n_sites,
        n_alpha=n_alpha,
        n_beta=n_beta,
        e_const=0.0,
        h=h,
        g=g,
        orbital_labels=labels,
    )
