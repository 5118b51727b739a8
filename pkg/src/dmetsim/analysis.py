"""Post-processing: spin densities, exchange couplings, TDL extrapolation,
equation-of-state tables, and qubit-resource accounting.

Energy gaps are handled in meV per formula unit; the hartree -> meV conversion
lives here and nowhere else.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EOSTable",
    "GapSeries",
    "HARTREE_TO_MEV",
    "eos_analyze",
    "exchange_couplings",
    "fm_afii_gap",
    "mulliken_spin_density",
    "qubit_estimate",
    "read_eos_csv",
    "read_gap_csv",
    "tdl_extrapolate",
    "write_eos_csv",
    "write_gap_csv",
]

HARTREE_TO_MEV = 27211.386245988


def mulliken_spin_density(d_alpha, d_beta, atom_map, diagonal_only=False):
    """Per-atom spin density with off-diagonal terms split evenly across atoms.

    rho_x = sum_{i in x} (D_ii,a - D_ii,b)
          + 1/2 sum_{i in x, j not in x} (D_ij,a - D_ij,b)

    diagonal_only drops the second sum (the conventional population in an
    orthonormal basis, where off-diagonal overlap contributions vanish).
    """
    d_alpha = np.asarray(d_alpha, dtype=float)
    d_beta = np.asarray(d_beta, dtype=float)
    if d_alpha.shape != d_beta.shape or d_alpha.ndim != 2 or d_alpha.shape[0] != d_alpha.shape[1]:
        raise ValueError("spin density matrices must be square and congruent")
    n = d_alpha.shape[0]
    atom_map = list(atom_map)
    if len(atom_map) != n:
        raise ValueError(f"atom map covers {len(atom_map)} orbitals, expected {n}")
    spin = d_alpha - d_beta
    atoms = sorted(set(atom_map))
    rho = {x: 0.0 for x in atoms}
    for i in range(n):
        rho[atom_map[i]] += spin[i, i]
    if not diagonal_only:
        for i in range(n):
            for j in range(n):
                if i != j and atom_map[i] != atom_map[j]:
                    rho[atom_map[i]] += 0.5 * spin[i, j]
    return rho


def exchange_couplings(e_fm, e_afi, e_afii):
    """Heisenberg couplings from the three collinear orderings (per formula unit).

    J1 = (E_AFI - E_FM) / 16,  J2 = (4 E_AFII - 3 E_AFI - E_FM) / 48.
    """
    j1 = (e_afi - e_fm) / 16.0
    j2 = (4.0 * e_afii - 3.0 * e_afi - e_fm) / 48.0
    return j1, j2


def fm_afii_gap(j1, j2):
    """E_FM - E_AFII = -12 (J1 + J2)."""
    return -12.0 * (j1 + j2)


@dataclass(frozen=True)
class GapSeries:
    """(k-point count, gap in meV) pairs for finite-size extrapolation."""

    points: tuple

    def __post_init__(self):
        pts = tuple((int(nk), float(gap)) for nk, gap in self.points)
        if any(nk < 1 for nk, _ in pts):
            raise ValueError("k-point counts must be >= 1")
        if len({nk for nk, _ in pts}) != len(pts):
            raise ValueError("k-point counts must be distinct")
        object.__setattr__(self, "points", pts)


def tdl_extrapolate(series):
    """Least-squares line of gap vs n_k^(-1/3), evaluated at n_k -> infinity."""
    points = series.points if isinstance(series, GapSeries) else GapSeries(tuple(series)).points
    if len(points) < 2:
        raise ValueError("extrapolation needs at least 2 points")
    x = np.array([nk ** (-1.0 / 3.0) for nk, _ in points])
    y = np.array([gap for _, gap in points])
    if np.ptp(x) < 1e-12:
        raise ValueError("coincident abscissae")
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept)


@dataclass(frozen=True)
class EOSTable:
    """Equation-of-state samples plus the parabolic minimum and shifted columns."""

    rows: tuple                 # (parameter, energy), parameter ascending
    minimum: tuple | None       # (parameter_min, energy_min) or None if refused
    shifted: tuple | None       # rows relative to the minimum
    diagnostic: str = ""

    @property
    def shift_available(self):
        return self.minimum is not None


def eos_analyze(rows):
    """Locate the interior minimum by the parabola through the lowest sample.

    A minimum at either end of the scan refuses the shift (the absolute table
    is still returned with a diagnostic).
    """
    rows = tuple((float(p), float(e)) for p, e in rows)
    if len(rows) < 3:
        raise ValueError("need at least 3 scan points")
    params = [p for p, _ in rows]
    if any(b <= a for a, b in zip(params, params[1:])):
        raise ValueError("geometry parameters must be strictly increasing")
    energies = [e for _, e in rows]
    k = int(np.argmin(energies))
    if k == 0 or k == len(rows) - 1:
        return EOSTable(
            rows=rows, minimum=None, shifted=None,
            diagnostic="minimum sits on the scan boundary; shift refused",
        )
    (x0, y0), (x1, y1), (x2, y2) = rows[k - 1], rows[k], rows[k + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom
    if a <= 0:
        return EOSTable(
            rows=rows, minimum=None, shifted=None,
            diagnostic="parabola through the lowest point is not convex; shift refused",
        )
    x_min = -b / (2.0 * a)
    e_min = c - b ** 2 / (4.0 * a)
    shifted = tuple((p - x_min, e - e_min) for p, e in rows)
    return EOSTable(rows=rows, minimum=(float(x_min), float(e_min)), shifted=shifted)


def qubit_estimate(n_orb_cell, n_k, max_fragment):
    """Spin-orbital counts: full supercell vs the largest fragment+bath embedding."""
    if n_orb_cell <= 0 or n_k <= 0 or max_fragment <= 0:
        raise ValueError("counts must be positive")
    without_embedding = 2 * n_orb_cell * n_k
    with_embedding = 2 * (2 * max_fragment)
    return without_embedding, with_embedding


def write_eos_csv(rows, path, header=("parameter", "energy")):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p, e in rows:
            writer.writerow([f"{p:.12g}", f"{e:.12g}"])


def read_eos_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return tuple((float(p), float(e)) for p, e in reader if p)


def write_gap_csv(series, path):
    points = series.points if isinstance(series, GapSeries) else tuple(series)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_k", "gap_mev"])
        for nk, gap in points:
            writer.writerow([nk, f"{gap:.12g}"])


def read_gap_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return GapSeries(tuple((int(nk), float(gap)) for nk, gap in reader if nk))
