"""Drive an external electronic-structure package (pyscf) to produce a
supercell Hamiltonian in an orthonormal localized basis, dumped as
FCIDUMP + orbital-label sidecar + manifest.

The k-mesh is folded by building the explicit real-space supercell and
running a Gamma-point mean field on it; localization defaults to symmetric
(Loewdin) orthogonalization of the atomic orbitals.  Everything pyscf-specific
is confined to export_supercell; the dump/manifest machinery below it is
package-independent and also serves pre-computed integrals.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ExportRequest",
    "ExportError",
    "export_supercell",
    "export_from_integrals",
    "load_geometry",
    "symmetrize_one_body",
    "symmetrize_two_body",
]

WRITE_CUTOFF = 1e-12
SYMMETRY_TOL = 1e-10


class ExportError(RuntimeError):
    """External-package failure, tagged with the failing stage."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass
class ExportRequest:
    lattice: np.ndarray            # 3x3 lattice vectors (Angstrom)
    atoms: list                    # [(symbol, (x, y, z)), ...] Cartesian Angstrom
    basis: str = "gth-szv"
    pseudopotential: str | None = "gth-pade"
    k_mesh: tuple = (1, 1, 1)
    localization: str = "lowdin"   # lowdin | iao (iao needs pyscf support)
    vacuum: float = 0.0            # padding added along each lattice vector
    out_dir: str = "export_out"
    fcidump_name: str = "FCIDUMP"

    def __post_init__(self):
        self.lattice = np.asarray(self.lattice, dtype=float).reshape(3, 3)
        self.k_mesh = tuple(int(k) for k in self.k_mesh)
        if any(k < 1 for k in self.k_mesh):
            raise ValueError("k-mesh entries must be >= 1")

    def padded_lattice(self):
        if not self.vacuum:
            return self.lattice
        out = self.lattice.copy()
        for i in range(3):
            norm = np.linalg.norm(out[i])
            out[i] *= (norm + self.vacuum) / norm
        return out


def load_geometry(path):
    """Geometry file: {"lattice": 3x3, "atoms": [[symbol, [x,y,z]], ...],
    "vacuum": optional float}."""
    with open(path) as fh:
        raw = json.load(fh)
    atoms = [(str(sym), tuple(float(x) for x in pos)) for sym, pos in raw["atoms"]]
    return np.asarray(raw["lattice"], dtype=float), atoms, float(raw.get("vacuum", 0.0))


def symmetrize_one_body(h):
    h = np.asarray(h, dtype=float)
    if np.max(np.abs(h - h.T)) > 1e-6:
        raise ExportError("integral-transform", "one-body matrix is far from symmetric")
    return 0.5 * (h + h.T)


def symmetrize_two_body(g):
    g = np.asarray(g, dtype=float)
    g = 0.5 * (g + g.transpose(1, 0, 2, 3))
    g = 0.5 * (g + g.transpose(0, 1, 3, 2))
    g = 0.5 * (g + g.transpose(2, 3, 0, 1))
    return g


def _write_fcidump(path, n_orb, n_elec, ms2, h, g, e_const):
    lines = [
        f" &FCI NORB={n_orb},NELEC={n_elec},MS2={ms2},",
        "  ORBSYM=" + "1," * n_orb,
        "  ISYM=1,",
        " &END",
    ]
    fmt = "{:.16E} {:4d} {:4d} {:4d} {:4d}"
    for i in range(n_orb):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    if abs(g[i, j, k, l]) > WRITE_CUTOFF:
                        lines.append(fmt.format(g[i, j, k, l], i + 1, j + 1, k + 1, l + 1))
    for i in range(n_orb):
        for j in range(i + 1):
            if abs(h[i, j]) > WRITE_CUTOFF:
                lines.append(fmt.format(h[i, j], i + 1, j + 1, 0, 0))
    lines.append(fmt.format(e_const, 0, 0, 0, 0))
    Path(path).write_text("\n".join(lines) + "\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def export_from_integrals(h, g, n_elec, e_const=0.0, ms2=0, labels=None,
                          out_dir="export_out", fcidump_name="FCIDUMP",
                          extra_manifest=None):
    """Dump pre-computed orthonormal-basis integrals (the package-free path).

    labels: per-orbital (atom_index, label_string) pairs; defaults to one atom
    per orbital.  Returns the manifest dictionary.
    """
    h = symmetrize_one_body(h)
    g = symmetrize_two_body(np.asarray(g, dtype=float))
    if np.max(np.abs(h - h.T)) > SYMMETRY_TOL:
        raise ExportError("dump", "one-body symmetrization failed")
    n_orb = h.shape[0]
    if g.shape != (n_orb,) * 4:
        raise ExportError("dump", f"two-body tensor shape {g.shape} != {(n_orb,) * 4}")
    if labels is None:
        labels = [(i, "orb") for i in range(n_orb)]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dump_path = out / fcidump_name
    _write_fcidump(dump_path, n_orb, int(n_elec), int(ms2), h, g, float(e_const))
    labels_path = out / "labels.json"
    with open(labels_path, "w") as fh:
        json.dump(
            [{"orbital": i, "atom": int(a), "label": str(lab)}
             for i, (a, lab) in enumerate(labels)],
            fh, indent=1,
        )
        fh.write("\n")
    manifest = {
        "n_orb": int(n_orb),
        "n_elec": int(n_elec),
        "ms2": int(ms2),
        "fcidump": dump_path.name,
        "labels": labels_path.name,
        "checksum": _sha256(dump_path),
    }
    manifest.update(extra_manifest or {})
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def _require_pyscf():
    try:
        import pyscf  # noqa: F401
        from pyscf.pbc import gto, scf, tools  # noqa: F401
    except ImportError as exc:
        raise ExportError(
            "scf", f"the external electronic-structure package is not importable: {exc}"
        ) from None


def export_supercell(req):
    """Full pipeline: supercell SCF -> localization -> transform -> dump.

    Stages are tagged so external-package failures point at the right phase.
    """
    _require_pyscf()
    from pyscf.pbc import gto as pgto
    from pyscf.pbc import scf as pscf
    from pyscf.pbc import tools as ptools

    try:
        cell = pgto.Cell()
        cell.a = req.padded_lattice()
        cell.atom = [(sym, pos) for sym, pos in req.atoms]
        cell.basis = req.basis
        if req.pseudopotential:
            cell.pseudo = req.pseudopotential
        cell.unit = "A"
        cell.verbose = 0
        cell.build()
        scell = ptools.super_cell(cell, req.k_mesh)
        scell.verbose = 0
        mf = pscf.RHF(scell).density_fit()
        mf.kernel()
        if not mf.converged:
            raise RuntimeError("supercell mean field did not converge")
    except ExportError:
        raise
    except Exception as exc:
        raise ExportError("scf", str(exc)) from exc

    try:
        overlap = np.asarray(mf.get_ovlp())
        if req.localization == "lowdin":
            eigs, vecs = np.linalg.eigh(overlap)
            if eigs.min() < 1e-10:
                raise RuntimeError("AO overlap is numerically singular")
            x = vecs @ np.diag(eigs ** -0.5) @ vecs.T
        elif req.localization == "iao":
            from pyscf import lo
            iao = lo.iao.iao(scell, mf.mo_coeff[:, mf.mo_occ > 0])
            if iao.shape[0] != iao.shape[1]:
                # IAOs span only the valence space; a full-space dump would
                # need the PAO complement, which this adapter does not build.
                raise RuntimeError(
                    "iao localization does not span the computational basis "
                    f"({iao.shape[1]} of {iao.shape[0]} orbitals); use lowdin"
                )
            x = lo.vec_lowdin(iao, overlap)
        else:
            raise RuntimeError(f"unknown localization {req.localization!r}")
    except ExportError:
        raise
    except Exception as exc:
        raise ExportError("localization", str(exc)) from exc

    try:
        hcore = np.asarray(mf.get_hcore())
        h_loc = x.T @ hcore @ x
        eri = mf.with_df.ao2mo(x, compact=False)
        n_orb = x.shape[1]
        g_loc = np.asarray(eri).reshape(n_orb, n_orb, n_orb, n_orb)
        e_const = float(scell.energy_nuc())
    except Exception as exc:
        raise ExportError("integral-transform", str(exc)) from exc

    try:
        labels = [(int(al[0]), f"{al[1]}{al[2]}{al[3]}".strip())
                  for al in scell.ao_labels(fmt=None)]
        manifest = export_from_integrals(
            h_loc, g_loc, n_elec=scell.nelectron, e_const=e_const,
            ms2=scell.spin, labels=labels, out_dir=req.out_dir,
            fcidump_name=req.fcidump_name,
            extra_manifest={
                "k_mesh": list(req.k_mesh),
                "basis": req.basis,
                "pseudopotential": req.pseudopotential,
                "localization": req.localization,
                "scf_energy": float(mf.e_tot),
            },
        )
    except ExportError as exc:
        raise ExportError("dump", str(exc)) from exc
    return manifest
