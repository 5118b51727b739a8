"""FCIDUMP reader/writer plus the orbital-label sidecar.

Grammar handled here: a namelist header

    &FCI NORB=n,NELEC=m,MS2=s,
     ORBSYM=1,1,...,
     ISYM=1,
    &END

(terminated by ``&END`` or ``/``), followed by free-format records
``value i j k l`` with 1-based indices.  ``(i j 0 0)`` records are
one-body, ``(0 0 0 0)`` is the core energy, everything else is a
chemist-notation two-electron integral.  Fortran ``D`` exponents are
accepted.
"""
from __future__ import annotations

import json
import re

import numpy as np

from .hamiltonian import Hamiltonian, OrbitalLabel

__all__ = [
    "FcidumpError",
    "load_fcidump",
    "write_fcidump",
    "load_orbital_labels",
    "write_orbital_labels",
]

# Duplicate records are tolerated when they agree to this; exporters vary.
DUPLICATE_TOL = 1e-10
WRITE_CUTOFF = 1e-12


class FcidumpError(ValueError):
    """Malformed header, bad index, or conflicting duplicate record."""


def _parse_header(text):
    m = re.search(r"&FCI(.*?)(?:&END|/)", text, re.DOTALL | re.IGNORECASE)
    if not m:
        raise FcidumpError("no &FCI ... &END header found")
    header, body_start = m.group(1), m.end()
    fields = {}
    for key, value in re.findall(r"([A-Za-z0-9_]+)\s*=\s*([^=,]+?)(?=\s*,|\s*$|\s+[A-Za-z0-9_]+\s*=)",
                                 header):
        fields[key.upper()] = value.strip()
    try:
        n_orb = int(fields["NORB"])
        n_elec = int(fields["NELEC"])
    except KeyError as exc:
        raise FcidumpError(f"header is missing {exc.args[0]}") from None
    except ValueError as exc:
        raise FcidumpError(f"unparseable header field: {exc}") from None
    try:
        ms2 = int(fields.get("MS2", "0"))
    except ValueError as exc:
        raise FcidumpError(f"unparseable MS2: {exc}") from None
    if n_orb <= 0:
        raise FcidumpError(f"NORB={n_orb} is not positive")
    if (n_elec + ms2) % 2 != 0:
        raise FcidumpError(f"NELEC={n_elec} and MS2={ms2} have inconsistent parity")
    n_alpha = (n_elec + ms2) // 2
    n_beta = (n_elec - ms2) // 2
    if n_beta < 0:
        raise FcidumpError(f"MS2={ms2} exceeds NELEC={n_elec}")
    return n_orb, n_alpha, n_beta, body_start


def _record_conflict(store, key, value, what):
    old = store.get(key)
    if old is not None and abs(old - value) > DUPLICATE_TOL:
        raise FcidumpError(
            f"conflicting duplicate {what} record {key}: {old!r} vs {value!r}"
        )
    if old is None:
        store[key] = value


def load_fcidump(path, labels_path=None):
    """Read an FCIDUMP file into a Hamiltonian (0-based, fully symmetrized)."""
    with open(path) as fh:
        text = fh.read()
    n_orb, n_alpha, n_beta, body_start = _parse_header(text)

    one_body = {}
    two_body = {}
    e_const = 0.0
    seen_core = False
    for lineno, line in enumerate(text[body_start:].splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 5:
            raise FcidumpError(f"record line {lineno}: expected 5 fields, got {len(tokens)}")
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(tok) for tok in tokens[1:])
        except ValueError as exc:
            raise FcidumpError(f"record line {lineno}: {exc}") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > n_orb:
                raise FcidumpError(f"record line {lineno}: index {idx} out of range 0..{n_orb}")
        if i == j == k == l == 0:
            if seen_core and abs(e_const - value) > DUPLICATE_TOL:
                raise FcidumpError(
                    f"conflicting duplicate core-energy record: {e_const!r} vs {value!r}"
                )
            if not seen_core:
                e_const = value
                seen_core = True
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"record line {lineno}: malformed one-body indices")
            key = (min(i, j) - 1, max(i, j) - 1)
            _record_conflict(one_body, key, value, "one-body")
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"record line {lineno}: malformed two-body indices")
            key = _canonical_g_key(i - 1, j - 1, k - 1, l - 1)
            _record_conflict(two_body, key, value, "two-body")

    h = np.zeros((n_orb, n_orb))
    for (i, j), value in one_body.items():
        h[i, j] = h[j, i] = value
    g = np.zeros((n_orb,) * 4)
    for (i, j, k, l), value in two_body.items():
        for p, q, r, s in _g_permutations(i, j, k, l):
            g[p, q, r, s] = value

    labels = None
    if labels_path is not None:
        labels = load_orbital_labels(labels_path, n_orb=n_orb)
    return Hamiltonian(
        n_orb=n_orb,
        n_alpha=n_alpha,
        n_beta=n_beta,
        e_const=e_const,
        h=h,
        g=g,
        orbital_labels=labels,
    )


def _g_permutations(i, j, k, l):
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


def _canonical_g_key(i, j, k, l):
    ij = (max(i, j), min(i, j))
    kl = (max(k, l), min(k, l))
    if ij < kl:
        ij, kl = kl, ij
    return (*ij, *kl)


def write_fcidump(ham, path):
    """Emit symmetry-unique records with magnitude above the write cutoff."""
    n = ham.n_orb
    ms2 = ham.n_alpha - ham.n_beta
    lines = [
        f" &FCI NORB={n},NELEC={ham.n_elec},MS2={ms2},",
        "  ORBSYM=" + "1," * n,
        "  ISYM=1,",
        " &END",
    ]
    fmt = "{:.16E} {:4d} {:4d} {:4d} {:4d}"
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    value = ham.g[i, j, k, l]
                    if abs(value) > WRITE_CUTOFF:
                        lines.append(fmt.format(value, i + 1, j + 1, k + 1, l + 1))
    for i in range(n):
        for j in range(i + 1):
            if abs(ham.h[i, j]) > WRITE_CUTOFF:
                lines.append(fmt.format(ham.h[i, j], i + 1, j + 1, 0, 0))
    lines.append(fmt.format(ham.e_const, 0, 0, 0, 0))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_orbital_labels(path, n_orb=None):
    """Sidecar format: JSON array of {"orbital": int, "atom": int, "label": str}."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise FcidumpError("label sidecar must be a JSON array")
    entries = {}
    for item in raw:
        try:
            entries[int(item["orbital"])] = OrbitalLabel(
                orbital=int(item["orbital"]),
                atom=int(item["atom"]),
                label=str(item.get("label", "")),
            )
        except (KeyError, TypeError) as exc:
            raise FcidumpError(f"bad label entry {item!r}: {exc}") from None
    count = n_orb if n_orb is not None else (max(entries) + 1 if entries else 0)
    missing = [i for i in range(count) if i not in entries]
    if missing:
        raise FcidumpError(f"label sidecar missing orbitals {missing}")
    return tuple(entries[i] for i in range(count))


def write_orbital_labels(labels, path):
    data = [
        {"orbital": lab.orbital, "atom": lab.atom, "label": lab.label}
        for lab in labels
    ]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")
