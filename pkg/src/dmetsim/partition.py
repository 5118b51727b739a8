"""Fragment partitions: orbital index sets, solver tags, equivalence classes."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

__all__ = ["SolverKind", "Partition"]


class SolverKind(str, Enum):
    FCI = "FCI"
    VQE = "VQE"
    MEANFIELD = "MEANFIELD"

    @property
    def correlated(self):
        """Mean-field fragments contribute energies but no fitting residuals."""
        return self is not SolverKind.MEANFIELD


@dataclass(frozen=True)
class Partition:
    """Disjoint fragments covering the treated orbital set.

    fragments: per-fragment orbital index tuples (order fixes the canonical
        fragment-then-bath embedding ordering).
    solvers: one SolverKind per fragment.
    equivalence_classes: groups of fragment indices that are translational
        copies; the first member of each class is its representative.  Every
        fragment must appear in exactly one class.  Defaults to singletons.
    """

    fragments: tuple[tuple[int, ...], ...]
    solvers: tuple[SolverKind, ...]
    equivalence_classes: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        frags = tuple(tuple(int(i) for i in f) for f in self.fragments)
        solvers = tuple(SolverKind(s) for s in self.solvers)
        classes = tuple(tuple(int(i) for i in c) for c in self.equivalence_classes)
        if not classes:
            classes = tuple((i,) for i in range(len(frags)))
        object.__setattr__(self, "fragments", frags)
        object.__setattr__(self, "solvers", solvers)
        object.__setattr__(self, "equivalence_classes", classes)

        if len(solvers) != len(frags):
            raise ValueError("one solver tag per fragment is required")
        if any(len(f) == 0 for f in frags):
            raise ValueError("empty fragment")
        seen = set()
        for f in frags:
            overlap = seen.intersection(f)
            if overlap:
                raise ValueError(f"fragments are not disjoint: orbitals {sorted(overlap)}")
            seen.update(f)
        members = [i for c in classes for i in c]
        if sorted(members) != list(range(len(frags))):
            raise ValueError("equivalence classes must cover every fragment exactly once")
        for c in classes:
            sizes = {len(frags[i]) for i in c}
            if len(sizes) != 1:
                raise ValueError(f"equivalence class {c} mixes fragment sizes")
            tags = {solvers[i] for i in c}
            if len(tags) != 1:
                raise ValueError(f"equivalence class {c} mixes solver tags")

    @property
    def n_fragments(self):
        return len(self.fragments)

    def validate_against(self, n_orb):
        """Reject orbitals outside [0, n_orb) and orbitals in no fragment."""
        covered = set()
        for k, f in enumerate(self.fragments):
            bad = [i for i in f if not 0 <= i < n_orb]
            if bad:
                raise ValueError(f"fragment {k} has orbital indices out of range: {bad}")
            covered.update(f)
        missing = sorted(set(range(n_orb)) - covered)
        if missing:
            raise ValueError(f"orbitals in no fragment: {missing}")

    def representative(self, class_index):
        return self.equivalence_classes[class_index][0]

    def multiplicity(self, class_index):
        return len(self.equivalence_classes[class_index])

    def class_solver(self, class_index):
        return self.solvers[self.representative(class_index)]

    def class_of_fragment(self, frag_index):
        for ci, c in enumerate(self.equivalence_classes):
            if frag_index in c:
                return ci
        raise ValueError(f"fragment {frag_index} missing from equivalence classes")
