"""DMET orchestration: chemical-potential fitting, correlation-potential
self-consistency, and democratic energy assembly.

One-shot mode stops after the first chemical-potential fit; self-consistent
mode alternates { mu-fit, u-fit, dressed-Fock rediagonalization, fresh baths }
until the correlation-potential update and the cell energy settle.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.optimize

log = logging.getLogger("dmet.driver")

from .embedding import build_bath, build_embedding_hamiltonian, fragment_energy
from .meanfield import fock_matrices, rediagonalize_dressed, unrestricted_hartree_fock
from .solvers import solve as solve_embedding

__all__ = [
    "CorrelationPotential",
    "DMETOptions",
    "DMETState",
    "DmetError",
    "fit_chemical_potential",
    "fit_correlation_potential",
    "run_dmet",
]

MU_TOL = 1e-6
MU_STEP = 0.1
MU_MAX_EXPANSIONS = 10
U_UPDATE_TOL = 1e-5
U_MAX_ITER = 100
U_GRAD_STEP = 1e-6
E_CELL_TOL = 1e-7
MAX_OUTER = 50


class DmetError(RuntimeError):
    pass


@dataclass
class CorrelationPotential:
    """Per-equivalence-class symmetric fragment blocks (one pair per spin)."""

    blocks: list  # [(u_alpha, u_beta), ...] aligned with partition.equivalence_classes

    @classmethod
    def zeros(cls, partition):
        blocks = []
        for ci in range(len(partition.equivalence_classes)):
            size = len(partition.fragments[partition.representative(ci)])
            blocks.append((np.zeros((size, size)), np.zeros((size, size))))
        return cls(blocks=blocks)

    def copy(self):
        return CorrelationPotential(
            blocks=[(ua.copy(), ub.copy()) for ua, ub in self.blocks]
        )

    def expand(self, partition, n_orb):
        """Full-lattice (U_alpha, U_beta), each class block replicated onto
        every member fragment; cross-fragment entries stay zero."""
        u_a = np.zeros((n_orb, n_orb))
        u_b = np.zeros((n_orb, n_orb))
        for ci, members in enumerate(partition.equivalence_classes):
            block_a, block_b = self.blocks[ci]
            for fi in members:
                idx = list(partition.fragments[fi])
                if block_a.shape != (len(idx), len(idx)):
                    raise ValueError(
                        f"correlation-potential block {ci} has shape "
                        f"{block_a.shape}, fragment needs {(len(idx), len(idx))}"
                    )
                u_a[np.ix_(idx, idx)] = block_a
                u_b[np.ix_(idx, idx)] = block_b
        return u_a, u_b

    def inf_norm_diff(self, other):
        return max(
            max(np.max(np.abs(ua - va)), np.max(np.abs(ub - vb)))
            for (ua, ub), (va, vb) in zip(self.blocks, other.blocks)
        )

    def max_abs(self):
        return max(
            max(np.max(np.abs(ua)), np.max(np.abs(ub))) for ua, ub in self.blocks
        )


def _pack(u, class_indices):
    """Upper-triangle entries of both spin blocks for the listed classes."""
    parts = []
    for ci in class_indices:
        for spin in (0, 1):
            block = u.blocks[ci][spin]
            iu = np.triu_indices(block.shape[0])
            parts.append(block[iu])
    return np.concatenate(parts) if parts else np.zeros(0)


def _unpack(x, template, class_indices):
    u = template.copy()
    offset = 0
    for ci in class_indices:
        size = u.blocks[ci][0].shape[0]
        count = size * (size + 1) // 2
        for spin in (0, 1):
            block = np.zeros((size, size))
            iu = np.triu_indices(size)
            block[iu] = x[offset:offset + count]
            block = block + block.T - np.diag(np.diag(block))
            pair = list(u.blocks[ci])
            pair[spin] = block
            u.blocks[ci] = tuple(pair)
            offset += count
    return u


@dataclass
class DMETOptions:
    mf_guess: str = "AFM"
    bath_threshold: float = 1e-9
    mu_tol: float = MU_TOL
    u_update_tol: float = U_UPDATE_TOL
    e_cell_tol: float = E_CELL_TOL
    max_outer: int = MAX_OUTER
    vqe_options: object = None
    log_path: str | None = None


@dataclass
class DMETState:
    mu: float
    u: CorrelationPotential
    fragment_energies: list  # per class: dict with energy, multiplicity, ...
    e_cell: float
    electron_count: float
    history: list
    converged: bool
    mean_field: object = None
    mode: str = "oneshot"

    @property
    def per_fragment(self):
        return self.fragment_energies


def _class_embeddings(ham, mf, partition, options):
    """Bath + embedding problem (mu = 0) for each class representative."""
    projs = {}
    eps = {}
    for ci in range(len(partition.equivalence_classes)):
        rep = partition.representative(ci)
        proj = build_bath(
            mf.D_alpha, mf.D_beta, partition.fragments[rep],
            threshold=options.bath_threshold,
        )
        projs[ci] = proj
        eps[ci] = build_embedding_hamiltonian(ham, mf, proj, mu=0.0)
    return projs, eps


def _solve_all(partition, eps, mu, options):
    """Solve every representative embedding at the given chemical potential.

    Always a fresh, deterministic solve: N(mu) must be a well-defined function
    of mu for the bracketing root find."""
    results = {}
    for ci, ep in eps.items():
        kind = partition.class_solver(ci)
        results[ci] = solve_embedding(
            ep.with_mu(mu), kind, vqe_options=options.vqe_options
        )
    return results


def _fragment_electrons(partition, eps, results):
    total = 0.0
    for ci, res in results.items():
        frag = list(eps[ci].frag_indices)
        trace = float(np.trace(res.rdm1_total[np.ix_(frag, frag)]))
        total += partition.multiplicity(ci) * trace
    return total


def fit_chemical_potential(ham, mf, partition, u=None, options=None):
    """Root-find mu so summed fragment electron counts hit the target.

    Every N(mu) evaluation re-solves all representative embeddings at that mu.
    Returns (mu, results, projs, eps, info); info records the bracket and the
    evaluation count.
    """
    options = options or DMETOptions()
    projs, eps = _class_embeddings(ham, mf, partition, options)
    target = float(ham.n_elec)
    evaluations = []

    def count_error(mu):
        results = _solve_all(partition, eps, mu, options)
        n = _fragment_electrons(partition, eps, results)
        evaluations.append((mu, n))
        return n - target, results

    f0, results0 = count_error(0.0)
    if abs(f0) < options.mu_tol:
        info = {"bracket": None, "evaluations": evaluations, "refinements": 0,
                "count_residual": abs(f0)}
        return 0.0, results0, projs, eps, info

    # N(mu) increases with mu (-mu pulls electrons onto the fragment), so
    # expand in the direction that moves the count toward the target.
    direction = -1.0 if f0 > 0 else 1.0
    step = MU_STEP
    lo_mu, lo_f = 0.0, f0
    bracket = None
    for _ in range(MU_MAX_EXPANSIONS):
        trial = lo_mu + direction * step
        f_trial, _ = count_error(trial)
        if f_trial == 0.0 or np.sign(f_trial) != np.sign(lo_f):
            bracket = (lo_mu, trial) if lo_mu < trial else (trial, lo_mu)
            break
        lo_mu, lo_f = trial, f_trial
        step *= 2.0
    if bracket is None:
        scanned = (min(m for m, _ in evaluations), max(m for m, _ in evaluations))
        raise DmetError(
            f"no sign change for the electron count in mu in [{scanned[0]:.3f}, "
            f"{scanned[1]:.3f}]; target {target}"
        )

    mu_star = scipy.optimize.brentq(
        lambda m: count_error(m)[0], bracket[0], bracket[1], xtol=1e-12, rtol=1e-14
    )
    f_star, results = count_error(mu_star)
    if abs(f_star) > options.mu_tol:
        # The bracket collapsed onto a step in N(mu): variational solvers can
        # hop between solution branches, leaving a residual no mu removes.
        # Return the best evaluated point; the residual stays on record.
        best_mu, best_n = min(evaluations, key=lambda mn: abs(mn[1] - target))
        if best_mu != mu_star:
            f_star, results = count_error(best_mu)
            mu_star = best_mu
        log.warning(
            "mu refinement floored at |N - target| = %.3e (mu = %.6f); "
            "electron count carries this residual", abs(f_star), mu_star,
        )
    info = {
        "bracket": bracket,
        "evaluations": evaluations,
        "refinements": len(evaluations) - 2,
        "count_residual": abs(f_star),
    }
    return float(mu_star), results, projs, eps, info


def fit_correlation_potential(ham, partition, target_rdms, mf_builder,
                              u_start=None, options=None):
    """Minimize the fragment-block density mismatch over the correlation potential.

    L(u) sums squared differences between the u-dressed mean-field density
    (rebuilt by mf_builder at fixed electron numbers) and the correlated
    fragment blocks, over both spins and every correlated equivalence class.
    Quasi-Newton steps with central finite-difference gradients; stops when the
    infinity norm of the u update drops below tolerance.
    """
    options = options or DMETOptions()
    u0 = (u_start or CorrelationPotential.zeros(partition)).copy()
    fit_classes = [
        ci for ci in range(len(partition.equivalence_classes))
        if partition.class_solver(ci).correlated and ci in target_rdms
    ]
    if not fit_classes:
        return u0, {"cost_initial": 0.0, "cost_final": 0.0, "iterations": 0,
                    "stalled": False}

    def cost(x):
        u = _unpack(x, u0, fit_classes)
        d_a, d_b = mf_builder(u)
        total = 0.0
        for ci in fit_classes:
            rep = partition.representative(ci)
            idx = list(partition.fragments[rep])
            tgt_a, tgt_b = target_rdms[ci]
            total += float(np.sum((d_a[np.ix_(idx, idx)] - tgt_a) ** 2))
            total += float(np.sum((d_b[np.ix_(idx, idx)] - tgt_b) ** 2))
        return total

    def grad(x):
        g = np.zeros_like(x)
        for i in range(x.size):
            xp = x.copy(); xp[i] += U_GRAD_STEP
            xm = x.copy(); xm[i] -= U_GRAD_STEP
            g[i] = (cost(xp) - cost(xm)) / (2.0 * U_GRAD_STEP)
        return g

    x0 = _pack(u0, fit_classes)
    cost0 = cost(x0)
    best = {"x": x0.copy(), "cost": cost0}
    last_x = {"x": x0.copy()}
    iterations = {"n": 0}

    def callback(xk):
        iterations["n"] += 1
        ck = cost(xk)
        if ck < best["cost"]:
            best["cost"] = ck
            best["x"] = xk.copy()
        du = np.max(np.abs(xk - last_x["x"])) if xk.size else 0.0
        last_x["x"] = xk.copy()
        if du < options.u_update_tol:
            raise StopIteration

    res = scipy.optimize.minimize(
        cost, x0, jac=grad, method="BFGS", callback=callback,
        options={"maxiter": U_MAX_ITER, "gtol": 1e-10},
    )
    final_x, final_cost = res.x, float(res.fun)
    stalled = False
    if final_cost > best["cost"] + 1e-12:
        final_x, final_cost = best["x"], best["cost"]
        stalled = True
    if final_cost > cost0 + 1e-12:
        final_x, final_cost = x0, cost0
        stalled = True
    u_fit = _unpack(final_x, u0, fit_classes)
    return u_fit, {
        "cost_initial": cost0,
        "cost_final": final_cost,
        "iterations": iterations["n"],
        "stalled": stalled,
    }


def _assemble(ham, partition, projs, eps, results, mu):
    per_class = []
    e_cell = ham.e_const
    electron_count = 0.0
    for ci in sorted(results):
        rep = partition.representative(ci)
        res = results[ci]
        ep = eps[ci].with_mu(mu)
        e_x = fragment_energy(
            ep, res.rdm1_alpha, res.rdm1_beta, res.rdm2, ham, projs[ci]
        )
        mult = partition.multiplicity(ci)
        frag = list(ep.frag_indices)
        n_frag_elec = float(np.trace(res.rdm1_total[np.ix_(frag, frag)]))
        e_cell += mult * e_x
        electron_count += mult * n_frag_elec
        per_class.append({
            "class": ci,
            "representative": rep,
            "fragment": list(partition.fragments[rep]),
            "solver": partition.class_solver(ci).value,
            "multiplicity": mult,
            "energy": e_x,
            "n_electrons": n_frag_elec,
            "solver_converged": bool(res.converged),
        })
    return float(e_cell), electron_count, per_class


def _write_log(path, records):
    if path is None:
        return
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


def run_dmet(ham, partition, mode="oneshot", options=None):
    """Full DMET loop with mixed solvers; returns the final state and history."""
    options = options or DMETOptions()
    mode = mode.lower()
    if mode not in ("oneshot", "selfconsistent"):
        raise ValueError(f"unknown mode {mode!r}")
    partition.validate_against(ham.n_orb)

    mf = unrestricted_hartree_fock(ham, guess=options.mf_guess)
    u = CorrelationPotential.zeros(partition)
    history = []
    converged = False
    e_prev = None
    mu = 0.0
    per_class = []
    electron_count = 0.0

    max_cycles = 1 if mode == "oneshot" else options.max_outer
    for cycle in range(1, max_cycles + 1):
        mu, results, projs, eps, mu_info = fit_chemical_potential(
            ham, mf, partition, u=u, options=options
        )
        e_cell, electron_count, per_class = _assemble(
            ham, partition, projs, eps, results, mu
        )
        record = {
            "cycle": cycle,
            "mu": mu,
            "e_cell": e_cell,
            "electron_count": electron_count,
            "per_fragment": [
                {k: v for k, v in entry.items() if k != "class"}
                for entry in per_class
            ],
            "mu_bracket": mu_info["bracket"],
        }
        if mode == "oneshot":
            record.update({"L": None, "du_inf": None})
            history.append(record)
            converged = all(entry["solver_converged"] for entry in per_class)
            break

        target_rdms = {}
        for ci, res in results.items():
            if not partition.class_solver(ci).correlated:
                continue
            n_frag = eps[ci].n_frag
            target_rdms[ci] = (
                res.rdm1_alpha[:n_frag, :n_frag].copy(),
                res.rdm1_beta[:n_frag, :n_frag].copy(),
            )

        f_a, f_b = fock_matrices(ham, mf.D_alpha, mf.D_beta)

        def mf_builder(u_trial, f_a=f_a, f_b=f_b):
            u_full_a, u_full_b = u_trial.expand(partition, ham.n_orb)
            _, _, d_a = _diag_fill(f_a + u_full_a, ham.n_alpha)
            _, _, d_b = _diag_fill(f_b + u_full_b, ham.n_beta)
            return d_a, d_b

        u_new, fit_info = fit_correlation_potential(
            ham, partition, target_rdms, mf_builder, u_start=u, options=options
        )
        du_inf = u_new.inf_norm_diff(u)
        record.update({
            "L": fit_info["cost_final"],
            "L_initial": fit_info["cost_initial"],
            "du_inf": du_inf,
            "u_fit_stalled": fit_info["stalled"],
        })
        history.append(record)

        de = abs(e_cell - e_prev) if e_prev is not None else None
        u = u_new
        if du_inf < options.u_update_tol and de is not None and de < options.e_cell_tol:
            converged = True
            break
        e_prev = e_cell
        mf = rediagonalize_dressed(ham, mf, u, partition)

    _write_log(options.log_path, history)
    return DMETState(
        mu=mu,
        u=u,
        fragment_energies=per_class,
        e_cell=history[-1]["e_cell"],
        electron_count=electron_count,
        history=history,
        converged=converged,
        mean_field=mf,
        mode=mode,
    )


def _diag_fill(f, n_occ):
    eps, c = np.linalg.eigh(f)
    occ = c[:, :n_occ]
    return eps, c, occ @ occ.T
