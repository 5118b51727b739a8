"""Batch front end: `dmet run`, `dmet scan`, `dmet analyze`.

Exit codes: 0 converged / clean, 2 soft failure (non-convergence, failed scan
points), 1 hard error (bad config, bad arguments).
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys
from pathlib import Path


from .analysis import (
    GapSeries,
    eos_analyze,
    exchange_couplings,
    fm_afii_gap,
    mulliken_spin_density,
    qubit_estimate,
    tdl_extrapolate,
    write_eos_csv,
)
from .driver import DMETOptions, run_dmet
from .fcidump import load_fcidump
from .hamiltonian import build_hubbard
from .partition import Partition
from .solvers import VQEOptions

log = logging.getLogger("dmet")

RUN_SCHEMA = "dmet-run/1"
SCAN_SCHEMA = "dmet-scan/1"
RESULT_SCHEMA = "dmet-result/1"


class ConfigError(ValueError):
    pass


def _reject_unknown(obj, allowed, where):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def build_hamiltonian_from_config(cfg, base_dir="."):
    _reject_unknown(cfg, {"kind", "n_sites", "t", "u", "periodic", "n_alpha",
                          "n_beta", "path", "labels_path"}, "hamiltonian")
    kind = cfg.get("kind")
    if kind == "hubbard":
        for key in ("n_sites", "t", "u", "n_alpha", "n_beta"):
            if key not in cfg:
                raise ConfigError(f"hubbard hamiltonian needs {key!r}")
        return build_hubbard(
            n_sites=int(cfg["n_sites"]), t=float(cfg["t"]), u=float(cfg["u"]),
            periodic=bool(cfg.get("periodic", False)),
            n_alpha=int(cfg["n_alpha"]), n_beta=int(cfg["n_beta"]),
        )
    if kind == "fcidump":
        if "path" not in cfg:
            raise ConfigError("fcidump hamiltonian needs 'path'")
        path = Path(base_dir) / cfg["path"]
        labels = cfg.get("labels_path")
        labels = Path(base_dir) / labels if labels else None
        return load_fcidump(path, labels_path=labels)
    raise ConfigError(f"unknown hamiltonian kind {kind!r}")


def build_partition_from_config(cfg, ham):
    _reject_unknown(cfg, {"fragments", "solvers", "equivalence_classes"}, "partition")
    fragments = cfg.get("fragments")
    solvers = cfg.get("solvers")
    if not fragments or not solvers:
        raise ConfigError("partition needs 'fragments' and 'solvers'")
    try:
        part = Partition(
            fragments=tuple(tuple(f) for f in fragments),
            solvers=tuple(solvers),
            equivalence_classes=tuple(tuple(c) for c in cfg.get("equivalence_classes", ())),
        )
        part.validate_against(ham.n_orb)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return part


def _dmet_options_from_config(cfg, out_dir):
    _reject_unknown(cfg, {"mf_guess", "bath_threshold", "vqe", "max_outer"},
                    "solver_options")
    vqe_opts = None
    if "vqe" in cfg:
        vcfg = cfg["vqe"]
        _reject_unknown(vcfg, {"trotter_steps", "init", "grad_tol", "max_iter"},
                        "solver_options.vqe")
        vqe_opts = VQEOptions(
            trotter_steps=int(vcfg.get("trotter_steps", 1)),
            init=str(vcfg.get("init", "ZERO")),
            grad_tol=float(vcfg.get("grad_tol", 1e-7)),
            max_iter=int(vcfg.get("max_iter", 5000)),
        )
    return DMETOptions(
        mf_guess=str(cfg.get("mf_guess", "AFM")),
        bath_threshold=float(cfg.get("bath_threshold", 1e-9)),
        max_outer=int(cfg.get("max_outer", 50)),
        vqe_options=vqe_opts,
        log_path=str(out_dir / "convergence.jsonl"),
    )


def execute_run(config, out_dir, base_dir="."):
    """Run one DMET calculation from a parsed config; returns (result, state)."""
    _reject_unknown(config, {"schema", "hamiltonian", "partition", "mode",
                             "solver_options", "output_dir"}, "config")
    if config.get("schema") != RUN_SCHEMA:
        raise ConfigError(f"config schema must be {RUN_SCHEMA!r}")
    ham = build_hamiltonian_from_config(config.get("hamiltonian", {}), base_dir)
    part = build_partition_from_config(config.get("partition", {}), ham)
    mode = config.get("mode", "oneshot")
    if mode not in ("oneshot", "selfconsistent"):
        raise ConfigError(f"mode must be oneshot or selfconsistent, got {mode!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    options = _dmet_options_from_config(config.get("solver_options", {}), out_dir)

    state = run_dmet(ham, part, mode=mode, options=options)

    mf = state.mean_field
    atom_map = ham.atom_map()
    spin = mulliken_spin_density(mf.D_alpha, mf.D_beta, atom_map)
    spin_diag = mulliken_spin_density(mf.D_alpha, mf.D_beta, atom_map, diagonal_only=True)
    max_frag = max(len(f) for f in part.fragments)
    without, with_emb = qubit_estimate(ham.n_orb, 1, max_frag)
    result = {
        "schema": RESULT_SCHEMA,
        "e_cell": state.e_cell,
        "mu": state.mu,
        "converged": bool(state.converged),
        "mode": state.mode,
        "u": [
            {"class": ci, "u_alpha": ua.tolist(), "u_beta": ub.tolist()}
            for ci, (ua, ub) in enumerate(state.u.blocks)
        ],
        "per_fragment": [
            {k: v for k, v in entry.items() if k != "class"}
            for entry in state.per_fragment
        ],
        "spin_density": {str(k): float(v) for k, v in spin.items()},
        "spin_density_diagonal": {str(k): float(v) for k, v in spin_diag.items()},
        "electron_count": float(state.electron_count),
        "qubit_estimate": {"without_embedding": without, "with_embedding": with_emb},
        "convergence_log_path": str(out_dir / "convergence.jsonl"),
    }
    with open(out_dir / "result.json", "w") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return result, state


def cmd_run(args):
    config = _load_json(args.config)
    out_dir = Path(args.out) if args.out else Path(config.get("output_dir", "dmet_out"))
    result, state = execute_run(config, out_dir, base_dir=Path(args.config).parent)
    print(json.dumps({"e_cell": result["e_cell"], "mu": result["mu"],
                      "converged": result["converged"]}))
    return 0 if state.converged else 2


def _scan_point(label, point, base, out_root, base_dir):
    config = dict(base)
    config["hamiltonian"] = point["hamiltonian"]
    config["schema"] = RUN_SCHEMA
    out_dir = out_root / f"point_{label}"
    result, state = execute_run(config, out_dir, base_dir=base_dir)
    return result, state


def cmd_scan(args):
    scan = _load_json(args.config)
    _reject_unknown(scan, {"schema", "base", "points", "output_dir"}, "scan config")
    if scan.get("schema") != SCAN_SCHEMA:
        raise ConfigError(f"scan schema must be {SCAN_SCHEMA!r}")
    points = scan.get("points")
    if not points:
        raise ConfigError("scan config has no points")
    for k, point in enumerate(points):
        _reject_unknown(point, {"parameter", "hamiltonian"}, f"points[{k}]")
        if "parameter" not in point or "hamiltonian" not in point:
            raise ConfigError(f"points[{k}] needs 'parameter' and 'hamiltonian'")
    base = scan.get("base", {})
    out_root = Path(args.out) if args.out else Path(scan.get("output_dir", "dmet_scan"))
    out_root.mkdir(parents=True, exist_ok=True)
    base_dir = Path(args.config).parent

    rows = []
    failures = []

    def run_point(k):
        point = points[k]
        return k, _scan_point(f"{k:03d}", point, base, out_root, base_dir)

    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(run_point, k): k for k in range(len(points))}
            outcomes = {}
            for fut in concurrent.futures.as_completed(futures):
                k = futures[fut]
                try:
                    outcomes[k] = fut.result()
                except Exception as exc:
                    failures.append((k, str(exc)))
                    log.error("scan point %d failed: %s", k, exc)
    else:
        outcomes = {}
        for k in range(len(points)):
            try:
                outcomes[k] = run_point(k)
            except Exception as exc:
                failures.append((k, str(exc)))
                log.error("scan point %d failed: %s", k, exc)

    for k in sorted(outcomes):
        _, (result, state) = outcomes[k]
        rows.append((float(points[k]["parameter"]), result["e_cell"]))
        if not state.converged:
            failures.append((k, "non-converged"))
    rows.sort(key=lambda pe: pe[0])
    if rows:
        write_eos_csv(rows, out_root / "eos.csv")
    if len(rows) >= 3:
        table = eos_analyze(rows)
        if table.shift_available:
            write_eos_csv(table.shifted, out_root / "eos_shifted.csv",
                          header=("parameter_shifted", "energy_shifted"))
        else:
            log.warning("shift refused: %s", table.diagnostic)
    print(json.dumps({"points": len(rows), "failures": len(failures)}))
    return 2 if failures else 0


def _parse_points(tokens):
    points = []
    for token in tokens:
        try:
            nk, gap = token.split(":")
            points.append((int(nk), float(gap)))
        except ValueError:
            raise ConfigError(f"bad point {token!r}; expected N_K:GAP") from None
    return points


def cmd_analyze(args):
    if args.subtask == "tdl":
        series = GapSeries(tuple(_parse_points(args.points)))
        print(json.dumps({"extrapolated_mev": tdl_extrapolate(series)}))
        return 0
    if args.subtask == "gap":
        if args.j1 is not None and args.j2 is not None:
            out = {"gap_mev": fm_afii_gap(args.j1, args.j2)}
        elif None not in (args.e_fm, args.e_afi, args.e_afii):
            j1, j2 = exchange_couplings(args.e_fm, args.e_afi, args.e_afii)
            out = {"j1": j1, "j2": j2, "gap_mev": fm_afii_gap(j1, j2)}
        else:
            raise ConfigError("gap needs either --j1/--j2 or --e-fm/--e-afi/--e-afii")
        print(json.dumps(out))
        return 0
    without, with_emb = qubit_estimate(args.n_orb_cell, args.n_k, args.max_fragment)
    print(json.dumps({"without": without, "with": with_emb}))
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="dmet",
        description="Multi-fragment density-matrix embedding over lattice or "
                    "FCIDUMP Hamiltonians, with FCI / VQE / mean-field fragment solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one DMET calculation from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_scan = sub.add_parser("scan", help="run a geometry/parameter scan")
    p_scan.add_argument("config")
    p_scan.add_argument("--out", default=None)
    p_scan.add_argument("--jobs", type=int, default=1)
    p_scan.set_defaults(func=cmd_scan)

    p_an = sub.add_parser("analyze", help="analysis helpers (gap / tdl / qubits)")
    an_sub = p_an.add_subparsers(dest="subtask", required=True)
    p_tdl = an_sub.add_parser("tdl")
    p_tdl.add_argument("points", nargs="+", help="N_K:GAP pairs, e.g. 27:51.9 64:57.4")
    p_tdl.set_defaults(func=cmd_analyze)
    p_gap = an_sub.add_parser("gap")
    p_gap.add_argument("--j1", type=float, default=None)
    p_gap.add_argument("--j2", type=float, default=None)
    p_gap.add_argument("--e-fm", dest="e_fm", type=float, default=None)
    p_gap.add_argument("--e-afi", dest="e_afi", type=float, default=None)
    p_gap.add_argument("--e-afii", dest="e_afii", type=float, default=None)
    p_gap.set_defaults(func=cmd_analyze)
    p_q = an_sub.add_parser("qubits")
    p_q.add_argument("n_orb_cell", type=int)
    p_q.add_argument("n_k", type=int)
    p_q.add_argument("max_fragment", type=int)
    p_q.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    level = os.environ.get("DMET_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # hard failures map to exit 1 with a message
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
