"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 property violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis
from ._errors import IntegrationError
from .control import (
    AgentModel,
    NotStabilizableError,
    RiccatiConvergenceError,
    protocol_gain,
    solve_care,
    stabilizability_check,
)
from .graph import (
    DecompositionError,
    GraphError,
    build_laplacian,
    compute_beta,
    condense,
    has_directed_spanning_tree,
    load_graph,
)
from .io import ConfigError, load_matrix, load_scenario, resolved_config, sha256_file
from .networks import random_strongly_connected
from .plot import result_svg
from .simulator import simulate

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VIOLATION = 0, 1, 2, 3

log = logging.getLogger("weaksync")


def _read_graph(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return load_graph(text, path=str(path))


def _dump(obj, fh=None):
    json.dump(obj, fh or sys.stdout, indent=2, sort_keys=False)
    (fh or sys.stdout).write("\n")


# --- analyze -----------------------------------------------------------------


def analyze_graph(g) -> dict:
    d = condense(g)
    lap = build_laplacian(g)
    beta = compute_beta(d, lap)
    comps = []
    for comp, basic in zip(d.bicomponents, d.basic_flags):
        comps.append({"nodes": list(comp), "size": len(comp), "basic": basic})
    return {
        "node_count": g.node_count,
        "edge_count": len(g.edges),
        "bicomponent_count": len(d.bicomponents),
        "basic_count": d.basic_count,
        "spanning_tree": has_directed_spanning_tree(d),
        "bicomponents": comps,
        "permutation": d.permutation.tolist(),
        "beta": {
            "rows": list(beta.nodes),
            "columns": [list(c) for c in d.basic_components],
            "values": beta.values.tolist(),
        },
    }


def _print_analysis(rep: dict) -> None:
    print(f"nodes: {rep['node_count']}  edges: {rep['edge_count']}")
    print(f"bicomponents: {rep['bicomponent_count']}  basic: {rep['basic_count']}")
    print(f"directed spanning tree: {'yes' if rep['spanning_tree'] else 'no'}")
    for i, c in enumerate(rep["bicomponents"]):
        tag = "basic" if c["basic"] else "non-basic"
        print(f"  [{i}] {tag:9s} size {c['size']:3d}: {' '.join(map(str, c['nodes']))}")
    if rep["beta"]["rows"]:
        print("beta (rows: non-basic nodes, columns: basic bicomponents in listed order):")
        for node, row in zip(rep["beta"]["rows"], rep["beta"]["values"]):
            print(f"  {node:4d}: " + " ".join(f"{v:.6f}" for v in row))


def cmd_analyze(args) -> int:
    rep = analyze_graph(_read_graph(args.graph))
    if args.json:
        _dump(rep)
    else:
        _print_analysis(rep)
    return EXIT_OK


# --- gain --------------------------------------------------------------------


def cmd_gain(args) -> int:
    try:
        model = AgentModel(load_matrix(args.A), load_matrix(args.B))
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    stab = stabilizability_check(model)
    if not stab:
        w = stab.witness
        print(f"error: (A, B) is not stabilizable; PBH test fails at eigenvalue lambda = {w.real:g}"
              + (f"{w.imag:+g}j" if w.imag else ""), file=sys.stderr)
        return EXIT_INPUT
    sol = solve_care(model)
    k, m = protocol_gain(sol, model)
    out = {
        "P": sol.P.tolist(),
        "K": k.tolist(),
        "M": m.tolist(),
        "residual_norm": sol.residual_norm,
        "iterations": sol.iterations,
        "closed_loop_eigenvalues": [complex(z).real for z in np.linalg.eigvals(model.A - model.B @ k)],
    }
    np.set_printoptions(precision=4, suppress=True)
    print("P =")
    print(sol.P)
    print("K = B'P =")
    print(k)
    print("M = PBB'P =")
    print(m)
    print(f"Riccati residual (Frobenius): {sol.residual_norm:.3e}  Newton iterations: {sol.iterations}")
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
        print(f"saved {args.out}")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------


def _run_scenario(path: Path, out_dir: Path, svg: bool, argv: list[str]) -> tuple[int, dict]:
    cfg, settings, inputs, graph_path = load_scenario(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.name
    csv_path = out_dir / f"{stem}.csv"
    manifest_path = out_dir / f"{stem}.manifest.json"
    manifest = {
        "tool": "weaksync",
        "version": __version__,
        "command": argv,
        "scenario": str(path),
        "config": resolved_config(cfg, settings, graph_path),
        "seed": cfg.seed,
        "inputs": inputs,
        "outputs": {},
    }
    code = EXIT_OK
    try:
        result = simulate(cfg)
    except IntegrationError as exc:
        manifest["status"] = "failed"
        manifest["failure"] = {"type": type(exc).__name__, "t": exc.t, "message": str(exc)}
        code = EXIT_NUMERIC
    except (RiccatiConvergenceError, DecompositionError) as exc:
        manifest["status"] = "failed"
        manifest["failure"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_NUMERIC
    else:
        d = condense(cfg.graph)
        beta = compute_beta(d, result.laplacian)
        report = analysis.sync_report(
            result, d, beta,
            zeta_tol=settings["zeta_tol"], sync_tol=settings["sync_tol"],
            growth_tol=settings["growth_tol"], window=settings["window"],
        )
        result.write_csv(csv_path)
        outputs = [csv_path]
        if svg:
            svg_path = out_dir / f"{stem}.svg"
            svg_path.write_text(result_svg(result))
            outputs.append(svg_path)
        manifest["status"] = "ok"
        manifest["outputs"] = {str(p): sha256_file(p) for p in outputs}
        stats = {k: v for k, v in result.stats.items() if k != "wall_time_s"}
        manifest["integrator"] = stats
        manifest["sync_report"] = report.to_dict()
        manifest["summary"] = {
            "network_stable": report.network_stable.passed,
            "rho_bounded": report.rho_bounded.passed,
            "global_sync": report.global_sync.passed,
            "basic_bicomponents_sync": [c.passed for c in report.per_bicomponent_sync],
            "beta_limits": None if report.beta_check is None else report.beta_check.passed,
            "sync_implies_stability": report.sync_implies_stability,
        }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return code, manifest


def _scenario_files(target: Path) -> list[Path]:
    if target.is_dir():
        files = sorted(p for p in target.iterdir() if p.suffix in (".yaml", ".yml"))
        if not files:
            raise ConfigError(f"{target}: no *.yaml scenarios in directory")
        return files
    if not target.is_file():
        raise ConfigError(f"{target}: no such scenario file")
    return [target]


def _thread_cap() -> int:
    raw = os.environ.get("WEAKSYNC_THREADS")
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"WEAKSYNC_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def cmd_simulate(args) -> int:
    files = _scenario_files(Path(args.scenario))
    out_dir = Path(args.out)
    argv = ["weaksync", *args.argv]

    def run(p):
        try:
            return p, _run_scenario(p, out_dir, args.svg, argv)
        except (ConfigError, GraphError, NotStabilizableError) as exc:
            return p, (EXIT_INPUT, {"error": str(exc)})

    workers = min(_thread_cap(), len(files))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, files))
    else:
        results = [run(p) for p in files]

    worst = EXIT_OK
    for path, (code, manifest) in results:
        if "error" in manifest:
            print(f"{path}: error: {manifest['error']}", file=sys.stderr)
        elif manifest.get("status") == "failed":
            print(f"{path}: integration failed: {manifest['failure']['message']}", file=sys.stderr)
        else:
            s = manifest["summary"]
            print(
                f"{path}: network_stable={s['network_stable']} rho_bounded={s['rho_bounded']} "
                f"global_sync={s['global_sync']} basic_sync={s['basic_bicomponents_sync']} "
                f"beta_limits={s['beta_limits']}"
            )
            if not s["sync_implies_stability"]:
                code = EXIT_VIOLATION
            if args.strict and not (s["network_stable"] and s["rho_bounded"]):
                code = EXIT_VIOLATION
        worst = max(worst, code)
    return worst


# --- verify ------------------------------------------------------------------


def cmd_verify(args) -> int:
    laplacians = []
    if args.random is not None:
        n, count, seed = args.random
        if n < 2 or count < 1:
            raise ConfigError("--random needs N >= 2 and count >= 1")
        rng = np.random.default_rng(seed)
        for _ in range(count):
            laplacians.append(("random", build_laplacian(random_strongly_connected(n, rng))))
        q_seed = seed
    else:
        g = _read_graph(args.graph)
        d = condense(g)
        lap = build_laplacian(g)
        b = d.blocks(lap)
        for comp, li in zip(d.basic_components, b["Li"]):
            laplacians.append((f"basic bicomponent {list(comp)}", li))
        q_seed = 0

    cases = []
    violations = 0
    for label, lap in laplacians:
        if lap.shape[0] == 1:
            cases.append({"graph": label, "skipped": "single node"})
            continue
        res = analysis.lemma_suite_for_laplacian(lap)
        res = {"graph": label, **res}
        if args.random is not None:
            res.pop("alpha")
        if not (res["alpha_ok"] and res["H_ok"]):
            violations += 1
        cases.append(res)
    q = analysis.q_rho_trials(args.q_trials, q_seed)
    violations += q["monotonicity_violations"] + q["kernel_violations"]
    report = {
        "graphs_checked": len(cases),
        "violations": violations,
        "min_gamma": min((c["gamma"] for c in cases if "gamma" in c), default=None),
        "cases": cases,
        "q_rho": q,
    }
    _dump(report)
    return EXIT_VIOLATION if violations else EXIT_OK


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaksync", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"weaksync {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bicomponents, spanning tree and beta weights of a graph")
    p.add_argument("graph")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gain", help="solve the Riccati equation and print the protocol gains")
    p.add_argument("--A", required=True, help="matrix file for A")
    p.add_argument("--B", required=True, help="matrix file for B")
    p.add_argument("--out", default="gain.json", help="where to save P, K, M as JSON ('' to skip)")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("simulate", help="run a scenario file or a directory of scenarios")
    p.add_argument("scenario")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--svg", action="store_true", help="also write a minimal SVG plot of zeta and rho")
    p.add_argument("--strict", action="store_true", help="exit 3 unless network stability and bounded rho hold")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="numerical checks of the Laplacian weighting lemmas")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("graph", nargs="?")
    grp.add_argument("--random", nargs=3, type=int, metavar=("N", "COUNT", "SEED"))
    p.add_argument("--q-trials", type=int, default=500, help="random monotonicity trials for Q_rho")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphError, NotStabilizableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, RiccatiConvergenceError, DecompositionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
