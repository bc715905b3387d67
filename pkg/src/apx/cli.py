"""Command-line front end: ``apx gen|run|verify|bench``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import generators
from .estimator import EstimateMatrix
from .graph import GraphInputError, read_edge_list, write_edge_list
from .pipeline import ConfigError, RunConfig, log2k_of, run, threshold
from .verify import check_guarantees, check_lemma_suite, exact_apsp


def parse_k(text: str) -> int | None:
    if text == "log":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be a power of two or 'log', got {text!r}")


def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=parse_k, default=None, help="power of two >= 2, or 'log' (default)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--exact-fallback-cutoff", type=int, default=256, dest="n0",
                   help="graphs with fewer vertices get exact BFS APSP")
    p.add_argument("--force-pipeline", action="store_true")
    p.add_argument("--backend-lowdeg", default="exact", choices=["exact", "exact_on_subgraph", "bk", "none"])
    p.add_argument("--init-variant", default="additive2", choices=["exact", "additive2", "inflated"])
    p.add_argument("--pivot-mode", default="fast", choices=["fast", "reference"])
    p.add_argument("--c-deg", type=float, default=4.0)
    p.add_argument("--threads", type=int, default=int(os.environ.get("APX_THREADS", "1")))


def _config(a) -> RunConfig:
    return RunConfig(
        k=a.k,
        seed=a.seed,
        c_deg=a.c_deg,
        n0=a.n0,
        force_pipeline=a.force_pipeline,
        init_variant=a.init_variant,
        lowdeg_backend=a.backend_lowdeg,
        pivot_mode=a.pivot_mode,
        threads=a.threads,
        snapshot_phases=getattr(a, "snapshot_phases", False),
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apx", description="2-approximate APSP for distant pairs")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write a generated graph as an edge list")
    g.add_argument("family", choices=generators.FAMILIES)
    g.add_argument("--n", type=int, required=False)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--chords", type=int, help="hub count for path-with-chords")
    g.add_argument("--exponent", type=float, default=2.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run the pipeline on an edge-list file")
    r.add_argument("graph")
    _add_config(r)
    r.add_argument("--snapshot-phases", action="store_true", help="keep per-phase matrices (memory heavy)")
    r.add_argument("--out", help="matrix dump path")
    r.add_argument("--report", help="RunReport JSON path (default: stdout)")

    v = sub.add_parser("verify", help="check a matrix dump against exact distances")
    v.add_argument("graph")
    v.add_argument("matrix")
    v.add_argument("--k", type=parse_k, default=None)
    v.add_argument("--report", help="verify report JSON path (default: stdout)")
    v.add_argument("--lemmas", action="store_true",
                   help="rerun the pipeline with snapshots and add per-lemma rates")
    _lemma_args(v)

    b = sub.add_parser("bench", help="scaling benchmark over a size grid")
    b.add_argument("--family", default="gnp", choices=generators.FAMILIES)
    b.add_argument("--sizes", type=int, nargs="+", required=True)
    b.add_argument("--ks", type=parse_k, nargs="+", default=[2])
    b.add_argument("--seeds", type=int, nargs="+", default=[1])
    b.add_argument("--threads", type=int, default=int(os.environ.get("APX_THREADS", "1")))
    b.add_argument("--out", required=True, help="JSONL log (appended)")
    b.add_argument("--summary", help="summary JSON path (default: stdout)")
    return ap


def _lemma_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--c-deg", type=float, default=4.0)
    p.add_argument("--init-variant", default="additive2", choices=["exact", "additive2", "inflated"])
    p.add_argument("--backend-lowdeg", default="exact", choices=["exact", "exact_on_subgraph", "bk", "none"])
    p.add_argument("--pivot-mode", default="fast", choices=["fast", "reference"])


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(a, ap) -> int:
    if a.family == "grid" and a.rows:
        g = generators.grid(a.rows, a.cols or a.rows)
    else:
        if a.n is None:
            ap.error("gen: --n is required (or --rows/--cols for grid)")
        g = generators.generate(a.family, a.n, seed=a.seed, p=a.p, exponent=a.exponent, chords=a.chords)
    try:
        write_edge_list(g, a.out)
    except OSError as e:
        ap.error(f"cannot write {a.out}: {e}")
    return 0


def cmd_run(a, ap) -> int:
    g = read_edge_list(a.graph)
    cfg = _config(a)
    try:
        log2k_of(cfg, g.n)
    except ConfigError as e:
        ap.error(str(e))
    est, report = run(g, cfg)
    if a.out:
        est.dump(a.out, {"graph": str(a.graph), "config": report.config})
    _emit(report.to_json(), a.report)
    return 0


def cmd_verify(a, ap) -> int:
    g = read_edge_list(a.graph)
    est = EstimateMatrix.load(a.matrix)
    if est.n != g.n:
        ap.error(f"dimension mismatch: matrix n={est.n}, graph n={g.n}")
    cfg = RunConfig(k=a.k, seed=a.seed, c_deg=a.c_deg, init_variant=a.init_variant,
                    lowdeg_backend=a.backend_lowdeg, pivot_mode=a.pivot_mode)
    try:
        thr = threshold(cfg, g.n)
    except ConfigError as e:
        ap.error(str(e))
    exact = exact_apsp(g)
    rep = check_guarantees(est.a, exact, thr)
    out = rep.as_dict()
    out["lemma_rates"] = None
    if a.lemmas:
        cfg.force_pipeline = True
        cfg.snapshot_phases = True
        _, rr = run(g, cfg)
        out["lemma_rates"] = check_lemma_suite(g, exact, rr).rates
    out["ok"] = rep.clean
    _emit(json.dumps(out, indent=2, sort_keys=True), a.report)
    return verify_exit_status(out)


def verify_exit_status(report: dict) -> int:
    return 0 if report["soundness_violations"] == 0 and report["two_approx_violations"] == 0 else 1


def fit_slope(ns, counts) -> float | None:
    """Least-squares slope of log(count) against log(n); None for one size."""
    if len(set(ns)) < 2:
        return None
    return float(np.polyfit(np.log(ns), np.log(counts), 1)[0])


def cmd_bench(a, ap) -> int:
    if a.sizes != sorted(a.sizes):
        ap.error("--sizes must be ascending")
    records = []
    with open(a.out, "a") as log:
        for n in a.sizes:
            for seed in a.seeds:
                g = generators.generate(a.family, n, seed=seed)
                for k in a.ks:
                    cfg = RunConfig(k=k, seed=seed, force_pipeline=True, threads=a.threads)
                    try:
                        log2k_of(cfg, n)
                    except ConfigError as e:
                        ap.error(str(e))
                    t = time.perf_counter()
                    _, rep = run(g, cfg)
                    rec = {
                        "family": a.family,
                        "n": n,
                        "m": g.m,
                        "k": "log" if k is None else k,
                        "log2k": rep.log2k,
                        "seed": seed,
                        "seconds": round(time.perf_counter() - t, 6),
                        "phase_seconds": {p.name: p.seconds for p in rep.phases},
                        "attempts": rep.totals["attempts"],
                        "improvements": rep.totals["improvements"],
                        "edge_scans": rep.totals["edge_scans"],
                        "operations": rep.totals["operations"],
                        "matrix_bytes": 4 * n * n,
                    }
                    log.write(json.dumps(rec, sort_keys=True) + "\n")
                    records.append(rec)
    _emit(json.dumps(bench_summary(records), indent=2, sort_keys=True), a.summary)
    return 0


def bench_summary(records: list[dict]) -> dict:
    """Per-k mean operation counts per size and the fitted log-log slope."""
    out = {}
    for k in sorted({r["k"] for r in records}, key=str):
        rs = [r for r in records if r["k"] == k]
        ns = sorted({r["n"] for r in rs})
        mean = [float(np.mean([r["operations"] for r in rs if r["n"] == n])) for n in ns]
        entry = {"sizes": ns, "operations": mean}
        slope = fit_slope(ns, mean)
        if slope is not None:
            lk = rs[0]["log2k"]
            entry["slope"] = slope
            entry["reference_exponent"] = 2 + 1 / 2**lk if k != "log" else 2.0
        out[str(k)] = entry
    return out


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify, "bench": cmd_bench}[a.cmd](a, ap)
    except (GraphInputError, ValueError, FileNotFoundError) as e:
        print(f"apx {a.cmd}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
