"""Command-line interface: ``subperf {mine,inject,skew,bench}``.

Options come from three layers, highest first: command-line flags, a
``--config`` file of ``key = value`` lines (keys are flag names), built-in
defaults. Every run writes its reports plus a JSON manifest into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from subperf import __version__
from subperf.dataset import (
    DataError,
    Dataset,
    cover,
    generate_selectors,
    load_csv,
    parse_label_map,
    read_config,
)
from subperf.experiments import (
    bench_pruning,
    iou,
    mean_pairwise_iou,
    result_covers,
    run_injection,
    skew_surface,
    split3,
    structured_bench_data,
)
from subperf.metrics import LabeledScoreSet, UndefinedMeasureError
from subperf.scoring import METRICS, Measure, ScoringSpec, relative_value
from subperf.search import ResultSet, SearchConfig, mine
from subperf.stats import CORRECTIONS, SignificanceConfig, significance_filter

log = logging.getLogger("subperf")

DEFAULTS = {
    "common": {"threads": 1, "out": "subperf-out", "plots": False, "json_errors": False,
               "verbose": False},
    "data": {"label_map": None, "nominal": "", "bins": 5},
    "scoring": {"measure": "roc_auc", "alpha": 0.0, "beta": 0.0, "gen_aware": False,
                "overperformance": False},
    "search": {"top_k": 5, "depth": 4, "min_size": 20, "no_pruning": False,
               "strategy": "best-first"},
    "significance": {"significance": False, "kprime": 100, "resamples": 1000,
                     "correction": "by", "sig_level": 0.05, "plus_one": False},
}
COMMAND_DEFAULTS = {
    "mine": {"seed": 0, "split": False, "validation": None},
    "inject": {"top_k": 10, "min_size": 5, "n_total": 30000, "frac": "0.004,0.006"},
    "skew": {"axis": "both", "repeats": 20},
    "bench": {"measure": "all", "alphas": "0,0.1,0.3,1", "repeats": 3, "n_total": 5000,
              "timings": False, "depth": 3},
}
SEED_REQUIRED = ("inject", "skew", "bench")
# keys that never go into a manifest: they do not change results
NOT_IN_MANIFEST = ("config", "out", "json_errors", "verbose", "plots", "command")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p):
    p.add_argument("--config", help="file of 'key = value' lines supplying any flag")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory (created if missing)")
    p.add_argument("--plots", action="store_true", default=None,
                   help="also render PNG figures next to the reports")
    p.add_argument("--json-errors", action="store_true", default=None,
                   help="report errors as JSON on stderr")
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def _add_data(p):
    p.add_argument("data", nargs="?", help="CSV file (default: bundled demo data)")
    p.add_argument("--label-col")
    p.add_argument("--score-col")
    p.add_argument("--label-map", help="e.g. 'sick:1,healthy:0'")
    p.add_argument("--nominal", help="comma-separated columns to treat as categorical")
    p.add_argument("--bins", type=int, help="equal-frequency bins per numeric attribute")


def _add_scoring(p, measure_choices=tuple(m.value for m in Measure)):
    p.add_argument("--measure", choices=measure_choices)
    p.add_argument("--alpha", type=float, help="cover-size weight exponent")
    p.add_argument("--beta", type=float, help="class-balance weight exponent")
    p.add_argument("--gen-aware", action="store_true", default=None,
                   help="subtract the best generalization's score")
    p.add_argument("--overperformance", action="store_true", default=None,
                   help="look for subgroups where the classifier does better")


def _add_search(p):
    p.add_argument("--top-k", type=int)
    p.add_argument("--depth", type=int, help="maximum pattern length")
    p.add_argument("--min-size", type=int, help="minimum cover size")
    p.add_argument("--no-pruning", action="store_true", default=None)
    p.add_argument("--strategy", choices=("best-first", "dfs"))


def _add_significance(p):
    p.add_argument("--significance", action="store_true", default=None,
                   help="mine top-kprime, keep the top-k significant on the validation split")
    p.add_argument("--kprime", type=int)
    p.add_argument("--resamples", type=int)
    p.add_argument("--correction", choices=CORRECTIONS)
    p.add_argument("--sig-level", type=float)
    p.add_argument("--plus-one", action="store_true", default=None,
                   help="use (r+1)/(n+1) p-values")


def build_parser() -> _Parser:
    parser = _Parser(prog="subperf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"subperf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mine", help="mine subgroups with deviating ranking performance")
    for add in (_add_common, _add_data, _add_scoring, _add_search, _add_significance):
        add(p)
    p.add_argument("--split", action="store_true", default=None,
                   help="split into train/search/validation thirds by --seed")
    p.add_argument("--validation", help="separate validation CSV for --significance")

    p = sub.add_parser("inject", help="inject a degraded subgroup and try to recover it")
    for add in (_add_common, _add_data, _add_scoring, _add_search, _add_significance):
        add(p)
    p.add_argument("--n-total", type=int, help="size of the generated benchmark")
    p.add_argument("--frac", help="cover fraction band 'lo,hi' for the injected pattern")
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="generate the synthetic benchmark instead of reading data")

    p = sub.add_parser("skew", help="relative scores on synthetic size/class-ratio grids")
    _add_common(p)
    _add_scoring(p)
    p.add_argument("--axis", choices=("cover_size", "ncr", "both"))
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("bench", help="node counts and runtime with and without pruning")
    _add_common(p)
    _add_data(p)
    _add_scoring(p, tuple(m.value for m in Measure) + ("all",))
    _add_search(p)
    p.add_argument("--alphas", help="comma-separated alpha=beta values")
    p.add_argument("--repeats", type=int)
    p.add_argument("--n-total", type=int, help="size of the generated structured dataset")
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="use the generated structured dataset instead of reading data")
    p.add_argument("--timings", action="store_true", default=None,
                   help="add wall-clock columns to the report (not reproducible)")
    return parser


# -- option resolution ---------------------------------------------------------

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(action: argparse.Action, text: str):
    if isinstance(action, argparse._StoreTrueAction):
        t = text.strip().lower()
        if t in _TRUE:
            return True
        if t in _FALSE:
            return False
        raise DataError(f"config key {action.dest!r}: expected a boolean, got {text!r}")
    try:
        value = action.type(text) if action.type else text
    except ValueError:
        raise DataError(f"config key {action.dest!r}: cannot parse {text!r}") from None
    if action.choices is not None and value not in action.choices:
        raise DataError(f"config key {action.dest!r}: {value!r} not one of {list(action.choices)}")
    return value


DEMO = "<demo>"  # stands for the bundled demo CSV, keeps manifests machine-independent


def demo_path() -> Path:
    return Path(str(resources.files("subperf") / "data" / "demo.csv"))


def resolve(parser: _Parser, argv) -> argparse.Namespace:
    """Parse argv and fill unset options from the config file, then defaults."""
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}

    def apply(cfg: dict) -> None:
        for key, text in cfg.items():
            key = key.replace("-", "_")
            if key not in actions:
                raise DataError(f"unknown config key {key!r} for '{args.command}'")
            if getattr(args, key) is None:
                setattr(args, key, _convert(actions[key], text))

    if getattr(args, "config", None):
        apply(read_config(args.config))
    if "data" in actions and args.data is None and not getattr(args, "synthetic", None):
        demo = demo_path()
        apply(read_config(demo.with_suffix(".cfg")))
        args.data = DEMO
    defaults = dict(DEFAULTS["common"])
    for group in ("data", "scoring", "search", "significance"):
        defaults.update({k: v for k, v in DEFAULTS[group].items() if k in actions})
    defaults.update(COMMAND_DEFAULTS[args.command])
    for key, value in defaults.items():
        if key in actions and getattr(args, key) is None:
            setattr(args, key, value)
    if args.command in SEED_REQUIRED and args.seed is None:
        raise UsageError(f"subperf {args.command}: --seed is required")
    if "data" in actions and args.data is not None:
        for col in ("label_col", "score_col"):
            if getattr(args, col) is None:
                raise UsageError(f"subperf {args.command}: --{col.replace('_', '-')} is required")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    return args


def manifest(args: argparse.Namespace) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in NOT_IN_MANIFEST}
    return {"tool": "subperf", "version": __version__, "command": args.command,
            "seed": args.seed, "options": opts}


# -- helpers -----------------------------------------------------------------

def _spec(args, measure=None, alpha=None) -> ScoringSpec:
    a = args.alpha if alpha is None else alpha
    b = args.beta if alpha is None else alpha
    return ScoringSpec(measure or args.measure, a, b, args.gen_aware, args.overperformance)


def _load(args, path: str) -> Dataset:
    nominal = [c.strip() for c in args.nominal.split(",") if c.strip()]
    if path == DEMO:
        path = demo_path()
    return load_csv(path, args.label_col, args.score_col, parse_label_map(args.label_map),
                    nominal=nominal)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path: Path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def summarize(rs: ResultSet, ds: Dataset, selectors, spec: ScoringSpec, sig=None) -> dict:
    """Means over the result set, in the shape of a per-configuration summary row."""
    measure = spec.measure
    ref = METRICS[measure](LabeledScoreSet(ds.labels, ds.predictions))
    field = {Measure.ARL: "arl", Measure.ROC_AUC: "roc_auc", Measure.PR_AUC: "pr_auc"}[measure]
    exc = [relative_value(measure, getattr(r, field), ref, spec.overperformance)
           for r in rs if getattr(r, field) is not None]
    out = {
        "patterns": len(rs),
        "mean_cover": float(np.mean([r.size for r in rs])) if len(rs) else None,
        "mean_ncr": float(np.mean([r.ncr for r in rs])) if len(rs) else None,
        "mean_exceptionality": float(np.mean(exc)) if exc else None,
        "mean_pairwise_iou": mean_pairwise_iou(result_covers(rs, ds, selectors)),
    }
    if sig is not None:
        out["filtered"], out["significant"], out["kprime"] = sig.counts
    return out


def _print_summary(summary: dict, out=sys.stdout) -> None:
    def f(v):
        return "-" if v is None else f"{v:.3f}" if isinstance(v, float) else str(v)

    cols = ["patterns", "mean_cover", "mean_ncr", "mean_exceptionality", "mean_pairwise_iou"]
    head = ["patterns", "cover", "NCR", "exceptionality", "pairwise IoU"]
    vals = [f(summary[c]) for c in cols]
    if "kprime" in summary:
        head.append("filtered/significant/k'")
        vals.append(f"{summary['filtered']}/{summary['significant']}/{summary['kprime']}")
    widths = [max(len(h), len(v)) for h, v in zip(head, vals)]
    print("  ".join(h.rjust(w) for h, w in zip(head, widths)), file=out)
    print("  ".join(v.rjust(w) for v, w in zip(vals, widths)), file=out)


def _significance(args, rs, validation, selectors, spec):
    cfg = SignificanceConfig(n_resamples=args.resamples, correction=args.correction,
                             threshold=args.sig_level, kprime=args.kprime, k=args.top_k,
                             seed=args.seed if args.seed is not None else 0,
                             plus_one=args.plus_one, threads=args.threads)
    return significance_filter(rs, validation, selectors, spec, cfg)


def _write_significance(out: Path, report) -> None:
    _write_rows(out / "significance.csv", report.entries,
                ["pattern", "interestingness", "p_value", "adjusted_p_value", "significant",
                 "resamples"])


# -- subcommands ---------------------------------------------------------------

def cmd_mine(args) -> int:
    out = Path(args.out)
    ds = _load(args, args.data)
    validation = None
    if args.split:
        _, ds, validation = split3(ds, args.seed)
    elif args.validation:
        validation = _load(args, args.validation)
    if args.significance and validation is None:
        raise UsageError("subperf mine: --significance needs --split or --validation")
    selectors = generate_selectors(ds, args.bins)
    spec = _spec(args)
    k = args.kprime if args.significance else args.top_k
    cfg = SearchConfig(top_k=k, max_depth=args.depth, min_cover=args.min_size,
                       pruning=not args.no_pruning, spec=spec, strategy=args.strategy,
                       threads=args.threads)
    rs = mine(ds, selectors, cfg)
    log.info("evaluated %d patterns, pruned %d, %.2fs", rs.evaluated, rs.pruned, rs.wall_time)
    sig = None
    if args.significance:
        sig = _significance(args, rs, validation, selectors, spec)
        reported = sig.filtered
    else:
        reported = rs
    summary = summarize(reported, ds, selectors, spec, sig)

    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(reported.to_csv(), encoding="utf-8")
    doc = {"manifest": manifest(args), "summary": summary} | reported.to_json()
    if sig is not None:
        doc["candidates"] = rs.to_json(include_stats=False)["results"]
        _write_significance(out, sig)
        _write_json(out / "significance.json", sig.to_json())
    _write_json(out / "results.json", doc)
    if args.plots:
        from subperf.plotting import plot_results

        plot_results(reported.rows(), out / "results.png", f"{spec.measure.value} top-{len(reported)}")
    _print_summary(summary)
    return 0


def cmd_inject(args) -> int:
    out = Path(args.out)
    data = None if args.synthetic else _load(args, args.data)
    lo, hi = (float(v) for v in args.frac.split(","))
    spec = _spec(args)
    k = args.kprime if args.significance else args.top_k
    run = run_injection(args.seed, spec, top_k=k, max_depth=args.depth, min_cover=args.min_size,
                        n_total=args.n_total, threads=args.threads, data=data, frac=(lo, hi),
                        bins=args.bins)
    rs, ious = run.results, run.ious
    sig = None
    if args.significance:
        sig = _significance(args, rs, run.validation, run.selectors, spec)
        rs = sig.filtered
        target = cover(run.pattern, run.search, run.selectors).bits
        ious = [iou(target, c) for c in result_covers(rs, run.search, run.selectors)]
    rows = [dict(r, iou=v) for r, v in zip(rs.rows(), ious)]
    best = max(ious, default=0.0)
    summary = summarize(rs, run.search, run.selectors, spec, sig)

    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "inject.csv", rows,
                ["interestingness", "pattern", "ARL", "PR AUC", "ROC AUC", "cover", "NCR", "iou"])
    doc = {
        "manifest": manifest(args),
        "injected": {"pattern": run.description, "cover": run.cover_size},
        "best_iou": best,
        "recovered": best >= 0.8,
        "summary": summary,
        "results": rows,
    }
    if sig is not None:
        _write_significance(out, sig)
        _write_json(out / "significance.json", sig.to_json())
    _write_json(out / "inject.json", doc)
    if args.plots:
        from subperf.plotting import plot_ious

        plot_ious(ious, out / "iou.png", f"injected: {run.description}")
    print(f"injected {run.description} (cover {run.cover_size}); best IoU {best:.3f}")
    _print_summary(summary)
    return 0


def cmd_skew(args) -> int:
    out = Path(args.out)
    axes = ("cover_size", "ncr") if args.axis == "both" else (args.axis,)
    out.mkdir(parents=True, exist_ok=True)
    for axis in axes:
        rows = skew_surface(args.measure, axis, repeats=args.repeats, seed=args.seed,
                            alpha=args.alpha, beta=args.beta)
        _write_rows(out / f"skew_{axis}.csv", rows)
        if args.plots:
            from subperf.plotting import plot_surface

            plot_surface(rows, axis, out / f"skew_{axis}.png")
        print(f"skew_{axis}.csv: {len(rows)} cells")
    _write_json(out / "skew.json", {"manifest": manifest(args)})
    return 0


def cmd_bench(args) -> int:
    out = Path(args.out)
    if args.synthetic:
        ds, selectors = structured_bench_data(args.n_total, args.seed)
    else:
        ds = _load(args, args.data)
        selectors = generate_selectors(ds, args.bins)
    measures = list(Measure) if args.measure == "all" else [Measure(args.measure)]
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    specs = [_spec(args, m, a) for m in measures for a in alphas]
    rows = bench_pruning(ds, selectors, specs, repeats=args.repeats, top_k=args.top_k,
                         max_depth=args.depth, min_cover=args.min_size)
    cols = ["measure", "alpha", "beta", "nodes_pruned", "nodes_unpruned", "node_ratio", "identical"]
    if args.timings:
        cols += ["median_time_pruned", "median_time_unpruned", "speedup"]
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "bench.csv", rows, cols)
    _write_json(out / "bench.json", {"manifest": manifest(args)})
    if args.plots:
        from subperf.plotting import plot_bench

        plot_bench(rows, out / "bench.png")
    for r in rows:
        print(f"{r['measure']:>8} alpha=beta={r['alpha']:<4g} nodes {r['nodes_pruned']}/"
              f"{r['nodes_unpruned']} ({r['node_ratio']:.3f})  speedup {r['speedup']:.1f}x")
    return 0


COMMANDS = {"mine": cmd_mine, "inject": cmd_inject, "skew": cmd_skew, "bench": cmd_bench}


def _fail(exc: Exception, code: int, as_json: bool) -> int:
    if as_json:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
              file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json-errors" in argv
    parser = build_parser()
    try:
        args = resolve(parser, argv)
    except UsageError as e:
        if not as_json:
            parser.print_usage(sys.stderr)
        return _fail(e, 2, as_json)
    except (DataError, OSError) as e:
        return _fail(e, 2, as_json)
    as_json = bool(args.json_errors)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        return _fail(e, 2, as_json)
    except (DataError, UndefinedMeasureError, ValueError, OSError) as e:
        return _fail(e, 1, as_json)


if __name__ == "__main__":
    sys.exit(main())
