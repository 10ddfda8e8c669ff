"""Command-line interface.

Exit codes: 0 success, 1 run failure (or aborted dataset in a suite),
2 configuration error, 3 dataset error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bench import EquivalenceError, SuiteConfig, format_tables, run_suite, verify_equivalence
from .data import DatasetError, kfold_split, resolve_dataset
from .expr import grow, to_infix, to_prefix
from .gp import ConfigError, GpConfig, evolve_gp
from .gsgp import GsgpConfig, evolve_gsgp, reconstruct
from .growth import GrowthParams, exact_expected_size, expected_size, initial_tree_frequency, log10_expected_size
from .red import evolve_red, red_node_count, term_table, to_expression, to_infix_sum

EXIT_OK, EXIT_RUN, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("gsgp_red")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def read_config_file(path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=["gp", "gsgp", "gsgp-red"], default="gsgp-red")
    p.add_argument("--data", help="CSV path or synthetic:NAME[:N[:NOISE[:SEED]]]")
    p.add_argument("--target-col", default="last", help="target column index or 'last'")
    p.add_argument("--pop", type=int, default=1000)
    p.add_argument("--gens", type=int, default=250)
    p.add_argument("--tournament", type=int, help="default 7 for gp, 10 for gsgp engines")
    p.add_argument("--p-xover", type=float, help="default 0.9 for gp, 0.5 for gsgp engines")
    p.add_argument("--p-mut", type=float)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--erc-lo", type=float, default=-1.0)
    p.add_argument("--erc-hi", type=float, default=1.0)
    p.add_argument("--ms-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5, help="hold out fold 0 of a k-fold split as test")
    p.add_argument("--config", help="flat key=value file; flags given explicitly win")
    p.add_argument("--out", help="output path")


def _engine_config(args) -> GpConfig | GsgpConfig:
    is_gp = args.engine == "gp"
    p_x = args.p_xover if args.p_xover is not None else (0.9 if is_gp else 0.5)
    p_m = args.p_mut if args.p_mut is not None else 1.0 - p_x
    common = dict(
        pop_size=args.pop,
        generations=args.gens,
        tournament_size=args.tournament if args.tournament is not None else (7 if is_gp else 10),
        p_crossover=p_x,
        p_mutation=p_m,
        max_init_depth=args.max_depth,
        erc_range=(args.erc_lo, args.erc_hi),
        seed=args.seed,
    )
    if is_gp:
        return GpConfig(**common)
    return GsgpConfig(**common, random_tree_depth=args.max_depth, ms_fraction=args.ms_fraction)


def _load_split(args):
    if not args.data:
        raise ConfigError("--data is required")
    try:
        target = args.target_col if args.target_col == "last" else int(args.target_col)
    except ValueError:
        raise ConfigError(f"--target-col must be an integer or 'last', got {args.target_col!r}") from None
    ds = resolve_dataset(args.data, target)
    if args.folds < 2:
        return ds, None
    try:
        folds = kfold_split(ds, args.folds, seed=args.seed)
    except ValueError as exc:
        raise DatasetError(str(exc)) from None
    tr, te = folds.train_test(0)
    return ds.subset(tr), ds.subset(te)


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    cfg_path = getattr(pre, "config", None)
    if cfg_path:
        values = read_config_file(cfg_path)
        known = {a.dest: a for a in parser._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in known or key in ("help", "config", "command"):
                raise ConfigError(f"{cfg_path}: unknown key {key!r}")
            action = known[key]
            if action.const is True and action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[key] = action.type(raw) if action.type else raw
                except ValueError:
                    raise ConfigError(f"{cfg_path}: bad value for {key}: {raw!r}") from None
            if action.choices and defaults[key] not in action.choices:
                raise ConfigError(f"{cfg_path}: {key} must be one of {list(action.choices)}")
        parser.set_defaults(**defaults)
    return parser.parse_args(argv)


def cmd_run(args) -> int:
    config = _engine_config(args)
    train, test = _load_split(args)
    export: dict = {}
    if args.engine == "gp":
        res = evolve_gp(config, train, test)
        report = res.report
        export = {"prefix": to_prefix(res.best), "infix": to_infix(res.best)}
        text = export["infix"]
    elif args.engine == "gsgp":
        res = evolve_gsgp(config, train, test, node_budget=args.node_budget)
        report = res.report
        export = {"exact_size": str(res.best.exact_size)}
        if res.best.exact_size <= args.node_budget:
            tree = reconstruct(res.best, args.node_budget)
            export |= {"prefix": to_prefix(tree), "infix": to_infix(tree)}
            text = export["infix"]
        else:
            text = (
                f"[not materialized: best individual has exact_size={res.best.exact_size} "
                f"nodes, over --node-budget {args.node_budget}]"
            )
    else:
        res = evolve_red(config, train, test, node_budget=args.node_budget)
        report = res.report
        size = red_node_count(res.best)
        export = {"terms": term_table(res.best), "node_count": size}
        if size <= args.node_budget:
            tree = to_expression(res.best)
            export |= {"prefix": to_prefix(tree), "infix": to_infix(tree)}
            text = to_infix_sum(res.best)
        else:
            text = f"[truncated: {size} nodes over --node-budget {args.node_budget}; see term table in report]"

    out = Path(args.out or f"{args.engine}_report.json")
    payload = report.to_dict() | {"export": export}
    out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    test_txt = "-" if report.best_test_rmse is None else f"{report.best_test_rmse:.6g}"
    print(
        f"{report.engine}: train RMSE {report.best_train_rmse:.6g}, test RMSE {test_txt}, "
        f"size {report.best_size}, {report.wall_time:.2f}s -> {out}"
    )
    if args.print_expr:
        print(text)
    return EXIT_OK


def _parse_suite_keys(path, raw, shared, gp, gsgp, suite) -> None:
    for key, value in raw.items():
        if key == "datasets":
            suite["datasets"] = [s.strip() for s in value.split(",") if s.strip()]
        elif key == "engines":
            suite["engines"] = tuple(s.strip() for s in value.split(",") if s.strip())
        elif key in ("folds", "repeats", "workers"):
            suite[key] = int(value)
        elif key == "seed":
            suite["base_seed"] = int(value)
        elif key == "alpha":
            suite["alpha"] = float(value)
        elif key == "target_col":
            suite["target_column"] = value if value == "last" else int(value)
        elif key == "pop":
            shared["pop_size"] = int(value)
        elif key == "gens":
            shared["generations"] = int(value)
        elif key == "max_depth":
            shared["max_init_depth"] = int(value)
            gsgp["random_tree_depth"] = int(value)
        elif key in ("erc_lo", "erc_hi"):
            shared[key] = float(value)
        elif key == "ms_fraction":
            gsgp["ms_fraction"] = float(value)
        elif key in ("gp_tournament", "gsgp_tournament"):
            (gp if key.startswith("gp_") else gsgp)["tournament_size"] = int(value)
        elif key in ("gp_p_xover", "gsgp_p_xover"):
            target = gp if key.startswith("gp_") else gsgp
            target["p_crossover"] = float(value)
            target["p_mutation"] = 1.0 - float(value)
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")


def _suite_from_file(path, args) -> SuiteConfig:
    raw = read_config_file(path)
    shared: dict = {}
    gp: dict = {}
    gsgp: dict = {}
    suite: dict = {}
    try:
        _parse_suite_keys(path, raw, shared, gp, gsgp, suite)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "erc_lo" in shared or "erc_hi" in shared:
        shared["erc_range"] = (shared.pop("erc_lo", -1.0), shared.pop("erc_hi", 1.0))
    gp_cfg = {"tournament_size": 7, "p_crossover": 0.9, "p_mutation": 0.1} | shared | gp
    gsgp_cfg = {"tournament_size": 10, "p_crossover": 0.5, "p_mutation": 0.5} | shared | gsgp
    for name in ("folds", "repeats", "workers"):
        if getattr(args, name, None) is not None:
            suite[name] = getattr(args, name)
    if args.seed is not None:
        suite["base_seed"] = args.seed
    if "datasets" not in suite:
        raise ConfigError(f"{path}: 'datasets' is required")
    return SuiteConfig(gp=gp_cfg, gsgp=gsgp_cfg, **suite)


def cmd_bench(args) -> int:
    config = _suite_from_file(args.suite, args)
    report = run_suite(config)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "suite_report.json").write_text(report.to_json(indent=2), encoding="utf-8")
    tables = format_tables(report)
    (out / "suite_tables.txt").write_text(tables + "\n", encoding="utf-8")
    print(tables)
    for f in report.failures:
        print(f"run failed: {f}", file=sys.stderr)
    for a in report.aborted_datasets:
        print(f"dataset aborted: {a['dataset']}: {a['error']}", file=sys.stderr)
    return EXIT_RUN if report.aborted_datasets else EXIT_OK


def cmd_verify(args) -> int:
    args.engine = "gsgp"
    config = _engine_config(args)
    train, test = _load_split(args)
    reports = []
    status = EXIT_OK
    for seed in range(args.seed, args.seed + args.n_seeds):
        try:
            rep = verify_equivalence(seed, config, train, test)
        except EquivalenceError as exc:
            rep = exc.report
            status = EXIT_RUN
            print(f"seed {seed}: FAIL {exc}")
        else:
            print(
                f"seed {seed}: max trace deviation {rep.max_trace_deviation:.3e}, "
                f"gsgp size {rep.gsgp_size}, gsgp-red size {rep.red_size} "
                f"({rep.red_terms} terms), log10 ratio {rep.log10_size_ratio:.2f}"
            )
        reports.append(rep.to_dict())
    if args.out:
        Path(args.out).write_text(json.dumps(reports, indent=2), encoding="utf-8")
    return status


def cmd_analyze_growth(args) -> int:
    args.engine = "gsgp-red"
    config = _engine_config(args)
    train, test = _load_split(args)
    history = []
    initial: dict = {}

    def observe(gen, pop):
        if gen == 0:
            initial["keys"] = [ind.terms[0].key for ind in pop]
            initial["sizes"] = [ind.terms[0].fn.size for ind in pop]
        history.append((gen, initial_tree_frequency(pop, initial["keys"])))

    res = evolve_red(config, train, test, on_generation=observe)
    e_p0 = float(np.mean(initial["sizes"]))
    rng = np.random.default_rng(args.seed + 1)
    e_r = float(
        np.mean(
            [grow(config.random_tree_depth, train.d, config.erc_range, rng).size for _ in range(2000)]
        )
    )

    out = Path(args.out or "growth")
    out.mkdir(parents=True, exist_ok=True)
    with (out / "frequency.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "key", "count"])
        for gen, freq in history:
            for key, n in freq.counts.items():
                w.writerow([gen, key, n])
    summary = {
        "e_p0": e_p0,
        "e_r": e_r,
        "survivors": [freq.survivors for _, freq in history],
        "best_size_trace": res.report.size_trace,
        "log10_expected_size": {
            op: [
                log10_expected_size(op, GrowthParams(e_p0=e_p0, e_r=e_r, g=g))
                for g in range(config.generations + 1)
            ]
            for op in ("gsm", "gsx-e", "gsx-m")
        },
        "final_frequency": history[-1][1].counts,
    }
    (out / "frequency.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    print(f"E[P0]={e_p0:.3f} E[r]={e_r:.3f}")
    print(
        f"surviving initial trees: generation 0 -> {history[0][1].survivors}, "
        f"generation {history[-1][0]} -> {history[-1][1].survivors}"
    )
    print(f"wrote {out / 'frequency.csv'} and {out / 'frequency.json'}")
    return EXIT_OK


def cmd_expected_size(args) -> int:
    try:
        e_p0 = Fraction(args.ep0)
        e_r = Fraction(args.er)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        params = GrowthParams(e_p0=e_p0, e_r=e_r, a=args.a, b=args.b, c=args.c, g=args.g)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.exact:
        v = exact_expected_size(args.operator, params)
        print(v.numerator if v.denominator == 1 else v)
    elif args.log10:
        fparams = GrowthParams(e_p0=float(e_p0), e_r=float(e_r), a=args.a, b=args.b, c=args.c, g=args.g)
        print(f"{log10_expected_size(args.operator, fparams):.10g}")
    else:
        fparams = GrowthParams(e_p0=float(e_p0), e_r=float(e_r), a=args.a, b=args.b, c=args.c, g=args.g)
        try:
            print(f"{expected_size(args.operator, fparams):.10g}")
        except OverflowError:
            print(f"1e{log10_expected_size(args.operator, fparams):.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gsgp-red", description="GP, GSGP and GSGP-Red symbolic regression")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one evolutionary run")
    _engine_flags(run)
    run.add_argument("--print-expr", action="store_true")
    run.add_argument("--node-budget", type=int, default=10_000)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="cross-validated suite over datasets and engines")
    bench.add_argument("suite", help="suite config file (key=value)")
    bench.add_argument("--folds", type=int)
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", help="output directory")
    bench.set_defaults(func=cmd_bench)

    growth = sub.add_parser("analyze-growth", help="initial-tree survival and expected sizes")
    _engine_flags(growth)
    growth.set_defaults(func=cmd_analyze_growth)

    verify = sub.add_parser("verify-equivalence", help="paired gsgp / gsgp-red runs")
    _engine_flags(verify)
    verify.add_argument("--n-seeds", type=int, default=1)
    verify.set_defaults(func=cmd_verify)

    es = sub.add_parser("expected-size", help="expected node count after g generations")
    es.add_argument("operator", choices=["gsm", "gsx-e", "gsx-m"])
    es.add_argument("--g", type=int, required=True)
    es.add_argument("--ep0", required=True)
    es.add_argument("--er", default="0")
    es.add_argument("--a", type=int, default=4)
    es.add_argument("--b", type=int, default=5)
    es.add_argument("--c", type=int, default=5)
    group = es.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true")
    group.add_argument("--log10", action="store_true")
    es.set_defaults(func=cmd_expected_size)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        pre, _ = parser.parse_known_args(argv)
        sub = parser._subparsers._group_actions[0].choices[pre.command]
        sub_argv = argv[argv.index(pre.command) + 1 :]
        has_cfg = any(a == "--config" or a.startswith("--config=") for a in sub_argv)
        sub_args = _apply_config_file(sub, sub_argv) if has_cfg else None
        args = parser.parse_args(argv)
        if sub_args is not None:
            for k, v in vars(sub_args).items():
                setattr(args, k, v)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        return args.func(args)
    except SystemExit as exc:  # argparse: usage errors (2), --help / --version (0)
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, OSError) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
