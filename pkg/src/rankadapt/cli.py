"""Command line interface: ``rankadapt <command> ...``.

Exit codes: 0 success, 2 usage or validation error, 3 degenerate data
(e.g. NDCG undefined for every query), 1 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from .augment import (AugmentConfig, knn_expand, merge_datasets, regroup_by_source,
                      select_seed_queries)
from .boosting import BoostConfig, DegenerateBasisError, lambda_boost, lambda_smart
from .data import LetorParseError, read_letor, write_letor
from .experiment import ExperimentSpec, SpecError, StageError, run_experiment
from .interpolation import (InterpolatedModel, PowellConfig, optimize_weights_lambdarank,
                            optimize_weights_powell)
from .linear import TrainConfig, TrainingError, train_linear_lambdarank
from .metrics import UndefinedMetricError, mean_ndcg, paired_t_test, tsv_header
from .modelio import ModelFormatError, load_model, save_model
from .synth import BUNDLED_SEED, PROFILES, write_shift

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def _check_width(model, dataset, model_path: str, data_path: str) -> None:
    if model.feature_count != dataset.feature_count:
        raise UsageError(f"feature count mismatch: {model_path} has {model.feature_count}, "
                         f"{data_path} has {dataset.feature_count}")


def cmd_train(args) -> int:
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr, seed=args.seed)
    data = read_letor(args.data)
    model = train_linear_lambdarank(data, config)
    save_model(model, args.out)
    print(f"ave_ndcg={_fmt(mean_ndcg(data, model).ave_ndcg)}")
    return EXIT_OK


def cmd_adapt(args) -> int:
    config = BoostConfig(rounds=args.rounds, shrinkage=args.shrinkage,
                         leaves=1 if args.method == "boost" else args.leaves,
                         min_samples_per_leaf=args.min_leaf, randomize=args.randomize,
                         sample_rate=args.sample_rate, seed=args.seed,
                         max_leaf_step=args.max_leaf_step)
    background = load_model(args.background)
    data = read_letor(args.data)
    _check_width(background, data, args.background, args.data)
    trace = None
    if args.trace:
        trace = lambda m, _model, ave: print(f"round={m}\tave_ndcg={_fmt(ave)}", flush=True)
    fit = lambda_boost if args.method == "boost" else lambda_smart
    model = fit(background, data, config, trace=trace)
    save_model(model, args.out)
    print(f"ave_ndcg={_fmt(mean_ndcg(data, model).ave_ndcg)}")
    return EXIT_OK


def cmd_interpolate(args) -> int:
    if len(args.models) < 2:
        raise UsageError("interpolate needs at least 2 models")
    components = [load_model(p) for p in args.models]
    valid = read_letor(args.valid)
    for path, c in zip(args.models, components):
        _check_width(c, valid, path, args.valid)
    if args.optimizer == "powell":
        config = PowellConfig(max_iterations=args.max_iterations, line_search_grid=args.grid,
                              line_search_span=args.span, refine_levels=args.refine,
                              tolerance=args.tolerance)
        alphas = optimize_weights_powell(components, valid, config=config)
    else:
        alphas = optimize_weights_lambdarank(
            components, valid, TrainConfig(epochs=args.epochs, learning_rate=args.lr, seed=args.seed))
    model = InterpolatedModel(components, alphas)
    save_model(model, args.out)
    print("alphas=" + ",".join(repr(float(a)) for a in alphas))
    print(f"ave_ndcg={_fmt(mean_ndcg(valid, model).ave_ndcg)}")
    return EXIT_OK


def cmd_augment(args) -> int:
    in_domain = read_letor(args.in_domain)
    background = read_letor(args.background)
    if in_domain.feature_count != background.feature_count:
        raise UsageError(f"feature count mismatch: {args.in_domain} has "
                         f"{in_domain.feature_count}, {args.background} has "
                         f"{background.feature_count}")
    n_seeds = args.seeds if args.seeds is not None else max(1, len(in_domain) // 4)
    config = AugmentConfig(n_seeds, k=args.k, max_distance=args.epsilon, seed=args.seed)
    seeds = select_seed_queries(in_domain, config)
    if seeds.document_count < config.k:
        raise UsageError(f"k={config.k} exceeds the {seeds.document_count} seed documents")
    expanded = knn_expand(seeds, background, config)
    write_letor(expanded, args.out)
    if args.merged_out:
        write_letor(merge_datasets(in_domain, regroup_by_source(expanded)), args.merged_out)
    print(f"accepted={len(expanded)}\tscanned={background.document_count}")
    return EXIT_OK


def _model_name(path: str) -> str:
    base = os.path.basename(path)
    return base[:-5] if base.endswith(".json") else base


def cmd_evaluate(args) -> int:
    data = read_letor(args.data)
    models = [load_model(p) for p in args.model]
    for path, m in zip(args.model, models):
        _check_width(m, data, path, args.data)
    reports = [mean_ndcg(data, m) for m in models]
    base = args.ttest_baseline
    if base is not None and not 0 <= base < len(models):
        raise UsageError(f"--ttest-baseline {base} out of range for {len(models)} models")
    header = tsv_header()
    if base is not None:
        header += "\tt\tp"
    print(header)
    for i, (path, rep) in enumerate(zip(args.model, reports)):
        row = rep.tsv_row(_model_name(path))
        if base is not None:
            if i == base:
                row += "\t-\t-"
            else:
                a, b = reports[i].per_query_ave(), reports[base].per_query_ave()
                qids = sorted(a)
                t, p = paired_t_test([a[q] for q in qids], [b[q] for q in qids])
                row += f"\t{t:.4f}\t{p:.4f}"
        print(row)
    if reports[0].excluded:
        print(f"# {reports[0].excluded} queries with all-zero labels excluded", file=sys.stderr)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    result = run_experiment(spec)
    for which in ("closed", "open"):
        print(f"# {which} test")
        sys.stdout.write(result.table(which))
    print(f"# outputs in {spec.output_dir}")
    return EXIT_OK


def cmd_synth(args) -> int:
    path = write_shift(args.out, args.seed)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankadapt", description="Ranking model adaptation toolkit.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a linear LambdaRank model")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("adapt", help="adapt a background model by boosting")
    a.add_argument("--method", required=True, choices=("boost", "smart"))
    a.add_argument("--background", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--rounds", type=int, default=500)
    a.add_argument("--shrinkage", type=float, default=0.5)
    a.add_argument("--leaves", type=int, default=20)
    a.add_argument("--randomize", action="store_true")
    a.add_argument("--sample-rate", type=float, default=0.7)
    a.add_argument("--min-leaf", type=int, default=1)
    a.add_argument("--max-leaf-step", type=float, default=10.0)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--trace", action="store_true", help="print train Ave-NDCG every round")
    a.set_defaults(func=cmd_adapt)

    i = sub.add_parser("interpolate", help="tune interpolation weights on validation data")
    i.add_argument("--models", nargs="+", required=True)
    i.add_argument("--valid", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--optimizer", choices=("powell", "lambdarank"), default="powell")
    i.add_argument("--max-iterations", type=int, default=20)
    i.add_argument("--grid", type=int, default=201)
    i.add_argument("--span", type=float, default=2.0)
    i.add_argument("--refine", type=int, default=3)
    i.add_argument("--tolerance", type=float, default=1e-6)
    i.add_argument("--epochs", type=int, default=100)
    i.add_argument("--lr", type=float, default=1e-3)
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_interpolate)

    g = sub.add_parser("augment", help="kNN expansion of in-domain data from background data")
    g.add_argument("--in-domain", required=True)
    g.add_argument("--background", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seeds", type=int, default=None,
                   help="number of low-entropy seed queries (default: a quarter of the queries)")
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--epsilon", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--merged-out", default=None,
                   help="also write in-domain data plus E2 regrouped by source query")
    g.set_defaults(func=cmd_augment)

    e = sub.add_parser("evaluate", help="NDCG report for one or more models")
    e.add_argument("--model", action="append", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--ttest-baseline", type=int, default=None)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="closed/open test experiment from a spec file")
    x.add_argument("--spec", required=True)
    x.set_defaults(func=cmd_experiment)

    s = sub.add_parser("synth", help="generate synthetic domain-shift data and a spec")
    s.add_argument("--profile", choices=PROFILES, default="shift")
    s.add_argument("--seed", type=int, default=BUNDLED_SEED)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def _error(msg: str, code: int) -> int:
    print(f"rankadapt: error: {msg}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        return _error(f"{e.filename}: {e.strerror}", EXIT_USAGE)
    except (UndefinedMetricError, DegenerateBasisError) as e:
        return _error(str(e), EXIT_DEGENERATE)
    except StageError as e:
        if isinstance(e.cause, (UndefinedMetricError, DegenerateBasisError)):
            code = EXIT_DEGENERATE
        elif isinstance(e.cause, ValueError) and not isinstance(e.cause, TrainingError):
            code = EXIT_USAGE
        else:
            code = EXIT_INTERNAL
        return _error(str(e), code)
    except TrainingError as e:
        return _error(str(e), EXIT_INTERNAL)
    except (UsageError, SpecError, LetorParseError, ModelFormatError, ValueError) as e:
        return _error(str(e), EXIT_USAGE)
    except Exception as e:  # pragma: no cover - last resort
        return _error(f"internal error: {type(e).__name__}: {e}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
