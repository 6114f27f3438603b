"""Command-line front end: ``cupcf {validate,similarity,predict,recommend,evaluate}``.

Every option can also come from ``--config FILE`` holding ``key=value``
lines (keys are long option names, ``-`` or ``_``); explicit flags win.
Relative input paths that do not exist are retried under
``$CUPCF_DATA_DIR``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .dataset import FORMATS, load_ratings
from .errors import CupcfError
from .evaluate import (
    AVERAGING,
    RANKING_MODES,
    EvalConfig,
    check_bands,
    compare_measures,
)
from .movielens import find_ml100k
from .prediction import CupModel, PredictConfig, cup_predict, predict_all_unrated
from .recommend import merge_lists, top_n
from .similarity import MEASURES, build_similarity_matrix

log = logging.getLogger("cupcf")

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BANDS = 3

MEASURE_ALIASES = {
    "cup": "cup", "cupcf": "cup",
    "nhsm": "nhsm", "nhsm-only": "nhsm",
    "pearson": "pearson", "pearson-only": "pearson",
}


def _int_list(text):
    try:
        values = [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _measure(text):
    try:
        return MEASURE_ALIASES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown measure {text!r}; use one of {sorted(MEASURE_ALIASES)}")


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CupcfError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _bool(text):
    return str(text).strip().lower() in {"1", "true", "yes", "on"}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", help="ratings file (default: ML-100K u.data if found)")
    common.add_argument("--format", choices=FORMATS, default="movielens_tab")
    common.add_argument("--config", help="key=value file supplying defaults for any option")
    common.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--k-neighbors", type=_positive, default=300)
    model.add_argument("--no-clamp", action="store_true", help="do not clip predictions to the rating scale")

    parser = argparse.ArgumentParser(prog="cupcf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cupcf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="parse a ratings file and print counts")
    subcommands = {"validate": p}

    p = sub.add_parser("similarity", parents=[common], help="dump a user-user similarity matrix as CSV")
    subcommands["similarity"] = p
    p.add_argument("--measure", choices=MEASURES, default="nhsm")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")

    p = sub.add_parser("predict", parents=[common, model], help="CUP predictions for one user")
    subcommands["predict"] = p
    p.add_argument("--user", type=int)
    p.add_argument("--item", type=int, help="single item (default: every unrated item)")

    p = sub.add_parser("recommend", parents=[common, model], help="Top-N list for one user")
    subcommands["recommend"] = p
    p.add_argument("--user", type=int)
    p.add_argument("-n", type=_positive, default=10)
    p.add_argument("--merge", action="store_true",
                   help="merge per-measure Top-N lists instead of ranking combined predictions")

    p = sub.add_parser("evaluate", parents=[common, model], help="k-fold experiment with report output")
    subcommands["evaluate"] = p
    p.add_argument("--folds", type=_positive, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits-dir", help="directory with u1.base/u1.test ... (overrides --seed)")
    p.add_argument("--n-values", type=_int_list, default=[5, 10, 15, 20, 30])
    p.add_argument("--thresholds", type=_int_list, default=[3, 4])
    p.add_argument("--ranking", choices=RANKING_MODES, default="cup")
    p.add_argument("--measure", type=_measure, default="cup")
    p.add_argument("--averaging", choices=AVERAGING, default="micro")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--output-dir", default="reports")
    p.add_argument("--check-bands", action="store_true",
                   help="also run NHSM-only and Pearson-only baselines and exit 3 if any band check fails")
    return parser, subcommands


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subcommands = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in subcommands), None)
    if known.config and command:
        try:
            values = read_config_file(known.config)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        subparser = subcommands[command]
        actions = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in values.items():
            if key not in actions or key in ("help", "config"):
                parser.error(f"unknown key {key!r} in {known.config}")
            if isinstance(actions[key], argparse._StoreTrueAction):
                value = _bool(value)
            defaults[key] = value
        subparser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.command in ("predict", "recommend") and args.user is None:
        subcommands[args.command].error("--user is required")
    return args


def _resolve_input(args):
    if args.input is None:
        found = find_ml100k()
        if found is None:
            raise CupcfError("no input given and ML-100K not found; pass a path or set CUPCF_DATA_DIR")
        return found
    path = Path(args.input)
    env = os.environ.get("CUPCF_DATA_DIR")
    if not path.exists() and not path.is_absolute() and env:
        path = Path(env) / path
    return path


def _backend(args):
    return None if args.backend == "auto" else args.backend


def cmd_validate(args, out):
    m = load_ratings(_resolve_input(args), args.format)
    print(f"{m.n_users} users, {m.n_items} items, {m.n_ratings} ratings, density {m.density:.6f}", file=out)
    return 0


def cmd_similarity(args, out):
    m = load_ratings(_resolve_input(args), args.format)
    sim = build_similarity_matrix(m, args.measure, _backend(args))
    if args.output:
        sim.to_csv(args.output)
        log.info("wrote %s similarity for %d users to %s", args.measure, m.n_users, args.output)
    else:
        sim.to_csv(out)
    return 0


def _load_model(args):
    m = load_ratings(_resolve_input(args), args.format)
    if not m.has_user(args.user):
        raise CupcfError(f"unknown user {args.user}")
    return CupModel.fit(m, PredictConfig(args.k_neighbors, not args.no_clamp), _backend(args))


def cmd_predict(args, out):
    model = _load_model(args)
    nh, pe = model.sims["nhsm"], model.sims["pearson"]
    if args.item is not None:
        preds = [cup_predict(model.matrix, nh, pe, args.user, args.item, model.config)]
    else:
        preds = predict_all_unrated(model.matrix, nh, pe, args.user, model.config)
    print("user,item,value,nhsm_component,pearson_component,nhsm_fellback,pearson_fellback", file=out)
    for p in preds:
        print(f"{p.user},{p.item},{p.value!r},{p.nhsm_component!r},{p.pearson_component!r},"
              f"{int(p.nhsm_fellback)},{int(p.pearson_fellback)}", file=out)
    return 0


def cmd_recommend(args, out):
    model = _load_model(args)
    preds = predict_all_unrated(model.matrix, model.sims["nhsm"], model.sims["pearson"], args.user, model.config)
    if args.merge:
        lo, hi = model.matrix.scale_min, model.matrix.scale_max
        clip = (lambda v: min(hi, max(lo, v))) if model.config.clamp else (lambda v: v)
        by_nhsm = top_n([(p.item, clip(p.nhsm_component)) for p in preds], args.n, user=args.user)
        by_pearson = top_n([(p.item, clip(p.pearson_component)) for p in preds], args.n, user=args.user)
        rec = merge_lists(by_nhsm, by_pearson, args.n)
    else:
        rec = top_n(preds, args.n, user=args.user)
    out.write(rec.to_csv())
    return 0


def _fmt(v):
    return "n/a" if v is None else f"{v:.4f}"


def cmd_evaluate(args, out):
    path = _resolve_input(args)
    dataset = None if args.splits_dir else load_ratings(path, args.format)
    config = EvalConfig(
        k_folds=args.folds, seed=args.seed, splits_dir=args.splits_dir,
        k_neighbors=args.k_neighbors, n_values=tuple(args.n_values),
        thresholds=tuple(args.thresholds), ranking_mode=args.ranking, measure=args.measure,
        averaging=args.averaging, clamp=not args.no_clamp, backend=_backend(args),
        workers=args.workers,
    )
    combos = (args.measure,)
    if args.check_bands:
        combos = ("cup", "nhsm", "pearson")
        if args.measure != "cup":
            raise CupcfError("--check-bands applies to the combined (cup) measure")
    reports = compare_measures(dataset, config, combos)
    report = reports[args.measure]

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json())
    (outdir / "report.md").write_text(report.to_markdown())
    for name, other in reports.items():
        if name != args.measure:
            (outdir / f"baseline_{name}.json").write_text(other.to_json())

    print(f"{report.method}  fingerprint {report.fingerprint[:16]}", file=out)
    for fold in report.folds:
        print(f"fold {fold['fold']}: MAE {_fmt(fold['mae'])}", file=out)
    if 5 in config.n_values and 3 in config.thresholds:
        for i, fold in enumerate(report.folds):
            c = report.cell(i, 5, 3)
            print(f"fold {fold['fold']} Top-5 T=3: accuracy {_fmt(c['accuracy'])} "
                  f"precision {_fmt(c['precision'])} recall {_fmt(c['recall'])}", file=out)
    print(f"reports written to {outdir}", file=out)

    if args.check_bands:
        checks = check_bands(report, {k: v for k, v in reports.items() if k != "cup"})
        for name, ok, detail in checks:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=out)
        if not all(ok for _, ok, _ in checks):
            return EXIT_BANDS
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "similarity": cmd_similarity,
    "predict": cmd_predict,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args, out)
    except (CupcfError, OSError) as exc:
        print(f"cupcf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
