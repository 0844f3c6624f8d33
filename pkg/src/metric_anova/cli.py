"""Command-line interface: ``metric-anova <command> ...``.

Commands
--------
dist      pattern file -> distance-matrix CSV
test      distance matrix or patterns + labels -> JSON test results
simulate  point-process model -> pattern CSV/JSON
study     rejection-count tables from simulated datasets
qq        null samples of a chi-square-calibrated statistic
mds       distance matrix -> classical MDS coordinates

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import formats
from .dist_stats import DISTANCE_STATISTICS, levene_ltilde, two_way_levene
from .formats import DataError
from .frechet_stats import FrechetEvaluator
from .mds import classical_mds
from .pattern_space import MetricParams, adaptive_cutoff, distance_matrix, mean_cardinality
from .perm_engine import chi2_pvalue, permutation_test_multi
from .simulate import resolve_model, sample_many
from .study import (ALL_STATISTICS, FRECHET_NAMES, PRESETS, StudyConfig, null_statistic_samples,
                    run_study)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3
CHI2_STATISTICS = ("levene_ltilde", "frechet_tl")
TEST_STATISTICS = ALL_STATISTICS + ("two_way",)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ helpers

def load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None


def _metric_args(p):
    p.add_argument("--C", type=float, default=0.25, dest="C", help="penalty (default 0.25)")
    p.add_argument("--p", type=float, default=2.0, dest="p", help="order (default 2)")
    p.add_argument("--kind", choices=("TT", "RTT"), default="TT", type=str.upper)
    p.add_argument("--adaptive-cutoff", action="store_true",
                   help="use C * 35 / (mean pattern cardinality) instead of C")


def _params(args, patterns=None) -> tuple[MetricParams, dict]:
    C = args.C
    meta = {"C_requested": args.C, "p": args.p, "kind": args.kind,
            "adaptive_cutoff": bool(args.adaptive_cutoff)}
    if patterns is not None:
        meta["mean_cardinality"] = mean_cardinality(patterns)
    if args.adaptive_cutoff:
        if patterns is None:
            raise UsageError("--adaptive-cutoff needs point patterns as input")
        C = adaptive_cutoff(patterns, args.C)
    meta["C"] = C
    return MetricParams(C, args.p, args.kind), meta


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_json(obj, path=None, stream=None):
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if path is not None:
        Path(path).write_text(text)
    else:
        (stream or sys.stdout).write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _finite(x):
    # JSON has no inf/nan; encode them as strings
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def _sidecar(path, suffix=".meta.json"):
    return None if path in (None, "-") else str(path) + suffix


def _is_pattern_file(path: Path) -> bool:
    if path.suffix.lower() == ".json":
        return True
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    return [h.strip() for h in header] == ["pattern_id", "x", "y"]


# ---------------------------------------------------------------- commands

def cmd_dist(args) -> int:
    ids, patterns = formats.read_patterns(args.patterns)
    if len(patterns) < 2:
        raise DataError(f"{args.patterns}: need at least two patterns, found {len(patterns)}")
    params, meta = _params(args, patterns)
    D = distance_matrix(patterns, params, ids=ids, n_jobs=args.threads)
    fh, close = _open_out(args.output)
    try:
        formats.write_distance_csv(fh, D)
    finally:
        if close:
            fh.close()
    side = _sidecar(args.output)
    if side:
        _write_json(meta, side)
    return EXIT_OK


def _load_test_data(args, need_patterns: bool):
    path = Path(args.data)
    if _is_pattern_file(path):
        ids, patterns = formats.read_patterns(path)
        return ids, patterns, None
    if need_patterns:
        raise UsageError("Fréchet statistics need point patterns, not a distance matrix")
    if args.adaptive_cutoff:
        raise UsageError("--adaptive-cutoff needs point patterns as input")
    D = formats.read_distance_csv(path)
    return list(D.ids), None, D


def _result_record(res, extra=None) -> dict:
    rec = res.to_dict()
    rec["flags"] = list(res.flags)
    if extra:
        rec.update(extra)
    return _finite(rec)


def cmd_test(args) -> int:
    stat = args.statistic
    if args.mode == "chi2" and stat not in CHI2_STATISTICS:
        raise UsageError(f"chi2 mode is available only for {', '.join(CHI2_STATISTICS)}")
    frechet = stat in FRECHET_NAMES
    ids, patterns, D = _load_test_data(args, frechet)
    label_ids, columns = formats.read_labels_csv(args.labels)
    columns = formats.align_labels(ids, label_ids, columns, args.labels)
    if stat == "two_way":
        if len(columns) != 2:
            raise UsageError("two_way needs a labels file with pattern_id,factorA,factorB")
    elif len(columns) != 1:
        raise UsageError(f"{stat} needs a labels file with pattern_id,group")
    layout = formats.layout_from_columns(columns)

    params, meta = _params(args, patterns)
    if D is None and not frechet:
        D = distance_matrix(patterns, params, ids=ids, n_jobs=args.threads)
    M = args.M if args.M is not None else (99 if frechet else 999)

    if stat == "two_way":
        evaluator = lambda d, lay: two_way_levene(d, lay)  # noqa: E731
        data = D
    elif frechet:
        fev = FrechetEvaluator(params, args.restarts, args.seed)
        evaluator = lambda d, lay: {stat: fev(d, lay)[stat]}  # noqa: E731
        data = patterns
    else:
        fn = DISTANCE_STATISTICS[stat]
        evaluator = lambda d, lay: {stat: fn(d, lay)}  # noqa: E731
        data = D

    records, degenerate = [], False
    if args.mode == "chi2":
        if frechet:
            value = evaluator(data, layout)["frechet_tl"]
            chi, extra = value.value, {}
        else:
            value, est = levene_ltilde(data, layout)
            chi = (layout.k - 1) * value.value
            extra = {"gamma_sq_hat": est.gamma_sq_hat, "sigma_sq_hat": est.sigma_sq_hat}
        rec = {"statistic": stat, "mode": "chi2", "value": value.value, "chi2_value": chi,
               "df": layout.k - 1, "flags": list(value.flags),
               "components": value.components, **extra}
        if value.is_valid and not math.isnan(chi):
            rec["p_value"] = chi2_pvalue(chi, layout.k - 1)
        else:
            rec["p_value"] = None
            degenerate = True
        records.append(_finite(rec))
    else:
        observed = evaluator(data, layout)
        observed = {v.name: v for v in observed} if isinstance(observed, tuple) else observed
        invalid = [n for n, v in observed.items() if not v.is_valid or math.isnan(v.value)]
        if invalid:
            for n in observed:
                v = observed[n]
                records.append(_finite({"statistic": n, "mode": "perm", "observed": v.value,
                                        "p_value": None, "flags": list(v.flags),
                                        "components": v.components}))
            degenerate = True
        else:
            results = permutation_test_multi(evaluator, data, layout, M, args.seed)
            for n, res in results.items():
                records.append(_result_record(res, {"mode": "perm"}))
                degenerate |= bool(observed[n].flags)
    _write_json({"metric": meta, "n": len(ids), "results": records}, args.output)
    return EXIT_DEGENERATE if degenerate else EXIT_OK


def _model_spec(args):
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            params[key] = json.loads(val)
        except ValueError:
            params[key] = val
    spec = args.model
    if isinstance(spec, dict):
        return {**spec, **params}
    if spec is None:
        raise UsageError("simulate needs a model name or a [simulate.model] table in the config")
    return {"model": spec, **params} if params else spec


def cmd_simulate(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    spec = _model_spec(args)
    try:
        model = resolve_model(spec, args.seed)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad model specification: {exc}") from None
    patterns = sample_many(model, args.count, np.random.default_rng(args.seed))
    width = max(1, len(str(max(args.count - 1, 0))))
    ids = [f"{args.prefix}{i:0{width}d}" for i in range(args.count)]
    if args.format == "json":
        if args.output in (None, "-"):
            _write_json([{"id": i, "points": p.points.tolist()} for i, p in zip(ids, patterns)])
        else:
            formats.write_patterns_json(args.output, ids, patterns)
    else:
        if args.output in (None, "-"):
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(["pattern_id", "x", "y"])
            for pid, pat in zip(ids, patterns):
                for x, y in pat.points:
                    w.writerow([pid, repr(float(x)), repr(float(y))])
        else:
            formats.write_patterns_csv(args.output, ids, patterns)
    side = _sidecar(args.output)
    if side:
        _write_json({"model": repr(model), "count": args.count, "seed": args.seed}, side)
    return EXIT_OK


def _study_config(args) -> StudyConfig:
    if args.columns:
        columns = args.columns
    elif args.preset:
        columns = PRESETS[args.preset]()
    else:
        raise UsageError("study needs --preset or a 'columns' list in the config")
    if args.only:
        wanted = set(args.only.split(","))
        columns = [c for c in columns if (c.name if hasattr(c, "name") else c["name"]) in wanted]
        if not columns:
            raise UsageError("--only matched no column of the study")
    stats = tuple(s.strip() for s in args.statistics.split(",")) if isinstance(args.statistics, str) \
        else tuple(args.statistics)
    try:
        return StudyConfig(columns=columns, n_per_group=args.n_per_group, replicates=args.replicates,
                           M=args.M, M_frechet=args.M_frechet, alpha=args.alpha, statistics=stats,
                           C=args.C, p=args.p, kind=args.kind, adaptive_cutoff=args.adaptive_cutoff,
                           restarts=args.restarts, seed=args.seed)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


STUDY_FIELDS = ("column", "statistic", "rejections", "invalid", "replicates", "alpha", "M")


def cmd_study(args) -> int:
    cfg = _study_config(args)
    rows = run_study(cfg, threads=args.threads)
    fh, close = _open_out(args.output)
    try:
        w = csv.DictWriter(fh, fieldnames=STUDY_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_qq(args) -> int:
    if args.statistic not in CHI2_STATISTICS:
        raise UsageError(f"qq supports {', '.join(CHI2_STATISTICS)}")
    if args.statistic == "levene_ltilde" and args.n_per_group < 3:
        raise UsageError("levene_ltilde needs at least 3 patterns per group")
    params = MetricParams(args.C, args.p, args.kind)
    res = null_statistic_samples(args.n_per_group, args.model, args.statistic, args.replicates,
                                 args.seed, params, k=args.groups, restarts=args.restarts,
                                 threads=args.threads)
    fh, close = _open_out(args.output)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "value", "chi2_quantile"])
        for rank, v, q in res.quantile_table():
            w.writerow([rank, repr(v), repr(q)])
    finally:
        if close:
            fh.close()
    summary = {"statistic": args.statistic, "df": res.df, "replicates": args.replicates,
               "valid": len(res.values), "invalid": res.invalid, "ks_distance": res.ks}
    _write_json(summary, stream=sys.stdout if close else sys.stderr)
    return EXIT_OK


def cmd_mds(args) -> int:
    D = formats.read_distance_csv(args.matrix)
    if not 1 <= args.dims <= D.n - 1:
        raise UsageError(f"--dims must lie in [1, {D.n - 1}]")
    emb = classical_mds(D, args.dims)
    if args.output in (None, "-"):
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["pattern_id"] + [f"dim{d + 1}" for d in range(args.dims)])
        for pid, row in zip(D.ids, emb.coordinates):
            w.writerow([pid] + [repr(float(v)) for v in row])
        stream = sys.stderr
    else:
        formats.write_embedding_csv(args.output, D.ids, emb.coordinates)
        stream = None
    info = {"eigenvalues": emb.eigenvalues.tolist(), "negative_mass": emb.negative_mass}
    _write_json(info, _sidecar(args.output, ".json"), stream=stream)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _globals(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=d if suppress else 1,
                   help="worker processes (default 1)")
    p.add_argument("--config", default=d, help="TOML or JSON file with option defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metric-anova", description="ANOVA-type tests for metric-space data.")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("dist", help="pairwise TT/RTT distances of a pattern file")
    p.add_argument("patterns")
    p.add_argument("-o", "--output")
    _metric_args(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("test", help="permutation or chi-square test")
    p.add_argument("data", help="distance-matrix CSV or pattern file")
    p.add_argument("labels", help="labels CSV")
    p.add_argument("--statistic", choices=TEST_STATISTICS, default="levene_l")
    p.add_argument("--mode", choices=("perm", "chi2"), default="perm")
    p.add_argument("--M", type=int, default=None, dest="M",
                   help="permutations (default 999, or 99 for Fréchet statistics)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("-o", "--output")
    _metric_args(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="simulate point patterns")
    p.add_argument("model", nargs="?", default=None,
                   help="scenario0..scenario6, csr, strauss, mixture, tilt")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="model parameter, e.g. gamma=0.5 (repeatable)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--prefix", default="p")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="rejection counts over simulated datasets")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--only", help="comma-separated column names to run")
    p.add_argument("--n-per-group", type=int, default=20)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--M", type=int, default=999, dest="M")
    p.add_argument("--M-frechet", type=int, default=99, dest="M_frechet")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--statistics", default="anderson,anderson_bf,levene_l,levene_ltilde")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("-o", "--output")
    _metric_args(p)
    p.set_defaults(func=cmd_study, columns=None)

    p = sub.add_parser("qq", help="null samples for QQ plots")
    p.add_argument("--n-per-group", type=int, default=50)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--model", default="csr")
    p.add_argument("--statistic", default="levene_ltilde")
    p.add_argument("--replicates", type=int, default=500)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("-o", "--output")
    _metric_args(p)
    p.set_defaults(func=cmd_qq)

    p = sub.add_parser("mds", help="classical multidimensional scaling")
    p.add_argument("matrix")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_mds)

    for sp in sub.choices.values():
        _globals(sp, suppress=True)
    return parser


def _apply_config(parser, argv):
    # Config values act as defaults: explicit command-line flags still win.
    args = parser.parse_args(argv)
    config = load_config(getattr(args, "config", None))
    if not config:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions} | {"columns"}
    flat = {k.replace("-", "_"): v for k, v in config.items() if not isinstance(v, dict) or k == "model"}
    section = config.get(args.command, {})
    flat.update({k.replace("-", "_"): v for k, v in section.items()})
    unknown = set(flat) - known - {"seed", "threads", "config"}
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    sub.set_defaults(**{k: v for k, v in flat.items() if k in known})
    parser.set_defaults(**{k: v for k, v in flat.items() if k in ("seed", "threads")})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return int(exc.code or 0)
        return args.func(args)
    except UsageError as exc:
        print(f"metric-anova: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"metric-anova: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"metric-anova: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
