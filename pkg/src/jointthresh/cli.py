"""Command-line front end.

Commands
--------
simulate   write simulated samples (with latent columns) to CSV
fit        derive rules on a dataset, persist them and their training risks
evaluate   out-of-sample risk of each (method, lambda): held-out simulated
           sample, outer cross-validation for CSV data, or a saved rule
           applied to a test CSV
compare    evaluate over one or more libraries and print a method x lambda table

Settings come from ``--config FILE`` (``key=value`` lines, dotted namespaces
such as ``random_forest.trees=500`` or ``crs.max_evaluations=20000``) and are
overridden by command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .combiner import METHODS, rule_from_text, rule_to_text
from .data import load_csv, write_csv
from .errors import ConfigParse, JointThreshError
from .evaluation import (
    ReportRow,
    cv_risk_table,
    density_thresholds,
    fit_pipeline,
    out_of_sample_eval,
    simulation_study,
    write_densities,
    write_report,
)
from .learners import DEFAULTS, LIBRARIES, fit as fit_learner, make_library
from .loss import LossSpec
from .optimizer import CrsOptions
from .simulation import SimConfig, bayes_rule_risk, generate, resolve_setting
from .stacking import dump_z

DEFAULT_LAMBDA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))

# built-in defaults for every config key that is not a learner hyperparameter
BASE_DEFAULTS = {
    "lambda": ",".join(repr(x) for x in DEFAULT_LAMBDA_GRID),
    "library": "four",
    "methods": ",".join(METHODS),
    "seed": "1",
    "repeats": "1",
    "folds.inner": "10",
    "folds.outer": "10",
    "workers": "1",
    "n": "10000",
    "n_test": "",
    "sim": "",
    "csv": "",
    "test_csv": "",
    "label_col": "label",
    "positive_level": "",
    "impute_indicator": "false",
    "drop_constant": "false",
    "drop_cols": "id",
    "standardize": "true",
    "timings": "false",
    "crs.max_evaluations": "10000",
    "crs.population": "",
    "crs.xtol_rel": "1e-6",
    "crs.stall_factor": "200",
}

# flag dest -> config key
FLAG_KEYS = {
    "lam": "lambda", "library": "library", "methods": "methods", "seed": "seed",
    "repeats": "repeats", "folds_inner": "folds.inner", "folds_outer": "folds.outer",
    "workers": "workers", "n": "n", "n_test": "n_test", "sim": "sim", "csv": "csv",
    "test_csv": "test_csv", "label_col": "label_col", "positive_level": "positive_level",
    "impute_indicator": "impute_indicator", "drop_constant": "drop_constant",
    "drop_cols": "drop_cols", "timings": "timings",
}


def read_config(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParse(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigParse(f"{path}:{lineno}: empty key")
        values[key] = value
    return values


def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigParse(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _ints(text, what):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigParse(f"{what}: expected comma-separated integers, got {text!r}") from None


def _bool(text, what):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigParse(f"{what}: expected a boolean, got {text!r}")


def _number(text, what):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ConfigParse(f"{what}: expected a number, got {text!r}") from None


@dataclass
class RunConfig:
    command: str
    lambda_grid: list
    libraries: list  # list of (name, kinds)
    methods: list
    seeds: list
    output_dir: str
    sim: str = ""
    csv_path: str = ""
    test_csv: str = ""
    n: int = 10000
    n_test: int | None = None
    label_col: str = "label"
    positive_level: str | None = None
    impute_indicator: bool = False
    drop_constant: bool = False
    drop_cols: tuple = ("id",)
    folds_inner: int = 10
    folds_outer: int = 10
    workers: int = 1
    standardize: bool = True
    timings: bool = False
    crs: CrsOptions = field(default_factory=CrsOptions)
    learner_overrides: dict = field(default_factory=dict)
    dump_z: str = ""
    dump_densities: str = ""
    rule_path: str = ""
    resolved: dict = field(default_factory=dict)


def _parse_library(text):
    libs = []
    for part in str(text).split("+"):
        part = part.strip()
        if part in LIBRARIES:
            libs.append((part, list(LIBRARIES[part])))
            continue
        kinds = [k.strip() for k in part.split(",") if k.strip()]
        if kinds and all(k in LIBRARIES for k in kinds):
            libs.extend((k, list(LIBRARIES[k])) for k in kinds)
            continue
        unknown = [k for k in kinds if k not in DEFAULTS]
        if not kinds or unknown:
            raise ConfigParse(f"library: unknown learner kinds {unknown or part!r}")
        libs.append(("custom", kinds))
    return libs


def resolve_config(args):
    values = dict(BASE_DEFAULTS)
    if args.config:
        values.update(read_config(args.config))
    for dest, key in FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[key] = str(v).lower() if isinstance(v, bool) else str(v)
    for item in args.set or ():
        if "=" not in item:
            raise ConfigParse(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()

    overrides = {}
    for key, value in values.items():
        if "." in key and key.split(".", 1)[0] in DEFAULTS:
            kind, hp = key.split(".", 1)
            if hp not in DEFAULTS[kind]:
                raise ConfigParse(f"{key}: {kind} has no hyperparameter {hp!r}")
            overrides.setdefault(kind, {})[hp] = _number(value, key)
        elif key not in BASE_DEFAULTS:
            raise ConfigParse(f"unknown config key {key!r}")

    lambdas = _floats(values["lambda"], "lambda")
    if not lambdas or any(not 0.0 < x < 1.0 for x in lambdas):
        raise ConfigParse(f"lambda grid must be non-empty and inside (0, 1): {lambdas}")
    methods = [m.strip() for m in values["methods"].split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if not methods or bad:
        raise ConfigParse(f"methods must be a subset of {METHODS}, got {methods}")
    seeds = _ints(values["seed"], "seed")
    repeats = _ints(values["repeats"], "repeats")[0]
    if not seeds or repeats < 1:
        raise ConfigParse("need at least one seed and repeats >= 1")
    expanded = []
    for s in seeds:
        for r in range(repeats):
            if s + r not in expanded:
                expanded.append(s + r)

    pop = values["crs.population"]
    crs = CrsOptions(
        population_size=int(pop) if pop else None,
        max_evaluations=int(_number(values["crs.max_evaluations"], "crs.max_evaluations")),
        xtol_rel=float(_number(values["crs.xtol_rel"], "crs.xtol_rel")),
        stall_factor=int(_number(values["crs.stall_factor"], "crs.stall_factor")),
    )
    cfg = RunConfig(
        command=args.command,
        lambda_grid=lambdas,
        libraries=_parse_library(values["library"]),
        methods=methods,
        seeds=expanded,
        output_dir=args.out,
        sim=resolve_setting(values["sim"]) if values["sim"] else "",
        csv_path=values["csv"],
        test_csv=values["test_csv"],
        n=int(_number(values["n"], "n")),
        n_test=int(_number(values["n_test"], "n_test")) if values["n_test"] else None,
        label_col=values["label_col"],
        positive_level=values["positive_level"] or None,
        impute_indicator=_bool(values["impute_indicator"], "impute_indicator"),
        drop_constant=_bool(values["drop_constant"], "drop_constant"),
        drop_cols=tuple(c.strip() for c in values["drop_cols"].split(",") if c.strip()),
        folds_inner=int(_number(values["folds.inner"], "folds.inner")),
        folds_outer=int(_number(values["folds.outer"], "folds.outer")),
        workers=int(_number(values["workers"], "workers")),
        standardize=_bool(values["standardize"], "standardize"),
        timings=_bool(values["timings"], "timings"),
        crs=crs,
        learner_overrides=overrides,
        dump_z=getattr(args, "dump_z", None) or "",
        dump_densities=getattr(args, "dump_densities", None) or "",
        rule_path=getattr(args, "rule", None) or "",
    )
    if cfg.command != "simulate" and bool(cfg.sim) == bool(cfg.csv_path) and not cfg.rule_path:
        raise ConfigParse("choose exactly one data source: --sim SETTING or --csv PATH")
    if cfg.command == "simulate" and not cfg.sim:
        raise ConfigParse("simulate needs --sim setting1|setting2")
    resolved = dict(values)
    for kind, hps in overrides.items():
        for hp, v in hps.items():
            resolved[f"{kind}.{hp}"] = str(v)
    resolved["command"] = cfg.command
    resolved["seeds_expanded"] = ",".join(str(s) for s in expanded)
    cfg.resolved = resolved
    return cfg


# commands ------------------------------------------------------------------

def _write_manifest(cfg):
    path = os.path.join(cfg.output_dir, "manifest.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# jointthresh {__version__} resolved configuration\n")
        for key in sorted(cfg.resolved):
            fh.write(f"{key}={cfg.resolved[key]}\n")
        for kind in sorted(DEFAULTS):
            hp = dict(DEFAULTS[kind])
            hp.update(cfg.learner_overrides.get(kind, {}))
            for name in sorted(hp):
                key = f"{kind}.{name}"
                if key not in cfg.resolved:
                    fh.write(f"{key}={hp[name]}\n")


def _load_data(cfg, seed):
    """Training dataset (and sim sample when simulated)."""
    if cfg.csv_path:
        d = load_csv(
            cfg.csv_path, cfg.label_col, cfg.positive_level, cfg.impute_indicator,
            cfg.drop_cols, cfg.drop_constant,
        )
        return d, None
    sample = generate(SimConfig(cfg.n, cfg.sim, seed, stream=0))
    return sample.dataset, sample


def _library(cfg, kinds, seed):
    return make_library(kinds, seed, cfg.learner_overrides)


def _suffix(path, lib_name, seed, multi):
    if not multi:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}_{lib_name}_seed{seed}{ext or '.csv'}"


def _write_training_objectives(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "lambda", "K", "seed", "training_objective"])
        for r in sorted(records, key=lambda r: (r[2], METHODS.index(r[0]), r[1], r[3])):
            w.writerow([r[0], repr(float(r[1])), r[2], r[3], repr(float(r[4]))])


def _check_safeguard(rules, lams):
    for lam in lams:
        crs, ts = rules.get(("crs", lam)), rules.get(("two_step", lam))
        if crs is not None and ts is not None and crs.training_objective > ts.training_objective:
            raise RuntimeError(
                f"safeguard violated at lambda={lam}: crs {crs.training_objective} > two_step {ts.training_objective}"
            )


def cmd_simulate(cfg):
    rows = []
    for seed in cfg.seeds:
        sample = generate(SimConfig(cfg.n, cfg.sim, seed, stream=0))
        d = sample.dataset
        extra = {f"latent_u{j + 1}": sample.latent_u[:, j] for j in range(4)}
        extra["bayes_score"] = sample.bayes_score
        path = os.path.join(cfg.output_dir, f"sim_{cfg.sim}_seed{seed}.csv")
        write_csv(path, d, "label", extra)
        for lam in cfg.lambda_grid:
            rows.append((seed, lam, d.prevalence, bayes_rule_risk(sample, LossSpec(lam))))
    with open(os.path.join(cfg.output_dir, "reference.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "lambda", "prevalence", "bayes_risk"])
        for r in rows:
            w.writerow([r[0], repr(float(r[1])), repr(float(r[2])), repr(float(r[3]))])
    print(f"{'seed':>6} {'lambda':>7} {'prev':>7} {'bayes_risk%':>12}")
    for seed, lam, prev, risk in rows:
        print(f"{seed:>6} {lam:>7.2f} {prev:>7.3f} {100 * risk:>12.2f}")
    return 0


def cmd_fit(cfg):
    rule_dir = os.path.join(cfg.output_dir, "rules")
    os.makedirs(rule_dir, exist_ok=True)
    rows, objectives = [], []
    multi = len(cfg.seeds) * len(cfg.libraries) > 1
    for lib_name, kinds in cfg.libraries:
        for seed in cfg.seeds:
            d, _ = _load_data(cfg, seed)
            t0 = time.perf_counter()
            pipe = fit_pipeline(
                _library(cfg, kinds, seed), d, cfg.methods, cfg.lambda_grid,
                inner_folds=cfg.folds_inner, seed=seed, crs_options=cfg.crs,
                workers=cfg.workers, standardize=cfg.standardize,
            )
            elapsed = time.perf_counter() - t0
            _check_safeguard(pipe.rules, cfg.lambda_grid)
            if cfg.dump_z:
                dump_z(_suffix(cfg.dump_z, lib_name, seed, multi), pipe.stack.z, pipe.labels)
            for (method, lam), rule in pipe.rules.items():
                name = f"rule_{method}_lambda{lam!r}_K{rule.K}_{lib_name}_seed{seed}.txt"
                with open(os.path.join(rule_dir, name), "w", encoding="utf-8") as fh:
                    fh.write(rule_to_text(rule))
                rows.append(ReportRow(
                    method, lam, rule.K, rule.training_objective, None, rule.threshold,
                    tuple(rule.alpha), seed, elapsed, rule.training_objective, lib_name,
                ))
                objectives.append((method, lam, rule.K, seed, rule.training_objective))
    write_report(os.path.join(cfg.output_dir, "report.csv"), rows, cfg.timings)
    _write_training_objectives(os.path.join(cfg.output_dir, "training_objectives.csv"), objectives)
    _print_summary(rows, "training risk (%)")
    return 0


def _evaluate_rule_file(cfg):
    with open(cfg.rule_path, encoding="utf-8") as fh:
        rule = rule_from_text(fh.read())
    if not rule.learner_specs:
        raise ConfigParse(f"{cfg.rule_path} lacks learner seeds; cannot refit its library")
    if not (cfg.csv_path and cfg.test_csv):
        raise ConfigParse("evaluating a saved rule needs --csv (training data) and --test-csv")
    load = dict(
        label_column=cfg.label_col, positive_level=cfg.positive_level,
        impute_indicator=cfg.impute_indicator, drop_columns=cfg.drop_cols,
        drop_constant=cfg.drop_constant,
    )
    train, test = load_csv(cfg.csv_path, **load), load_csv(cfg.test_csv, **load)
    if cfg.standardize:
        from .data import fit_standardization

        params = fit_standardization(train.features, train.column_kinds, list(train.column_names))
        train = train.with_features(params.apply(train.features))
        test = test.with_features(params.apply(test.features))
    models = [fit_learner(spec, train) for spec in rule.learner_specs]
    lam = rule.lam if rule.lam is not None else cfg.lambda_grid[0]
    risk = out_of_sample_eval(rule, models, test, LossSpec(lam))
    row = ReportRow(rule.method, lam, rule.K, risk, None, rule.threshold, tuple(rule.alpha), cfg.seeds[0])
    write_report(os.path.join(cfg.output_dir, "report.csv"), [row], False)
    _print_summary([row], "test risk (%)")
    return 0


def cmd_evaluate(cfg):
    if cfg.rule_path:
        return _evaluate_rule_file(cfg)
    rows, objectives, references = [], [], []
    multi = len(cfg.seeds) * len(cfg.libraries) > 1
    for lib_name, kinds in cfg.libraries:
        for seed in cfg.seeds:
            library = _library(cfg, kinds, seed)
            if cfg.sim:
                res = simulation_study(
                    cfg.sim, cfg.n, seed, library, cfg.methods, cfg.lambda_grid,
                    inner_folds=cfg.folds_inner, crs_options=cfg.crs, workers=cfg.workers,
                    standardize=cfg.standardize, n_test=cfg.n_test, library_name=lib_name,
                )
                _check_safeguard(res.pipeline.rules, cfg.lambda_grid)
                rows.extend(res.rows)
                objectives.extend((r.method, r.lam, r.K, seed, r.training_objective) for r in res.rows)
                references.extend((seed, lam, risk) for lam, risk in res.bayes.items())
                if cfg.dump_z:
                    dump_z(_suffix(cfg.dump_z, lib_name, seed, multi), res.pipeline.stack.z, res.pipeline.labels)
                continue
            d, _ = _load_data(cfg, seed)
            t0 = time.perf_counter()
            cv = cv_risk_table(
                cfg.methods, library, d, cfg.lambda_grid, outer_folds=cfg.folds_outer,
                inner_folds=cfg.folds_inner, seed=seed, crs_options=cfg.crs,
                workers=cfg.workers, standardize=cfg.standardize,
            )
            for fold_rules in cv.fold_rules:
                _check_safeguard(fold_rules, cfg.lambda_grid)
            full = fit_pipeline(
                library, d, cfg.methods, cfg.lambda_grid, inner_folds=cfg.folds_inner,
                seed=seed, crs_options=cfg.crs, workers=cfg.workers, standardize=cfg.standardize,
            )
            _check_safeguard(full.rules, cfg.lambda_grid)
            elapsed = time.perf_counter() - t0
            for (method, lam), rule in full.rules.items():
                rows.append(ReportRow(
                    method, lam, rule.K, cv.risks[(method, lam)], None, rule.threshold,
                    tuple(rule.alpha), seed, elapsed, rule.training_objective, lib_name,
                ))
                objectives.append((method, lam, rule.K, seed, rule.training_objective))
            if cfg.dump_z:
                dump_z(_suffix(cfg.dump_z, lib_name, seed, multi), full.stack.z, full.labels)
            if cfg.dump_densities:
                prefix = cfg.dump_densities + (f"_{lib_name}_seed{seed}" if multi else "")
                sl = full.stack.full.values @ full.alpha
                za = full.stack.z.values @ full.alpha
                write_densities(
                    prefix, sl, cv.cv_sl_scores, za,
                    density_thresholds(d.labels, sl, cv.cv_sl_scores, za, cfg.lambda_grid),
                )
    write_report(os.path.join(cfg.output_dir, "report.csv"), rows, cfg.timings)
    _write_training_objectives(os.path.join(cfg.output_dir, "training_objectives.csv"), objectives)
    if references:
        with open(os.path.join(cfg.output_dir, "reference.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "lambda", "bayes_risk"])
            for seed, lam, risk in sorted(set(references)):
                w.writerow([seed, repr(float(lam)), repr(float(risk))])
    label = "relative difference vs Bayes (%)" if cfg.sim else "cross-validated risk (%)"
    _print_summary(rows, label, use_rel=bool(cfg.sim))
    return 0


def _print_summary(rows, title, use_rel=False):
    if not rows:
        return
    lams = sorted({r.lam for r in rows})
    print(f"{title}; mean over seeds")
    for K in sorted({r.K for r in rows}):
        print(f"K={K}")
        print(f"  {'method':<12}" + "".join(f"{lam:>9.2f}" for lam in lams))
        for method in METHODS:
            cells = []
            for lam in lams:
                vals = [
                    (r.rel_diff if use_rel else r.risk)
                    for r in rows if r.K == K and r.method == method and r.lam == lam
                ]
                cells.append(f"{100 * np.mean(vals):>9.2f}" if vals else f"{'':>9}")
            if any(c.strip() for c in cells):
                print(f"  {method:<12}" + "".join(cells))


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "compare": cmd_evaluate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="jointthresh", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "write simulated samples with latent columns",
        "fit": "derive and save rules on a dataset",
        "evaluate": "out-of-sample / cross-validated risk, or test a saved rule",
        "compare": "compare methods across lambdas and libraries",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="key=value settings file; flags take precedence")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="extra setting, e.g. random_forest.trees=200 (repeatable)")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--lambda", dest="lam", help="comma-separated false-negative weights in (0,1)")
        p.add_argument("--library", help="four, eight, four+eight, or comma-separated learner kinds")
        p.add_argument("--methods", help="comma-separated subset of conditional,two_step,crs")
        p.add_argument("--seed", help="comma-separated integer seeds")
        p.add_argument("--repeats", help="runs per seed; repeat r uses seed + r")
        p.add_argument("--folds-inner", dest="folds_inner", help="stacking CV folds (default 10)")
        p.add_argument("--folds-outer", dest="folds_outer", help="evaluation CV folds for CSV data (default 10)")
        p.add_argument("--workers", help="worker processes for learner fits (default 1)")
        p.add_argument("--sim", help="simulation setting: setting1 (observe U) or setting2 (observe g(U))")
        p.add_argument("--n", help="simulated sample size (default 10000)")
        p.add_argument("--n-test", dest="n_test", help="simulated test sample size (default n)")
        p.add_argument("--csv", help="input CSV with a header row")
        p.add_argument("--test-csv", dest="test_csv", help="test CSV for evaluate --rule")
        p.add_argument("--label-col", dest="label_col", help="label column name (default 'label')")
        p.add_argument("--positive-level", dest="positive_level",
                       help="label value mapped to 1 (default: lexicographically larger)")
        p.add_argument("--impute-indicator", dest="impute_indicator", action="store_const", const=True,
                       help="add missing indicators and fill missing cells with 0")
        p.add_argument("--drop-constant", dest="drop_constant", action="store_const", const=True,
                       help="drop constant feature columns instead of failing")
        p.add_argument("--drop-cols", dest="drop_cols", help="comma-separated columns to ignore (default id)")
        p.add_argument("--dump-z", dest="dump_z", metavar="PATH", help="write the cross-validated matrix Z")
        p.add_argument("--dump-densities", dest="dump_densities", metavar="PREFIX",
                       help="write SL / CV-SL / Z-alpha scores and thresholds (CSV data)")
        p.add_argument("--timings", action="store_const", const=True,
                       help="fill the runtime_s report column (makes reports run-dependent)")
        if name == "evaluate":
            p.add_argument("--rule", help="saved rule file to refit on --csv and test on --test-csv")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_manifest(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=Warning)
            return COMMANDS[cfg.command](cfg)
    except ConfigParse as exc:
        print(f"jointthresh: config error: {exc}", file=sys.stderr)
        return 2
    except (JointThreshError, RuntimeError, OSError, ValueError, KeyError) as exc:
        module = type(exc).__module__.rsplit(".", 1)[-1]
        print(f"jointthresh: {args.command} failed [{module}.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
