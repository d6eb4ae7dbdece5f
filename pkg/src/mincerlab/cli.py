"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__
from .csvio import file_digest, read_microdata, write_ability, write_microdata
from .errors import InputError, MincerlabError, NumericalError
from .iv import HausmanClampWarning, diagnose, fit_2sls
from .model_spec import (
    FIELD_DUMMIES,
    LEVEL_DUMMIES,
    ModelKind,
    build_design,
    count_clamped_experience,
    filter_sample,
    instrument_matrix,
)
from .regression import DegenerateResponseWarning, fit_ols
from .report import dumps, new_report
from .returns import (
    COEFFICIENT_PRESETS,
    DURATION_PRESETS,
    compare_with_published,
    field_rates,
    level_rates,
    load_preset,
    read_label_values,
    returns_from_labels,
)
from .synthetic import default_workers, generate, load_config, monte_carlo

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


def _thread_limit(deterministic: bool) -> int:
    return 1 if deterministic else default_workers()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _echo(text: str, args) -> None:
    """Human-readable output goes to stdout only when the report goes to a file."""
    stream = sys.stdout if getattr(args, "out", None) else sys.stderr
    print(text, file=stream)


def _load_sample(path: str, report: dict):
    data = read_microdata(path)
    data, filt = filter_sample(data)
    clamped = count_clamped_experience(data)
    report["data_quality"] = {"filter": filt.to_dict(), "clamped_experience": clamped}
    if clamped:
        report["warnings"].append(f"{clamped} row(s) had negative potential experience, clamped to 0")
    return data


def _collect_warnings(caught, report: dict) -> None:
    for w in caught:
        if issubclass(w.category, (HausmanClampWarning, DegenerateResponseWarning)):
            report["warnings"].append(str(w.message))


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.n is not None:
        config = config.updated(n=args.n)
    if args.seed is not None:
        config = config.updated(seed=args.seed)
    if config.n == 0:
        raise InputError("config produces an empty sample (n = 0)")
    sample = generate(config)
    write_microdata(sample.data, args.out)
    if args.ability_out:
        write_ability(sample.ability, args.ability_out)
    print(f"wrote {len(sample)} records to {args.out} (seed {config.seed})", file=sys.stderr)
    return EXIT_OK


def _levels_returns(fit):
    coefs = {lvl: fit.coef(label) for lvl, label in LEVEL_DUMMIES.items()}
    return level_rates(coefs)


def _fields_returns(fit):
    coefs = {f: fit.coef(label) for f, label in FIELD_DUMMIES.items()}
    return field_rates(coefs)


def cmd_estimate(args) -> int:
    kind = ModelKind(args.model)
    if args.method == "2sls":
        if not args.instrument:
            raise InputError("--method 2sls requires --instrument")
        if kind is not ModelKind.BASE:
            raise InputError("2SLS instruments schooling years, which only the base model contains")
    report = new_report(
        "estimate", seed=args.seed, deterministic=args.deterministic,
        inputs={"data": {"path": str(args.data), "sha256": file_digest(args.data)}},
        options={"model": kind.value, "method": args.method, "instrument": args.instrument},
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with threadpool_limits(limits=_thread_limit(args.deterministic)):
            data = _load_sample(args.data, report)
            X, y = build_design(data, kind)
            ols = fit_ols(X, y)
            report["models"] = [{"name": kind.value, "method": "ols", "fit": ols.to_dict()}]
            text = [f"[{kind.value} / ols]", ols.summary()]
            if kind is ModelKind.LEVELS:
                report["returns"] = _levels_returns(ols).to_dict()
            elif kind is ModelKind.FIELDS:
                report["returns"] = _fields_returns(ols).to_dict()
                report["warnings"].append("field dummies use everybody without higher education as the reference group")
            if args.method == "2sls":
                iv = fit_2sls(X, y, "EDU", instrument_matrix(data, [args.instrument]))
                diag = diagnose(ols, iv)
                report["models"].append({"name": kind.value, "method": "2sls", "fit": iv.second_stage.to_dict(),
                                         "instruments": list(iv.instrument_labels)})
                report["models"].append({"name": "first_stage", "method": "ols", "fit": iv.first_stage.to_dict()})
                report["iv_diagnostics"] = diag.to_dict()
                if diag.hausman_clamped:
                    report["warnings"].append("Hausman covariance difference not positive; statistic clamped")
                if diag.weak_instrument:
                    report["warnings"].append("weak instrument: first-stage partial F below 10")
                text += [f"[{kind.value} / 2sls, instrument {args.instrument}]", iv.second_stage.summary(),
                         f"Hausman stat {diag.hausman_stat:.4f} (df {diag.hausman_df}), p = {diag.hausman_p:.4g}; "
                         f"first-stage partial F {diag.first_stage_partial_f:.2f}"]
    _collect_warnings(caught, report)
    _emit(dumps(report), args.out)
    _echo("\n".join(text), args)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    report = new_report(
        "diagnose", seed=args.seed, deterministic=args.deterministic,
        inputs={"data": {"path": str(args.data), "sha256": file_digest(args.data)}},
        options={"instrument": args.instrument, "scope": args.scope},
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with threadpool_limits(limits=_thread_limit(args.deterministic)):
            data = _load_sample(args.data, report)
            X, y = build_design(data, ModelKind.BASE)
            ols = fit_ols(X, y)
            iv = fit_2sls(X, y, "EDU", instrument_matrix(data, [args.instrument]))
            diag = diagnose(ols, iv, scope=args.scope)
    report["iv_diagnostics"] = diag.to_dict()
    report["estimates"] = {"ols": ols.coef("EDU"), "2sls": iv.coef("EDU")}
    if diag.hausman_clamped:
        report["warnings"].append("Hausman covariance difference not positive; statistic clamped")
    if diag.weak_instrument:
        report["warnings"].append("weak instrument: first-stage partial F below 10")
    _collect_warnings(caught, report)
    _emit(dumps(report), args.out)
    _echo(
        f"Hausman stat {diag.hausman_stat:.4f} (df {diag.hausman_df}), p = {diag.hausman_p:.4g}\n"
        f"first-stage partial F {diag.first_stage_partial_f:.2f}, weak = {str(diag.weak_instrument).lower()}",
        args,
    )
    return EXIT_OK


def cmd_returns(args) -> int:
    if bool(args.coefficients) == bool(args.preset):
        raise InputError("give exactly one of --coefficients or --preset")
    if args.preset:
        coefficients = load_preset(args.preset)
        source = {"preset": args.preset}
    else:
        coefficients = read_label_values(args.coefficients)
        source = {"path": str(args.coefficients), "sha256": file_digest(args.coefficients)}
    years = read_label_values(args.years, "years") if args.years else None
    table = returns_from_labels(coefficients, years, DURATION_PRESETS[args.durations])
    report = new_report("returns", seed=0, deterministic=True, inputs={"coefficients": source},
                        options={"durations": args.durations})
    report["returns"] = table.to_dict()
    if args.preset:
        comparisons = compare_with_published(table)
        report["published_comparison"] = [c.to_dict() for c in comparisons]
        for c in comparisons:
            if c.status != "match":
                report["warnings"].append(f"{c.quantity} {c.label}: computed {c.computed:.2f}, "
                                          f"published {c.published} ({c.status}) {c.note}".rstrip())
    if args.format == "csv":
        _emit(table.to_csv(), args.out)
    else:
        _emit(dumps(report), args.out)
    _echo(table.render() + ("\n" + "\n".join(report["warnings"]) if report["warnings"] else ""), args)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    config = load_config(args.config)
    if args.n is not None:
        config = config.updated(n=args.n)
    if args.seed is not None:
        config = config.updated(seed=args.seed)
    with threadpool_limits(limits=1):
        summary = monte_carlo(config, args.reps, args.estimator, args.target,
                              workers=_thread_limit(args.deterministic))
    report = new_report("montecarlo", seed=config.seed, deterministic=args.deterministic,
                        inputs={"config": {"path": str(args.config), "sha256": file_digest(args.config)}},
                        options={"reps": args.reps, "estimator": args.estimator, "target": args.target, "n": config.n})
    report["summary"] = summary.to_dict()
    _emit(dumps(report), args.out)
    _echo(f"{args.estimator} {args.target}: mean {summary.mean:.6f}, sd {summary.sd:.6f} "
          f"(truth {summary.truth}), failed {len(summary.failures)}", args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mincerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mincerlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timestamps and run single-threaded for byte-identical output")

    p = sub.add_parser("simulate", help="generate synthetic microdata from a DGP config")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--out", required=True, help="CSV destination")
    p.add_argument("--ability-out", help="also write the latent ability column")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--n", type=int, help="override the record count")
    p.add_argument("--deterministic", action="store_true", help="accepted for symmetry; output is always deterministic")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="fit a wage equation")
    p.add_argument("data", help="microdata CSV")
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="base")
    p.add_argument("--method", choices=["ols", "2sls"], default="ols")
    p.add_argument("--instrument", help="excluded instrument column (e.g. urban)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("diagnose", parents=[common], help="Hausman test and first-stage F")
    p.add_argument("data", help="microdata CSV")
    p.add_argument("--instrument", required=True)
    p.add_argument("--scope", choices=["endogenous", "full"], default="endogenous")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("returns", parents=[common], help="relative effects and annualized returns")
    p.add_argument("--coefficients", help="CSV with label,coefficient")
    p.add_argument("--preset", choices=sorted(k for k in COEFFICIENT_PRESETS if k in ("paper-table6", "paper-table9")))
    p.add_argument("--years", help="CSV with label,years overriding schooling years or durations")
    p.add_argument("--durations", choices=sorted(DURATION_PRESETS), default="uniform")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("montecarlo", parents=[common], help="sampling distribution over seeded replications")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--estimator", choices=["ols", "2sls"], default="ols")
    p.add_argument("--target", default="EDU")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--n", type=int, help="override the record count")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MincerlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
