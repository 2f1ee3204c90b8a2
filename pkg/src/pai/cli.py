"""Command-line experiment runner.

Subcommands cover the full workflow over files: ``fit`` a generator from a
CSV, ``synthesize`` samples from it, run the ``test-*`` procedures, build
prediction intervals, and reproduce the regression coverage study
end-to-end. Every subcommand takes a mandatory ``--seed`` and is
byte-reproducible: identical arguments always produce identical output
files.

CSV conventions: headerless by default (``--header`` skips one line); in
labeled/joint files column 0 is the response or binary label and the
remaining columns are features.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import dataio
from .empirical import Correction, EmpiricalDistribution, Sidedness
from .empirical import p_value as evaluate_p_value
from .errors import InputError, NumericError
from .generators import (
    PassConfig,
    fit_copula,
    fit_gaussian,
    load_model,
    pass_synthesize,
    save_model,
)
from .inference import (
    PIVOT_MEAN_KNOWN_SCALE,
    PIVOT_STUDENTIZED_MEAN,
    TestReport,
    pivotal_inference,
    test_conditional_coherence,
    test_feature_significance,
    test_two_sample_fid,
)
from .perturb import PerturbationSpec
from .predict import pai_interval, run_prediction_study, simulate_regression_data

PIVOTAL_SCHEMA = "pai-pivotal/1"
INTERVALS_SCHEMA = "pai-intervals/1"

_SIDEDNESS = {"two": Sidedness.TWO_SIDED, "upper": Sidedness.UPPER_TAIL, "lower": Sidedness.LOWER_TAIL}
_CORRECTION = {"raw": Correction.RAW, "plus-one": Correction.PLUS_ONE}


class UsageError(Exception):
    """A handler-level usage problem (bad flag combination)."""


def _mc_count(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("Monte Carlo size must be at least 2")
    return value


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def _cfg(args, rank_match: bool = False) -> PassConfig:
    return PassConfig(
        perturbation=PerturbationSpec(tau=args.tau),
        rank_match=rank_match,
        mc_seed=args.seed,
    )


def _echo(args, **extra) -> dict:
    echo = {"schema_version": 1, "command": args.command, "seed": args.seed}
    echo.update(extra)
    return echo


def _labeled(matrix: np.ndarray, what: str):
    if matrix.shape[1] < 2:
        raise InputError(f"{what}: labeled data needs a label column plus features")
    return matrix[:, 1:], matrix[:, 0]


def cmd_fit(args) -> int:
    data = dataio.read_matrix(args.input, args.header)
    if args.kind == "gaussian":
        model = fit_gaussian(data)
    else:
        model = fit_copula(data)
    save_model(model, args.out)
    print(
        f"fit: kind={model.kind} dim={model.dim} rows={model.fit_info.n_rows} "
        f"hash={model.fit_info.data_hash[:12]} -> {args.out}"
    )
    return 0


def cmd_synthesize(args) -> int:
    model = load_model(args.model)
    inference = None
    if args.rank_match:
        if args.input is None:
            raise UsageError("--rank-match requires --input with the inference sample")
        inference = dataio.read_matrix(args.input, args.header)
        n = inference.shape[0]
    else:
        if args.n is None:
            raise UsageError("provide --n (or --rank-match with --input)")
        n = args.n
    cfg = _cfg(args, rank_match=args.rank_match)
    sample = pass_synthesize(model, inference, cfg, replicate=args.replicate, n=n)
    dataio.write_matrix(args.out, sample)
    print(f"synthesize: {sample.shape[0]}x{sample.shape[1]} tau={args.tau} -> {args.out}")
    return 0


def _finish_report(report: TestReport, args, **extra) -> TestReport:
    merged = dict(report.config)
    merged.update(_echo(args, **extra))
    report = dataclasses.replace(report, config=merged)
    report.save(args.out)
    print(
        f"{report.test_name}: statistic={report.statistic:.6g} "
        f"p={report.p_value:.6g} ({report.sidedness.value}, {report.correction.value}) -> {args.out}"
    )
    return report


def cmd_test_fid(args) -> int:
    reference = dataio.read_matrix(args.input, args.header)
    candidate = dataio.read_matrix(args.candidate, args.header)
    model = load_model(args.model)
    report = test_two_sample_fid(
        reference,
        candidate,
        model,
        D=args.mc,
        cfg=_cfg(args),
        sidedness=_SIDEDNESS[args.sided],
        correction=_CORRECTION[args.correction],
    )
    _finish_report(report, args, input=args.input, candidate=args.candidate, model=args.model)
    return 0


def cmd_test_feature(args) -> int:
    train = _labeled(dataio.read_matrix(args.input, args.header), "train")
    inference = _labeled(dataio.read_matrix(args.inference, args.header), "inference")
    model = load_model(args.model)
    try:
        mask = [int(part) for part in args.mask.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"--mask must be comma-separated integers, got {args.mask!r}")
    if not mask:
        raise UsageError("--mask must name at least one feature index")
    report = test_feature_significance(
        train,
        inference,
        mask,
        model,
        D=args.mc,
        cfg=_cfg(args),
        correction=_CORRECTION[args.correction],
    )
    _finish_report(report, args, input=args.input, inference=args.inference, model=args.model)
    return 0


def cmd_test_coherence(args) -> int:
    group1 = dataio.read_matrix(args.input, args.header)
    group2 = dataio.read_matrix(args.input2, args.header)
    model1 = load_model(args.model)
    model2 = load_model(args.model2) if args.model2 else model1
    report = test_conditional_coherence(
        group1,
        group2,
        model1,
        model2,
        D=args.mc,
        cfg=_cfg(args),
        correction=_CORRECTION[args.correction],
    )
    _finish_report(report, args, input=args.input, input2=args.input2, model=args.model, model2=args.model2)
    return 0


def cmd_test_pivotal(args) -> int:
    data = dataio.read_matrix(args.input, args.header)
    if data.shape[1] != 1:
        raise InputError(f"pivotal inference expects a single-column file, got {data.shape[1]} columns")
    pivot = PIVOT_MEAN_KNOWN_SCALE if args.sigma is not None else PIVOT_STUDENTIZED_MEAN
    result = pivotal_inference(
        data[:, 0],
        D=args.mc,
        cfg=_cfg(args),
        alpha=args.alpha,
        pivot=pivot,
        theta0=args.theta0,
        sigma=args.sigma,
        sidedness=_SIDEDNESS[args.sided],
        correction=_CORRECTION[args.correction],
    )
    payload = {
        "schema": PIVOTAL_SCHEMA,
        "pivot": result.pivot,
        "estimate": result.estimate,
        "scale": result.scale,
        "alpha": result.alpha,
        "lower": result.lower,
        "upper": result.upper,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "sidedness": args.sided,
        "correction": args.correction,
        "null_draws": result.null_draws.values.tolist(),
        "seed": result.seed,
        "config": {**result.config, **_echo(args, input=args.input)},
    }
    _write_json(args.out, payload)
    interval = f"[{result.lower:.6g}, {result.upper:.6g}]"
    p_text = "n/a" if result.p_value is None else f"{result.p_value:.6g}"
    print(f"pivotal: estimate={result.estimate:.6g} interval={interval} p={p_text} -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    X, y = simulate_regression_data(args.n, args.seed)
    dataio.write_matrix(args.out, np.column_stack((y, X)))
    print(f"simulate: {args.n} rows (response + {X.shape[1]} features) -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    points = dataio.read_matrix(args.input, args.header)
    if points.shape[1] != model.dim - 1:
        raise InputError(
            f"prediction points have {points.shape[1]} columns, model expects {model.dim - 1}"
        )
    cfg = _cfg(args)
    records = []
    for i, x in enumerate(points):
        interval = pai_interval(model, x, args.alpha, args.mc, cfg, stream_index=i)
        records.append(
            {
                "x": x.tolist(),
                "lower": interval.lower,
                "upper": interval.upper,
                "center": interval.center_estimate,
                "alpha": args.alpha,
                "mc_draws_used": interval.mc_draws_used,
            }
        )
    payload = {
        "schema": INTERVALS_SCHEMA,
        "alpha": args.alpha,
        "intervals": records,
        "config": _echo(args, model=args.model, input=args.input, mc=args.mc, tau=args.tau),
    }
    _write_json(args.out, payload)
    print(f"predict: {len(records)} intervals at alpha={args.alpha} -> {args.out}")
    return 0


def cmd_coverage(args) -> int:
    study = run_prediction_study(
        seed=args.seed,
        n_total=args.n,
        n_train=args.train,
        alpha=args.alpha,
        kind=args.kind,
        tau=args.tau,
        pai_draws=args.mc,
    )
    study["config"].update(_echo(args))
    _write_json(args.out, study)
    summary = study["summary"]
    print(
        "coverage: median={median_coverage:.3f} mean={mean_coverage:.3f} "
        "conformal_mean={baseline_mean_coverage:.3f} shorter_fraction={shorter_fraction:.3f}".format(
            **summary
        )
        + f" -> {args.out}"
    )
    return 0


def cmd_verify_report(args) -> int:
    with open(args.input, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    schema = payload.get("schema")
    if schema == "pai-report/1":
        report = TestReport.from_dict(payload)
        if not report.is_consistent():
            raise InputError(
                f"stored p-value {report.p_value} != recomputed {report.recomputed_p_value()}"
            )
        print(f"verify: ok (p={report.p_value:.6g} reproduces from {report.null_draws.size} draws)")
        return 0
    if schema == PIVOTAL_SCHEMA:
        draws = EmpiricalDistribution(np.asarray(payload["null_draws"], dtype=np.float64))
        q_lo, q_hi = draws.quantile([payload["alpha"] / 2.0, 1.0 - payload["alpha"] / 2.0])
        lower = payload["estimate"] - float(q_hi) * payload["scale"]
        upper = payload["estimate"] - float(q_lo) * payload["scale"]
        if not (lower == payload["lower"] and upper == payload["upper"]):
            raise InputError("stored interval does not reproduce from stored draws")
        if payload["statistic"] is not None:
            p = evaluate_p_value(
                draws,
                payload["statistic"],
                _SIDEDNESS[payload["sidedness"]],
                _CORRECTION[payload["correction"]],
            )
            if p != payload["p_value"]:
                raise InputError(f"stored p-value {payload['p_value']} != recomputed {p}")
        print("verify: ok (pivotal interval reproduces from stored draws)")
        return 0
    raise InputError(f"unrecognized report schema: {schema!r}")


def _add_common(sub, *, seed=True, out=True, header=True, tau=False, mc=False, alpha=False):
    if seed:
        sub.add_argument("--seed", type=int, required=True, help="master random seed (mandatory)")
    if out:
        sub.add_argument("--out", required=True, help="output file path")
    if header:
        sub.add_argument("--header", action="store_true", help="skip one header line in CSV inputs")
    if tau:
        sub.add_argument("--tau", type=float, default=0.0, help="perturbation size (default 0)")
    if mc:
        sub.add_argument("--mc", type=_mc_count, required=True, help="Monte Carlo replicate count D")
    if alpha:
        sub.add_argument("--alpha", type=float, default=0.05, help="level (default 0.05)")


def _add_test_flags(sub):
    sub.add_argument("--correction", choices=sorted(_CORRECTION), default="plus-one")
    sub.add_argument("--sided", choices=sorted(_SIDEDNESS), default="two")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pai",
        description="Synthetic-sample Monte Carlo inference over CSV files.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("fit", help="fit a generator model from a CSV sample")
    sub.add_argument("--input", required=True)
    sub.add_argument("--kind", choices=("gaussian", "copula"), default="gaussian")
    _add_common(sub)
    sub.set_defaults(func=cmd_fit)

    sub = commands.add_parser("synthesize", help="draw one synthetic sample from a model")
    sub.add_argument("--model", required=True)
    sub.add_argument("--input", help="inference sample (required with --rank-match)")
    sub.add_argument("--n", type=int, help="sample size when not rank matching")
    sub.add_argument("--rank-match", action="store_true")
    sub.add_argument("--replicate", type=int, default=0, help="replicate stream index (default 0)")
    _add_common(sub, tau=True)
    sub.set_defaults(func=cmd_synthesize)

    sub = commands.add_parser("test-fid", help="distribution test of candidate vs reference")
    sub.add_argument("--input", required=True, help="reference sample CSV")
    sub.add_argument("--candidate", required=True, help="candidate sample CSV")
    sub.add_argument("--model", required=True)
    _add_common(sub, tau=True, mc=True)
    _add_test_flags(sub)
    sub.set_defaults(func=cmd_test_fid)

    sub = commands.add_parser("test-feature", help="feature-significance test (label column 0)")
    sub.add_argument("--input", required=True, help="train CSV: label, features...")
    sub.add_argument("--inference", required=True, help="inference CSV: label, features...")
    sub.add_argument("--model", required=True, help="joint model over (label, features)")
    sub.add_argument("--mask", required=True, help="comma-separated feature indices to mask")
    _add_common(sub, tau=True, mc=True)
    sub.add_argument("--correction", choices=sorted(_CORRECTION), default="plus-one")
    sub.set_defaults(func=cmd_test_feature)

    sub = commands.add_parser("test-coherence", help="two-condition coherence test")
    sub.add_argument("--input", required=True, help="group 1 CSV")
    sub.add_argument("--input2", required=True, help="group 2 CSV")
    sub.add_argument("--model", required=True, help="condition 1 generator")
    sub.add_argument("--model2", help="condition 2 generator (default: same as --model)")
    _add_common(sub, tau=True, mc=True)
    sub.add_argument("--correction", choices=sorted(_CORRECTION), default="plus-one")
    sub.set_defaults(func=cmd_test_coherence)

    sub = commands.add_parser("test-pivotal", help="pivotal mean inference on a 1-column CSV")
    sub.add_argument("--input", required=True)
    sub.add_argument("--theta0", type=float, help="null value of the mean (optional)")
    sub.add_argument("--sigma", type=float, help="known scale (switches to the known-scale pivot)")
    _add_common(sub, tau=True, mc=True, alpha=True)
    _add_test_flags(sub)
    sub.set_defaults(func=cmd_test_pivotal)

    sub = commands.add_parser("simulate", help="simulate the benchmark regression dataset")
    sub.add_argument("--n", type=int, required=True)
    _add_common(sub, header=False)
    sub.set_defaults(func=cmd_simulate)

    sub = commands.add_parser("predict", help="Monte Carlo prediction intervals at given points")
    sub.add_argument("--model", required=True, help="joint model over (response, features)")
    sub.add_argument("--input", required=True, help="CSV of feature rows")
    _add_common(sub, tau=True, mc=True, alpha=True)
    sub.set_defaults(func=cmd_predict)

    sub = commands.add_parser("coverage", help="end-to-end interval coverage study")
    sub.add_argument("--n", type=int, default=3200, help="total simulated rows (default 3200)")
    sub.add_argument("--train", type=int, default=3000, help="training rows (default 3000)")
    sub.add_argument("--kind", choices=("gaussian", "copula"), default="copula")
    sub.add_argument("--mc", type=int, default=4000, help="conditional draws per point")
    sub.add_argument("--tau", type=float, default=0.0)
    sub.add_argument("--alpha", type=float, default=0.05)
    _add_common(sub, header=False)
    sub.set_defaults(func=cmd_coverage)

    sub = commands.add_parser("verify-report", help="recompute a stored report's p-value/interval")
    sub.add_argument("--input", required=True)
    sub.set_defaults(func=cmd_verify_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return 0 if code in (0, None) else int(code)
    try:
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
