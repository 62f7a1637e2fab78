"""Command-line front end.

Subcommands: synth, enroll, verify, attack (grp-auth | grp-sc | grp-rev |
grp-longlived | urp-auth | urp-longlived | link-grp | link-urp), eval,
report. Every attack/eval run writes a JSON report (full replay config
included), a CSV table, and PNG figures next to the output base path.

Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.
Solver tolerances honor environment overrides IOMLAB_FEAS_TOL,
IOMLAB_OPT_TOL, and IOMLAB_MAX_ITER unless set by flag or config file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .core import (
    DegenerateInput,
    FeatureThresholds,
    InvalidInput,
    IomlabError,
    SchemeParams,
    Unsupported,
    verify_template,
)
from .dataset import DimensionError, ParseError, load_corpus, save_corpus, synth_corpus
from .evaluation import (
    ExperimentReport,
    ScoreStats,
    eer,
    emit_report,
    rates_at_threshold,
    score_distributions,
)
from .experiments import (
    run_grp_auth,
    run_grp_multi_leak,
    run_grp_reversibility,
    run_link,
    run_urp_auth,
    run_urp_long_lived,
)
from .grp import grp_gen_secret, grp_transform
from .optimizer import Infeasible, NumericalFailure, SolverSettings
from .urp import urp_gen_secret, urp_transform

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SOLVER = 4

_DATA_ERRORS = (InvalidInput, DegenerateInput, ParseError, DimensionError,
                Unsupported, OSError, json.JSONDecodeError)
_SOLVER_ERRORS = (Infeasible, NumericalFailure)

_ATTACK_KINDS = ("grp-auth", "grp-sc", "grp-rev", "grp-longlived",
                 "urp-auth", "urp-longlived", "link-grp", "link-urp")


def _env_float(name, default):
    import os

    raw = os.environ.get(name)
    return float(raw) if raw is not None else default


def _env_int(name, default):
    import os

    raw = os.environ.get(name)
    return int(raw) if raw is not None else default


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iomlab",
        description="Cryptanalysis experiments against GRP-IoM and URP-IoM "
                    "cancelable biometric templates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parser.sub_map = {}

    p_synth = sub.add_parser("synth", help="generate a synthetic feature corpus")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--users", type=int, default=100)
    p_synth.add_argument("--samples", type=int, default=5)
    p_synth.add_argument("--n", type=int, default=299)
    p_synth.add_argument("--seed", type=int, default=1)
    p_synth.add_argument("--lo", type=float, default=-0.2504)
    p_synth.add_argument("--hi", type=float, default=0.2132)
    p_synth.add_argument("--noise", type=float, default=0.02)

    p_enroll = sub.add_parser("enroll", help="transform a corpus into a templates file")
    p_enroll.add_argument("--corpus", required=True)
    p_enroll.add_argument("--scheme", choices=("grp", "urp"), required=True)
    p_enroll.add_argument("--k", type=int, required=True)
    p_enroll.add_argument("--m", type=int, required=True)
    p_enroll.add_argument("--p", type=int, default=2)
    p_enroll.add_argument("--seed", type=int, default=1)
    p_enroll.add_argument("--out", required=True)

    p_verify = sub.add_parser("verify", help="compare two template files at a threshold")
    p_verify.add_argument("--a", required=True)
    p_verify.add_argument("--b", required=True)
    p_verify.add_argument("--tau", type=float, required=True)

    p_attack = sub.add_parser("attack", help="run an attack experiment")
    p_attack.add_argument("kind", choices=_ATTACK_KINDS)
    p_attack.add_argument("--config", help="JSON file of flag defaults")
    p_attack.add_argument("--corpus", help="corpus CSV; omitted -> synthetic corpus")
    p_attack.add_argument("--users", type=int, default=100, help="synthetic corpus users")
    p_attack.add_argument("--samples", type=int, default=5)
    p_attack.add_argument("--n", type=int, default=299)
    p_attack.add_argument("--lo", type=float, default=-0.2504)
    p_attack.add_argument("--hi", type=float, default=0.2132)
    p_attack.add_argument("--noise", type=float, default=0.02)
    p_attack.add_argument("--k", type=int, default=16)
    p_attack.add_argument("--m", type=int, default=300)
    p_attack.add_argument("--p", type=int, default=2)
    p_attack.add_argument("--tau", type=float, default=0.06)
    p_attack.add_argument("--seed", type=int, default=1)
    p_attack.add_argument("--trials", type=int, default=50)
    p_attack.add_argument("--leaks", type=int, default=2, help="N for multi-leak kinds")
    p_attack.add_argument("--margin", type=float, default=1e-6)
    p_attack.add_argument("--log-lo", type=float, default=-10.0)
    p_attack.add_argument("--log-hi", type=float, default=1.0)
    p_attack.add_argument("--objective", default="none",
                          choices=("none", "min_norm", "mean", "sample"))
    p_attack.add_argument("--tau-euc", default="0.33,0.2,0.15,0.1",
                          help="comma-separated Euclidean thresholds (grp-rev)")
    p_attack.add_argument("--tau-sim", type=float, default=0.13)
    p_attack.add_argument("--t-link", type=float, default=None,
                          help="link threshold (default 170 for grp, 0.18 for urp)")
    p_attack.add_argument("--feas-tol", type=float, default=None)
    p_attack.add_argument("--opt-tol", type=float, default=None)
    p_attack.add_argument("--max-iter", type=int, default=None)
    p_attack.add_argument("--threads", type=int, default=1)
    p_attack.add_argument("--out", help="output base path (writes .json/.csv/.png)")
    p_attack.add_argument("--no-figures", action="store_true")

    p_eval = sub.add_parser("eval", help="FMR/FNMR/EER tables for a corpus metric")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--metric", required=True,
                        choices=("euclidean", "similarity", "template-grp", "template-urp"))
    p_eval.add_argument("--tau", type=float, action="append", default=None,
                        help="threshold(s) to tabulate; repeatable")
    p_eval.add_argument("--k", type=int, default=16)
    p_eval.add_argument("--m", type=int, default=300)
    p_eval.add_argument("--p", type=int, default=2)
    p_eval.add_argument("--seed", type=int, default=1)
    p_eval.add_argument("--out", help="output base path")
    p_eval.add_argument("--no-figures", action="store_true")

    p_report = sub.add_parser("report", help="re-emit a stored JSON report")
    p_report.add_argument("--in", dest="in_path", required=True)
    p_report.add_argument("--format", choices=("json", "csv"), default="csv")
    p_report.add_argument("--out", required=True)
    p_report.add_argument("--figures", action="store_true",
                          help="also render figures next to --out")

    parser.sub_map = {"synth": p_synth, "enroll": p_enroll, "verify": p_verify,
                      "attack": p_attack, "eval": p_eval, "report": p_report}
    return parser


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Fill args from a JSON config file; explicit flags win over the file."""
    if not getattr(args, "config", None):
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InvalidInput(f"config file key {key!r} is not a known option")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)


def _solver_settings(args) -> SolverSettings:
    return SolverSettings(
        feas_tol=args.feas_tol if args.feas_tol is not None
        else _env_float("IOMLAB_FEAS_TOL", 1e-8),
        opt_tol=args.opt_tol if args.opt_tol is not None
        else _env_float("IOMLAB_OPT_TOL", 1e-6),
        max_iter=args.max_iter if args.max_iter is not None
        else _env_int("IOMLAB_MAX_ITER", 200),
    )


def _attack_corpus(args):
    if args.corpus:
        return load_corpus(args.corpus), {"corpus": args.corpus}
    corpus = synth_corpus(args.seed, args.users, args.samples, args.n,
                          (args.lo, args.hi), args.noise)
    return corpus, {
        "corpus": "synthetic",
        "synth": {"seed": args.seed, "users": args.users, "samples": args.samples,
                  "n": args.n, "lo": args.lo, "hi": args.hi, "noise": args.noise},
    }


def _write_outputs(report: ExperimentReport, args) -> None:
    if not args.out:
        return
    emit_report(report, f"{args.out}.json", "json")
    emit_report(report, f"{args.out}.csv", "csv")
    print(f"wrote {args.out}.json and {args.out}.csv")
    if not getattr(args, "no_figures", False):
        from .figures import render_report_figures

        for path in render_report_figures(report, args.out):
            print(f"wrote {path}")


def _cmd_synth(args) -> int:
    corpus = synth_corpus(args.seed, args.users, args.samples, args.n,
                          (args.lo, args.hi), args.noise)
    save_corpus(corpus, args.out)
    print(f"wrote {args.out}: {corpus.user_count} users x "
          f"{len(corpus.users[0].samples)} samples, n={corpus.n}")
    return 0


def _cmd_enroll(args) -> int:
    corpus = load_corpus(args.corpus)
    params = SchemeParams(n=corpus.n, k=args.k, m=args.m,
                          p=args.p if args.scheme == "urp" else 1)
    if args.scheme == "grp":
        secret = grp_gen_secret(args.seed, params)
        transform = lambda x: grp_transform(secret, x)  # noqa: E731
    else:
        secret = urp_gen_secret(args.seed, params)
        transform = lambda x: urp_transform(secret, x)  # noqa: E731
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        header = ",".join(f"u{i + 1}" for i in range(args.m))
        fh.write(f"user_id,sample_id,{header}\n")
        count = 0
        for ui, rec in enumerate(corpus.users):
            for si, x in enumerate(rec.samples):
                t = transform(x)
                fh.write(f"{rec.user_id},{si + 1}," + ",".join(map(str, t)) + "\n")
                count += 1
    print(f"wrote {args.out}: {count} templates "
          f"({args.scheme}, k={args.k}, m={args.m}, seed={args.seed})")
    return 0


def _read_templates(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:2] != ["user_id", "sample_id"]:
            raise ParseError(f"{path}: expected template header user_id,sample_id,u1,...")
        m = len(header) - 2
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) - 2 != m:
                raise DimensionError(f"{path}: line {lineno}: expected {m} indices")
            rows.append((parts[0], parts[1], np.array([int(v) for v in parts[2:]])))
    if not rows:
        raise ParseError(f"{path}: no template rows")
    return rows


def _cmd_verify(args) -> int:
    rows_a = _read_templates(args.a)
    rows_b = _read_templates(args.b)
    if len(rows_a) != len(rows_b):
        raise InvalidInput(
            f"template files differ in row count: {len(rows_a)} vs {len(rows_b)}"
        )
    for (ida, sa, ta), (idb, sb, tb) in zip(rows_a, rows_b):
        accepted = verify_template(ta, tb, args.tau)
        verdict = "accepted" if accepted else "rejected"
        print(f"{ida}/{sa} vs {idb}/{sb}: {verdict}")
    return 0


def _cmd_attack(args, parser_defaults) -> int:
    _apply_config_file(args, parser_defaults)
    corpus, corpus_cfg = _attack_corpus(args)
    settings = _solver_settings(args)
    p = args.p if args.kind.startswith("urp") or args.kind == "link-urp" else 1
    params = SchemeParams(n=corpus.n, k=args.k, m=args.m, p=p, tau=args.tau)
    log_bounds = (args.log_lo, args.log_hi)
    started = time.time()

    if args.kind == "grp-auth":
        report = run_grp_auth(corpus, params, args.seed, args.trials,
                              args.margin, settings, args.threads)
    elif args.kind == "grp-longlived":
        report = run_grp_multi_leak(corpus, params, args.seed, n_leaks=1,
                                    margin=args.margin, settings=settings,
                                    threads=args.threads)
    elif args.kind == "grp-sc":
        report = run_grp_multi_leak(corpus, params, args.seed, n_leaks=args.leaks,
                                    selected=True, margin=args.margin,
                                    settings=settings, threads=args.threads)
    elif args.kind == "grp-rev":
        taus = tuple(float(t) for t in str(args.tau_euc).split(","))
        thresholds = FeatureThresholds(tau_euc=taus[0], tau_sim=args.tau_sim)
        report = run_grp_reversibility(corpus, params, args.seed, args.objective,
                                       taus, thresholds, args.margin, settings,
                                       args.threads)
    elif args.kind == "urp-auth":
        report = run_urp_auth(corpus, params, args.seed, args.trials, args.margin,
                              log_bounds, settings, args.threads)
    elif args.kind == "urp-longlived":
        report = run_urp_long_lived(corpus, params, args.seed, args.leaks,
                                    args.margin, log_bounds, settings, args.threads)
    else:
        scheme = "grp" if args.kind == "link-grp" else "urp"
        t_link = args.t_link if args.t_link is not None else (170 if scheme == "grp" else 0.18)
        report = run_link(corpus, params, args.seed, scheme, t_link, args.trials,
                          args.objective, args.margin, log_bounds, settings,
                          threads=args.threads)

    report.config["corpus_source"] = corpus_cfg
    report.config["runtime_seconds"] = time.time() - started
    for name, rate in sorted(report.rates.items()):
        print(f"{name} = {rate:.4f}")
    for name, st in sorted(report.stats.items()):
        print(f"{name}: min={st.min:.4f} avg={st.avg:.4f} max={st.max:.4f} (n={st.count})")
    if report.failures:
        print(f"failures: {report.failures}/{report.trials} trials")
    print(f"runtime: {report.config['runtime_seconds']:.1f}s")
    _write_outputs(report, args)
    return 0


def _cmd_eval(args, parser_defaults) -> int:
    corpus = load_corpus(args.corpus)
    metric = args.metric.replace("-", "_")
    if metric.startswith("template"):
        scheme = metric.split("_")[1]
        params = SchemeParams(n=corpus.n, k=args.k, m=args.m,
                              p=args.p if scheme == "urp" else 1)
        dists = score_distributions(corpus, metric, params, args.seed)
    else:
        dists = score_distributions(corpus, metric)
    taus = args.tau if args.tau else []
    point = eer(dists)
    rows = {"eer": [point["eer"]], "eer_threshold": [point["tau_star"]]}
    columns = ["value"]
    if taus:
        columns = [f"tau={t}" for t in taus]
        fmr_row, fnmr_row = [], []
        for t in taus:
            r = rates_at_threshold(dists, t)
            fmr_row.append(r["fmr"])
            fnmr_row.append(r["fnmr"])
        rows = {"fmr": fmr_row, "fnmr": fnmr_row,
                "eer": [point["eer"]] * len(taus),
                "eer_threshold": [point["tau_star"]] * len(taus)}
    print(f"metric={args.metric} genuine={len(dists['genuine'])} "
          f"impostor={len(dists['impostor'])}")
    print(f"eer = {point['eer']:.6f} at threshold {point['tau_star']:.6f}")
    for t in taus:
        r = rates_at_threshold(dists, t)
        print(f"tau={t}: fmr={r['fmr']:.6f} fnmr={r['fnmr']:.6f}")
    if args.out:
        report = ExperimentReport(
            kind=f"eval_{metric}",
            config={"corpus": args.corpus, "metric": args.metric,
                    "taus": taus, "seed": args.seed,
                    "direction": dists["direction"]},
            rates={},
            baseline={"eer": point["eer"]},
            advantage={},
            trials=len(dists["genuine"]) + len(dists["impostor"]),
            failures=0,
            scores={"genuine": list(map(float, dists["genuine"])),
                    "impostor": list(map(float, dists["impostor"]))},
            table={"columns": columns, "rows": rows},
        )
        emit_report(report, f"{args.out}.json", "json")
        emit_report(report, f"{args.out}.csv", "csv")
        print(f"wrote {args.out}.json and {args.out}.csv")
        if not args.no_figures:
            from .figures import render_distribution_figure

            path = render_distribution_figure(
                dists, taus[0] if taus else point["tau_star"],
                f"{args.out}_distributions.png",
                title=f"{args.metric} score distributions",
            )
            print(f"wrote {path}")
    return 0


def _cmd_report(args) -> int:
    with open(args.in_path, "r", encoding="utf-8") as fh:
        report = ExperimentReport.from_dict(json.load(fh))
    emit_report(report, args.out, args.format)
    print(f"wrote {args.out}")
    if args.figures:
        from .figures import render_report_figures

        base = args.out.rsplit(".", 1)[0]
        for path in render_report_figures(report, base):
            print(f"wrote {path}")
    return 0


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {a.dest: a.default
                for a in parser.sub_map[args.command]._actions}
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "enroll":
            return _cmd_enroll(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "attack":
            return _cmd_attack(args, defaults)
        if args.command == "eval":
            return _cmd_eval(args, defaults)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command!r}")
    except _SOLVER_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_SOLVER
    except _DATA_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_DATA
    except IomlabError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
