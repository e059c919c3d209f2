"""Command-line front end: ``availcases <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(singular system, negative eigenvalue, non-convergence), 4 a simulation
cell finished with zero successful replications.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence

import numpy as np

from . import __version__
from .errors import AvailCasesError, UsageError
from .frame import NumericFrame
from .io import (CsvDialect, looks_like_counts, read_categorical, read_counts_table, read_csv,
                 resolve_data_path, to_jsonable, write_json)
from .loglinear import ModelSpec, loglin, table_to_records
from .moments import pairwise_correlation, pairwise_moments
from .pca import fit_pca
from .regression import fit_regression
from .simulate import (LinearGaussianGenerator, LoglinEstimand, MarSpec, PcaEstimand,
                       RegressionEstimand, mar_bias_study, run_variance_study)

log = logging.getLogger("availcases")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (float, np.floating)):
        return f"{v:.7g}"
    return str(v)


def aligned(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(header)] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def _matrix_table(names, mat) -> str:
    return aligned([""] + list(names), [[n] + list(row) for n, row in zip(names, mat)])


def _dialect(args) -> CsvDialect:
    tokens = frozenset(t for t in args.na_tokens.split("|"))
    return CsvDialect(delimiter=args.delimiter, na_tokens=tokens, header=not args.no_header)


def _numeric(args) -> NumericFrame:
    return read_csv(resolve_data_path(args.data), _dialect(args))


def _records(args):
    path = resolve_data_path(args.data)
    dialect = _dialect(args)
    kind = args.input
    if kind == "auto":
        kind = "table" if looks_like_counts(path, dialect) else "records"
    if kind == "table":
        return table_to_records(read_counts_table(path, dialect))
    return read_categorical(path, dialect)


# ---------------------------------------------------------------------
# subcommands: each returns (text, tree, exit_code)
# ---------------------------------------------------------------------


def cmd_cov(args):
    frame = _numeric(args)
    if args.cols:
        frame = frame.select(args.cols.split(","))
    pm = pairwise_moments(frame, args.policy)
    mat = pairwise_correlation(pm) if args.cor else pm.cov
    label = "correlation" if args.cor else "covariance"
    text = "\n\n".join([
        f"pairwise {label} ({pm.policy.value} denominator)", _matrix_table(pm.col_names, mat),
        "intact pair counts", _matrix_table(pm.col_names, pm.counts),
        "available means", aligned(["column", "mean"], zip(pm.col_names, pm.means)),
    ])
    tree = {"kind": "PairwiseMoments", "columns": pm.col_names, "policy": pm.policy.value,
            label: mat, "counts": pm.counts, "cross": pm.cross, "means": pm.means}
    return text, tree, 0


def cmd_lm(args):
    if args.se == "bootstrap" and args.seed is None:
        raise UsageError("lm --se bootstrap requires --seed")
    frame = _numeric(args)
    fit = fit_regression(frame, args.response, method=args.method, se=args.se,
                         n_boot=args.n_boot, seed=args.seed)
    se = fit.se if fit.se is not None else [None] * len(fit.coef)
    text = (f"{fit.method.value} linear regression of {fit.response_name}"
            f" (standard errors: {fit.se_method.value.lower()})\n\n"
            + aligned(["term", "estimate", "std.error"],
                      [[n, b, s] for n, b, s in zip(fit.coef_names, fit.coef, se)]))
    n_used = fit.n_used
    tree = {"kind": "RegressionFit", "method": fit.method.value, "response": fit.response_name,
            "terms": fit.coef_names, "coef": fit.coef, "se": fit.se,
            "se_method": fit.se_method.value, "n_used": n_used, "diagnostics": fit.diagnostics,
            "seed": args.seed}
    return text, tree, 0


def cmd_pca(args):
    frame = _numeric(args)
    fit = fit_pca(frame, method=args.method, scale=args.scale)
    pcs = [f"PC{k + 1}" for k in range(len(fit.sdev))]
    text = "\n\n".join([
        f"{fit.method.value} principal components ({'correlation' if fit.scaled else 'covariance'})",
        aligned(["component", "sdev", "variance"], zip(pcs, fit.sdev, fit.eigenvalues)),
        "rotation", aligned([""] + pcs, [[n] + list(r) for n, r in zip(fit.col_names, fit.rotation)]),
    ])
    tree = {"kind": "PcaFit", "method": fit.method.value, "scaled": fit.scaled,
            "columns": fit.col_names, "sdev": fit.sdev, "rotation": fit.rotation,
            "diagnostics": fit.diagnostics}
    return text, tree, 0


def cmd_loglin(args):
    records = _records(args)
    spec = ModelSpec.parse(args.margins)
    fit = loglin(records, spec, method=args.method)
    counts = fit.fitted.counts
    labels = records.level_labels or tuple(tuple(str(k) for k in range(m)) for m in records.levels)
    cell_rows = [[labels[0][i], labels[1][j], labels[2][k], counts[i, j, k]]
                 for i, j, k in np.ndindex(*counts.shape)]
    lam_rows = []
    for term, lam in fit.lambdas.items():
        name = ":".join(records.factor_names[a] for a in term) or "(grand mean)"
        arr = np.asarray(lam)
        for idx in np.ndindex(*arr.shape):
            lev = ",".join(labels[a][i] for a, i in zip(term, idx))
            lam_rows.append([name, lev, float(arr[idx])])
    text = "\n\n".join([
        f"{fit.method.value} log-linear model, margins {spec}",
        "fitted counts", aligned(list(records.factor_names) + ["fitted"], cell_rows),
        "coefficients (zero-sum)", aligned(["term", "level", "lambda"], lam_rows),
    ])
    tree = {"kind": "LoglinFit", "method": fit.method.value, "margins": str(spec),
            "factors": records.factor_names, "levels": labels, "fitted": counts,
            "lambdas": fit.lambdas, "diagnostics": fit.diagnostics}
    return text, tree, 0


def _estimand(args):
    name = args.estimand.lower()
    if name.startswith("beta"):
        if args.response is None:
            raise UsageError("--estimand beta<k> requires --response")
        if not (name[4:] or "1").isdigit():
            raise UsageError(f"unknown estimand {args.estimand!r}")
        idx = int(name[4:] or 1)
        return RegressionEstimand(args.response, idx), "numeric"
    if name in ("pca", "pca-cor"):
        return PcaEstimand(scale=name == "pca-cor"), "numeric"
    if name == "loglin":
        if args.margins is None:
            raise UsageError("--estimand loglin requires --margins")
        spec = ModelSpec.parse(args.margins)
        try:
            term = tuple(int(t) - 1 for t in args.term.split(",")) if args.term else None
        except ValueError:
            raise UsageError(f"--term: expected factor numbers like 1,3, got {args.term!r}") from None
        if term is not None and tuple(sorted(term)) not in spec.terms:
            raise UsageError(f"--term {args.term} is not a term of model {spec}")
        term = tuple(sorted(term)) if term is not None else None
        return LoglinEstimand(spec, term=term), "records"
    raise UsageError(f"unknown estimand {args.estimand!r}")


def cmd_simulate(args):
    est, kind = _estimand(args)
    data = _numeric(args) if kind == "numeric" else _records(args)
    if isinstance(est, RegressionEstimand) and est.index >= data.n_cols:
        raise UsageError(f"{est.name}: the model has only {data.n_cols} coefficients")
    try:
        rates = [float(r) for r in args.rates.split(",")]
    except ValueError:
        raise UsageError(f"--rates: expected comma-separated numbers, got {args.rates!r}") from None
    targets = args.target_cols.split(",") if args.target_cols else None
    if targets is not None and kind == "records":
        targets = [int(t) - 1 for t in targets]
    report = run_variance_study(data, est, rates, args.reps, args.seed,
                                target_cols=targets, workers=args.workers)
    rows = []
    for r in rates:
        cc, ac = report.row(r, "CC"), report.row(r, "AC")
        rows.append([r, cc.variance, ac.variance, report.ratio(r), cc.n_failures, ac.n_failures])
    text = (f"Monte-Carlo variance of {est.name} ({args.reps} reps, seed {args.seed})\n\n"
            + aligned(["NA rate", "CC var.", "AC var.", "CC/AC", "CC fail", "AC fail"], rows))
    code = 0 if all(r.n_reps > r.n_failures for r in report.rows) else 4
    if code:
        text += "\n\nerror: at least one (rate, method) cell had zero successful replications"
    return text, report.to_dict(), code


def cmd_marstudy(args):
    gen = LinearGaussianGenerator(args.intercept, args.slope, args.noise_sd)
    spec = MarSpec("y", ("d",), (args.weight,), args.offset)
    rep = mar_bias_study(gen, spec, args.n, args.reps, args.seed)
    rows = [["slope (CC)", rep.true_slope, rep.slope_mean, rep.slope_se, rep.slope_bias, rep.slope_z],
            ["mean of y (CC)", rep.true_mean_y, rep.mean_y_mean, rep.mean_y_se, rep.mean_y_bias,
             rep.mean_y_z]]
    text = (f"MAR bias study: n={args.n}, reps={args.reps}, seed={args.seed}, "
            f"P(y missing)={rep.missing_rate:.4g}\n\n"
            + aligned(["quantity", "truth", "MC mean", "MC s.e.", "bias", "bias/s.e."], rows))
    return text, rep.to_dict(), 0


# ---------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["table", "json"], default="table",
                        help="what to print on stdout")
    common.add_argument("--out", help="also write the structured (JSON) report here")
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--data", required=True, help="CSV path or bundled fixture (pima.csv, ucb.csv)")
    data.add_argument("--delimiter", default=",")
    data.add_argument("--na-tokens", default="NA|", help="'|'-separated missing-value tokens")
    data.add_argument("--no-header", action="store_true")

    parser = _Parser(prog="availcases", description="Available-cases estimation for missing data.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cov", parents=[common, data], help="pairwise moments")
    p.add_argument("--policy", choices=["sample", "population"], default="sample")
    p.add_argument("--cor", action="store_true")
    p.add_argument("--cols", help="comma-separated column subset")
    p.set_defaults(func=cmd_cov)

    p = sub.add_parser("lm", parents=[common, data], help="linear regression")
    p.add_argument("--response", required=True)
    p.add_argument("--method", choices=["ac", "cc"], default="ac")
    p.add_argument("--se", choices=["none", "delta", "bootstrap"], default="none")
    p.add_argument("--n-boot", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_lm)

    p = sub.add_parser("pca", parents=[common, data], help="principal components")
    p.add_argument("--method", choices=["ac", "cc"], default="ac")
    p.add_argument("--scale", action="store_true", help="use the correlation matrix")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("loglin", parents=[common, data], help="3-factor log-linear model")
    p.add_argument("--margins", required=True, help="e.g. 1,3+2,3")
    p.add_argument("--method", choices=["ac", "cc"], default="ac")
    p.add_argument("--input", choices=["auto", "table", "records"], default="auto")
    p.set_defaults(func=cmd_loglin)

    p = sub.add_parser("simulate", parents=[common, data], help="MCAR variance study, CC vs AC")
    p.add_argument("--estimand", required=True, help="beta<k>, pca, pca-cor or loglin")
    p.add_argument("--response")
    p.add_argument("--margins")
    p.add_argument("--term", help="log-linear term, e.g. 1,3 (default: first two-way term)")
    p.add_argument("--input", choices=["auto", "table", "records"], default="auto")
    p.add_argument("--rates", default="0.01,0.05,0.10")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--target-cols", help="comma-separated columns to mask (default: all)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("marstudy", parents=[common], help="complete-case bias under MAR")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--intercept", type=float, default=1.0)
    p.add_argument("--slope", type=float, default=2.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--weight", type=float, default=1.5, help="logit weight of d on P(y missing)")
    p.add_argument("--offset", type=float, default=-1.0)
    p.set_defaults(func=cmd_marstudy)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text, tree, code = args.func(args)
    except AvailCasesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    tree = {"command": args.command, **tree}
    if args.out:
        write_json(tree, args.out)
    if args.format == "json":
        print(json.dumps(to_jsonable(tree), indent=2))
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
