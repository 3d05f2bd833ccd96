"""Command-line front end: ``analyze``, ``simulate`` and ``mvt`` subcommands.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ctp import ctp_cp, ctp_cw
from .errors import CalibrationError, DataError, DecompositionError, DomainError
from .mct import DIRECTIONS, dunnett_test, fit_groups, williams_test
from .mvt import mvt_cdf
from .sim import load_config, run_power_study, write_outputs

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
METHOD_NAMES = ("dunnett", "williams", "cw", "cp")
FORMATS = ("table", "json", "csv")


class InputError(DataError):
    """Malformed command-line input; the message names the offending item."""


@dataclass(frozen=True)
class Dataset:
    labels: tuple
    samples: tuple

    @property
    def n(self):
        return tuple(len(s) for s in self.samples)


def _order_labels(labels, dose_order):
    if dose_order:
        order = [d.strip() for d in dose_order]
        if len(set(order)) != len(order):
            raise InputError("--dose-order lists a dose more than once")
        if set(order) != set(labels):
            missing = sorted(set(labels) - set(order))
            extra = sorted(set(order) - set(labels))
            raise InputError(f"--dose-order does not match the data (missing {missing}, "
                             f"unknown {extra})")
        return order
    try:
        return sorted(labels, key=float)
    except ValueError:
        return sorted(labels)


def parse_csv(path, dose_order=None):
    """Read ``dose,response`` rows into groups ordered control first.

    Without ``dose_order``, labels are sorted numerically when they all parse
    as numbers and lexically otherwise; the lowest is the control.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{path} is empty") from None
    header = [h.strip().lower() for h in header]
    if "dose" not in header or "response" not in header:
        raise InputError(f"row 1: header must contain columns 'dose' and 'response', got {header}")
    i_dose, i_resp = header.index("dose"), header.index("response")
    groups = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if [c.strip().lower() for c in row] == header:
            raise InputError(f"row {row_no}: duplicated header row")
        if len(row) != len(header):
            raise InputError(f"row {row_no}: expected {len(header)} fields, got {len(row)}")
        dose = row[i_dose].strip()
        if not dose:
            raise InputError(f"row {row_no}: empty dose label")
        try:
            y = float(row[i_resp])
        except ValueError:
            raise InputError(f"row {row_no}: non-numeric response {row[i_resp]!r}") from None
        if not math.isfinite(y):
            raise InputError(f"row {row_no}: response must be finite, got {row[i_resp]!r}")
        groups.setdefault(dose, []).append(y)
    if len(groups) < 2:
        raise InputError(f"need at least 2 dose groups, found {len(groups)}")
    small = [d for d, v in groups.items() if len(v) < 2]
    if small:
        raise InputError(f"dose group(s) {small} have fewer than 2 observations")
    order = _order_labels(list(groups), dose_order)
    return Dataset(tuple(order), tuple(np.array(groups[d]) for d in order))


@dataclass(frozen=True)
class AnalysisRequest:
    input_path: str
    direction: str = "greater"
    methods: tuple = METHOD_NAMES
    alpha: float = 0.05
    seed: int = 0
    output_format: str = "table"
    dose_order: tuple = None

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise InputError("at least one method is required")
        bad = [m for m in methods if m not in METHOD_NAMES]
        if bad:
            raise InputError(f"unknown method(s) {bad}; choose from {list(METHOD_NAMES)}")
        object.__setattr__(self, "methods", tuple(m for m in METHOD_NAMES if m in methods))
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.direction not in DIRECTIONS:
            raise InputError(f"direction must be one of {DIRECTIONS}")
        if self.output_format not in FORMATS:
            raise InputError(f"output format must be one of {FORMATS}")


def _cell(p, err, alpha):
    return {"adj_p": p, "error_bound": err, "reject": bool(p <= alpha)}


def run_analysis(req):
    """Adjusted p-values per dose-vs-control comparison for each requested method.

    Comparisons are listed from the highest dose down.  A method that
    defines no p-value for a comparison gets ``None`` (the Williams test
    only has one for the highest dose).
    """
    data = parse_csv(req.input_path, req.dose_order)
    fit = fit_groups(data.samples, data.labels)
    k = fit.k
    cells = {m: {} for m in req.methods}
    global_p = {}
    if "dunnett" in req.methods:
        res = dunnett_test(fit, req.direction, req.seed)
        for i, row in enumerate(res.results, start=1):
            cells["dunnett"][i] = _cell(row.adj_p, row.error_bound, req.alpha)
        global_p["dunnett"] = res.global_p
    if "williams" in req.methods:
        res = williams_test(fit, req.direction, req.seed)
        top = res.results[0]
        cells["williams"][k] = _cell(top.adj_p, top.error_bound, req.alpha)
        global_p["williams"] = res.global_p
    for name, proc in (("cw", ctp_cw), ("cp", ctp_cp)):
        if name in req.methods:
            rep = proc(fit, req.direction, req.seed)
            for i in range(1, k + 1):
                cells[name][i] = _cell(rep.elementary_adj_p[i], rep.error_bound(i), req.alpha)
    comparisons = []
    for i in range(k, 0, -1):
        entry = {"comparison": f"{fit.labels[i]} - {fit.labels[0]}", "dose": i}
        for m in req.methods:
            entry[m] = cells[m].get(i)
        comparisons.append(entry)
    return {
        "input": str(req.input_path),
        "direction": req.direction,
        "alpha": req.alpha,
        "seed": req.seed,
        "methods": list(req.methods),
        "groups": [{"label": lab, "n": g.n, "mean": g.mean}
                   for lab, g in zip(fit.labels, fit.groups)],
        "df": fit.df,
        "s2_pooled": fit.s2_pooled,
        "global_p": global_p,
        "comparisons": comparisons,
    }


def format_p(p):
    if p is None:
        return "NA"
    if p < 1e-12:
        return f"{p:.1e}"
    return f"{p:.3g}"


def render_report(report, fmt):
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    methods = report["methods"]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["comparison", "method", "adj_p", "error_bound", "reject"])
        for c in report["comparisons"]:
            for m in methods:
                cell = c[m]
                if cell is None:
                    w.writerow([c["comparison"], m, "NA", "NA", "NA"])
                else:
                    w.writerow([c["comparison"], m, repr(cell["adj_p"]),
                                repr(cell["error_bound"]), cell["reject"]])
        return buf.getvalue().rstrip("\n")
    width = 12
    lines = [f"{'comparison':<12}" + "".join(f"{m:>{width}}" for m in methods)]
    for c in report["comparisons"]:
        row = f"{c['comparison']:<12}"
        for m in methods:
            cell = c[m]
            txt = "NA" if cell is None else format_p(cell["adj_p"]) + ("*" if cell["reject"] else "")
            row += f"{txt:>{width}}"
        lines.append(row)
    errs = []
    for m in methods:
        vals = [c[m]["error_bound"] for c in report["comparisons"] if c[m] is not None]
        errs.append(f"{max(vals):.1e}")
    lines.append(f"{'max error':<12}" + "".join(f"{e:>{width}}" for e in errs))
    lines.append(f"* adjusted p <= alpha = {report['alpha']}; one-sided '{report['direction']}', "
                 f"df = {report['df']}")
    return "\n".join(lines)


def _load_matrix(path):
    text = Path(path).read_text(encoding="utf-8")
    delim = "," if "," in text else None
    return np.loadtxt(io.StringIO(text), delimiter=delim, ndmin=2)


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dosectp", description="Order-restricted many-to-one dose-control comparisons.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="adjusted p-values for a dose,response CSV")
    a.add_argument("--input", required=True)
    a.add_argument("--methods", default=",".join(METHOD_NAMES))
    a.add_argument("--direction", default="greater", choices=DIRECTIONS)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--dose-order", default=None,
                   help="comma-separated dose labels, control first")
    a.add_argument("--output-format", default="table", choices=FORMATS)

    s = sub.add_parser("simulate", help="per-pair power and size study")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    m = sub.add_parser("mvt", help="multivariate t lower-orthant probability")
    m.add_argument("--upper", required=True)
    m.add_argument("--corr", required=True, help="file holding the correlation matrix")
    m.add_argument("--df", default="inf")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--tol", type=float, default=1e-5)
    return parser


def _analyze(args, out):
    methods = tuple(x.strip() for x in args.methods.split(",") if x.strip())
    order = tuple(args.dose_order.split(",")) if args.dose_order else None
    req = AnalysisRequest(args.input, args.direction, methods, args.alpha, args.seed,
                          args.output_format, order)
    print(render_report(run_analysis(req), req.output_format), file=out)


def _simulate(args, out):
    cfg = load_config(args.config)
    table = run_power_study(cfg)
    csv_path, json_path = write_outputs(table, args.out)
    print(f"delta = {table.delta:.6g}, replications = {cfg.replications}", file=out)
    print(table.format_table(), file=out)
    print(f"wrote {csv_path} and {json_path}", file=out)


def _mvt(args, out):
    upper = _floats(args.upper, "--upper")
    try:
        corr = _load_matrix(args.corr)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read correlation matrix {args.corr}: {exc}") from exc
    try:
        df = float(args.df)
    except ValueError:
        raise InputError(f"--df must be a number or 'inf', got {args.df!r}") from None
    res = mvt_cdf(upper, corr, df, rng_seed=args.seed, tol=args.tol)
    doc = {"value": res.value, "complement": res.complement, "error_bound": res.error_bound,
           "n_samples": res.n_samples, "converged": res.converged, "flags": list(res.flags)}
    print(json.dumps(doc, indent=2, sort_keys=True), file=out)


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    handlers = {"analyze": _analyze, "simulate": _simulate, "mvt": _mvt}
    try:
        handlers[args.command](args, out)
    except (DecompositionError, CalibrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERIC
    except (DataError, DomainError) as exc:
        print(f"input error: {exc}", file=err)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
