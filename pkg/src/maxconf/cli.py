"""Batch command-line interface.

Every command reads its inputs from flags, prints a short result on stdout
and, with ``--output-dir``, writes its files together with a
``manifest.json`` recording the inputs, tolerances and output checksums.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import DEFAULT_TOL, ParseError, QStateError, Tolerances
from .montecarlo import SeedConfig, consistency_report, report_to_dict, simulate
from .optics import (
    CIRCUIT_FORMAT,
    abstract_distribution,
    build_circuit,
    circuit_from_dict,
    circuit_to_dict,
    simulate_network,
)
from .povm import mc_povm_symmetric, me_povm, povm_from_dict, povm_to_dict, validate_povm
from .smc import SWEEP_COLUMNS, fmt, parse_grid, plan, rows_to_csv, sweep_qutrit
from .symmetric import set_from_dict

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2
EXIT_INVALID = 3
DIGITS = 12


class ValidationFailed(Exception):
    pass


def round_floats(obj):
    """Recursively round floats to 12 significant digits for stable output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return obj
        return float(f"{obj:.{DIGITS}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_tolerances(items: list[str] | None) -> Tolerances:
    kw = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"tolerance override must look like name=value, got {item!r}")
        try:
            kw[name.strip()] = float(value)
        except ValueError as exc:
            raise ParseError(f"tolerance {name!r} is not a number: {value!r}") from exc
    try:
        return DEFAULT_TOL.override(**kw)
    except QStateError as exc:
        raise ParseError(str(exc)) from exc


def read_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def load_set(path: str, tol: Tolerances):
    return set_from_dict(read_json(path), tol)


class Outputs:
    """Collects output files and writes them (plus a manifest) at the end."""

    def __init__(self, args, tol: Tolerances):
        self.args = args
        self.tol = tol
        self.files: dict[str, str] = {}
        self.extra: dict = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def manifest(self) -> dict:
        a = self.args
        inp = getattr(a, "input", None)
        doc = {
            "command": a.command,
            "input": inp,
            "input_sha256": _sha(Path(inp).read_bytes()) if inp else None,
            "seed": getattr(a, "seed", None),
            "trials": getattr(a, "trials", None),
            "grid": getattr(a, "grid", None),
            "tolerances": self.tol.as_dict(),
            "version": __version__,
            "outputs": {name: _sha(text.encode("utf-8")) for name, text in sorted(self.files.items())},
        }
        doc.update(self.extra)
        return doc

    def write(self):
        if not self.args.output_dir:
            return
        out = Path(self.args.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for name, text in self.files.items():
                (out / name).write_text(text, encoding="utf-8")
            (out / "manifest.json").write_text(to_json(self.manifest()), encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot write to {out}: {exc.strerror or exc}") from exc


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- commands --------------------------------------------------------------


def cmd_design(args, tol, out: Outputs, stdout):
    sset = load_set(args.input, tol)
    mc, mc_rep = mc_povm_symmetric(sset, tol)
    me, me_rep = me_povm(sset, tol)
    checks = {"mc": validate_povm(mc, tol), "me": validate_povm(me, tol)}
    report = {
        "N": sset.n,
        "D": sset.dim,
        "mc": mc_rep.to_dict(),
        "me": me_rep.to_dict(),
        "validation": {
            k: {"ok": v.ok, "completeness_error": v.completeness_error, "violations": [str(x) for x in v.violations]}
            for k, v in checks.items()
        },
    }
    out.add("mc_povm.json", json.dumps(povm_to_dict(mc, DIGITS)) + "\n")
    out.add("me_povm.json", json.dumps(povm_to_dict(me, DIGITS)) + "\n")
    out.add("report.json", to_json(report))
    stdout.write(out.files["report.json"])
    if not all(v.ok for v in checks.values()):
        raise ValidationFailed("designed POVM failed validation")


def plan_table(p) -> str:
    lines = [f"{'stage':>5} {'dim':>4} {'d':>3} {'confidence':>14} {'p_fail':>14}"]
    for s in p.stages:
        lines.append(f"{s.index:>5} {s.dim:>4} {s.multiplicity:>3} {fmt(s.confidence):>14} {fmt(s.failure_probability):>14}")
    lines.append(f"termination: {p.termination.value}")
    lines.append(f"P_correct = {fmt(p.p_correct_total)}")
    lines.append(f"P_inconclusive = {fmt(p.p_inconclusive_total)}")
    lines.append(f"P_error = {fmt(p.p_error_total)}")
    lines += [f"note: {d}" for d in p.diagnostics]
    return "\n".join(lines) + "\n"


def cmd_plan(args, tol, out, stdout):
    p = plan(load_set(args.input, tol), tol)
    out.add("plan.json", to_json(p.summary()))
    stdout.write(plan_table(p))


def cmd_simulate(args, tol, out, stdout):
    p = plan(load_set(args.input, tol), tol)
    summary = simulate(p, SeedConfig(args.seed, args.trials), tol)
    report = report_to_dict(consistency_report(summary, p))
    doc = {"summary": summary.to_dict(), "consistency": report}
    out.add("simulation.json", to_json(doc))
    stdout.write(out.files["simulation.json"])
    if not report["passed"]:
        raise ValidationFailed("empirical statistics deviate from the plan by more than 4 sigma")


def cmd_sweep(args, tol, out, stdout):
    rows, skipped = sweep_qutrit(parse_grid(args.grid), tol)
    if args.format == "csv":
        name, text = "sweep.csv", rows_to_csv(rows)
    else:
        name, text = "sweep.json", to_json({"columns": list(SWEEP_COLUMNS), "rows": rows})
    out.add(name, text)
    out.extra["skipped_points"] = len(skipped)
    out.extra["rows"] = len(rows)
    if args.output_dir:
        stdout.write(f"{len(rows)} rows, {len(skipped)} infeasible points skipped\n")
    else:
        stdout.write(text)


def distribution_csv(circuit) -> str:
    labels = circuit.detectors
    buf = io.StringIO()
    buf.write(",".join(["j", *labels]) + "\n")
    for j in range(circuit.n):
        dist = simulate_network(circuit, j)
        buf.write(",".join([str(j), *(fmt(dist[k]) for k in labels)]) + "\n")
    return buf.getvalue()


def cmd_compile_optics(args, tol, out, stdout):
    circuit = build_circuit(load_set(args.input, tol), tol)
    out.add("circuit.json", json.dumps(circuit_to_dict(circuit), indent=2) + "\n")
    table = distribution_csv(circuit)
    out.add("detectors.csv", table)
    stdout.write(table)


def _check_circuit(circuit, tol) -> list[str]:
    problems = []
    for j in range(circuit.n):
        got = simulate_network(circuit, j)
        want = abstract_distribution(circuit.sset, j, tol)
        if list(got) != list(want):
            problems.append(f"input {j}: detector labels {list(got)} do not match {list(want)}")
            continue
        dev = max(abs(got[k] - want[k]) for k in got)
        if dev > tol.eps_prob:
            problems.append(f"input {j}: detector distribution off by {dev:.3e}")
    return problems


def cmd_validate(args, tol, out, stdout):
    doc = read_json(args.input)
    if isinstance(doc, dict) and doc.get("format") == CIRCUIT_FORMAT:
        kind = "circuit"
        problems = _check_circuit(circuit_from_dict(doc, tol), tol)
    else:
        kind = "povm"
        rep = validate_povm(povm_from_dict(doc), tol)
        problems = [str(v) for v in rep.violations]
    result = {"kind": kind, "ok": not problems, "problems": problems}
    out.add("validation.json", to_json(result))
    stdout.write(out.files["validation.json"])
    if problems:
        raise ValidationFailed(f"{kind} failed validation")


# -- argument parsing ------------------------------------------------------


def _uint(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxconf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help="write output files and manifest.json here")
    common.add_argument(
        "--tolerance",
        action="append",
        metavar="NAME=VALUE",
        help="override a tolerance, e.g. eps_psd=1e-9 (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, needs_input=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if needs_input:
            sp.add_argument("--input", required=True, help="JSON input file")
        sp.set_defaults(func=func)
        return sp

    add("design", cmd_design, "MC and ME POVMs for a symmetric set")
    add("plan", cmd_plan, "sequential MC stage table and totals")
    sp = add("simulate", cmd_simulate, "seeded Monte Carlo of the sequential measurement")
    sp.add_argument("--seed", type=_uint, required=True)
    sp.add_argument("--trials", type=_uint, required=True)
    sp = add("sweep", cmd_sweep, "qutrit (|c0|, |c1|) parameter sweep", needs_input=False)
    sp.add_argument("--grid", default="0:1:101", help="lo:hi:n or lo:hi:n,lo:hi:n (default 0:1:101)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    add("compile-optics", cmd_compile_optics, "optical network for a real qutrit set")
    add("validate", cmd_validate, "re-check a serialized POVM or circuit")
    return parser


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        tol = parse_tolerances(args.tolerance)
        out = Outputs(args, tol)
        code = EXIT_OK
        try:
            args.func(args, tol, out, stdout)
        except ValidationFailed as exc:
            stderr.write(f"validation failure: {exc}\n")
            code = EXIT_INVALID
        out.write()
        return code
    except ParseError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except QStateError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
