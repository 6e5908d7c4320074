"""Command-line interface.

Subcommands:
  parse <file>        print the canonical rendering of a sequence file
  run                 simulate initial state -> sequence -> state.json
  spectrum            run, then also write FID/spectrum CSVs and peaks.json
  verify-all          execute the built-in verification suite

Exit codes: 0 success, 1 verification failure, 2 user/parse error,
3 I/O error, 4 internal contract violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from pathlib import Path

import numpy as np

from .channels import apply_all
from .detection import (
    fid_to_csv,
    observe_fid,
    peak_table_to_dict,
    peaks,
    spectrum,
    spectrum_to_csv,
)
from .dsl import (
    CANNED_NAMES,
    CompileError,
    ParseError,
    canned,
    compile as compile_seq,
    eval_expr,
    format_item,
    parse,
    parse_expression,
)
from .operators import basis, decompose
from .system import DeviationState, PRESETS, SpinSystem, load_system
from .verify import run_all

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USER = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

COEFF_FLOOR = 1e-12


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc


def _load_sequence(name_or_path: str):
    if name_or_path in CANNED_NAMES:
        return canned(name_or_path)
    return parse(_read_text(name_or_path))


def _parse_bindings(pairs: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise CliError(f"--bind expects name=value, got {pair!r}", EXIT_USER)
        try:
            out[name] = eval_expr(parse_expression(value), {"pi": math.pi})
        except (ParseError, CompileError) as exc:
            raise CliError(f"--bind {name}: {exc}", EXIT_USER) from exc
    return out


def state_to_dict(sys: SpinSystem, state: DeviationState) -> dict:
    terms = []
    for labels, coeff in sorted(decompose(state.rho).coeffs.items()):
        re = coeff.real if abs(coeff.real) >= COEFF_FLOOR else 0.0
        im = coeff.imag if abs(coeff.imag) >= COEFF_FLOOR else 0.0
        terms.append({"labels": list(labels), "coeff_re": re, "coeff_im": im})
    return {"basis": "product-operator", "spins": list(sys.names), "terms": terms}


def state_from_dict(sys: SpinSystem, data: dict) -> DeviationState:
    if data.get("basis") != "product-operator":
        raise CliError("state file must declare basis 'product-operator'", EXIT_USER)
    if list(data.get("spins", [])) != list(sys.names):
        raise CliError("state file spin names do not match the system", EXIT_USER)
    ops = dict(basis(sys.n))
    rho = np.zeros((sys.dim, sys.dim), dtype=complex)
    for term in data.get("terms", []):
        labels = tuple(term["labels"])
        if labels not in ops:
            raise CliError(f"unknown basis labels {list(labels)}", EXIT_USER)
        rho = rho + (complex(term.get("coeff_re", 0.0), term.get("coeff_im", 0.0))
                     * ops[labels])
    return DeviationState(rho)


def _initial_state(sys: SpinSystem, selector: str) -> DeviationState:
    from .system import equilibrium_deviation

    if selector == "equilibrium":
        return equilibrium_deviation(sys)
    if selector == "equalized":
        return apply_all(compile_seq(canned("equalize"), sys),
                         equilibrium_deviation(sys))
    if selector.startswith("pseudo_pure(") and selector.endswith(")"):
        from .system import pseudo_pure_target

        try:
            k = int(selector[len("pseudo_pure("):-1])
        except ValueError:
            raise CliError(f"bad pseudo_pure index in {selector!r}", EXIT_USER)
        if not 0 <= k < sys.dim:
            raise CliError(f"pseudo_pure index {k} out of range for "
                           f"{sys.n} spins", EXIT_USER)
        return DeviationState(pseudo_pure_target(k, sys.n) / 2)
    path = Path(selector)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(_read_text(selector))
        except json.JSONDecodeError as exc:
            raise CliError(f"bad state file {selector}: {exc}", EXIT_USER) from exc
        return state_from_dict(sys, data)
    raise CliError(f"unknown initial-state selector {selector!r}; expected "
                   "equilibrium, equalized, pseudo_pure(k), or a JSON file",
                   EXIT_USER)


def _write_json(path: Path, payload: dict) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def cmd_parse(args) -> int:
    names = tuple(load_system(args.system).names)
    seq = parse(_read_text(args.file), known_spins=names)
    for item in seq.items:
        print(format_item(item))
    return EXIT_OK


def _run_simulation(args):
    sys_ = load_system(args.system)
    seq = _load_sequence(args.sequence)
    bindings = _parse_bindings(args.bind)
    missing = sorted(seq.parameters - set(bindings))
    if missing:
        raise CliError("unbound sequence parameters: " + ", ".join(missing),
                       EXIT_USER)
    state = _initial_state(sys_, args.initial)
    final = apply_all(compile_seq(seq, sys_, bindings), state)
    return sys_, final


def _write_state(args):
    sys_, final = _run_simulation(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}", EXIT_IO) from exc
    _write_json(out / "state.json", state_to_dict(sys_, final))
    print(f"wrote {out / 'state.json'}")
    return sys_, final, out


def cmd_run(args) -> int:
    _write_state(args)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    sys_, final, out = _write_state(args)
    for name in sys_.names:
        fid = observe_fid(sys_, final, name)
        sp = spectrum(fid)
        try:
            fid_to_csv(fid, out / f"fid_{name}.csv")
            spectrum_to_csv(sp, out / f"spectrum_{name}.csv")
        except OSError as exc:
            raise CliError(f"cannot write detection outputs: {exc}", EXIT_IO)
        _write_json(out / f"peaks_{name}.json", peak_table_to_dict(peaks(sp)))
        print(f"wrote fid_{name}.csv, spectrum_{name}.csv, peaks_{name}.json "
              f"in {out}")
    return EXIT_OK


def cmd_verify_all(args) -> int:
    results = run_all()
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{status}  {r.name:<22s} residual={r.residual:.3e}"
        if r.note:
            line += f"  ({r.note})"
        lines.append(line)
        print(line)
    n_fail = sum(1 for r in results if not r.passed)
    summary = f"{len(results) - n_fail}/{len(results)} checks passed"
    print(summary)
    if args.report:
        try:
            Path(args.report).write_text("\n".join(lines + [summary]) + "\n")
        except OSError as exc:
            raise CliError(f"cannot write report: {exc}", EXIT_IO) from exc
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="popsim",
        description="Deterministic product-operator simulator of small-spin "
                    "NMR quantum information processing experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="print the canonical form of a sequence file")
    p.add_argument("file")
    p.add_argument("--system", default="chloroform-ratio4",
                   help="preset or JSON file whose spin names validate the "
                        "sequence (default: chloroform-ratio4)")
    p.set_defaults(func=cmd_parse)

    for name, func, help_ in (("run", cmd_run, "simulate and write state.json"),
                              ("spectrum", cmd_spectrum,
                               "simulate and write state + detection outputs")):
        r = sub.add_parser(name, help=help_)
        r.add_argument("--system", required=True,
                       help="preset (%s) or JSON file" % ", ".join(sorted(PRESETS)))
        r.add_argument("--sequence", required=True,
                       help="canned name (%s) or sequence file"
                            % ", ".join(CANNED_NAMES))
        r.add_argument("--bind", action="append", default=[], metavar="NAME=EXPR",
                       help="bind a sequence parameter, e.g. phi=2pi")
        r.add_argument("--initial", default="equilibrium",
                       help="equilibrium | equalized | pseudo_pure(k) | state JSON file")
        r.add_argument("--out", required=True, help="output directory")
        r.set_defaults(func=func)

    v = sub.add_parser("verify-all", help="run the built-in verification suite")
    v.add_argument("--report", help="also write the report to this file")
    v.set_defaults(func=cmd_verify_all)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USER if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=_sys.stderr)
        return EXIT_USER
    except (CompileError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USER
    except CliError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return exc.code
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"internal error: {exc}", file=_sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
