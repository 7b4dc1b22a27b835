"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 non-convergence,
3 degenerate post-selection, 4 usage error.
"""
import argparse
import csv
import io
import json
import logging
import sys

from . import direct, indirect
from .direct import GhzDiagonal, IsotropicFamily, Schedule
from .exceptions import (
    BracketError,
    DegeneratePostselectionError,
    NonConvergenceError,
    ResourceGuardError,
)
from .ghz import (
    COMPOSITE_MEASUREMENTS,
    CORRELATION_OPERATORS,
    GhzLabel,
    conditioned_outcome,
    correlation_eigenvalue,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NONCONVERGED = 2
EXIT_DEGENERATE = 3
EXIT_USAGE = 4

log = logging.getLogger("ghzpurify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value):
    return f"{value:.6f}"


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return values


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _schedule(text):
    try:
        return Schedule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_state_file(path):
    """Read ``{"d": int, "p": [d^3 floats in (l, m, n) row-major order]}``."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        d = int(data["d"])
        values = [float(v) for v in data["p"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: expected an object with integer 'd' and array 'p' ({exc})") from None
    if d < 2:
        raise UsageError(f"{path}: d must be >= 2")
    if len(values) != d ** 3:
        raise UsageError(f"{path}: 'p' needs {d ** 3} entries for d={d}, got {len(values)}")
    total = sum(values)
    if abs(total - 1.0) > 1e-9:
        raise UsageError(f"{path}: probabilities sum to {total!r}, not 1 (tolerance 1e-9)")
    try:
        return GhzDiagonal.from_flat(d, values)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _input_state(args):
    if args.state_file:
        state = load_state_file(args.state_file)
        if args.d is not None and args.d != state.d:
            raise UsageError(f"--d {args.d} disagrees with d={state.d} in {args.state_file}")
        return state
    if args.d is None:
        raise UsageError("--d is required unless --state-file is given")
    if args.x is not None and args.fidelity is not None:
        raise UsageError("give --x or --fidelity, not both")
    try:
        if args.x is not None:
            return IsotropicFamily(args.d, args.x).state()
        if args.fidelity is not None:
            return IsotropicFamily(args.d, direct.x_from_fidelity(args.d, args.fidelity)).state()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError("give one of --x, --fidelity or --state-file")


def _write_rows(rows, fmt, out):
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    if not rows:
        return
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_thresholds(args):
    if not args.d:
        raise UsageError("--d needs at least one dimension")
    bad = [d for d in args.d if not 2 <= d <= 8]
    if bad:
        raise UsageError(f"dimensions must lie in [2, 8], got {bad}")
    rows = []
    for d in args.d:
        row = {"d": d, "f_dir": "", "f_ind": ""}
        if args.protocol in ("direct", "both"):
            try:
                row["f_dir"] = _fmt(direct.threshold_fidelity_direct(d, args.schedule, args.tolerance))
            except BracketError as exc:
                log.error("d=%d direct: %s", d, exc)
                row["f_dir"] = "bracket_failure"
        if args.protocol in ("indirect", "both"):
            try:
                row["f_ind"] = _fmt(indirect.threshold_fidelity_indirect(d, args.tolerance, args.bell_protocol))
            except BracketError as exc:
                log.error("d=%d indirect: %s", d, exc)
                row["f_ind"] = "bracket_failure"
        rows.append(row)
    buf = io.StringIO()
    _write_rows(rows, args.output, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _run_trace(state, args, target):
    if args.protocol == "indirect":
        return indirect.run_indirect(state, repetitions=args.rounds, target_fidelity=target,
                                     protocol=args.bell_protocol, max_rounds=args.max_rounds)
    return direct.run_schedule(state, args.schedule, repetitions=args.rounds,
                               target_fidelity=target, max_rounds=args.max_rounds)


def cmd_purify(args):
    state = _input_state(args)
    target = None if args.rounds is not None else args.target
    status, code = "converged", EXIT_OK
    try:
        trace = _run_trace(state, args, target)
        if target is None:
            status = "completed"
    except NonConvergenceError as exc:
        log.warning("%s", exc)
        trace, status, code = exc.trace, "nonconverged", EXIT_NONCONVERGED
    report = {
        "d": state.d,
        "protocol": args.protocol,
        "schedule": str(args.schedule) if args.protocol == "direct"
        else ",".join(indirect.bell_schedule(state.d, args.bell_protocol)),
        "target_fidelity": target,
        "status": status,
        **trace.to_dict(),
    }
    if args.output == "csv":
        buf = io.StringIO()
        _write_rows(report["rounds"], "csv", buf)
        _emit(buf.getvalue(), args.out)
    else:
        _emit(json.dumps(report, indent=2) + "\n", args.out)
    return code


def _copies_row(state, args):
    row = {"d": state.d, "fidelity": _fmt(state.fidelity)}
    nonconverged = False
    results = {}
    for proto in ("direct", "indirect"):
        if args.protocol not in (proto, "both"):
            continue
        try:
            if proto == "direct":
                if state.fidelity >= args.target:
                    copies, rounds = 1.0, 0
                else:
                    tr = direct.run_schedule(state, args.schedule, target_fidelity=args.target,
                                             max_rounds=args.max_rounds)
                    copies, rounds = tr.copies_per_survivor, len(tr.rounds)
            else:
                tr = indirect.run_indirect(state, repetitions=0)
                if tr.final_fidelity < args.target:
                    tr = indirect.run_indirect(state, target_fidelity=args.target,
                                               protocol=args.bell_protocol,
                                               max_rounds=args.max_rounds)
                copies, rounds = tr.copies_per_survivor, len(tr.rounds)
            results[proto] = copies
            row[f"{proto}_copies"] = _fmt(copies)
            row[f"{proto}_rounds"] = rounds
        except NonConvergenceError:
            nonconverged = True
            row[f"{proto}_copies"] = "nonconverged"
            row[f"{proto}_rounds"] = ""
    if args.protocol == "both":
        row["ratio"] = _fmt(results["indirect"] / results["direct"]) if len(results) == 2 else ""
    return row, nonconverged


def cmd_copies(args):
    if not args.target < 1.0:
        raise UsageError("--target must be below 1")
    if args.sweep:
        if args.d is None:
            raise UsageError("--sweep needs --d")
        states = []
        for f in args.sweep:
            try:
                states.append(IsotropicFamily(args.d, direct.x_from_fidelity(args.d, f)).state())
            except ValueError as exc:
                raise UsageError(str(exc)) from None
    else:
        states = [_input_state(args)]
    rows = []
    any_nonconverged = False
    for st in states:
        row, nonconv = _copies_row(st, args)
        rows.append(row)
        if nonconv:
            any_nonconverged = True
            print(f"fidelity {st.fidelity:.6f} is below the purification threshold: "
                  f"target {args.target} is never reached", file=sys.stderr)
    buf = io.StringIO()
    _write_rows(rows, args.output, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_NONCONVERGED if any_nonconverged else EXIT_OK


def cmd_verify(args):
    from .verify import run_checks

    try:
        results = run_checks(args.d_max, args.trials, args.seed)
    except ResourceGuardError as exc:
        raise UsageError(str(exc)) from None
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def _label(text, d):
    parts = _int_list(text)
    if len(parts) != 3:
        raise UsageError(f"--label needs three integers l,m,n, got {text!r}")
    return GhzLabel(*parts, d=d)


def cmd_correlations(args):
    import numpy as np

    from .ghz import correlation_operator, ghz_vector
    from .linalg import omega

    if args.d is None:
        raise UsageError("--d is required")
    lab = _label(args.label, args.d)
    d = args.d
    vec = ghz_vector(d, lab).amplitudes
    eigen_rows = []
    for op in CORRELATION_OPERATORS:
        e = correlation_eigenvalue(op, lab)
        residual = float(np.max(np.abs(correlation_operator(d, op) @ vec - omega(d) ** e * vec)))
        eigen_rows.append({"operator": op, "exponent": e, "dense_residual": f"{residual:.3e}"})
    cond_rows = []
    for meas in COMPOSITE_MEASUREMENTS:
        if meas == "xAxBxC":
            conds = [(q, r) for q in range(d) for r in range(d)]
        else:
            conds = [(q,) for q in range(d)]
        for c in conds:
            cond_rows.append({
                "measurement": meas,
                "conditioning": " ".join(str(v) for v in c),
                "outcome_p": conditioned_outcome(meas, lab, c),
            })
    if args.output == "json":
        text = json.dumps({"d": d, "label": list(lab.as_tuple()), "eigenvalues": eigen_rows,
                           "conditioned_outcomes": cond_rows}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        _write_rows(eigen_rows, "csv", buf)
        buf.write("\n")
        _write_rows(cond_rows, "csv", buf)
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="ghzpurify", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, d_list=False):
        if d_list:
            p.add_argument("--d", type=_int_list, default=[2, 3, 4, 5, 6], help="comma-separated dimensions")
        else:
            p.add_argument("--d", type=int)
        p.add_argument("--output", choices=("csv", "json"), default="csv")
        p.add_argument("--out", metavar="PATH", help="write to PATH instead of stdout")

    def protocol_flags(p, choices, default):
        p.add_argument("--protocol", choices=choices, default=default)
        p.add_argument("--schedule", type=_schedule, default=direct.ALTERNATING,
                       help="direct-protocol rounds, e.g. P1,P2 or P1,P1,P2")
        p.add_argument("--bell-protocol", choices=indirect.BELL_PROTOCOLS, default="auto",
                       help="Bell purification used by the indirect protocol")

    def state_flags(p):
        p.add_argument("--x", type=float, help="isotropic mixing parameter")
        p.add_argument("--fidelity", type=float, help="isotropic input fidelity p000")
        p.add_argument("--state-file", metavar="PATH", help="JSON GHZ-diagonal state")
        p.add_argument("--max-rounds", type=int, default=direct.MAX_ROUNDS)

    p = sub.add_parser("thresholds", help="threshold fidelities on the isotropic family")
    common(p, d_list=True)
    protocol_flags(p, ("direct", "indirect", "both"), "both")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("purify", help="per-round purification trace")
    common(p)
    protocol_flags(p, ("direct", "indirect"), "direct")
    state_flags(p)
    p.add_argument("--target", type=float, default=0.99)
    p.add_argument("--rounds", type=int, help="run a fixed number of rounds instead of a target")
    p.set_defaults(func=cmd_purify, output="json")

    p = sub.add_parser("copies", help="expected input copies per output copy")
    common(p)
    protocol_flags(p, ("direct", "indirect", "both"), "both")
    state_flags(p)
    p.add_argument("--target", type=float, default=0.99)
    p.add_argument("--sweep", type=_float_list, help="comma-separated isotropic fidelities")
    p.set_defaults(func=cmd_copies)

    p = sub.add_parser("verify", help="maps vs circuit simulation and GHZ identities")
    p.add_argument("--d-max", type=int, default=3)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("correlations", help="eigenvalue exponents and perfect correlations of a GHZ label")
    common(p)
    p.add_argument("--label", default="0,0,0")
    p.set_defaults(func=cmd_correlations)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ghzpurify {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegeneratePostselectionError as exc:
        print(f"ghzpurify {args.command}: degenerate post-selection: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
