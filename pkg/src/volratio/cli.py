"""Command-line front end: ``volratio <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error (bad flags, unknown preset, malformed
JSON, dimension mismatch), 2 an invariant violation was detected (for
example a failed inclusion).
"""

from __future__ import annotations

import argparse
import math
import sys

from . import experiments as ex
from .bodyio import PRESET_HELP, BodySpecError, parse_body, parse_family, parse_tau
from .errors import DimensionMismatch, Unsupported, VolRatioError
from .report import emit_report

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_dims(text: str) -> list[int]:
    """``"3,4,5"``, ``"3-7"`` or ``"3..7"`` (inclusive ranges)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        sep = ".." if ".." in part else ("-" if "-" in part[1:] else None)
        try:
            if sep:
                a, b = part.split(sep)
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad --dims entry {part!r}; use e.g. 3,4,5 or 3-7") from None
    if not out or min(out) < 1:
        raise UsageError("--dims needs positive integers")
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def _families(text: str):
    return [(lab.strip(), parse_family(lab)) for lab in _split_bodies(text)]


def _split_bodies(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="volratio", description="Volume-ratio experiments on convex bodies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, dims=None, trials=None, samples=None):
        sp.add_argument("--seed", type=_u64, default=0, help="run seed (u64)")
        sp.add_argument("--out", default="-", help="output path ('-' = stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $VOLRATIO_THREADS or 1)")
        if dims is not None:
            sp.add_argument("--dims", default=dims, help="dimensions, e.g. 3,4,5 or 3-7")
        if trials is not None:
            sp.add_argument("--trials", type=int, default=trials)
        if samples is not None:
            sp.add_argument("--samples", type=int, default=samples)
        return sp

    sp = common(sub.add_parser("gluskin-lower", help="vr(K, Gluskin polytope) across dimensions"),
                dims="3-7", trials=50)
    sp.add_argument("--body", default="b2", help="K family: b1, b2, binf or bp:p")
    sp.add_argument("--delta", type=float, default=2.0, help="polytope has ceil(delta n) random points")
    sp.add_argument("--restarts", type=int, default=5)

    sp = common(sub.add_parser("dr-parallelepiped", help="random Dvoretzky-Rogers parallelepipeds"),
                dims="4-8", trials=100, samples=0)
    sp.add_argument("--body", default="b2", help="L family: b1, b2, binf or bp:p")

    sp = common(sub.add_parser("bobkov-check", help="isotropic unconditional sandwich"), samples=10000)
    sp.add_argument("--body", required=True, help=f"body ({PRESET_HELP})")
    sp.add_argument("--allowance", type=float, default=1.1)

    sp = common(sub.add_parser("schatten-lvr", help="lvr of unitary-invariant balls"),
                dims="2", trials=10, samples=2000)
    sp.add_argument("--tau", default="lp:inf", help="symmetric gauge: lp:p or kyfan:k")
    sp.add_argument("--delta", type=float, default=2.0)
    sp.add_argument("--restarts", type=int, default=3)

    sp = common(sub.add_parser("chevet-tail", help="Gaussian operator norm tails"),
                dims="5,10", trials=2000, samples=20000)
    sp.add_argument("--body", default="b1", help="source family L (needs exact generators)")
    sp.add_argument("--body-k", default="binf", help="target family K")
    sp.add_argument("--u", default="0,1,2", help="comma-separated u grid")

    sp = common(sub.add_parser("det-bound", help="Gaussian determinant lower tail"), dims="5", trials=1000)
    sp.add_argument("--constant", type=float, default=0.1)

    sp = common(sub.add_parser("santalo", help="Santalo products over a body zoo"), dims="2-4", samples=4000)
    sp.add_argument("--body", default="b1,b2,binf,bp:3", help="comma-separated families")

    sp = common(sub.add_parser("vr", help="vr(K, L) for one pair"), samples=4000)
    sp.add_argument("--body-k", required=True, help=f"K ({PRESET_HELP})")
    sp.add_argument("--body-l", required=True, help=f"L ({PRESET_HELP})")
    sp.add_argument("--restarts", type=int, default=5)

    sp = common(sub.add_parser("sandwich-check", help="Schatten sandwich of a unitary-invariant ball"),
                dims="1-3", samples=10000)
    sp.add_argument("--tau", default="lp:1", help="symmetric gauge: lp:p or kyfan:k")
    return p


def run(args: argparse.Namespace):
    threads = ex.resolve_threads(args.threads)
    cmd = args.command
    if cmd == "gluskin-lower":
        return ex.lvr_gluskin_experiment(parse_family(args.body), args.delta, parse_dims(args.dims),
                                         args.trials, args.seed, threads, args.restarts, label=args.body)
    if cmd == "dr-parallelepiped":
        return ex.dr_experiment(parse_family(args.body), parse_dims(args.dims), args.trials, args.seed,
                                threads, n_iso_samples=args.samples or None, label=args.body)
    if cmd == "bobkov-check":
        return ex.bobkov_experiment(parse_body(args.body), args.samples, args.seed, args.allowance,
                                    label=args.body)
    if cmd == "schatten-lvr":
        return ex.schatten_lvr_experiment(parse_tau(args.tau), parse_dims(args.dims), args.trials,
                                          args.seed, threads, args.delta, args.restarts,
                                          n_iso_samples=args.samples, label=args.tau)
    if cmd == "chevet-tail":
        return ex.chevet_tail_experiment(parse_family(args.body), parse_family(args.body_k),
                                         parse_dims(args.dims), args.trials, _floats(args.u), args.seed,
                                         ell_samples=args.samples, threads=threads,
                                         label=f"{args.body}->{args.body_k}")
    if cmd == "det-bound":
        return ex.det_bound_experiment(parse_dims(args.dims), args.trials, args.seed, args.constant, threads)
    if cmd == "santalo":
        return ex.santalo_experiment(_families(args.body), parse_dims(args.dims), args.seed,
                                     args.samples, threads)
    if cmd == "vr":
        k, l = parse_body(args.body_k), parse_body(args.body_l)
        if k.dim != l.dim:
            raise DimensionMismatch(f"--body-k has dimension {k.dim} but --body-l has dimension {l.dim}")
        return ex.vr_experiment(k, l, args.seed, args.restarts, args.samples, args.body_k, args.body_l)
    if cmd == "sandwich-check":
        return ex.sandwich_experiment(parse_tau(args.tau), parse_dims(args.dims), args.samples, args.seed,
                                      label=args.tau)
    raise UsageError(f"unknown subcommand {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "trials", 1) < 1 or getattr(args, "samples", 1) < 0:
            raise UsageError("--trials must be >= 1 and --samples >= 0")
        report = run(args)
    except (UsageError, BodySpecError, DimensionMismatch, Unsupported) as exc:
        print(f"volratio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VolRatioError as exc:
        print(f"volratio: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        emit_report(report, args.format, args.out)
    except OSError as exc:
        print(f"volratio: error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if report.violations:
        print(f"volratio: {report.violations} invariant violation(s) detected", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
