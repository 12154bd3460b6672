"""Command line front end: ``umbilic-lab {run,convergence,catalog,validate-config}``.

Exit codes: 0 when every requested verdict is consistent, 1 when some
verdict (or convergence study) is not, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .catalog import CATALOG, list_catalog
from .config import BUILTIN_SCENARIOS, load_scenario
from .emit import dumps
from .errors import ConfigInvalid

EXIT_OK, EXIT_INCONSISTENT, EXIT_CONFIG = 0, 1, 2


def _span(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from None
    return (a, b)


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage already; keep the message on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="umbilic-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"umbilic-lab {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def scenario_args(sp, outputs=True):
        sp.add_argument("--scenario", required=True,
                        help=f"built-in name ({', '.join(sorted(BUILTIN_SCENARIOS))}) or JSON file")
        sp.add_argument("--step", type=_positive_float, help="RK4 step h (finest rung for convergence)")
        sp.add_argument("--span", type=_span, help="curve parameter span a,b (must contain 0)")
        sp.add_argument("--seed", type=_seed, help="random seed (u64)")
        if outputs:
            sp.add_argument("--threads", type=int, help="worker threads (default: $UMBILIC_LAB_THREADS or 1)")
            sp.add_argument("--out", help="output directory")

    scenario_args(sub.add_parser("run", help="run theorem suites and write report.json"))
    scenario_args(sub.add_parser("convergence", help="run the scenario's RK4 convergence studies"))
    cat = sub.add_parser("catalog", help="list catalog entries and ground-truth flags")
    cat.add_argument("--json", action="store_true", help="machine-readable output")
    scenario_args(sub.add_parser("validate-config", help="check a scenario without running it"), outputs=False)
    return p


def _overrides(args):
    return {"step": args.step, "span": args.span, "seed": args.seed, "out": getattr(args, "out", None)}


def _catalog(args):
    rows = list_catalog()
    if args.json:
        sys.stdout.write(dumps({name: {"flags": flags, "description": CATALOG[name].description}
                                for name, flags in rows}))
        return EXIT_OK
    width = max(len(n) for n, _ in rows)
    keys = ("totally_umbilic", "extrinsic_sphere", "constant_isotropic", "hypersurface")
    print(f"{'name':<{width}}  " + "  ".join(keys))
    for name, flags in rows:
        cells = "  ".join(f"{str(flags[k]).lower():<{len(k)}}" for k in keys)
        print(f"{name:<{width}}  {cells}".rstrip())
    return EXIT_OK


def _summary_lines(report):
    s = report.get("summary", {})
    for name, ok in s.get("verdicts", {}).items():
        yield f"{name:<16} {'consistent' if ok else 'INCONSISTENT'}"
    for row in report.get("convergence", []):
        slope = "n/a" if row["slope"] is None else f"{row['slope']:.3f}"
        c = "" if row["c"] is None else f" c={row['c']:g}"
        yield f"convergence {row['entry']} {row['kind']}{c}: slope {slope} [{row['status']}]"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "catalog":
        return _catalog(args)
    from .runner import resolve_threads, run_scenario

    try:
        cfg = load_scenario(args.scenario, **_overrides(args))
        if args.verb == "validate-config":
            print(f"{cfg.source}: ok ({len(cfg.entries)} entries, suites: {', '.join(cfg.suites) or 'none'}, "
                  f"{len(cfg.convergence)} convergence studies)")
            return EXIT_OK
        if args.verb == "convergence" and not cfg.convergence:
            raise ConfigInvalid(f"{cfg.source}: scenario defines no convergence studies")
        threads = resolve_threads(args.threads, cfg.threads)
    except ConfigInvalid as exc:
        print(f"umbilic-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output_dir
    report, ok = run_scenario(cfg, threads=threads, out_dir=out, verb=args.verb)
    for line in _summary_lines(report):
        print(line)
    print(f"report: {out}/report.json")
    return EXIT_OK if ok else EXIT_INCONSISTENT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
