"""``elsort sort|gen|validate|bench`` command-line entry point.

Exit codes: 0 success, 1 sort or validation failure, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as C
from .errors import ConfigError, ElsortError, MalformedFileError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3

_SUFFIX = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}


def byte_size(text: str) -> int:
    """Parse ``512M``, ``2G``, ``1048600`` ..."""
    t = text.strip().lower().removesuffix("b").removesuffix("i")
    mult = 1
    if t and t[-1] in _SUFFIX:
        mult = _SUFFIX[t[-1]]
        t = t[:-1]
    try:
        return int(float(t) * mult)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a byte size: {text!r}") from None


def count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != int(v) or v < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative integer: {text!r}")
    return int(v)


def count_list(text: str) -> list[int]:
    return [count(t) for t in text.split(",") if t]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--algorithm", choices=("elsar", "mergesort"), default="elsar")
    g.add_argument("--partitions", type=int, default=C.DEFAULT_PARTITIONS, help="partition count f")
    g.add_argument("--readers", type=int, default=None, help="reader workers r (default: CPU count)")
    g.add_argument("--sorters", type=int, default=None, help="max concurrent sorters (default: readers)")
    g.add_argument("--memory", type=byte_size, default=None, help="memory budget M (default: half of RAM)")
    g.add_argument("--batch-bytes", type=byte_size, default=C.DEFAULT_BATCH_RECORDS * 100)
    g.add_argument("--temp-dir", type=Path, default=None, help=f"fragment/run directory (env {C.TMPDIR_ENV})")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sample-rate", type=float, default=C.DEFAULT_SAMPLE_RATE)
    g.add_argument("--sample-cap", type=int, default=C.DEFAULT_SAMPLE_CAP)
    g.add_argument("--sample-scope", choices=("file", "batch"), default="file",
                   help="sample the whole file or only reader 0's first batch")
    g.add_argument("--leaves", type=int, default=C.DEFAULT_LEAVES, help="leaf models L")
    g.add_argument("--coalesce-bytes", type=byte_size, default=C.DEFAULT_COALESCE_BYTES)
    g.add_argument("--flush-watermark", type=byte_size, default=C.DEFAULT_FLUSH_WATERMARK)
    g.add_argument("--descriptor-budget", type=int, default=C.DEFAULT_DESCRIPTOR_BUDGET)
    g.add_argument("--fan-in", type=int, default=C.DEFAULT_FAN_IN, help="mergesort: runs merged per pass")
    g.add_argument("--debug", action="store_true", help="scan fragments for the ordering invariant")


def config_from_args(args: argparse.Namespace, input: Path, output: Path) -> C.RunConfig:
    kw = dict(
        algorithm=args.algorithm,
        partitions=args.partitions,
        sorters=args.sorters,
        batch_bytes=args.batch_bytes,
        seed=args.seed,
        sample_rate=args.sample_rate,
        sample_cap=args.sample_cap,
        sample_scope=args.sample_scope,
        leaves=args.leaves,
        coalesce_bytes=args.coalesce_bytes,
        flush_watermark=args.flush_watermark,
        descriptor_budget=args.descriptor_budget,
        fan_in=args.fan_in,
        debug=args.debug,
    )
    if args.readers is not None:
        kw["readers"] = args.readers
    if args.memory is not None:
        kw["memory"] = args.memory
    if args.temp_dir is not None:
        kw["temp_dir"] = args.temp_dir
    return C.RunConfig(input, output, **kw)


def cmd_sort(args: argparse.Namespace) -> int:
    from .run import run_sort, verified_ok

    cfg = config_from_args(args, args.input, args.output)
    report = run_sort(cfg, verify=not args.no_verify)
    print(report.text())
    if args.report_json:
        Path(args.report_json).write_text(report.to_json() + "\n")
    if args.report_csv:
        Path(args.report_csv).write_text(report.to_csv())
    if args.plot_dir:
        from .plotting import plot_io_load, plot_phase_breakdown

        plot_phase_breakdown(report, Path(args.plot_dir) / "phase_breakdown.png")
        plot_io_load([report], Path(args.plot_dir) / "io_load.png")
    if not verified_ok(report):
        print("error: output failed verification", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    from .datagen import generate

    rf = generate(args.records, args.seed, args.skew, args.output)
    print(f"wrote {rf.record_count} records ({'skewed' if args.skew else 'uniform'}, seed {args.seed}) to {rf.path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    from .datagen import validate

    rep = validate(args.file)
    print(rep.summary())
    if not rep.sorted:
        return EXIT_FAIL
    if args.expect_checksum is not None and rep.checksum != int(args.expect_checksum, 16):
        print(f"error: checksum {rep.checksum:016x} != expected {args.expect_checksum}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import sweep, write_csv
    from .run import verified_ok

    skews = {"uniform": [False], "skewed": [True], "both": [False, True]}[args.skew]
    algos = [a for a in args.algorithms.split(",") if a]
    workdir = args.workdir
    template = config_from_args(args, workdir / "in.dat", workdir / "out.dat")
    rows, reports = [], []
    failed = False
    for row, report in sweep(args.sizes, skews, algos, workdir, seed=args.seed, template=template,
                             keep_files=args.keep_files):
        rows.append(row)
        reports.append(report)
        failed |= not verified_ok(report)
        print(",".join(str(row[c]) for c in row))
    write_csv(rows, args.csv)
    print(f"wrote {len(rows)} rows to {args.csv}")
    if args.plot_dir:
        from .plotting import plot_io_load, plot_sweep

        plot_sweep(rows, Path(args.plot_dir) / "sorting_rate.png")
        plot_io_load(reports, Path(args.plot_dir) / "io_load.png")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elsort", description="Learned-CDF external sort for 100-byte records")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sort", help="sort a record file")
    s.add_argument("input", type=Path)
    s.add_argument("output", type=Path)
    _add_run_flags(s)
    s.add_argument("--report-json", type=Path)
    s.add_argument("--report-csv", type=Path)
    s.add_argument("--plot-dir", type=Path, help="render phase and I/O figures here")
    s.add_argument("--no-verify", action="store_true", help="skip checksum/sortedness verification")
    s.set_defaults(func=cmd_sort)

    g = sub.add_parser("gen", help="generate a record file")
    g.add_argument("output", type=Path)
    g.add_argument("--records", type=count, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--skew", action="store_true")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("validate", help="check sortedness and print the checksum")
    v.add_argument("file", type=Path)
    v.add_argument("--expect-checksum", help="hex checksum the file must have")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run a sizes x skew x algorithm sweep")
    b.add_argument("--sizes", type=count_list, default=[10**5, 10**6, 10**7])
    b.add_argument("--skew", choices=("uniform", "skewed", "both"), default="both")
    b.add_argument("--algorithms", default="elsar,mergesort")
    b.add_argument("--csv", type=Path, required=True)
    b.add_argument("--workdir", type=Path, default=Path("bench-work"))
    b.add_argument("--plot-dir", type=Path)
    b.add_argument("--keep-files", action="store_true")
    _add_run_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MalformedFileError, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ElsortError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
