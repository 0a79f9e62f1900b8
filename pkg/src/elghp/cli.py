"""Command-line entry point: ``elghp <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import featurecache
from .descriptor import DescriptorConfig, DescriptorError, extract_features
from .imageio import PGMError, load_canonical
from .matcher import MatchError, SplitSpec, accuracy_csv, identity_of, run_experiment
from .netproto import ProtocolError, ServerError, client_register, client_verify, load_gallery, serve
from .pipeline import PipelineConfig, PipelineError, time_pipeline, timing_csv

DEFAULT_PORT = 7100
EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _descriptor_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=int, default=2, choices=(1, 2),
                   help="angular multiplier: 1 = LGHP angles, 2 = ELGHP (default)")
    p.add_argument("--radii", type=_int_list, default=[1, 2, 3], help="comma-separated radii (default 1,2,3)")


def _network_args(p: argparse.ArgumentParser, default_addr: str) -> None:
    p.add_argument("--addr", default=default_addr)
    p.add_argument("--port", type=int, default=DEFAULT_PORT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elghp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="write a feature cache for a directory of PGM images")
    p.add_argument("images", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _descriptor_args(p)

    p = sub.add_parser("bench", help="1NN accuracy over repeated random splits")
    p.add_argument("images", type=Path)
    p.add_argument("--splits", type=_float_list, default=[20, 30, 40, 50, 60],
                   help="test-set percentages (default 20,30,40,50,60)")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratified", action="store_true", help="sample the test set per identity")
    p.add_argument("--out", type=Path, help="CSV path (default stdout)")
    _descriptor_args(p)

    p = sub.add_parser("time", help="time the extraction/classification pipeline per thread count")
    p.add_argument("images", type=Path)
    p.add_argument("gallery", type=Path)
    p.add_argument("--threads", type=_int_list, default=[1, 2, 4])
    p.add_argument("--out", type=Path, help="CSV path (default stdout)")
    _descriptor_args(p)

    p = sub.add_parser("serve", help="run the verification server")
    p.add_argument("gallery", type=Path)
    _network_args(p, "0.0.0.0")
    _descriptor_args(p)

    for name, helptext in (("verify", "verify a claimed identity"), ("register", "register a new identity")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("user_id")
        p.add_argument("files", nargs="+", type=Path)
        _network_args(p, "127.0.0.1")
        if name == "verify":
            _descriptor_args(p)
    return parser


def _config(args, parser) -> DescriptorConfig:
    try:
        return DescriptorConfig(delta=args.delta, radii=tuple(args.radii))
    except DescriptorError as exc:
        parser.error(str(exc))


def _pgm_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    return sorted(directory.glob("*.pgm"))


def _load_named(directory: Path):
    return [(p.name, load_canonical(p)) for p in _pgm_files(directory)]


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_extract(args, cfg) -> int:
    files = _pgm_files(args.images)
    if not files:
        print("error: no images", file=sys.stderr)
        return EXIT_FAIL
    records, failed = [], 0
    for path in files:
        try:
            feats = extract_features(load_canonical(path), cfg)
        except (OSError, PGMError, DescriptorError) as exc:
            print(f"{path.name}: error: {exc}", file=sys.stderr)
            failed += 1
            continue
        records.append((path.name, feats))
        print(f"{path.name}\t{feats.shape[0]}")
    featurecache.write_cache(args.out, records)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_bench(args, cfg) -> int:
    images = _load_named(args.images)
    if not images:
        print("error: no images", file=sys.stderr)
        return EXIT_FAIL
    for name, _ in images:
        identity_of(name)
    # features do not depend on the split
    features = {name: extract_features(img, cfg) for name, img in images}
    reports = []
    for frac in args.splits:
        plan = SplitSpec(frac, args.reps, args.seed, args.stratified)
        report = run_experiment(features, cfg, plan)
        print(f"split {frac:g}-{100 - frac:g}: mean accuracy {report.mean:.4f}%", file=sys.stderr)
        reports.append(report)
    _emit(accuracy_csv(reports), args.out)
    return EXIT_OK


def cmd_time(args, cfg) -> int:
    tests = [(p.name, p) for p in _pgm_files(args.images)]
    if not tests:
        print("error: no test images", file=sys.stderr)
        return EXIT_FAIL
    gallery = load_gallery(args.gallery, cfg)
    if not len(gallery):
        print("error: no gallery images", file=sys.stderr)
        return EXIT_FAIL
    reports = time_pipeline(tests, gallery, cfg, args.threads)
    _emit(timing_csv(reports, len(gallery)), args.out)
    return EXIT_OK


def cmd_serve(args, cfg) -> int:
    serve(args.gallery, cfg, (args.addr, args.port))
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    try:
        matched = client_verify((args.addr, args.port), args.user_id, args.files, cfg)
    except (OSError, PGMError, ProtocolError, ServerError, DescriptorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print("matched" if matched else "not matched")
    return EXIT_OK if matched else EXIT_FAIL


def cmd_register(args, cfg) -> int:
    try:
        accepted = client_register((args.addr, args.port), args.user_id, args.files)
    except (OSError, PGMError, ProtocolError, ServerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not accepted:
        print("registration rejected: server did not confirm the user id", file=sys.stderr)
        return EXIT_FAIL
    print(f"registered {args.user_id}")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "bench": cmd_bench,
    "time": cmd_time,
    "serve": cmd_serve,
    "verify": cmd_verify,
    "register": cmd_register,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    cfg = _config(args, parser) if hasattr(args, "delta") else DescriptorConfig()
    if args.command == "time":
        try:
            for t in args.threads:
                PipelineConfig(t)
        except PipelineError as exc:
            parser.error(str(exc))
    if args.command == "bench":
        try:
            for frac in args.splits:
                SplitSpec(frac, args.reps, args.seed)
        except MatchError as exc:
            parser.error(str(exc))
    try:
        return COMMANDS[args.command](args, cfg)
    except (OSError, PGMError, MatchError, PipelineError, DescriptorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
