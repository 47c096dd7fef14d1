"""Command-line entry point.

Subcommands: score, fit, synth, report, validate. Machine-readable JSON
goes to stdout, human messages to stderr. Exit codes: 0 success, 1 data
or computation error, 2 usage error.

Every subcommand runs in-process by default. score/fit/synth/validate
also accept ``--server URL`` to act as a thin client of a running fsep
service (the server resolves all paths on its own filesystem).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .bundle import read_bundle, read_manifest, validate_bundle
from .errors import ConfigInvalid, FsepError
from .harness import LABEL_SOURCES, METRICS, run_benchmark, score_bundle
from .synth import SyntheticConfig, write_suite


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


def _default_threads() -> int | None:
    env = os.environ.get("FSEP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"FSEP_THREADS must be an integer, got {env!r}") from None
    return None  # run_benchmark falls back to all cores


def _emit(payload: dict) -> None:
    print(json.dumps(payload))


def _post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    url = server.rstrip("/") + endpoint
    try:
        response = httpx.post(url, json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        raise FsepError(f"cannot reach server {url}: {exc}") from exc
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise FsepError(f"server error ({response.status_code}): {detail}")
    return response.json()


def cmd_score(args: argparse.Namespace) -> int:
    if args.metric in ("atc", "frechet", "mmd") and not args.reference:
        raise UsageError(f"--metric {args.metric} requires --reference")
    if args.server:
        payload = {
            "bundle": str(Path(args.bundle).resolve()),
            "metric": args.metric,
            "reference": str(Path(args.reference).resolve()) if args.reference else None,
            "labels": args.labels,
            "seed": args.seed,
        }
        _emit(_post(args.server, "/score", payload))
        return 0
    start = time.perf_counter()
    bundle = read_bundle(args.bundle)
    reference = read_bundle(args.reference) if args.reference else None
    result = score_bundle(
        bundle, args.metric, reference=reference, label_source=args.labels, seed=args.seed
    )
    _emit(
        {
            "metric": args.metric,
            "value": result.value,
            "degenerate": result.degenerate,
            "seconds": time.perf_counter() - start,
        }
    )
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    if args.server:
        payload = {
            "manifest": str(Path(args.manifest).resolve()),
            "metrics": args.metric,
            "seed": args.seed,
            "labels": args.labels,
            "csv": str(Path(args.csv).resolve()) if args.csv else None,
            "threads": args.threads,
        }
        _emit(_post(args.server, "/fit", payload))
        return 0
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    report = run_benchmark(
        manifest,
        args.metric,
        seed=args.seed,
        label_source=args.labels,
        base_dir=manifest_path.parent,
        threads=args.threads or _default_threads(),
    )
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    _emit(
        {
            "fits": {m: f.to_json_dict() for m, f in report.fits.items()},
            "raw_spearman": report.raw_spearman,
        }
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.server:
        payload = {
            "out": str(Path(args.out).resolve()),
            "k": args.k,
            "d": args.d,
            "train_n": args.train_n,
            "test_m": args.test_m,
            "sigma": args.sigma,
            "mean_scale": args.mean_scale,
            "families": args.families,
            "severities": args.severities,
            "noise": args.noise,
            "drift": args.drift,
            "imbalance": args.imbalance,
            "seed": args.seed,
        }
        _emit(_post(args.server, "/synth", payload))
        return 0
    cfg = SyntheticConfig(
        k=args.k,
        d=args.d,
        train_per_class=args.train_n,
        test_m=args.test_m,
        sigma=args.sigma,
        mean_scale=args.mean_scale,
        families=args.families,
        severities=args.severities,
        noise_scale=args.noise,
        drift_scale=args.drift,
        imbalance=args.imbalance,
        seed=args.seed,
    )
    layout = write_suite(cfg, args.out)
    _emit(
        {
            "out": str(layout.out_dir),
            "manifest": str(layout.manifest_path),
            "bundles": len(layout.bundle_dirs),
        }
    )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    if args.server:
        violations = _post(args.server, "/validate", {"bundle": str(Path(args.bundle).resolve())})[
            "violations"
        ]
    else:
        violations = validate_bundle(args.bundle)
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        return 1
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise UsageError("--metrics must name at least one metric")
    for metric in metrics:
        if metric not in METRICS:
            raise UsageError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    report = run_benchmark(
        manifest,
        metrics,
        seed=args.seed,
        label_source=args.labels,
        base_dir=manifest_path.parent,
        threads=args.threads or _default_threads(),
    )
    Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsep",
        description="Estimate classifier accuracy on unlabeled shifted test sets "
        "from feature bundles.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    score = sub.add_parser("score", help="compute one score for one bundle")
    score.add_argument("--bundle", required=True, help="bundle directory")
    score.add_argument("--metric", required=True, choices=METRICS)
    score.add_argument("--reference", help="reference bundle directory (atc/frechet/mmd)")
    score.add_argument("--labels", choices=LABEL_SOURCES, default="pseudo")
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--threads", type=int)
    score.add_argument("--server", help="base URL of a running fsep service")
    score.set_defaults(func=cmd_score)

    fit = sub.add_parser("fit", help="fit score-to-error regressions over a manifest")
    fit.add_argument("--manifest", required=True, help="manifest.json path")
    fit.add_argument("--metric", action="append", required=True, choices=METRICS)
    fit.add_argument("--labels", choices=LABEL_SOURCES, default="pseudo")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--csv", help="also write the per-bundle report CSV here")
    fit.add_argument("--threads", type=int)
    fit.add_argument("--server", help="base URL of a running fsep service")
    fit.set_defaults(func=cmd_fit)

    synth = sub.add_parser("synth", help="generate a synthetic shift benchmark suite")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--k", type=int, default=10)
    synth.add_argument("--d", type=int, default=64)
    synth.add_argument("--train-n", type=int, default=200, dest="train_n")
    synth.add_argument("--test-m", type=int, default=2000, dest="test_m")
    synth.add_argument("--sigma", type=float, default=1.0)
    synth.add_argument("--mean-scale", type=float, default=4.0, dest="mean_scale")
    synth.add_argument("--families", type=int, default=5)
    synth.add_argument("--severities", type=int, default=5)
    synth.add_argument("--noise", type=float, default=0.6)
    synth.add_argument("--drift", type=float, default=0.4)
    synth.add_argument("--imbalance", type=float, default=1.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--threads", type=int)
    synth.add_argument("--server", help="base URL of a running fsep service")
    synth.set_defaults(func=cmd_synth)

    report = sub.add_parser("report", help="write the benchmark CSV for a manifest")
    report.add_argument("--manifest", required=True)
    report.add_argument("--metrics", required=True, help="comma-separated metric names")
    report.add_argument("--out", required=True, help="CSV output path")
    report.add_argument("--labels", choices=LABEL_SOURCES, default="pseudo")
    report.add_argument("--seed", type=int, default=0)
    report.add_argument("--threads", type=int)
    report.set_defaults(func=cmd_report)

    validate = sub.add_parser("validate", help="check a bundle directory")
    validate.add_argument("--bundle", required=True)
    validate.add_argument("--server", help="base URL of a running fsep service")
    validate.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FsepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
