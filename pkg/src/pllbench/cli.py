"""Command-line front end: evaluate datasets, clean XML, diff preparations.

Exit codes: 0 success, 1 reserved for ``diff --fail-on-diff``, 2 config or
input errors, 3 backend failures. Output files are written atomically
(temp file + rename) so a failed run never leaves a partial CSV behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import datasets, textnorm
from .backends import (
    RemoteBackend,
    RemoteBackendConfig,
    TableBackend,
    WindowedBackend,
    load_counts,
    unigram_backend,
)
from .backends.base import MaskedLmBackend
from .errors import PllBenchError
from .report import aggregate, format_percent, write_csv, write_summary_json
from .runner import evaluate_instances
from .scoring import ScoreMode

ENDPOINT_ENV = "PLLBENCH_ENDPOINT"

EXIT_OK = 0
EXIT_DIFFS = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3


class ConfigError(Exception):
    pass


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key/value run-config file; '#' comments, flags override these."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line is not key=value: {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_PARSERS = {
    datasets.DatasetTag.WINOGRADVERSARIAL: datasets.parse_winogradversarial,
    datasets.DatasetTag.WINOGRAD: datasets.parse_winograd_xml,
    datasets.DatasetTag.WINOGRANDE: datasets.parse_winogrande,
    datasets.DatasetTag.TIMEDIAL: datasets.parse_timedial,
}


def _load_dataset(path: str, tag: datasets.DatasetTag) -> list[datasets.ForcedChoiceInstance]:
    text = Path(path).read_text(encoding="utf-8")
    return _PARSERS[tag](text)


def _build_backend(spec: str, max_tokens: int) -> MaskedLmBackend:
    """Backend spec: table:<path>, unigram:<path>, or remote[:<endpoint>]."""
    kind, _, arg = spec.partition(":")
    if kind == "table":
        if not arg:
            raise ConfigError("table backend needs a file path: table:<path>")
        return TableBackend.from_json(arg)
    if kind == "unigram":
        if not arg:
            raise ConfigError("unigram backend needs a corpus path: unigram:<path>")
        # Smoothing on by default so any corpus can score any dataset.
        return unigram_backend(load_counts(arg), smoothing=True, max_tokens=max(max_tokens, 2))
    if kind == "remote":
        endpoint = arg or os.environ.get(ENDPOINT_ENV, "")
        if not endpoint:
            raise ConfigError(
                f"remote backend needs an endpoint (remote:<endpoint> or ${ENDPOINT_ENV})"
            )
        return RemoteBackend(RemoteBackendConfig(endpoint=endpoint))
    raise ConfigError(f"unknown backend kind {kind!r} (expected table/unigram/remote)")


def _atomic_write(path: Path, write_fn) -> None:
    handle, temp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    os.close(handle)
    try:
        write_fn(Path(temp_name))
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def cmd_evaluate(args: argparse.Namespace) -> int:
    defaults = _read_config_file(args.config) if args.config else {}

    def setting(flag_value, key: str, fallback):
        if flag_value is not None:
            return flag_value
        if key in defaults:
            return defaults[key]
        return fallback

    dataset_path = setting(args.dataset, "dataset", None)
    tag_name = setting(args.tag, "tag", None)
    backend_spec = setting(args.backend, "backend", None)
    if not dataset_path or not tag_name or not backend_spec:
        raise ConfigError("evaluate needs --dataset, --tag, and --backend")
    mode = ScoreMode(str(setting(args.mode, "mode", "pll")))
    max_tokens = int(setting(args.max_tokens, "max_tokens", 450))
    not_kws = args.not_kws or str(setting(None, "not_kws", "false")).lower() == "true"
    window = setting(args.window, "window", None)
    stride = setting(args.stride, "stride", None)
    out_path = Path(setting(args.out, "out", "results.csv"))
    parallelism = int(setting(args.parallelism, "parallelism", 1))

    try:
        tag = datasets.DatasetTag(tag_name)
    except ValueError:
        raise ConfigError(f"unknown dataset tag {tag_name!r}") from None
    if max_tokens < 2 or parallelism < 1:
        raise ConfigError("max_tokens must be >= 2 and parallelism >= 1")

    instances = _load_dataset(dataset_path, tag)
    if not_kws:
        instances = datasets.normalize_instances(instances, textnorm.NOT_KWS)

    backend = _build_backend(str(backend_spec), max_tokens)
    if window is not None:
        if stride is None:
            raise ConfigError("--window needs --stride")
        backend = WindowedBackend(
            backend, int(window), int(stride), max_tokens=max(max_tokens, backend.max_tokens)
        )

    outcomes, skips, elapsed = evaluate_instances(
        instances, backend, mode=mode, max_tokens=max_tokens, parallelism=parallelism
    )
    report = aggregate(
        outcomes, skips, dataset_tag=tag, mode=mode, wall_time_total=elapsed
    )
    _atomic_write(out_path, lambda p: write_csv(report, p, include_timing=not args.no_timing))
    _atomic_write(
        out_path.with_suffix(".summary.json"), lambda p: write_summary_json(report, p)
    )
    scored = report.n_total - report.n_skipped
    print(
        f"{tag.value} {mode.value}: accuracy {format_percent(report.accuracy)}% "
        f"({report.n_correct}/{scored}), skipped {report.n_skipped} of {report.n_total}"
    )
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_clean(args: argparse.Namespace) -> int:
    document = Path(args.input).read_text(encoding="utf-8")
    instances = datasets.parse_winograd_xml(document)
    payload = datasets.serialize_instances(instances)
    _atomic_write(Path(args.output), lambda p: p.write_text(payload, encoding="utf-8"))
    print(f"wrote {len(instances)} instances to {args.output}")
    return EXIT_OK


def _load_any(path: str) -> list[datasets.ForcedChoiceInstance]:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".xml") or text.lstrip().startswith("<"):
        return datasets.parse_winograd_xml(text)
    return datasets.parse_winogradversarial(text)


def cmd_diff(args: argparse.Namespace) -> int:
    prep_a = datasets.materialize_all(_load_any(args.prep_a))
    prep_b = datasets.materialize_all(_load_any(args.prep_b))
    report = datasets.diff_preparations(prep_a, prep_b)
    if report.empty:
        print("0 differences")
        return EXIT_OK
    for kind, count in sorted(report.counts.items()):
        print(f"{kind}: {count}")
        for finding in report.findings:
            if finding.kind == kind:
                print(f"  {finding.key[0]}#{finding.key[1]}: {finding.text_a!r} vs {finding.text_b!r}")
    if report.missing_in_a:
        print(f"only in {args.prep_b}: {len(report.missing_in_a)} candidates")
    if report.missing_in_b:
        print(f"only in {args.prep_a}: {len(report.missing_in_b)} candidates")
    print(f"{report.total} differences")
    return EXIT_DIFFS if args.fail_on_diff else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pllbench",
        description="Score forced-choice datasets with masked-LM pseudo-log-likelihoods.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score a dataset and write CSV + JSON summary")
    ev.add_argument("--dataset", help="dataset file path")
    ev.add_argument("--tag", help="dataset tag: winogradversarial, winograd, winogrande, timedial")
    ev.add_argument("--backend", help="table:<path>, unigram:<path>, or remote[:<endpoint>]")
    ev.add_argument("--mode", choices=[m.value for m in ScoreMode], help="score driving decisions")
    ev.add_argument("--max-tokens", type=int, dest="max_tokens", help="token filter limit (default 450)")
    ev.add_argument("--not-kws", action="store_true", dest="not_kws",
                    help="strip spaces before punctuation before tokenization")
    ev.add_argument("--window", type=int, help="sliding window size for long sequences")
    ev.add_argument("--stride", type=int, help="sliding window stride")
    ev.add_argument("--out", help="output CSV path (default results.csv)")
    ev.add_argument("--parallelism", type=int, help="concurrent instance-scoring workers")
    ev.add_argument("--no-timing", action="store_true", dest="no_timing",
                    help="blank wall-time columns for byte-stable output")
    ev.add_argument("--config", help="flat key=value config file; flags override it")
    ev.set_defaults(func=cmd_evaluate)

    cl = sub.add_parser("clean", help="clean a pronoun-resolution XML file into canonical JSONL")
    cl.add_argument("input", help="XML input path")
    cl.add_argument("output", help="JSONL output path")
    cl.set_defaults(func=cmd_clean)

    df = sub.add_parser("diff", help="compare two dataset preparations by defect class")
    df.add_argument("prep_a")
    df.add_argument("prep_b")
    df.add_argument("--fail-on-diff", action="store_true", dest="fail_on_diff",
                    help="exit 1 when any differences exist")
    df.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PllBenchError as exc:
        from .errors import BackendFailure, NonFiniteScore, SequenceTooLong

        if isinstance(exc, (BackendFailure, NonFiniteScore, SequenceTooLong)):
            print(f"backend error: {exc}", file=sys.stderr)
            return EXIT_BACKEND
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
