"""Command-line entry point.

Exit codes: 0 success, 1 parse/validation failure (the input is at fault),
2 usage error, 3 internal error. Diagnostics go to stderr as
`code path message` lines; nothing is written to an output path unless the
whole command succeeds (write-to-temp, rename-on-success).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

from . import dropout, model, pipeline, session, streams, wire
from .errors import GstError, InvalidDocumentError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _diag(text: str) -> None:
    print(text, file=sys.stderr)


def _diag_parse_error(source: str, e: wire.ParseError) -> None:
    code = e.schema_code or e.code.value
    _diag(f"{code} {source}:{e.line}:{e.column} {e.message}")


def micro_str(u: int) -> str:
    """Locale-independent fixed-point rendering of a micro quantity."""
    return f"{u // 1_000_000}.{u % 1_000_000:06d}"


# ---------------------------------------------------------------------------
# Report rendering

def emit_report(report: Any, format: str = "human") -> bytes:
    """Render a pipeline/session report. Wire output is canonical bytes;
    human output is stable and line-oriented."""
    if format == "wire":
        return wire.canonical_bytes(_report_value(report))
    return _report_human(report).encode("utf-8")


def _report_value(report: Any) -> wire.Value:
    if isinstance(report, pipeline.RetentionComparison):
        return pipeline.comparison_to_value(report)
    if isinstance(report, pipeline.RetentionLedger):
        return pipeline.ledger_to_value(report)
    if isinstance(report, dict):
        return report
    raise TypeError(f"cannot report {type(report).__name__}")


def _report_human(report: Any) -> str:
    lines: list[str] = []
    if isinstance(report, pipeline.RetentionComparison):
        lines.append(f"records                {report.total_records}")
        lines.append(f"baseline retained      {micro_str(report.baseline_count_u)} by count, "
                     f"{micro_str(report.baseline_duration_u)} by duration")
        lines.append(f"labeling retained      {micro_str(report.labeling_count_u)} by count, "
                     f"{micro_str(report.labeling_duration_u)} by duration")
        lines.append(f"retention gap          {micro_str(report.gap_count_u)}")
        lines.append(f"expressive rescued     {micro_str(report.expressive_rescued_u)}")
        for title, hist in (("baseline drops", report.baseline_drop_reasons),
                            ("labeling drops", report.labeling_drop_reasons)):
            lines.append(f"{title}:")
            for reason in sorted(hist):
                lines.append(f"  {reason:<22} {hist[reason]}")
    elif isinstance(report, pipeline.RetentionLedger):
        lines.append(f"run                    {report.run_id}")
        lines.append(f"policy                 {report.policy_name}")
        lines.append(f"records                {len(report.verdicts)}")
        lines.append(f"retained               {micro_str(report.retained_count_u)} by count, "
                     f"{micro_str(report.retained_duration_u)} by duration")
    elif isinstance(report, dict):
        for key in sorted(report):
            lines.append(f"{key:<22} {report[key]}")
    else:
        raise TypeError(f"cannot report {type(report).__name__}")
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_validate(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            doc = wire.decode_document(Path(path).read_bytes())
        except wire.ParseError as e:
            _diag_parse_error(path, e)
            status = EXIT_INPUT
            continue
        report = model.validate(doc)
        for v in report:
            _diag(f"{v.code} {path}{v.path} {v.message}")
        if report:
            status = EXIT_INPUT
    return status


def _cmd_canonicalize(args: argparse.Namespace) -> int:
    data = Path(args.file).read_bytes()
    try:
        canonical = wire.canonicalize(data)
    except wire.ParseError as e:
        _diag_parse_error(args.file, e)
        return EXIT_INPUT
    if args.out:
        _write_atomic(Path(args.out), canonical)
    else:
        sys.stdout.buffer.write(canonical)
    return EXIT_OK


def _cmd_partition(args: argparse.Namespace) -> int:
    path = Path(args.file)
    try:
        doc = wire.parse(path.read_bytes())
    except wire.ParseError as e:
        _diag_parse_error(args.file, e)
        return EXIT_INPUT
    instruct, think = streams.partition(doc)
    out = Path(args.out)
    stem = path.name.removesuffix(wire.GST_EXTENSION)
    _write_atomic(out / f"{stem}.instruct.gst", streams.serialize_instruct(instruct))
    _write_atomic(out / f"{stem}.think.gst", streams.serialize_think(think))
    return EXIT_OK


def _cmd_merge(args: argparse.Namespace) -> int:
    try:
        instruct = streams.parse_instruct(Path(args.instruct).read_bytes())
    except wire.ParseError as e:
        _diag_parse_error(args.instruct, e)
        return EXIT_INPUT
    try:
        think = streams.parse_think(Path(args.think).read_bytes())
    except wire.ParseError as e:
        _diag_parse_error(args.think, e)
        return EXIT_INPUT
    doc = streams.merge(instruct, think)
    data = wire.serialize_canonical(doc)
    if args.out:
        _write_atomic(Path(args.out), data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def _cmd_dropout(args: argparse.Namespace) -> int:
    path = Path(args.file)
    try:
        doc = wire.parse(path.read_bytes())
    except wire.ParseError as e:
        _diag_parse_error(args.file, e)
        return EXIT_INPUT
    if args.config:
        try:
            cfg = dropout.parse_config(Path(args.config).read_bytes())
        except wire.ParseError as e:
            _diag_parse_error(args.config, e)
            return EXIT_INPUT
    else:
        cfg = dropout.DropoutConfig()
    plan = dropout.plan_mask(doc, cfg, args.seed)
    masked = dropout.apply_mask(doc, plan)
    out = Path(args.out)
    stem = path.name.removesuffix(wire.GST_EXTENSION)
    _write_atomic(out / f"{stem}.masked.gst", wire.serialize_canonical(masked))
    _write_atomic(out / f"{stem}.maskplan", dropout.serialize_plan(plan))
    return EXIT_OK


def _cmd_pipeline_run(args: argparse.Namespace) -> int:
    if args.synthetic is not None:
        records = pipeline.generate_synthetic_corpus(args.synthetic, args.seed)
    elif args.manifest:
        try:
            records = pipeline.ingest_manifest(Path(args.manifest).read_bytes())
        except wire.ParseError as e:
            _diag_parse_error(args.manifest, e)
            return EXIT_INPUT
        except pipeline.DuplicateRecordIdError as e:
            _diag(f"DuplicateRecordId {args.manifest}:{e.line} {e}")
            return EXIT_INPUT
    else:
        _diag("usage pipeline-run one of --manifest or --synthetic is required")
        return EXIT_USAGE
    if args.policy:
        try:
            policy = pipeline.parse_policy(Path(args.policy).read_bytes())
        except wire.ParseError as e:
            _diag_parse_error(args.policy, e)
            return EXIT_INPUT
    else:
        policy = pipeline.DEFAULT_FILTER_POLICY

    baseline = pipeline.run_filter_baseline(records, policy)
    labeling, skeletons = pipeline.run_labeling(records)
    report = pipeline.retention_report(baseline, labeling, records)

    out = Path(args.out)
    writes: list[tuple[Path, bytes]] = [
        (out / "baseline.ledger", pipeline.serialize_ledger(baseline)),
        (out / "labeling.ledger", pipeline.serialize_ledger(labeling)),
        (out / "report.gst", emit_report(report, "wire")),
        (out / "report.txt", emit_report(report, "human")),
        (out / "skeletons.gstl",
         b"".join(wire.serialize_canonical(doc) for doc in skeletons)),
    ]
    if args.synthetic is not None:
        writes.append((out / "manifest.synthetic", pipeline.serialize_manifest(records)))
    for path, data in writes:
        _write_atomic(path, data)
    sys.stdout.buffer.write(emit_report(report, args.format))
    return EXIT_OK


def _cmd_session_simulate(args: argparse.Namespace) -> int:
    try:
        global_dims, speakers, turns = session.parse_script(Path(args.script).read_bytes())
    except wire.ParseError as e:
        _diag_parse_error(args.script, e)
        return EXIT_INPUT
    state = session.open_session(global_dims, speakers, session_id="sim")
    outputs: list[tuple[Path, bytes]] = []
    plan_lines: list[str] = []
    out = Path(args.out)
    for i, turn in enumerate(turns, start=1):
        _plan, render_request, acoustic, state = session.submit_turn(state, turn)
        outputs.append((out / f"turn{i:04d}.gst",
                        wire.serialize_canonical(render_request.document)))
        plan_lines.append(session.acoustic_plan_text(acoustic))
    outputs.append((out / "plan.txt", "".join(plan_lines).encode("utf-8")))
    for path, data in outputs:
        _write_atomic(path, data)
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    docs = []
    for path in args.docs:
        try:
            docs.append(wire.parse(Path(path).read_bytes()))
        except wire.ParseError as e:
            _diag_parse_error(path, e)
            return EXIT_INPUT
    plans = []
    for path in args.plans:
        try:
            plans.append(dropout.parse_plan(Path(path).read_bytes()))
        except wire.ParseError as e:
            _diag_parse_error(path, e)
            return EXIT_INPUT
    rates = dropout.mask_stats(plans, docs)
    data = emit_report(rates, args.format)
    if args.out:
        _write_atomic(Path(args.out), data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gst",
        description="Hierarchical speech-annotation toolkit: validate, "
                    "canonicalize, partition, mask, label, simulate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check documents against the schema")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("canonicalize", help="normalize to canonical bytes")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_canonicalize)

    p = sub.add_parser("partition", help="split into instruct/think views")
    p.add_argument("file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("merge", help="merge instruct/think views back into a document")
    p.add_argument("instruct")
    p.add_argument("think")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("dropout", help="apply seeded dimension dropout")
    p.add_argument("file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="dropout config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_dropout)

    p_pipeline = sub.add_parser("pipeline", help="corpus pipeline commands")
    pipe_sub = p_pipeline.add_subparsers(dest="pipeline_command", required=True)
    p = pipe_sub.add_parser("run", help="run labeling vs filter-baseline retention")
    p.add_argument("--manifest", help="signal manifest file")
    p.add_argument("--synthetic", type=int, help="generate N synthetic records instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", help="filter policy file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("wire", "human"), default="human")
    p.set_defaults(func=_cmd_pipeline_run)

    p_session = sub.add_parser("session", help="agent session commands")
    sess_sub = p_session.add_subparsers(dest="session_command", required=True)
    p = sess_sub.add_parser("simulate", help="run a scripted session")
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_session_simulate)

    p = sub.add_parser("stats", help="empirical mask rates for plans against documents")
    p.add_argument("--docs", nargs="+", required=True)
    p.add_argument("--plans", nargs="+", required=True)
    p.add_argument("--format", choices=("wire", "human"), default="human")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidDocumentError as e:
        for v in e.report:
            _diag(f"{v.code} {v.path} {v.message}")
        return EXIT_INPUT
    except wire.ParseError as e:
        _diag_parse_error("input", e)
        return EXIT_INPUT
    except FileNotFoundError as e:
        _diag(f"usage {e.filename} no such file")
        return EXIT_USAGE
    except GstError as e:
        _diag(f"{type(e).__name__} - {e}")
        return EXIT_INPUT
    except Exception as e:  # pragma: no cover - defensive
        _diag(f"internal error: {type(e).__name__}: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
