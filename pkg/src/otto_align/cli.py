"""Command-line interface.

Subcommands::

    otto-align align     records.jsonl -> Pharaoh alignment lines
    otto-align detect    records.jsonl -> per-record score JSON lines
    otto-align eval-aer  predicted + gold alignments -> AER report
    otto-align eval-auc  score file + label file -> ROC AUC report
    otto-align inspect   pretty-print one record's geometry, plan, alignment

Every flag has a config-file equivalent (JSON object keyed by the flag name
with dashes replaced by underscores); an explicit flag wins over the config
file, which wins over the built-in default. ``OTTO_ALIGN_JOBS`` supplies the
parallelism degree when ``--jobs`` is absent. Output order always matches
input order, regardless of the parallelism degree.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Iterable, Iterator, TextIO

import numpy as np

from .aligners import AlignerChoice, align_record, ottawa_align, parse_pharaoh, to_pharaoh
from .detection import sentence_scores
from .embedding_io import parse_record_line
from .errors import JoinMismatch, OttoAlignError, RecordError
from .evaluation import (
    LabeledScore,
    corpus_aer,
    read_gold_file,
    roc_auc_binary,
    roc_auc_multiclass,
)
from .ot_solvers import SolverConfig

HARD_DEFAULTS: dict[str, Any] = {
    "strategy": "ottawa",
    "epsilon": 0.05,
    "max_iters": 2000,
    "tol": 1e-8,
    "pot_mass": 0.5,
    "pot_tau": 0.05,
    "null_distance": "median",
    "paper_literal_eq78": False,
    "normalize_before_pool": False,
    "emit_null": False,
    "strict": False,
    "deterministic": False,
    "jobs": None,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for a corpus run."""

    strategy: str
    solver: SolverConfig
    pot_mass: float
    pot_tau: float
    null_distance: str
    paper_literal_eq78: bool
    normalize_before_pool: bool
    emit_null: bool
    strict: bool
    jobs: int

    def aligner_choice(self) -> AlignerChoice:
        return AlignerChoice(strategy=self.strategy, solver=self.solver,
                             pot_mass=self.pot_mass, pot_tau=self.pot_tau,
                             null_distance_mode=self.null_distance)


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(data) - set(HARD_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_cfg = _load_config_file(getattr(args, "config", None))

    def pick(key: str) -> Any:
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in file_cfg:
            return file_cfg[key]
        return HARD_DEFAULTS[key]

    jobs = pick("jobs")
    if jobs is None:
        jobs = int(os.environ.get("OTTO_ALIGN_JOBS", "1"))
    jobs = max(1, int(jobs))
    if pick("deterministic"):
        jobs = 1  # byte-stable output: keep everything on one worker
    solver = SolverConfig(epsilon=float(pick("epsilon")),
                          max_iterations=int(pick("max_iters")),
                          tolerance=float(pick("tol")))
    return RunConfig(strategy=str(pick("strategy")), solver=solver,
                     pot_mass=float(pick("pot_mass")), pot_tau=float(pick("pot_tau")),
                     null_distance=str(pick("null_distance")),
                     paper_literal_eq78=bool(pick("paper_literal_eq78")),
                     normalize_before_pool=bool(pick("normalize_before_pool")),
                     emit_null=bool(pick("emit_null")), strict=bool(pick("strict")),
                     jobs=jobs)


# ---------------------------------------------------------------------------
# Record-stream processing
# ---------------------------------------------------------------------------

# A worker returns ("ok", pair_id, payload, warnings) or ("err", pair_id, message, ()).
WorkResult = tuple[str, str, str, tuple[str, ...]]


def _align_worker(task: tuple[int, str], config: RunConfig) -> WorkResult:
    lineno, raw = task
    try:
        record = parse_record_line(raw, line=lineno,
                                   normalize_before_pool=config.normalize_before_pool)
        alignment = align_record(record, config.aligner_choice())
        return ("ok", record.pair_id, to_pharaoh(alignment, emit_null=config.emit_null),
                alignment.warnings)
    except Exception as exc:  # per-record isolation: one bad pair must not kill the run
        pair_id = getattr(exc, "pair_id", None) or f"<line {lineno}>"
        return ("err", pair_id, f"{type(exc).__name__}: {exc}", ())


def _detect_worker(task: tuple[int, str], config: RunConfig) -> WorkResult:
    lineno, raw = task
    try:
        record = parse_record_line(raw, line=lineno,
                                   normalize_before_pool=config.normalize_before_pool)
        result = ottawa_align(record, config.aligner_choice())
        scores = sentence_scores(result.alignment, result.plan_rev, result.plan_fwd,
                                 paper_literal_eq78=config.paper_literal_eq78)
        payload = {"pair_id": record.pair_id}
        payload.update(scores.to_json_dict())
        payload["solver_warnings"] = list(result.alignment.warnings)
        return ("ok", record.pair_id, json.dumps(payload, ensure_ascii=False),
                result.alignment.warnings)
    except Exception as exc:
        pair_id = getattr(exc, "pair_id", None) or f"<line {lineno}>"
        return ("err", pair_id, f"{type(exc).__name__}: {exc}", ())


def _iter_raw(path: str) -> Iterator[tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if raw.strip():
                yield lineno, raw


def _process_stream(input_path: str, worker: Callable[[tuple[int, str]], WorkResult],
                    jobs: int, strict: bool, sink: TextIO) -> int:
    failures = 0
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results: Iterable[WorkResult] = executor.map(worker, _iter_raw(input_path),
                                                         chunksize=8)
            code = _drain(results, strict, sink)
    else:
        code = _drain(map(worker, _iter_raw(input_path)), strict, sink)
    return code


def _drain(results: Iterable[WorkResult], strict: bool, sink: TextIO) -> int:
    failures = 0
    for status, pair_id, payload, warnings in results:
        if status == "ok":
            sink.write(payload + "\n")
            for note in warnings:
                print(f"warning: {pair_id}: {note}", file=sys.stderr)
        else:
            failures += 1
            print(f"error: {pair_id}: {payload}", file=sys.stderr)
            if strict:
                print("aborting (--strict)", file=sys.stderr)
                return 2
    if failures:
        print(f"{failures} record(s) failed", file=sys.stderr)
        return 2
    return 0


def _open_sink(path: str | None) -> TextIO:
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def cmd_align(args: argparse.Namespace) -> int:
    config = _resolve(args)
    sink = _open_sink(args.output)
    try:
        return _process_stream(args.input, partial(_align_worker, config=config),
                               config.jobs, config.strict, sink)
    finally:
        if sink is not sys.stdout:
            sink.close()


def cmd_detect(args: argparse.Namespace) -> int:
    config = _resolve(args)
    sink = _open_sink(args.output)
    try:
        return _process_stream(args.input, partial(_detect_worker, config=config),
                               config.jobs, config.strict, sink)
    finally:
        if sink is not sys.stdout:
            sink.close()


# ---------------------------------------------------------------------------
# Evaluation commands
# ---------------------------------------------------------------------------

def _emit_report(report: dict[str, Any], fmt: str, sink: TextIO) -> None:
    if fmt == "json":
        sink.write(json.dumps(report, ensure_ascii=False) + "\n")
        return
    width = max(len(k) for k in report)
    for key, value in report.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        sink.write(f"{key.ljust(width)}  {value}\n")


def cmd_eval_aer(args: argparse.Namespace) -> int:
    with open(args.pred, "r", encoding="utf-8") as handle:
        predicted = [parse_pharaoh(line) for line in handle]
    gold = read_gold_file(args.gold)
    if len(predicted) != len(gold):
        raise JoinMismatch(
            f"line counts differ: {len(predicted)} predicted vs {len(gold)} gold")
    counts = corpus_aer(zip(predicted, gold))
    report = {
        "metric": "aer",
        "aer": counts.value,
        "sentences": len(gold),
        "predicted_pairs": counts.predicted,
        "sure_pairs": counts.sure,
        "matched_sure": counts.matched_sure,
        "matched_possible": counts.matched_possible,
    }
    sink = _open_sink(args.output)
    try:
        _emit_report(report, args.format, sink)
    finally:
        if sink is not sys.stdout:
            sink.close()
    return 0


def _read_jsonl(path: str) -> list[dict[str, Any]]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                rows.append(json.loads(raw))
            except json.JSONDecodeError as exc:
                raise RecordError(f"invalid JSON: {exc}", line=lineno) from None
    return rows


def _label_of(row: dict[str, Any], field: str) -> Any:
    if "labels" in row and isinstance(row["labels"], dict) and field in row["labels"]:
        return row["labels"][field]
    return row.get(field)


def cmd_eval_auc(args: argparse.Namespace) -> int:
    score_rows = _read_jsonl(args.scores)
    label_rows = _read_jsonl(args.labels)
    label_field = args.label_field or args.field
    labels_by_id = {str(r["pair_id"]): _label_of(r, label_field) for r in label_rows}

    samples = []
    missing = []
    for row in score_rows:
        pair_id = str(row["pair_id"])
        label = labels_by_id.get(pair_id)
        if label is None:
            missing.append(pair_id)
            continue
        samples.append(LabeledScore(score=float(row[args.field]), label=int(label)))
    if missing:
        raise JoinMismatch(f"no label for pair(s): {', '.join(missing[:10])}"
                           + ("..." if len(missing) > 10 else ""), missing=missing)

    report: dict[str, Any] = {"metric": "roc_auc", "field": args.field,
                              "mode": args.mode, "samples": len(samples)}
    if args.mode == "binary":
        positive = {int(x) for x in args.positive_classes.split(",")}
        report["auc"] = roc_auc_binary(samples, positive)
        report["positive_classes"] = sorted(positive)
    else:
        result = roc_auc_multiclass(samples)
        report["auc"] = result.value
        report["splits_used"] = result.splits_used
        report["approximate"] = result.approximate
    sink = _open_sink(args.output)
    try:
        _emit_report(report, args.format, sink)
    finally:
        if sink is not sys.stdout:
            sink.close()
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    config = _resolve(args)
    target = None
    for index, (lineno, raw) in enumerate(_iter_raw(args.input)):
        record = parse_record_line(raw, line=lineno,
                                   normalize_before_pool=config.normalize_before_pool)
        if (args.pair_id is not None and record.pair_id == args.pair_id) or \
                (args.pair_id is None and index == args.index):
            target = record
            break
    if target is None:
        wanted = args.pair_id if args.pair_id is not None else f"index {args.index}"
        print(f"record not found: {wanted}", file=sys.stderr)
        return 2

    from .geometry import cost_matrix  # local import keeps CLI startup light

    fmt = partial(np.array2string, precision=4, suppress_small=True, max_line_width=120)
    out = sys.stdout
    print(f"pair_id: {target.pair_id}", file=out)
    print(f"src ({target.m} words): {' '.join(target.src_words)}", file=out)
    print(f"tgt ({target.n} words): {' '.join(target.tgt_words)}", file=out)
    C = cost_matrix(target.src_emb, target.tgt_emb)
    print(f"cost matrix:\n{fmt(C)}", file=out)
    result = ottawa_align(target, config.aligner_choice())
    for name, geom in (("reverse", result.geometry_rev), ("forward", result.geometry_fwd)):
        print(f"null geometry ({name}): d_min={geom.d_min:.4f} "
              f"c_median={geom.c_median:.4f} d={geom.d:.4f} fallback={geom.fallback_used}",
              file=out)
    print(f"reverse plan ((m+1) x n):\n{fmt(result.plan_rev.values)}", file=out)
    print(f"forward plan (m x (n+1)):\n{fmt(result.plan_fwd.values)}", file=out)
    print(f"alignment: {to_pharaoh(result.alignment, emit_null=True) or '(empty)'}", file=out)
    scores = sentence_scores(result.alignment, result.plan_rev, result.plan_fwd,
                             paper_literal_eq78=config.paper_literal_eq78)
    print(f"hallucination={scores.hallucination:.4f} omission={scores.omission:.4f} "
          f"(r_src={scores.r_src:.4f} r_tgt={scores.r_tgt:.4f} "
          f"c_rev={scores.c_rev:.4f} c_fwd={scores.c_fwd:.4f})", file=out)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, help="entropic regularization strength")
    parser.add_argument("--max-iters", dest="max_iters", type=int,
                        help="Sinkhorn iteration cap")
    parser.add_argument("--tol", type=float, help="L1 marginal residual tolerance")
    parser.add_argument("--pot-mass", dest="pot_mass", type=float,
                        help="partial-OT transported mass fraction")
    parser.add_argument("--pot-tau", dest="pot_tau", type=float,
                        help="partial-OT binarization threshold fraction")
    parser.add_argument("--null-distance", dest="null_distance",
                        choices=["median", "mean"],
                        help="statistic capping the null distance from below")
    parser.add_argument("--normalize-before-pool", dest="normalize_before_pool",
                        action=argparse.BooleanOptionalAction,
                        help="L2-normalize token rows before mean pooling")
    parser.add_argument("--strict", action=argparse.BooleanOptionalAction,
                        help="abort on the first failed record")
    parser.add_argument("--jobs", type=int, help="parallel workers (default: "
                        "OTTO_ALIGN_JOBS or 1)")
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                        help="force single-worker, byte-stable output")
    parser.add_argument("--config", help="JSON config file; flags win on conflict")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otto-align",
                                     description="Null-aware OT word alignment and "
                                                 "hallucination/omission scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="align records, one Pharaoh line each")
    p_align.add_argument("-i", "--input", required=True)
    p_align.add_argument("-o", "--output")
    p_align.add_argument("--strategy", choices=["greedy", "assignment", "ot", "pot", "ottawa"])
    p_align.add_argument("--emit-null", dest="emit_null",
                         action=argparse.BooleanOptionalAction,
                         help="append null-assignment extension tokens")
    _add_solver_flags(p_align)
    p_align.set_defaults(func=cmd_align)

    p_detect = sub.add_parser("detect", help="hallucination/omission scores, one JSON line each")
    p_detect.add_argument("-i", "--input", required=True)
    p_detect.add_argument("-o", "--output")
    p_detect.add_argument("--paper-literal-eq78", dest="paper_literal_eq78",
                          action=argparse.BooleanOptionalAction,
                          help="swap which side's unaligned ratio feeds each score")
    _add_solver_flags(p_detect)
    p_detect.set_defaults(func=cmd_detect)

    p_aer = sub.add_parser("eval-aer", help="alignment error rate vs a gold file")
    p_aer.add_argument("--pred", required=True, help="predicted Pharaoh lines")
    p_aer.add_argument("--gold", required=True, help="gold lines with i-j (sure) and i?j (possible)")
    p_aer.add_argument("-o", "--output")
    p_aer.add_argument("--format", choices=["json", "text"], default="json")
    p_aer.set_defaults(func=cmd_eval_aer)

    p_auc = sub.add_parser("eval-auc", help="ROC AUC of detection scores vs labels")
    p_auc.add_argument("--scores", required=True, help="JSONL from `detect`")
    p_auc.add_argument("--labels", required=True,
                       help="JSONL with pair_id and ordinal labels (0..3)")
    p_auc.add_argument("--field", default="hallucination",
                       choices=["hallucination", "omission"])
    p_auc.add_argument("--label-field", dest="label_field",
                       help="label key if it differs from --field")
    p_auc.add_argument("--mode", choices=["binary", "multiclass"], default="binary")
    p_auc.add_argument("--positive-classes", dest="positive_classes", default="1,2,3",
                       help="labels treated as positive in binary mode")
    p_auc.add_argument("-o", "--output")
    p_auc.add_argument("--format", choices=["json", "text"], default="json")
    p_auc.set_defaults(func=cmd_eval_auc)

    p_inspect = sub.add_parser("inspect", help="pretty-print one record end to end")
    p_inspect.add_argument("-i", "--input", required=True)
    p_inspect.add_argument("--index", type=int, default=0, help="0-based record index")
    p_inspect.add_argument("--pair-id", dest="pair_id")
    _add_solver_flags(p_inspect)
    p_inspect.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OttoAlignError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
