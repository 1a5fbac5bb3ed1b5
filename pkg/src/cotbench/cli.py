"""Command-line interface: generate | validate | analyze | theory | stats.

Exit codes: 0 success, 1 task failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import analysis, dataset, tasks, trace
from .core import ContractViolation, RangeError
from .tasks import ERVC, LIS, MPC

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


def _parse_levels(task_id: str, text: str, modulus: int):
    out = []
    for part in text.split(","):
        try:
            tag, count_text = part.split(":")
            count = int(count_text)
        except ValueError:
            raise UsageError(f"bad level spec {part!r}; expected n:count or nxm:count")
        try:
            level = dataset.parse_level(task_id, tag, modulus=modulus)
        except (ValueError, ContractViolation) as exc:
            raise UsageError(f"bad level {tag!r}: {exc}")
        out.append((level, count))
    return tuple(out)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_generate(args) -> int:
    spec = dataset.DatasetSpec(
        task_id=args.task,
        train_levels=_parse_levels(args.task, args.train, args.modulus),
        eval_levels=_parse_levels(args.task, args.eval, args.modulus),
        cot_rate=args.cot,
        recap=not args.no_recap,
        seed=args.seed,
        dedup=not args.no_dedup,
    )
    try:
        records, manifest = dataset.build_dataset(spec, jobs=args.jobs)
        dataset.write_jsonl(records, manifest, args.out)
    except (dataset.DedupExhausted, ContractViolation, RangeError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {len(records)} records to {args.out}")
    for split in ("train", "eval"):
        for tag, count in sorted(manifest.counts[split].items()):
            print(f"  {split} level {tag}: {count}")
    print(f"  vocab size: {manifest.vocab_size}")
    return EXIT_OK


def _validate_record(task_id: str, record: dataset.DatasetRecord):
    parsed = trace.parse_trace(task_id, record.question + record.target)
    if task_id == ERVC:
        return trace.validate_trace(None, record.question, parsed)
    level = dataset.parse_level(task_id, record.level)
    return trace.validate_trace(tasks.task_spec(task_id, level),
                                record.question, parsed)


def cmd_validate(args) -> int:
    src = Path(args.dir)
    if not (src / "manifest.json").exists():
        print(f"{src}: not a dataset directory", file=sys.stderr)
        return EXIT_USAGE
    try:
        records, manifest = dataset.read_jsonl(src)
    except dataset.DatasetReadError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAILURE
    for record in records:
        try:
            report = _validate_record(manifest.task_id, record)
        except trace.TraceParseError as exc:
            print(f"invalid record {record.id}: parse error: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        if not report.valid:
            print(f"invalid record {record.id}: {report.error_kind} at step "
                  f"{report.first_error_step} (expected {report.expected!r}, "
                  f"got {report.actual!r})", file=sys.stderr)
            return EXIT_FAILURE
    print(f"all {len(records)} records valid")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        records, manifest = dataset.read_jsonl(args.dir)
    except dataset.DatasetReadError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    train = [r for r in records if r.split == "train"]
    evals = [r for r in records if r.split == "eval"]
    try:
        cover = analysis.prefix_coverage(train, evals, manifest.task_id)
        kl = analysis.estimate_kl(train, evals, manifest.task_id,
                                  smoothing=args.smoothing)
    except (ContractViolation, RangeError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(args.out)
    _write_csv(out / "coverage.csv",
               ["m2", "m3", "k", "n3", "p_cover", "matched_prefixes"],
               [[cover.m2, cover.m3, cover.k, cover.n3,
                 f"{cover.p_cover.numerator}/{cover.p_cover.denominator}",
                 cover.matched_prefixes]])
    _write_csv(out / "kl.csv",
               ["kl_qa", "kl_qcot", "bound", "smoothing"],
               [[f"{kl.kl_qa:.12g}", f"{kl.kl_qcot:.12g}",
                 f"{kl.bound:.12g}", f"{kl.smoothing:.12g}"]])
    print(f"p_cover = {cover.p_cover} ({float(cover.p_cover):.6g}); "
          f"matched {cover.matched_prefixes}/{cover.m3}")
    print(f"kl_qa = {kl.kl_qa:.6g}, kl_qcot = {kl.kl_qcot:.6g}, "
          f"bound = {kl.bound:.6g}")
    return EXIT_OK


def _parse_l_range(text: str) -> List[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def cmd_theory(args) -> int:
    out = Path(args.out)
    if args.which == "drop":
        ls = _parse_l_range(args.l)
        rows = [[l, f"{analysis.drop_accuracy(args.eps, l):.12g}"] for l in ls]
        _write_csv(out / "drop.csv", ["l", "accuracy"], rows)
        print(f"wrote {len(rows)} rows to {out / 'drop.csv'}")
    elif args.which == "attention":
        profile = analysis.attention_decay_profile(
            args.d_model, args.d_max, args.trials,
            random.Random(args.seed), epsilon=args.eps)
        tau = "" if profile.tau is None else profile.tau
        rows = [[d, f"{s:.12g}", tau, f"{profile.epsilon:.12g}"]
                for d, s in enumerate(profile.samples)]
        _write_csv(out / "attention.csv",
                   ["distance", "max_abs_score", "tau", "epsilon"], rows)
        print(f"tau = {profile.tau if profile.tau is not None else 'not found'} "
              f"at epsilon {profile.epsilon}")
    elif args.which == "gradient":
        report = analysis.gradient_alignment_sim(
            args.dim, args.n, args.sigma, args.trials, random.Random(args.seed))
        _write_csv(out / "gradient.csv",
                   ["trials", "sample_size", "noise_sigma",
                    "mean_alignment_relevant", "mean_alignment_augmented",
                    "gap", "ci_low", "ci_high"],
                   [[report.trials, report.sample_size, report.noise_sigma,
                     f"{report.mean_alignment_relevant:.12g}",
                     f"{report.mean_alignment_augmented:.12g}",
                     f"{report.gap:.12g}",
                     "" if report.ci_low is None else f"{report.ci_low:.12g}",
                     "" if report.ci_high is None else f"{report.ci_high:.12g}"]])
        ci = ("undefined" if report.ci_low is None
              else f"[{report.ci_low:.6g}, {report.ci_high:.6g}]")
        print(f"gap = {report.gap:.6g}, 95% CI {ci}")
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        records, manifest = dataset.read_jsonl(args.dir)
    except dataset.DatasetReadError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    print(f"task: {manifest.task_id}  cot_rate: {manifest.cot_rate}  "
          f"recap: {manifest.recap}  seed: {manifest.seed}")
    for split in ("train", "eval"):
        subset = [r for r in records if r.split == split]
        if not subset:
            continue
        lengths = [len(r.question) + len(r.target) for r in subset]
        blocks = sum(len(r.retained_mask) for r in subset)
        kept = sum(sum(r.retained_mask) for r in subset)
        frac = kept / blocks if blocks else float("nan")
        print(f"{split}: {len(subset)} records, token length "
              f"min/mean/max = {min(lengths)}/"
              f"{sum(lengths) / len(lengths):.1f}/{max(lengths)}, "
              f"retained fraction = {frac:.3f}")
        for tag, count in sorted(manifest.counts[split].items()):
            print(f"  level {tag}: {count}")
    print(f"vocab size: {manifest.vocab_size}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotbench",
        description="Generate, validate, and analyze compound-reasoning "
                    "trace datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset directory")
    gen.add_argument("--task", required=True, choices=[LIS, MPC, ERVC])
    gen.add_argument("--train", required=True,
                     help="comma-separated level:count (nxm:count for ervc)")
    gen.add_argument("--eval", required=True)
    gen.add_argument("--cot", type=float, default=1.0,
                     help="per-step retention rate in [0,1]")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--modulus", type=int, default=100)
    gen.add_argument("--no-recap", action="store_true")
    gen.add_argument("--no-dedup", action="store_true")
    gen.add_argument("--jobs", type=int, default=1)
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="re-derive and check every record")
    val.add_argument("dir")
    val.set_defaults(func=cmd_validate)

    ana = sub.add_parser("analyze", help="coverage and KL reports")
    ana.add_argument("dir")
    ana.add_argument("--out", required=True)
    ana.add_argument("--smoothing", type=float, default=1e-6)
    ana.set_defaults(func=cmd_analyze)

    theory = sub.add_parser("theory", help="closed-form and simulated numerics")
    theory_sub = theory.add_subparsers(dest="which", required=True)
    drop = theory_sub.add_parser("drop")
    drop.add_argument("--eps", type=float, required=True)
    drop.add_argument("--l", required=True, help="single value or lo..hi")
    drop.add_argument("--out", required=True)
    att = theory_sub.add_parser("attention")
    att.add_argument("--d-model", type=int, required=True)
    att.add_argument("--d-max", type=int, default=2000)
    att.add_argument("--trials", type=int, default=50)
    att.add_argument("--eps", type=float, default=1e-3)
    att.add_argument("--seed", type=int, default=0)
    att.add_argument("--out", required=True)
    grad = theory_sub.add_parser("gradient")
    grad.add_argument("--dim", type=int, required=True)
    grad.add_argument("--n", type=int, required=True)
    grad.add_argument("--sigma", type=float, required=True)
    grad.add_argument("--trials", type=int, required=True)
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--out", required=True)
    theory.set_defaults(func=cmd_theory)

    stats = sub.add_parser("stats", help="summarize a dataset directory")
    stats.add_argument("dir")
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except RangeError as exc:
        print(f"bad parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
