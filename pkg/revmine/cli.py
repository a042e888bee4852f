#!/usr/bin/env python3
"""
revmine CLI - app-review feature extraction toolkit

Commands:
- stats / sample / synth       inspect, sample and generate corpora
- simulate / sweep             annotation-guideline simulation and length cut-off sweeps
- train / tag / eval           CRF training, tagging and scoring
- experiment / agreement       training procedures and inter-annotator agreement
- settings / history           run defaults and recent runs

Primary output goes to stdout (or --out); progress, warnings and errors go
to stderr. Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import textwrap
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from .corpus import (
    FORMATS,
    STRATA,
    Corpus,
    compute_stats,
    count_untagged,
    load_corpus,
    save_corpus,
    stratified_sample,
    tag_corpus,
)
from .errors import ConfigError, DataError, RevmineError
from .evaluation import MODE_KEYS, dice_agreement, evaluate_all
from .experiments import ExperimentConfig, Procedure, augment_training, emit_sweep, render_report, run_experiment
from .features import EmbeddingTable, FeatureTemplateConfig, load_embeddings
from .guidelines import (
    PipelineConfig,
    length_cutoff_sweep,
    parse_cutoffs,
    parse_steps,
    run_pipeline,
)
from .importers import load_external
from .logs import JSONLogger, is_debug, print_error, print_header, print_info, print_success, print_warning, set_level
from .reports import TABLE_FORMATS, removal_table, report_payload, result_table, stats_table
from .settings import APP_NAME, VERSION, SettingsManager, default_steps, parse_value
from .synthetic import SyntheticConfig, generate_corpus, generate_external
from .tagger import PREDICTED_ANNOTATOR, TrainConfig, load_model, predict_spans, save_model, train

OUTPUT_FORMATS = TABLE_FORMATS + ("json",)


class RevmineArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print_error(f"{self.prog}: {message}")
        raise SystemExit(1)


# ============================================================================
# HELPERS
# ============================================================================

def _emit(text: str, out: Optional[Path]) -> None:
    """Write primary output to ``out`` or stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print_success(f"Wrote {out}")


def _load(path: Path, format: Optional[str] = None, tag_missing: bool = False) -> Corpus:
    corpus = load_corpus(path, format)
    for warning in corpus.warnings:
        print_warning(warning)
    if tag_missing and count_untagged(corpus):
        print_info(f"{path}: filling {count_untagged(corpus)} missing POS tags with the fallback tagger")
        corpus = tag_corpus(corpus)
    return corpus


def _load_embeddings(args) -> Optional[EmbeddingTable]:
    if not getattr(args, "embeddings", None):
        return None
    table = load_embeddings(args.embeddings)
    for warning in table.warnings:
        print_warning(warning)
    return table


def _annotator(args, settings: SettingsManager) -> Optional[str]:
    return getattr(args, "annotator", None) or settings.get("run.annotator")


def _feature_config(args, settings: SettingsManager, embeddings: Optional[EmbeddingTable]) -> FeatureTemplateConfig:
    values = dict(settings.get("features", {}))
    if getattr(args, "window", None) is not None:
        values["window"] = args.window
    if embeddings is not None:
        values["use_embeddings"] = True
        values["embedding_dim"] = embeddings.dim
    else:
        values["use_embeddings"] = False
        values["embedding_dim"] = 0
    return FeatureTemplateConfig.from_dict(values)


def _train_config(args, settings: SettingsManager) -> TrainConfig:
    return TrainConfig(
        l2_lambda=args.l2 if getattr(args, "l2", None) is not None else settings.get("training.l2_lambda", 1.0),
        max_iterations=(args.max_iter if getattr(args, "max_iter", None) is not None
                        else settings.get("training.max_iterations", 200)),
        convergence_tol=settings.get("training.convergence_tol", 1e-5),
        seed=args.seed,
    )


def _experiment_config(args, settings: SettingsManager, procedure: str,
                       externals: Sequence[Corpus] = ()) -> ExperimentConfig:
    embeddings = _load_embeddings(args)
    return ExperimentConfig(
        procedure=procedure,
        k_folds=args.k if args.k is not None else settings.get("experiments.kFolds", 10),
        seed=args.seed,
        train=_train_config(args, settings),
        features=_feature_config(args, settings, embeddings),
        external_corpora=tuple(externals) if Procedure(procedure).uses_external else (),
        annotator=_annotator(args, settings),
        jobs=args.jobs if args.jobs is not None else settings.get("run.jobs", 1),
        language=args.language,
        embeddings=embeddings,
    )


def _eval_table(reports: Dict[str, Any], format: str) -> str:
    per_category = {
        category: {mode: reports[mode].per_category[category] for mode in MODE_KEYS}
        for category in reports[MODE_KEYS[0]].per_category
    }
    average = {mode: reports[mode].macro or reports[mode] for mode in MODE_KEYS}
    return result_table(per_category, average, format)


# ============================================================================
# COMMAND HANDLERS
# ============================================================================

def cmd_stats(args, settings: SettingsManager) -> int:
    """Handle 'stats' command."""
    corpus = _load(args.input, args.input_format)
    stats = compute_stats(corpus, _annotator(args, settings))
    if args.format == "json":
        _emit(json.dumps(stats.to_dict(), indent=2) + "\n", args.out)
    else:
        _emit(stats_table(stats, args.per_category, args.format), args.out)
    return 0


def cmd_simulate(args, settings: SettingsManager) -> int:
    """Handle 'simulate' command."""
    config = PipelineConfig(
        steps=parse_steps(args.steps if args.steps is not None else default_steps()),
        max_len=args.max_len if args.max_len is not None else settings.get("guidelines.maxLen", 3),
        self_ref_lexicon=frozenset(w.strip() for w in args.lexicon.split(",") if w.strip()) if args.lexicon else None,
        drop_empty_reviews_after_each_step=(
            False if args.keep_empty else settings.get("guidelines.dropEmptyReviewsAfterEachStep", True)
        ),
        enforce_order=not args.any_order,
        annotator=_annotator(args, settings),
    )
    corpus = _load(args.input, args.input_format, args.tag_missing)
    print_header(f"Simulating guidelines: {' -> '.join(s.value for s in config.steps) or 'no steps'}")
    result, reports = run_pipeline(corpus, config)
    if args.out:
        save_corpus(result, args.out, args.output_format)
        print_success(f"Wrote {args.out} ({len(result)} reviews)")
    if args.report:
        suffix = args.report.suffix.lower()
        if suffix == ".json":
            text = json.dumps({"config": config.to_dict(), "steps": [r.to_dict() for r in reports]}, indent=2) + "\n"
        else:
            text = removal_table(reports, "csv" if suffix == ".csv" else "markdown")
        args.report.parent.mkdir(parents=True, exist_ok=True)
        args.report.write_text(text, encoding="utf-8")
        print_success(f"Wrote {args.report}")
    sys.stdout.write(removal_table(reports, args.format))
    return 0


def cmd_train(args, settings: SettingsManager) -> int:
    """Handle 'train' command."""
    corpus = _load(args.input, args.input_format, args.tag_missing)
    annotator = corpus.resolve_annotator(_annotator(args, settings))
    embeddings = _load_embeddings(args)
    externals = [load_external(path, language=corpus.language) for path in args.external or ()]
    pairs = augment_training(corpus, externals, annotator)
    print_header(f"Training CRF on {len(pairs)} sentences")
    model = train(pairs, _feature_config(args, settings, embeddings), embeddings, _train_config(args, settings))
    for warning in model.train_meta.get("warnings", []):
        print_warning(warning)
    save_model(model, args.model)
    print_success(f"Wrote {args.model}")
    summary = {k: model.train_meta.get(k) for k in ("n_sequences", "n_features", "iterations", "final_objective", "converged")}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def cmd_tag(args, settings: SettingsManager) -> int:
    """Handle 'tag' command."""
    model = load_model(args.model)
    corpus = _load(args.input, args.input_format, args.tag_missing)
    spans = predict_spans(model, corpus, _load_embeddings(args))
    tagged = corpus.with_annotations(spans, keep_annotators=False).replace(
        annotator_ids=frozenset({PREDICTED_ANNOTATOR})
    )
    save_corpus(tagged, args.out, args.output_format)
    print_success(f"Wrote {args.out}")
    sys.stdout.write(f"reviews\t{len(tagged)}\nsentences\t{tagged.n_sentences}\npredicted_spans\t{len(spans)}\n")
    return 0


def cmd_eval(args, settings: SettingsManager) -> int:
    """Handle 'eval' command."""
    gold_corpus = _load(args.gold, args.input_format)
    pred_corpus = _load(args.pred, args.input_format)
    gold_annotator = gold_corpus.resolve_annotator(args.gold_annotator or _annotator(args, settings))
    pred_annotator = pred_corpus.resolve_annotator(args.pred_annotator)
    # Words only: POS tags may have been filled in by --tag-missing.
    for review in pred_corpus.reviews:
        gold_words = None
        if gold_corpus.has_review(review.id):
            gold_words = [s.words for s in gold_corpus.review(review.id).sentences]
        if gold_words != [s.words for s in review.sentences]:
            raise DataError(f"Review {review.id!r} of {args.pred} does not match the gold corpus text")
    reports = evaluate_all(
        pred_corpus.spans_for(pred_annotator),
        gold_corpus.spans_for(gold_annotator),
        gold_corpus,
        args.language,
    )
    if args.format == "json":
        _emit(json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2) + "\n", args.out)
    else:
        _emit(_eval_table(reports, args.format), args.out)
    return 0


def cmd_experiment(args, settings: SettingsManager) -> int:
    """Handle 'experiment' command."""
    corpus = _load(args.input, args.input_format, args.tag_missing)
    procedures = args.procedure or ["ccv"]
    externals = [load_external(path, language=corpus.language) for path in args.external or ()]
    if any(Procedure(p).uses_external for p in procedures) and not externals:
        raise ConfigError("Procedures ccv-ext and scv-ext need --external")
    results = []
    for procedure in procedures:
        print_header(f"Experiment: {procedure}")
        results.append(run_experiment(corpus, _experiment_config(args, settings, procedure, externals)))
    if args.json_out:
        args.json_out.parent.mkdir(parents=True, exist_ok=True)
        args.json_out.write_text(json.dumps(report_payload(results), indent=2) + "\n", encoding="utf-8")
        print_success(f"Wrote {args.json_out}")
    _emit(render_report(results, args.format), args.out)
    return 0


def cmd_agreement(args, settings: SettingsManager) -> int:
    """Handle 'agreement' command."""
    corpus = _load(args.input, args.input_format)
    annotators = sorted(corpus.annotator_ids)
    first, second = args.first, args.second
    if first is None or second is None:
        if len(annotators) != 2:
            raise ConfigError(f"Name two annotators with --a/--b (corpus has: {', '.join(annotators) or 'none'})")
        first, second = annotators
    dice = dice_agreement(corpus.spans_for(first), corpus.spans_for(second))
    sys.stdout.write(f"annotators\t{first},{second}\ndice\t{dice:.3f}\n")
    return 0


def cmd_sample(args, settings: SettingsManager) -> int:
    """Handle 'sample' command."""
    pool = _load(args.input, args.input_format)
    sample = stratified_sample(pool, args.per_app, args.stratum, args.seed)
    save_corpus(sample, args.out, args.output_format)
    print_success(f"Wrote {args.out} ({len(sample)} reviews)")
    counts: Dict[tuple, int] = {}
    for review in sample.reviews:
        key = (review.app, getattr(review, args.stratum))
        counts[key] = counts.get(key, 0) + 1
    lines = [f"app\t{args.stratum}\treviews"] + [f"{app}\t{value}\t{n}" for (app, value), n in sorted(counts.items())]
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_sweep(args, settings: SettingsManager) -> int:
    """Handle 'sweep' command."""
    corpora = {}
    for path in args.inputs:
        corpora[path.stem] = _load(path, args.input_format, args.tag_missing)
    externals = [load_external(p, language=next(iter(corpora.values())).language) for p in args.external or ()]
    config = _experiment_config(args, settings, args.procedure, externals)
    sweep = length_cutoff_sweep(corpora, parse_cutoffs(args.cutoffs), config)
    if args.out:
        emit_sweep(sweep, args.out)
        print_success(f"Wrote {args.out}")
    sys.stdout.write(sweep.to_text(args.format))
    return 0


def cmd_synth(args, settings: SettingsManager) -> int:
    """Handle 'synth' command."""
    if args.external:
        corpus = generate_external(args.external, args.reviews, args.seed)
    else:
        synth_config = SyntheticConfig(
            categories=tuple(c.strip() for c in args.categories.split(",") if c.strip()),
            apps_per_category=args.apps,
            reviews_per_app=args.reviews,
            shared_fraction=args.shared,
            seed=args.seed,
        )
        corpus = generate_corpus(synth_config)
    save_corpus(corpus, args.out, args.output_format)
    print_success(f"Wrote {args.out}")
    sys.stdout.write(
        f"reviews\t{len(corpus)}\nsentences\t{corpus.n_sentences}\nspans\t{len(corpus.annotations)}\n"
        f"fingerprint\t{corpus.fingerprint()}\n"
    )
    return 0


def cmd_settings(args, settings: SettingsManager) -> int:
    """Handle 'settings' command."""
    if args.action == "show":
        if args.key:
            sys.stdout.write(f"{args.key}: {json.dumps(settings.get(args.key), indent=2)}\n")
        else:
            sys.stdout.write(json.dumps(settings.settings, indent=2) + "\n")
        return 0
    if not args.key or args.value is None:
        raise ConfigError("Please provide --key and --value")
    value = parse_value(args.value)
    settings.set(args.key, value)
    print_success(f"Set {args.key} = {value!r}")
    return 0


def cmd_history(args, settings: SettingsManager) -> int:
    """Handle 'history' command."""
    path = settings.history_path()
    if path is None:
        raise ConfigError("Run history is disabled (tracking.enabled is false)")
    for entry in JSONLogger(path).tail(args.limit):
        sys.stdout.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return 0


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""

    common = RevmineArgumentParser(add_help=False)
    common.add_argument("--settings", type=Path, help="Settings file (default settings/default.json)")
    common.add_argument("--seed", type=int, help="Random seed (default run.seed, 42)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug output on stderr")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only errors on stderr")

    corpus_opts = RevmineArgumentParser(add_help=False)
    corpus_opts.add_argument("--input-format", choices=FORMATS, help="Corpus format (default: by file suffix)")
    corpus_opts.add_argument("--output-format", choices=FORMATS, help="Output corpus format (default: by suffix)")
    corpus_opts.add_argument("--annotator", help="Annotator whose spans are used (default: the only one)")
    corpus_opts.add_argument("--tag-missing", action="store_true", help="Fill missing POS tags with the fallback tagger")

    model_opts = RevmineArgumentParser(add_help=False)
    model_opts.add_argument("--embeddings", type=Path, help="Word embeddings text file")
    model_opts.add_argument("--window", type=int, help="Context window for word/POS features")
    model_opts.add_argument("--l2", type=float, help="L2 regularization strength")
    model_opts.add_argument("--max-iter", type=int, help="Maximum L-BFGS iterations")

    run_opts = RevmineArgumentParser(add_help=False)
    run_opts.add_argument("--k", type=int, help="Number of folds (default experiments.kFolds)")
    run_opts.add_argument("--jobs", type=int, help="Folds trained concurrently")
    run_opts.add_argument("--external", type=Path, action="append", help="External corpus (SemEval XML, jsonl, conll)")
    run_opts.add_argument("--language", help="Stemming language for type evaluation")

    parser = RevmineArgumentParser(
        prog=APP_NAME,
        description=f"{APP_NAME} - app-review feature extraction toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=textwrap.dedent("""
        Examples:
          %(prog)s synth --out data/generated/synthetic.jsonl
          %(prog)s stats data/generated/synthetic.jsonl --per-category
          %(prog)s simulate corpus.jsonl --steps pre,self,noun,len --max-len 3 --out sim3.jsonl
          %(prog)s train sim3.jsonl --model model.json
          %(prog)s tag test.jsonl --model model.json --out predicted.jsonl
          %(prog)s eval --pred predicted.jsonl --gold test.jsonl
          %(prog)s experiment sim3.jsonl --procedure ccv --procedure scv --format markdown
          %(prog)s sweep sim2.jsonl --cutoffs 1,2,3,4,inf --out sweep.csv
        """),
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {VERSION}")

    subparsers = parser.add_subparsers(dest="command", required=True)

    # ---- stats ----
    stats_parser = subparsers.add_parser("stats", parents=[common, corpus_opts], help="Dataset statistics")
    stats_parser.add_argument("input", type=Path)
    stats_parser.add_argument("--per-category", action="store_true", help="One row per category plus Total")
    stats_parser.add_argument("--format", choices=OUTPUT_FORMATS, default="text")
    stats_parser.add_argument("--out", type=Path)

    # ---- simulate ----
    sim_parser = subparsers.add_parser("simulate", parents=[common, corpus_opts], help="Simulate guideline changes")
    sim_parser.add_argument("input", type=Path)
    sim_parser.add_argument("--steps", help="Comma-separated: pre,self,noun,len (default: _data/guidelines.yml)")
    sim_parser.add_argument("--max-len", type=int, help="Longest admissible feature (default guidelines.maxLen)")
    sim_parser.add_argument("--lexicon", help="Comma-separated self-reference words (app names are always added)")
    sim_parser.add_argument("--keep-empty", action="store_true", help="Keep reviews left without features")
    sim_parser.add_argument("--any-order", action="store_true", help="Allow steps out of the standard order")
    sim_parser.add_argument("--out", type=Path, help="Simulated corpus")
    sim_parser.add_argument("--report", type=Path, help="Removal report (.json, .csv or .md)")
    sim_parser.add_argument("--format", choices=TABLE_FORMATS, default="text")

    # ---- train ----
    train_parser = subparsers.add_parser("train", parents=[common, corpus_opts, model_opts], help="Train a CRF")
    train_parser.add_argument("input", type=Path)
    train_parser.add_argument("--model", type=Path, required=True, help="Output model file")
    train_parser.add_argument("--external", type=Path, action="append", help="Extra training corpus")

    # ---- tag ----
    tag_parser = subparsers.add_parser("tag", parents=[common, corpus_opts], help="Tag a corpus with a model")
    tag_parser.add_argument("input", type=Path)
    tag_parser.add_argument("--model", type=Path, required=True)
    tag_parser.add_argument("--embeddings", type=Path, help="Embeddings the model was trained with")
    tag_parser.add_argument("--out", type=Path, required=True)

    # ---- eval ----
    eval_parser = subparsers.add_parser("eval", parents=[common, corpus_opts], help="Score predictions against gold")
    eval_parser.add_argument("--pred", type=Path, required=True)
    eval_parser.add_argument("--gold", type=Path, required=True)
    eval_parser.add_argument("--pred-annotator", default=None, help="Default: the only annotator of --pred")
    eval_parser.add_argument("--gold-annotator", default=None, help="Default: --annotator or the only one")
    eval_parser.add_argument("--language", help="Stemming language (default: gold corpus language)")
    eval_parser.add_argument("--format", choices=OUTPUT_FORMATS, default="text")
    eval_parser.add_argument("--out", type=Path)

    # ---- experiment ----
    exp_parser = subparsers.add_parser(
        "experiment", parents=[common, corpus_opts, model_opts, run_opts], help="Run training procedures"
    )
    exp_parser.add_argument("input", type=Path)
    exp_parser.add_argument("--procedure", action="append", choices=[p.value for p in Procedure],
                            help="Repeat for a procedure comparison (default ccv)")
    exp_parser.add_argument("--format", choices=OUTPUT_FORMATS, default="text")
    exp_parser.add_argument("--out", type=Path)
    exp_parser.add_argument("--json-out", type=Path, help="Full results as JSON")

    # ---- agreement ----
    agree_parser = subparsers.add_parser("agreement", parents=[common, corpus_opts], help="Dice agreement")
    agree_parser.add_argument("input", type=Path)
    agree_parser.add_argument("--a", dest="first", help="First annotator")
    agree_parser.add_argument("--b", dest="second", help="Second annotator")

    # ---- sample ----
    sample_parser = subparsers.add_parser("sample", parents=[common, corpus_opts], help="Stratified review sample")
    sample_parser.add_argument("input", type=Path)
    sample_parser.add_argument("--per-app", type=int, required=True)
    sample_parser.add_argument("--stratum", choices=STRATA, default="rating")
    sample_parser.add_argument("--out", type=Path, required=True)

    # ---- sweep ----
    sweep_parser = subparsers.add_parser(
        "sweep", parents=[common, corpus_opts, model_opts, run_opts], help="Length cut-off sweep"
    )
    sweep_parser.add_argument("inputs", type=Path, nargs="+", help="Corpora after the noun-less step")
    sweep_parser.add_argument("--cutoffs", default="1,2,3,4,inf")
    sweep_parser.add_argument("--procedure", choices=[p.value for p in Procedure], default="ccv")
    sweep_parser.add_argument("--format", choices=TABLE_FORMATS, default="text")
    sweep_parser.add_argument("--out", type=Path, help="Tidy min/avg/max CSV")

    # ---- synth ----
    synth_parser = subparsers.add_parser("synth", parents=[common, corpus_opts], help="Write a synthetic corpus")
    synth_parser.add_argument("--out", type=Path, required=True)
    synth_parser.add_argument("--categories", default="social,travel,productivity")
    synth_parser.add_argument("--apps", type=int, default=2, help="Apps per category")
    synth_parser.add_argument("--reviews", type=int, default=15, help="Reviews per app (or total for --external)")
    synth_parser.add_argument("--shared", type=float, default=0.3, help="Shared feature-vocabulary fraction")
    synth_parser.add_argument("--external", choices=["laptop", "restaurant"], help="External-domain corpus instead")

    # ---- settings ----
    settings_parser = subparsers.add_parser("settings", parents=[common], help="Manage settings")
    settings_parser.add_argument("action", choices=["show", "set"])
    settings_parser.add_argument("--key", help="Setting key (dot notation)")
    settings_parser.add_argument("--value", help="Setting value (JSON or string)")

    # ---- history ----
    history_parser = subparsers.add_parser("history", parents=[common], help="Recent runs from the run history")
    history_parser.add_argument("--limit", type=int, default=10)

    return parser


# ============================================================================
# MAIN ENTRY POINT
# ============================================================================

HANDLERS: Dict[str, Callable[[argparse.Namespace, SettingsManager], int]] = {
    "stats": cmd_stats,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
    "agreement": cmd_agreement,
    "sample": cmd_sample,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "settings": cmd_settings,
    "history": cmd_history,
}


def _record(settings: SettingsManager, argv: List[str], args, code: int, started: float) -> None:
    path = settings.history_path()
    if path is None:
        return
    try:
        JSONLogger(path).append({
            "command": args.command,
            "argv": argv,
            "seed": args.seed,
            "exit_code": code,
            "duration_seconds": round(time.time() - started, 3),
        })
    except OSError as exc:
        print_warning(f"Could not write run history {path}: {exc}")


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1

    set_level("debug" if args.verbose else "quiet" if args.quiet else None)
    started = time.time()
    settings = SettingsManager(args.settings)
    if args.seed is None:
        args.seed = int(settings.get("run.seed", 42))
    try:
        code = HANDLERS[args.command](args, settings)
    except RevmineError as exc:
        print_error(str(exc))
        code = exc.exit_code
    except Exception as exc:  # noqa: BLE001
        if is_debug():
            raise
        print_error(f"Unexpected error: {exc}")
        code = 2
    _record(settings, argv, args, code, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
