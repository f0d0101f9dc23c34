"""Command-line entry point.

One binary, subcommand style. Every artifact-producing command writes a
run manifest (inputs with digests, seeds, package version) next to its
outputs so a run can be reproduced from its artifacts; the only timestamp
lives in the manifest. Exit codes: 0 success, 1 usage, 2 data error,
3 backend error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, corpus, coverage, dataset, llm_gateway, study as study_mod, winnow
from .jsonlio import read_records, write_records

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class BackendRunError(RuntimeError):
    """Extraction finished with failed items or could not reach the backend."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        _apply_project_root(args, config)
        return args.func(args, config, argv)
    except BackendRunError as exc:
        print(f"error[backend]: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return EXIT_DATA


def build_parser() -> _Parser:
    parser = _Parser(prog="vockit", description=__doc__)
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest source files into verbatims")
    p.add_argument("--path", type=Path, required=True)
    p.add_argument("--kind", choices=corpus.DOCUMENT_KINDS, required=True)
    p.add_argument("--category", default=None)
    p.add_argument("--window", type=int, default=3, help="transcript chunk window")
    p.add_argument("--labels", type=Path, default=None)
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_ingest)

    ds = sub.add_parser("dataset", help="fine-tuning dataset commands")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)

    p = ds_sub.add_parser("build", help="build train/validation/negative files")
    _dataset_build_flags(p)
    p.set_defaults(func=cmd_dataset_build)

    p = ds_sub.add_parser("sweep", help="re-export datasets for several negative counts")
    _dataset_build_flags(p, neg_count=False)
    p.add_argument("--neg-counts", required=True,
                   help="comma-separated negative counts, e.g. 10,47,100")
    p.add_argument("--responses", default=None,
                   help="response file pattern with {count}, scored when given")
    p.set_defaults(func=cmd_dataset_sweep)

    p = ds_sub.add_parser("score", help="score model responses against a dataset")
    p.add_argument("--dataset-dir", type=Path, required=True)
    p.add_argument("--responses", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_dataset_score)

    p = sub.add_parser("extract", help="run batch extraction against the backend")
    p.add_argument("--verbatims", type=Path, required=True)
    p.add_argument("--style", choices=llm_gateway.PROMPT_STYLES, default=llm_gateway.STYLE_SFT)
    p.add_argument("--category", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--max-in-flight", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_extract)

    cov = sub.add_parser("coverage", help="coverage estimation commands")
    cov_sub = cov.add_subparsers(dest="coverage_command", required=True)

    p = cov_sub.add_parser("fit", help="fit the beta-binomial discovery model")
    _coverage_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_coverage_fit)

    p = cov_sub.add_parser("curve", help="emit the expected-coverage curve")
    _coverage_flags(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--no-observed", action="store_true",
                   help="skip the resampled observed series")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--fit-out", type=Path, default=None)
    p.set_defaults(func=cmd_coverage_curve)

    st = sub.add_parser("study", help="blind evaluation study commands")
    st_sub = st.add_subparsers(dest="study_command", required=True)

    p = st_sub.add_parser("create", help="sample reviews and assemble blinded ballots")
    p.add_argument("--design", type=Path, required=True)
    p.add_argument("--verbatims", type=Path, required=True)
    p.add_argument("--statements", action="append", default=[],
                   metavar="METHOD=EXTRACTIONS", required=True)
    p.add_argument("--decoys", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_study_create)

    p = st_sub.add_parser("serve", help="host the study API and rater UI")
    p.add_argument("--study", type=Path, required=True)
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--ui", type=Path, default=None, help="static rater UI bundle directory")
    p.set_defaults(func=cmd_study_serve)

    for name, func in (("aggregate", cmd_study_aggregate),
                       ("compare", cmd_study_compare),
                       ("disaggregate", cmd_study_disaggregate)):
        p = st_sub.add_parser(name)
        p.add_argument("--study", type=Path, required=True)
        p.add_argument("--store", type=Path, required=True)
        p.add_argument("--partial", action="store_true")
        p.add_argument("--out", type=Path, required=True)
        if name == "compare":
            p.add_argument("--method-a", required=True)
            p.add_argument("--method-b", required=True)
            p.add_argument("--dimension", default=None, help="default: every dimension")
            p.add_argument("--test", choices=study_mod.COMPARISON_TESTS,
                           default=study_mod.MCNEMAR_EXACT)
        p.set_defaults(func=func)

    wn = sub.add_parser("winnow", help="winnowing assistance")
    wn_sub = wn.add_subparsers(dest="winnow_command", required=True)
    p = wn_sub.add_parser("suggest", help="group near-duplicate statements for review")
    p.add_argument("--statements", type=Path, required=True,
                   help="JSONL with statement_id/statement fields, or plain text")
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_winnow_suggest)

    return parser


def _dataset_build_flags(p, neg_count: bool = True):
    p.add_argument("--positives", type=Path, required=True,
                   help="JSONL of {verbatim_id, text, category, cn}")
    p.add_argument("--negatives-pool", type=Path, required=True)
    if neg_count:
        p.add_argument("--neg-count", type=int, default=None)
    p.add_argument("--probe-count", type=int, default=0,
                   help="held-out negatives emitted as a probe file")
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--category", default=None, help="override category for all examples")
    p.add_argument("--out-dir", type=Path, required=True)


def _coverage_flags(p):
    p.add_argument("--mapping", type=Path, required=True)
    p.add_argument("--universe", type=Path, required=True)
    p.add_argument("--b", dest="block_size", type=int, default=None)
    p.add_argument("--num-blocks", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


# ---------------------------------------------------------------------------
# Config and manifests


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config


def _apply_project_root(args, config: dict) -> None:
    """Resolve relative artifact paths under the configured project root."""
    root = config.get("project_root")
    if not root:
        return
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"project_root does not exist: {root}")
    for attr in ("out", "out_dir", "fit_out", "store"):
        value = getattr(args, attr, None)
        if value is not None and not Path(value).is_absolute():
            setattr(args, attr, root / value)


def _cfg(args, flag: str, config: dict, *keys, default=None):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    node = config
    for key in keys:
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_run_manifest(path: Path, command: str, argv: list[str],
                        inputs: dict[str, Path], outputs: list[str],
                        seeds: dict[str, int] | None = None) -> None:
    manifest = {
        "command": command,
        "argv": argv,
        "version": __version__,
        "seeds": seeds or {},
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)}
            for name, p in inputs.items() if p is not None
        },
        "outputs": outputs,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args, config, argv) -> int:
    category = _cfg(args, "category", config, "category")
    documents = corpus.ingest_documents(args.path, args.kind, category)
    verbatims = []
    for doc in documents:
        if doc.kind == corpus.REVIEW:
            verbatims.extend(corpus.segment_sentences(doc))
        else:
            verbatims.extend(corpus.chunk_transcript(doc, args.window))
    if args.labels:
        verbatims = corpus.apply_labels(verbatims, corpus.load_labels(args.labels))
    if args.dedup:
        verbatims = corpus.dedup_exact(verbatims)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    corpus.write_verbatims(args.out, verbatims)
    _write_run_manifest(
        args.out.with_suffix(args.out.suffix + ".manifest.json"),
        "ingest", argv, {"path": args.path, "labels": args.labels}, [args.out.name],
    )
    print(f"ingested {len(documents)} documents -> {len(verbatims)} verbatims")
    return EXIT_OK


def _read_pairs(path: Path, category_override: str | None):
    positives = []
    for lineno, record in read_records(path):
        try:
            v = corpus.Verbatim(
                verbatim_id=record["verbatim_id"],
                doc_id=record.get("doc_id", record["verbatim_id"]),
                ordinal=int(record.get("ordinal", 0)),
                text=record["text"],
                category=record.get("category", ""),
            )
            category = category_override or record.get("category")
            if not category:
                raise KeyError("category")
            positives.append(dataset.make_positive_example(v, record["cn"], category))
        except KeyError as exc:
            raise ValueError(f"{path.name}:{lineno}: missing field {exc}") from exc
    if not positives:
        raise ValueError(f"{path.name}: no positive pairs")
    return positives


def _build_one_dataset(args, config, neg_count: int, out_dir: Path):
    ratio = _cfg(args, "ratio", config, "dataset", "ratio", default=0.8)
    seed = _cfg(args, "seed", config, "seed", default=0)
    category = _cfg(args, "category", config, "category")
    positives = _read_pairs(args.positives, category)
    pool = corpus.read_verbatims(args.negatives_pool)

    neg_config = dataset.NegativeSamplingConfig(count=neg_count, seed=seed)
    if neg_count + args.probe_count > len(pool):
        raise ValueError(
            f"neg-count {neg_count} + probe-count {args.probe_count} exceeds pool size {len(pool)}"
        )
    sampled = dataset.sample_negatives(
        pool, dataset.NegativeSamplingConfig(count=neg_count + args.probe_count, seed=seed)
    )
    negatives = [
        dataset.make_negative_example(v, category or v.category) for v in sampled[:neg_count]
    ]
    probe = [
        dataset.make_negative_example(v, category or v.category) for v in sampled[neg_count:]
    ]
    split = dataset.split_dataset(positives, negatives, ratio, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = dataset.export_dataset(split, out_dir, neg_config, probe)
    return split, manifest, seed


def cmd_dataset_build(args, config, argv) -> int:
    neg_count = _cfg(args, "neg_count", config, "dataset", "neg_count", default=47)
    _split, manifest, seed = _build_one_dataset(args, config, neg_count, args.out_dir)
    _write_run_manifest(
        args.out_dir / "run_manifest.json", "dataset build", argv,
        {"positives": args.positives, "negatives_pool": args.negatives_pool},
        sorted(manifest["files"].values()) + [dataset.MANIFEST_FILE],
        seeds={"seed": seed},
    )
    counts = manifest["counts"]
    print(
        f"train {counts['train_positives']} / validation {counts['validation']} "
        f"/ negatives {counts['train_negatives']} / probe {counts['probe']}"
    )
    return EXIT_OK


def cmd_dataset_sweep(args, config, argv) -> int:
    counts = [int(c) for c in str(args.neg_counts).split(",") if c.strip()]
    if not counts:
        raise ValueError("no negative counts given")
    reports = []
    for count in counts:
        out_dir = args.out_dir / f"neg-{count}"
        args.neg_count = count
        _split, manifest, seed = _build_one_dataset(args, config, count, out_dir)
        entry = {"neg_count": count, "dir": out_dir.name, "counts": manifest["counts"]}
        if args.responses:
            responses_path = Path(str(args.responses).format(count=count))
            entry["report"] = asdict(_score_dataset(out_dir, responses_path))
        reports.append(entry)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "sweep_report.json", "w", encoding="utf-8") as fh:
        json.dump({"sweeps": reports}, fh, indent=2)
        fh.write("\n")
    _write_run_manifest(
        args.out_dir / "run_manifest.json", "dataset sweep", argv,
        {"positives": args.positives, "negatives_pool": args.negatives_pool},
        [f"neg-{c}" for c in counts] + ["sweep_report.json"],
    )
    print(f"swept negative counts: {counts}")
    return EXIT_OK


def _score_dataset(dataset_dir: Path, responses_path: Path) -> dataset.ValidationReport:
    split = dataset.import_dataset(dataset_dir)
    gold = split.validation + dataset.read_probe(dataset_dir)
    responses = llm_gateway.read_extractions(responses_path)
    relevant_ids = {g.example_id for g in gold}
    responses = [r for r in responses if r.verbatim_id in relevant_ids]
    return dataset.score_validation(responses, gold)


def cmd_dataset_score(args, config, argv) -> int:
    report = _score_dataset(args.dataset_dir, args.responses)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(asdict(report), fh, indent=2)
        fh.write("\n")
    print(
        f"false_negative_rate={report.false_negative_rate:.4f} "
        f"spurious_rate={report.spurious_rate:.4f}"
    )
    return EXIT_OK


def cmd_extract(args, config, argv) -> int:
    category = _cfg(args, "category", config, "category")
    if not category:
        raise ValueError("a category is required (flag --category or config)")
    endpoint = _cfg(args, "endpoint", config, "backend", "endpoint_url")
    model = _cfg(args, "model", config, "backend", "model_name")
    if not endpoint or not model:
        raise ValueError("backend endpoint and model are required (flags or config)")
    backend = llm_gateway.BackendConfig(
        endpoint_url=endpoint,
        model_name=model,
        max_in_flight=_cfg(args, "max_in_flight", config, "backend", "max_in_flight", default=4),
        timeout_s=_cfg(args, "timeout", config, "backend", "timeout_s", default=60.0),
        max_retries=_cfg(args, "max_retries", config, "backend", "max_retries", default=3),
    )
    verbatims = corpus.read_verbatims(args.verbatims)
    extractions = llm_gateway.extract_batch(verbatims, args.style, category, backend)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    llm_gateway.write_extractions(args.out, extractions)
    _write_run_manifest(
        args.out.with_suffix(args.out.suffix + ".manifest.json"),
        "extract", argv, {"verbatims": args.verbatims}, [args.out.name],
    )
    failed = sum(1 for e in extractions if e.error is not None)
    print(f"extracted {len(extractions)} items, {failed} failed")
    if failed:
        raise BackendRunError(f"{failed} of {len(extractions)} items failed after retries")
    return EXIT_OK


def cmd_coverage_fit(args, config, argv) -> int:
    fit, seed = _fit_from_files(args, config)
    coverage.write_fit_report(fit, seed, args.out)
    _write_run_manifest(
        args.out.with_suffix(args.out.suffix + ".manifest.json"),
        "coverage fit", argv,
        {"mapping": args.mapping, "universe": args.universe},
        [args.out.name], seeds={"seed": seed},
    )
    print(f"alpha={fit.alpha:.4f} beta={fit.beta:.4f} converged={fit.converged}")
    return EXIT_OK


def _fit_from_files(args, config):
    block_size = _cfg(args, "block_size", config, "resampling", "block_size", default=50)
    num_blocks = _cfg(args, "num_blocks", config, "resampling", "num_blocks", default=2000)
    seed = _cfg(args, "seed", config, "seed", default=0)
    mapping = coverage.read_mapping(args.mapping)
    universe = coverage.read_universe(args.universe)
    rc = coverage.ResamplingConfig(block_size=block_size, num_blocks=num_blocks, seed=seed)
    counts = coverage.resample_block_counts(mapping, universe, rc)
    fit = coverage.fit_beta_binomial(counts, num_blocks, block_size=block_size)
    return fit, seed


def cmd_coverage_curve(args, config, argv) -> int:
    block_size = _cfg(args, "block_size", config, "resampling", "block_size", default=50)
    num_blocks = _cfg(args, "num_blocks", config, "resampling", "num_blocks", default=2000)
    seed = _cfg(args, "seed", config, "seed", default=0)
    mapping = coverage.read_mapping(args.mapping)
    universe = coverage.read_universe(args.universe)
    if (args.alpha is None) != (args.beta is None):
        raise ValueError("--alpha and --beta must be given together")
    if args.alpha is not None:
        fit = coverage.BetaBinomialFit(
            alpha=args.alpha, beta=args.beta, block_size=block_size,
            num_blocks=num_blocks, log_likelihood=float("nan"), converged=True,
        )
    else:
        fit, seed = _fit_from_files(args, config)
    rc = coverage.ResamplingConfig(block_size=block_size, num_blocks=num_blocks, seed=seed)
    curve = coverage.coverage_curve(
        fit, None if args.no_observed else mapping, universe, args.n_max, rc
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    coverage.emit_curve_data(curve, args.out)
    if args.fit_out:
        coverage.write_fit_report(fit, seed, args.fit_out)
    _write_run_manifest(
        args.out.with_suffix(args.out.suffix + ".manifest.json"),
        "coverage curve", argv,
        {"mapping": args.mapping, "universe": args.universe},
        [args.out.name], seeds={"seed": seed},
    )
    print(f"curve written to {args.out} (n_max={args.n_max}, b={block_size})")
    return EXIT_OK


def _parse_design(path: Path, method_names: list[str]) -> study_mod.StudyDesign:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    dimensions = raw.get("dimensions", "default")
    if dimensions == "default":
        dims = list(study_mod.DEFAULT_DIMENSIONS)
    elif dimensions == "characteristics":
        dims = list(study_mod.CHARACTERISTIC_DIMENSIONS)
    else:
        dims = [study_mod.Dimension(d["dim_id"], d["short_name"], d["instruction"])
                for d in dimensions]
    return study_mod.StudyDesign(
        study_id=raw["study_id"],
        methods=raw.get("methods", method_names),
        raters=raw["raters"],
        seed=int(raw["seed"]),
        dimensions=dims,
        sample_spec={k: int(v) for k, v in raw.get("sample_spec", study_mod.DEFAULT_SAMPLE_SPEC).items()},
        general_comment=raw.get("general_comment", study_mod.DEFAULT_GENERAL_COMMENT),
    )


def cmd_study_create(args, config, argv) -> int:
    statements_by_method: dict[str, dict[str, str | None]] = {}
    method_names = []
    for spec in args.statements:
        if "=" not in spec:
            raise ValueError(f"--statements expects METHOD=PATH, got {spec!r}")
        method, _, path = spec.partition("=")
        method_names.append(method)
        for extraction in llm_gateway.read_extractions(Path(path)):
            statements_by_method.setdefault(extraction.verbatim_id, {})[method] = extraction.statement
    design = _parse_design(args.design, method_names)
    verbatims = corpus.read_verbatims(args.verbatims)
    with open(args.decoys, encoding="utf-8") as fh:
        decoys = [line.strip() for line in fh if line.strip()]
    study = study_mod.create_study(design, verbatims, statements_by_method, decoys)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    study_mod.save_study(study, args.out)
    _write_run_manifest(
        args.out.with_suffix(args.out.suffix + ".manifest.json"),
        "study create", argv,
        {"design": args.design, "verbatims": args.verbatims, "decoys": args.decoys},
        [args.out.name], seeds={"seed": design.seed},
    )
    print(f"study {design.study_id}: {len(study.sample)} reviews, "
          f"{len(study.ballots)} ballots for {len(design.raters)} raters")
    return EXIT_OK


def cmd_study_serve(args, config, argv) -> int:
    import uvicorn

    from .service import ServiceState, create_app

    state = ServiceState(args.store, study=study_mod.load_study(args.study))
    app = create_app(state, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _load_study_and_ratings(args):
    study = study_mod.load_study(args.study)
    store = study_mod.RatingsStore(Path(args.store) / "ratings.log")
    return study, store


def cmd_study_aggregate(args, config, argv) -> int:
    study, store = _load_study_and_ratings(args)
    judgments = study_mod.aggregate_majority(study, store.ratings(), partial=args.partial)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_records(args.out, (asdict(j) for j in judgments))
    print(f"{len(judgments)} judgments -> {args.out}")
    return EXIT_OK


def cmd_study_compare(args, config, argv) -> int:
    study, store = _load_study_and_ratings(args)
    judgments = study_mod.aggregate_majority(study, store.ratings(), partial=args.partial)
    dims = [args.dimension] if args.dimension else [d.dim_id for d in study.design.dimensions]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method_a", "method_b", "dimension", "proportion_a", "proportion_b",
                         "p_value", "discordant_ab", "discordant_ba", "test", "zero_discordant"])
        for dim in dims:
            r = study_mod.compare_methods(judgments, args.method_a, args.method_b, dim, test=args.test)
            writer.writerow([r.method_a, r.method_b, r.dimension,
                             f"{r.proportion_a:.6f}", f"{r.proportion_b:.6f}",
                             f"{r.p_value:.6g}", r.discordant[0], r.discordant[1],
                             r.test, "yes" if r.zero_discordant else "no"])
    print(f"comparisons -> {args.out}")
    return EXIT_OK


def cmd_study_disaggregate(args, config, argv) -> int:
    study, store = _load_study_and_ratings(args)
    cells = study_mod.disaggregate(study, store.ratings(), partial=args.partial)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["review_label", "method", "dimension", "mean", "sd",
                         "n_raters", "n_items", "decoy_fraction"])
        for cell in cells:
            writer.writerow([cell.review_label, cell.method, cell.dimension,
                             f"{cell.mean:.4f}", f"{cell.sd:.4f}",
                             cell.n_raters, cell.n_items, f"{cell.decoy_fraction:.4f}"])
    print(f"disaggregation -> {args.out}")
    return EXIT_OK


def cmd_winnow_suggest(args, config, argv) -> int:
    statements: dict[str, str] = {}
    if args.statements.suffix == ".jsonl":
        for lineno, record in read_records(args.statements):
            sid = record.get("statement_id") or record.get("verbatim_id")
            text = record.get("statement") or record.get("text")
            if not sid or not text:
                raise ValueError(f"{args.statements.name}:{lineno}: need statement_id and statement")
            statements[sid] = text
    else:
        with open(args.statements, encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
        width = len(str(max(len(lines) - 1, 0)))
        statements = {f"s{idx:0{width}d}": text for idx, text in enumerate(lines)}
    groups = winnow.group_near_duplicates(statements, threshold=args.threshold)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    winnow.write_worksheet(groups, statements, args.out)
    print(f"{len(statements)} statements -> {len(groups)} groups at threshold {args.threshold}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
