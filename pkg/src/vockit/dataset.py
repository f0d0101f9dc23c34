"""Fine-tuning dataset construction: question/answer pairs, negative
sampling, seeded splitting, validation scoring, and export with a training
manifest for the external trainer."""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Verbatim
from .jsonlio import read_records, write_records
from .llm_gateway import EMPTY_MARKER, Extraction, render_prompt_sft

POSITIVE = "positive"
NEGATIVE = "negative"

# Defaults the external trainer is expected to run with; recorded in every
# dataset manifest so a run is reproducible from its artifacts alone.
TRAINING_HYPERPARAMETERS = {
    "precision": "bf16",
    "quantization": "none",
    "epochs": 6,
    "per_device_train_batch_size": 2,
    "per_device_eval_batch_size": 8,
    "gradient_accumulation_steps": 4,
    "learning_rate": 2e-5,
    "lr_scheduler": "cosine",
    "max_sequence_length": 1024,
}

TRAIN_FILE = "train.jsonl"
NEGATIVES_FILE = "negatives.jsonl"
VALIDATION_FILE = "validation.jsonl"
PROBE_FILE = "probe.jsonl"
MANIFEST_FILE = "manifest.json"


@dataclass(frozen=True)
class TrainingExample:
    example_id: str
    question: str
    answer: str
    polarity: str
    source_verbatim_id: str
    category: str

    def __post_init__(self) -> None:
        if self.polarity == NEGATIVE and self.answer != EMPTY_MARKER:
            raise ValueError("negative examples must answer the empty marker")
        if self.polarity == POSITIVE and (not self.answer or self.answer == EMPTY_MARKER):
            raise ValueError("positive examples must have a non-empty answer")


@dataclass(frozen=True)
class NegativeSamplingConfig:
    count: int
    seed: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be non-negative")


@dataclass
class DatasetSplit:
    train: list[TrainingExample]
    validation: list[TrainingExample]
    seed: int
    ratio: float


@dataclass(frozen=True)
class ValidationReport:
    false_negative_rate: float
    spurious_rate: float
    n_positives: int
    n_negatives: int
    n_false_negatives: int
    n_spurious: int


def make_positive_example(verbatim: Verbatim, cn_text: str, category: str) -> TrainingExample:
    """Pair a verbatim with its professionally-extracted customer need."""
    answer = cn_text.rstrip()
    if not answer.strip():
        raise ValueError("cn_text must be non-empty")
    if "\n" in answer:
        raise ValueError("cn_text may not contain a newline")
    digest = hashlib.blake2s(answer.encode("utf-8"), digest_size=4).hexdigest()
    return TrainingExample(
        example_id=f"pos:{verbatim.verbatim_id}:{digest}",
        question=render_prompt_sft(category, verbatim.text),
        answer=answer,
        polarity=POSITIVE,
        source_verbatim_id=verbatim.verbatim_id,
        category=category,
    )


def make_negative_example(verbatim: Verbatim, category: str) -> TrainingExample:
    """Pair an uninformative verbatim with the empty-marker answer."""
    return TrainingExample(
        example_id=f"neg:{verbatim.verbatim_id}",
        question=render_prompt_sft(category, verbatim.text),
        answer=EMPTY_MARKER,
        polarity=NEGATIVE,
        source_verbatim_id=verbatim.verbatim_id,
        category=category,
    )


def sample_negatives(pool: Sequence[Verbatim], config: NegativeSamplingConfig) -> list[Verbatim]:
    """Draw `config.count` distinct verbatims uniformly without replacement."""
    if config.count > len(pool):
        raise ValueError(f"negative count {config.count} exceeds pool size {len(pool)}")
    return random.Random(config.seed).sample(list(pool), config.count)


def split_dataset(
    positives: Sequence[TrainingExample],
    negatives: Sequence[TrainingExample],
    ratio: float,
    seed: int,
) -> DatasetSplit:
    """Shuffle positives by seed and split at round-half-up(ratio * N).

    All negatives are appended to the train side; validation stays
    all-positive so the false-negative rate is measurable there.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    ids = [e.example_id for e in positives] + [e.example_id for e in negatives]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate example ids: {dupes[:5]}")
    shuffled = list(positives)
    random.Random(seed).shuffle(shuffled)
    n_train = math.floor(ratio * len(shuffled) + 0.5)
    return DatasetSplit(
        train=shuffled[:n_train] + list(negatives),
        validation=shuffled[n_train:],
        seed=seed,
        ratio=ratio,
    )


def score_validation(responses: Sequence[Extraction], gold: Sequence[TrainingExample]) -> ValidationReport:
    """Score model responses against gold answers.

    false_negative_rate: fraction of positives answered with the empty
    marker. spurious_rate: fraction of negatives answered with anything
    else (the hallucination proxy). Responses are matched to gold examples
    by id (Extraction.verbatim_id carries the example_id here).
    """
    by_id: dict[str, Extraction] = {}
    for response in responses:
        if response.verbatim_id in by_id:
            raise ValueError(f"duplicate response for {response.verbatim_id!r}")
        by_id[response.verbatim_id] = response
    missing = [g.example_id for g in gold if g.example_id not in by_id]
    if missing:
        raise ValueError(f"responses missing for examples: {missing[:5]}")
    extra = set(by_id) - {g.example_id for g in gold}
    if extra:
        raise ValueError(f"responses for unknown examples: {sorted(extra)[:5]}")

    n_pos = n_neg = n_fn = n_sp = 0
    for example in gold:
        answered_empty = by_id[example.example_id].statement is None
        if example.polarity == POSITIVE:
            n_pos += 1
            n_fn += answered_empty
        else:
            n_neg += 1
            n_sp += not answered_empty
    return ValidationReport(
        false_negative_rate=n_fn / n_pos if n_pos else 0.0,
        spurious_rate=n_sp / n_neg if n_neg else 0.0,
        n_positives=n_pos,
        n_negatives=n_neg,
        n_false_negatives=n_fn,
        n_spurious=n_sp,
    )


def export_dataset(
    split: DatasetSplit,
    out_dir: str | Path,
    negative_config: NegativeSamplingConfig | None = None,
    probe: Sequence[TrainingExample] = (),
) -> dict:
    """Write train/negatives/validation files plus the training manifest.

    Data files carry exactly {"question", "answer"} per record (the
    trainer contract). Train positives and train negatives are written to
    separate files so validation scoring never mixes them; the manifest
    tells the trainer to concatenate both for the training run. A probe
    file of held-out negatives is written when provided.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_pos = [e for e in split.train if e.polarity == POSITIVE]
    train_neg = [e for e in split.train if e.polarity == NEGATIVE]

    files: dict[str, str] = {}
    _write_examples(out_dir / TRAIN_FILE, train_pos)
    files["train"] = TRAIN_FILE
    if train_neg:
        _write_examples(out_dir / NEGATIVES_FILE, train_neg)
        files["negatives"] = NEGATIVES_FILE
    _write_examples(out_dir / VALIDATION_FILE, split.validation)
    files["validation"] = VALIDATION_FILE
    if probe:
        _write_examples(out_dir / PROBE_FILE, list(probe))
        files["probe"] = PROBE_FILE

    manifest = {
        "files": files,
        "counts": {
            "train_positives": len(train_pos),
            "train_negatives": len(train_neg),
            "validation": len(split.validation),
            "probe": len(probe),
        },
        "seed": split.seed,
        "ratio": split.ratio,
        "negative_config": (
            {"count": negative_config.count, "seed": negative_config.seed}
            if negative_config else None
        ),
        "train_inputs": [TRAIN_FILE] + ([NEGATIVES_FILE] if train_neg else []),
        "hyperparameters": TRAINING_HYPERPARAMETERS,
        "provenance": {
            "train": [_provenance(e) for e in train_pos],
            "negatives": [_provenance(e) for e in train_neg],
            "validation": [_provenance(e) for e in split.validation],
            "probe": [_provenance(e) for e in probe],
        },
    }
    with open(out_dir / MANIFEST_FILE, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return manifest


def import_dataset(out_dir: str | Path) -> DatasetSplit:
    """Rebuild a DatasetSplit from an export directory (inverse of export_dataset)."""
    out_dir = Path(out_dir)
    with open(out_dir / MANIFEST_FILE, encoding="utf-8") as fh:
        manifest = json.load(fh)
    train = _read_examples(out_dir / TRAIN_FILE, manifest["provenance"]["train"])
    if "negatives" in manifest["files"]:
        train += _read_examples(out_dir / NEGATIVES_FILE, manifest["provenance"]["negatives"])
    validation = _read_examples(out_dir / VALIDATION_FILE, manifest["provenance"]["validation"])
    return DatasetSplit(train=train, validation=validation, seed=manifest["seed"], ratio=manifest["ratio"])


def read_probe(out_dir: str | Path) -> list[TrainingExample]:
    out_dir = Path(out_dir)
    with open(out_dir / MANIFEST_FILE, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if "probe" not in manifest["files"]:
        return []
    return _read_examples(out_dir / PROBE_FILE, manifest["provenance"]["probe"])


def _provenance(example: TrainingExample) -> dict:
    return {
        "example_id": example.example_id,
        "polarity": example.polarity,
        "source_verbatim_id": example.source_verbatim_id,
        "category": example.category,
    }


def _write_examples(path: Path, examples: Sequence[TrainingExample]) -> None:
    write_records(path, ({"question": e.question, "answer": e.answer} for e in examples))


def _read_examples(path: Path, provenance: list[dict]) -> list[TrainingExample]:
    records = [record for _, record in read_records(path)]
    if len(records) != len(provenance):
        raise ValueError(f"{path.name}: {len(records)} records but {len(provenance)} provenance entries")
    return [
        TrainingExample(
            example_id=meta["example_id"],
            question=record["question"],
            answer=record["answer"],
            polarity=meta["polarity"],
            source_verbatim_id=meta["source_verbatim_id"],
            category=meta["category"],
        )
        for record, meta in zip(records, provenance)
    ]
