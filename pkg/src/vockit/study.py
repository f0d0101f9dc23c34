"""Blind evaluation studies.

Builds a stratified review sample, assembles per-rater ballots with
shuffled candidate statements (substituting real decoy needs where a
method produced nothing), persists ratings in an append-only log with
idempotent submission, aggregates answers by majority vote, compares
methods with a paired exact test, and disaggregates results by review
label.
"""

from __future__ import annotations

import json
import math
import os
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Verbatim
from .jsonlio import read_records

MCNEMAR_EXACT = "mcnemar_exact"
TWO_PROPORTION = "two_proportion"
COMPARISON_TESTS = (MCNEMAR_EXACT, TWO_PROPORTION)


@dataclass(frozen=True)
class Dimension:
    dim_id: str
    short_name: str
    instruction: str


# Default evaluation questions shown to raters, one yes/no row per
# statement column.
DEFAULT_DIMENSIONS = [
    Dimension(
        dim_id="is_customer_need",
        short_name="Is a customer need typically identified in a VOC study",
        instruction=(
            "Please indicate whether the statement qualifies as a customer need "
            "identified in a typical VOC study. Customer needs capture conceptual "
            "benefits that customers want to obtain from a product, which is "
            "different from customer-provided technical specifications and desired "
            "solutions."
        ),
    ),
    Dimension(
        dim_id="sufficiently_specific",
        short_name="Captures sufficient detail about a customer need",
        instruction=(
            "Please evaluate whether or not the statement is actionable and not too "
            "general. For example, “good communication” might be too general. "
            "“Can stay informed of the technician's status (e.g. when they will "
            "arrive)” captures sufficient detail."
        ),
    ),
    Dimension(
        dim_id="follows_from_review",
        short_name="Is based on some information in the review",
        instruction=(
            "Please evaluate whether or not the statement is based on information in "
            "the review. In particular, is it reasonable that a VOC study would "
            "extract this customer need from the review."
        ),
    ),
]

DEFAULT_GENERAL_COMMENT = (
    "Answer all questions. For the first question, evaluate only if the statement "
    "is a customer need, regardless of whether the statement is detailed enough, "
    "which is judged separately. That question also does not evaluate whether the "
    "statement came from the review, which is judged separately."
)

# Optional pack for judging need characteristics rather than quality.
CHARACTERISTIC_DIMENSIONS = [
    Dimension("functional_vs_emotional", "Is the need emotional rather than functional",
              "Answer yes if the statement describes an emotional benefit, no if it "
              "describes a functional one."),
    Dimension("universal_vs_niche", "Is the need niche rather than universal",
              "Answer yes if the statement matters to a narrow customer segment, no "
              "if most customers share it."),
    Dimension("fleeting_vs_enduring", "Is the need fleeting rather than enduring",
              "Answer yes if the need occurs at a specific moment in time, no if it "
              "always exists."),
]

DEFAULT_SAMPLE_SPEC = {"verbatim": 90, "informative": 30, "uninformative": 30}


@dataclass
class StudyDesign:
    study_id: str
    methods: list[str]
    raters: list[str]
    seed: int
    dimensions: list[Dimension] = field(default_factory=lambda: list(DEFAULT_DIMENSIONS))
    sample_spec: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SAMPLE_SPEC))
    general_comment: str = DEFAULT_GENERAL_COMMENT

    def __post_init__(self) -> None:
        if not self.dimensions:
            raise ValueError("study needs at least one dimension")
        if len(self.methods) < 2:
            raise ValueError("study needs at least two methods")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("method identifiers must be distinct")
        if len(self.raters) < 3 or len(self.raters) % 2 == 0:
            raise ValueError("study needs an odd number of raters, at least 3")


@dataclass(frozen=True)
class SlotSource:
    method: str
    is_decoy: bool


@dataclass
class Ballot:
    ballot_id: str
    rater_id: str
    verbatim_id: str
    verbatim_text: str
    statements: list[str]                     # indexed by slot
    hidden_assignment: dict[int, SlotSource]  # slot -> source; server-side only
    review_label: str                         # hidden from raters

    def rater_payload(self) -> dict:
        """Everything a rater may see; carries no method ids, labels, or decoy flags.

        Uses "review" vocabulary throughout so not even the word "verbatim"
        (one of the hidden label values) appears in the serialized payload.
        """
        return {
            "ballot_id": self.ballot_id,
            "rater_id": self.rater_id,
            "review_text": self.verbatim_text,
            "statements": [{"slot": i, "text": s} for i, s in enumerate(self.statements)],
        }


@dataclass(frozen=True)
class Rating:
    ballot_id: str
    rater_id: str
    answers: dict[tuple[int, str], bool]      # (slot, dim_id) -> yes
    submitted_at: str = ""


@dataclass(frozen=True)
class Judgment:
    verbatim_id: str
    method: str
    dimension: str
    verdict: bool
    yes_count: int
    no_count: int
    decoy: bool


@dataclass(frozen=True)
class ComparisonResult:
    method_a: str
    method_b: str
    dimension: str
    proportion_a: float
    proportion_b: float
    p_value: float
    discordant: tuple[int, int]
    test: str
    zero_discordant: bool = False


@dataclass
class Study:
    design: StudyDesign
    sample: list[str]                         # verbatim ids, sample order
    review_labels: dict[str, str]
    ballots: list[Ballot]

    def __post_init__(self) -> None:
        self._ballot_index = {b.ballot_id: b for b in self.ballots}

    def ballots_for(self, rater_id: str) -> list[Ballot]:
        return [b for b in self.ballots if b.rater_id == rater_id]

    def ballot(self, ballot_id: str) -> Ballot | None:
        return self._ballot_index.get(ballot_id)


def build_sample(
    corpus: Sequence[Verbatim],
    sample_spec: Mapping[str, int],
    seed: int,
) -> list[str]:
    """Stratified uniform sample of verbatim ids, without replacement per label."""
    pools: dict[str, list[str]] = {}
    for verbatim in corpus:
        pools.setdefault(verbatim.label, []).append(verbatim.verbatim_id)
    sample: list[str] = []
    for label in sorted(sample_spec):
        count = sample_spec[label]
        if count == 0:
            continue
        pool = pools.get(label, [])
        if len(pool) < count:
            raise ValueError(
                f"label {label!r}: requested {count} but only {len(pool)} available"
            )
        sample.extend(random.Random(f"{seed}|sample|{label}").sample(pool, count))
    return sample


def assemble_ballots(
    sample: Sequence[str],
    verbatim_texts: Mapping[str, str],
    review_labels: Mapping[str, str],
    statements_by_method: Mapping[str, Mapping[str, str | None]],
    decoy_pool: Sequence[str],
    design: StudyDesign,
) -> list[Ballot]:
    """One ballot per (rater, sampled verbatim), one statement per method.

    When a method produced no statement for a verbatim, a real need drawn
    uniformly from the decoy pool fills its slot so the ballot count never
    signals how a statement was produced. Slot order is an independent
    seeded permutation per ballot.
    """
    needs_decoy = any(
        statements_by_method.get(vid, {}).get(method) is None
        for vid in sample for method in design.methods
    )
    if needs_decoy and not decoy_pool:
        raise ValueError("decoy pool is empty but some method lacks a statement")

    ballots = []
    for rater in design.raters:
        for vid in sample:
            rng = random.Random(f"{design.seed}|ballot|{rater}|{vid}")
            sources = []
            texts = []
            for method in design.methods:
                statement = statements_by_method.get(vid, {}).get(method)
                if statement is None:
                    sources.append(SlotSource(method, is_decoy=True))
                    texts.append(rng.choice(list(decoy_pool)))
                else:
                    sources.append(SlotSource(method, is_decoy=False))
                    texts.append(statement)
            order = list(range(len(design.methods)))
            rng.shuffle(order)
            ballots.append(Ballot(
                ballot_id=f"{design.study_id}:{rater}:{vid}",
                rater_id=rater,
                verbatim_id=vid,
                verbatim_text=verbatim_texts[vid],
                statements=[texts[i] for i in order],
                hidden_assignment={slot: sources[i] for slot, i in enumerate(order)},
                review_label=review_labels.get(vid, "unlabeled"),
            ))
    return ballots


def create_study(
    design: StudyDesign,
    corpus: Sequence[Verbatim],
    statements_by_method: Mapping[str, Mapping[str, str | None]],
    decoy_pool: Sequence[str],
) -> Study:
    sample = build_sample(corpus, design.sample_spec, design.seed)
    texts = {v.verbatim_id: v.text for v in corpus}
    labels = {v.verbatim_id: v.label for v in corpus}
    ballots = assemble_ballots(sample, texts, labels, statements_by_method, decoy_pool, design)
    return Study(design=design, sample=list(sample), review_labels=labels, ballots=ballots)


class RatingError(ValueError):
    """Base class for rating submission failures."""
    code = "rating_error"


class UnknownBallotError(RatingError):
    code = "unknown_ballot"


class IncompleteRatingError(RatingError):
    code = "incomplete_rating"

    def __init__(self, missing: list[tuple[int, str]]):
        super().__init__(f"missing answers for cells: {missing}")
        self.missing = missing


class ConflictingRatingError(RatingError):
    code = "conflicting_resubmission"


class RatingsStore:
    """Append-only, crash-safe rating log.

    Every accepted rating is appended as one JSON line and fsynced before
    the submission is acknowledged, so a restart replays exactly the
    acknowledged set. Identical resubmissions are no-ops; conflicting ones
    are rejected.
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._ratings: dict[tuple[str, str], Rating] = {}
        if self._path.exists():
            for _, record in read_records(self._path):
                rating = _rating_from_record(record)
                self._ratings[(rating.rater_id, rating.ballot_id)] = rating

    def __len__(self) -> int:
        return len(self._ratings)

    def ratings(self) -> list[Rating]:
        return list(self._ratings.values())

    def has_rating(self, rater_id: str, ballot_id: str) -> bool:
        return (rater_id, ballot_id) in self._ratings

    def submit(self, rating: Rating, ballot: Ballot, dimensions: Sequence[Dimension]) -> str:
        """Persist a rating; returns "accepted" or "already-recorded"."""
        if ballot is None or ballot.ballot_id != rating.ballot_id:
            raise UnknownBallotError(f"unknown ballot {rating.ballot_id!r}")
        if ballot.rater_id != rating.rater_id:
            raise UnknownBallotError(
                f"ballot {rating.ballot_id!r} does not belong to rater {rating.rater_id!r}"
            )
        expected = {
            (slot, dim.dim_id)
            for slot in range(len(ballot.statements))
            for dim in dimensions
        }
        missing = sorted(expected - set(rating.answers))
        if missing:
            raise IncompleteRatingError(missing)
        extra = sorted(set(rating.answers) - expected)
        if extra:
            raise RatingError(f"answers for unknown cells: {extra}")

        key = (rating.rater_id, rating.ballot_id)
        with self._lock:
            existing = self._ratings.get(key)
            if existing is not None:
                if existing.answers == rating.answers:
                    return "already-recorded"
                raise ConflictingRatingError(
                    f"rating for ballot {rating.ballot_id!r} already recorded with different answers"
                )
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(_rating_to_record(rating), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._ratings[key] = rating
        return "accepted"


def _rating_to_record(rating: Rating) -> dict:
    return {
        "ballot_id": rating.ballot_id,
        "rater_id": rating.rater_id,
        "answers": [
            {"slot": slot, "dimension": dim, "answer": "yes" if yes else "no"}
            for (slot, dim), yes in sorted(rating.answers.items())
        ],
        "submitted_at": rating.submitted_at,
    }


def _rating_from_record(record: dict) -> Rating:
    return Rating(
        ballot_id=record["ballot_id"],
        rater_id=record["rater_id"],
        answers={
            (int(cell["slot"]), cell["dimension"]): cell["answer"] == "yes"
            for cell in record["answers"]
        },
        submitted_at=record.get("submitted_at", ""),
    )


def _answer_lookup(study: Study, ratings: Iterable[Rating]) -> dict[tuple[str, str], Rating]:
    by_key = {}
    for rating in ratings:
        by_key[(rating.rater_id, rating.ballot_id)] = rating
    return by_key


def aggregate_majority(study: Study, ratings: Iterable[Rating], partial: bool = False) -> list[Judgment]:
    """Majority verdict per (verbatim, method, dimension).

    The hidden slot assignment resolves each rater's slot answers back to
    methods. With `partial`, verbatims missing some raters' ratings are
    aggregated over the ratings present; otherwise missing ratings raise.
    """
    by_key = _answer_lookup(study, ratings)
    judgments = []
    for vid in study.sample:
        per_method_dim: dict[tuple[str, str], list[bool]] = {}
        decoy_methods: set[str] = set()
        for rater in study.design.raters:
            ballot_id = f"{study.design.study_id}:{rater}:{vid}"
            rating = by_key.get((rater, ballot_id))
            if rating is None:
                if partial:
                    continue
                raise ValueError(f"missing rating for rater {rater!r} on ballot {ballot_id!r}")
            ballot = study.ballot(ballot_id)
            for slot, source in ballot.hidden_assignment.items():
                if source.is_decoy:
                    decoy_methods.add(source.method)
                for dim in study.design.dimensions:
                    per_method_dim.setdefault((source.method, dim.dim_id), []).append(
                        rating.answers[(slot, dim.dim_id)]
                    )
        for (method, dim_id), votes in per_method_dim.items():
            yes = sum(votes)
            no = len(votes) - yes
            judgments.append(Judgment(
                verbatim_id=vid,
                method=method,
                dimension=dim_id,
                verdict=yes > no,
                yes_count=yes,
                no_count=no,
                decoy=method in decoy_methods,
            ))
    return judgments


def mcnemar_exact_p(b: int, c: int) -> float:
    """Two-sided exact binomial p-value on discordant pair counts."""
    n = b + c
    if n == 0:
        return 1.0
    k = min(b, c)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2.0 ** n
    return min(1.0, 2.0 * tail)


def two_proportion_p(yes_a: int, yes_b: int, n: int) -> float:
    """Two-sided pooled z-test for equal yes-proportions on n items each."""
    if n == 0:
        return 1.0
    pa, pb = yes_a / n, yes_b / n
    pooled = (yes_a + yes_b) / (2.0 * n)
    variance = pooled * (1.0 - pooled) * (2.0 / n)
    if variance == 0.0:
        return 1.0
    z = (pa - pb) / math.sqrt(variance)
    return math.erfc(abs(z) / math.sqrt(2.0))


def compare_methods(
    judgments: Sequence[Judgment],
    method_a: str,
    method_b: str,
    dimension: str,
    test: str = MCNEMAR_EXACT,
) -> ComparisonResult:
    """Compare yes-rates of two methods on the same verbatim set.

    The default exact McNemar test respects the paired design (both
    methods judged on every sampled review); the unpaired two-proportion
    z-test is available for comparison.
    """
    if test not in COMPARISON_TESTS:
        raise ValueError(f"unknown test: {test!r}")
    a_verdicts = {j.verbatim_id: j.verdict for j in judgments
                  if j.method == method_a and j.dimension == dimension}
    b_verdicts = {j.verbatim_id: j.verdict for j in judgments
                  if j.method == method_b and j.dimension == dimension}
    if set(a_verdicts) != set(b_verdicts):
        raise ValueError("methods were judged on different verbatim sets")
    if not a_verdicts:
        raise ValueError(f"no judgments for dimension {dimension!r}")

    items = sorted(a_verdicts)
    yes_a = sum(a_verdicts[v] for v in items)
    yes_b = sum(b_verdicts[v] for v in items)
    discordant_ab = sum(a_verdicts[v] and not b_verdicts[v] for v in items)
    discordant_ba = sum(b_verdicts[v] and not a_verdicts[v] for v in items)

    if test == MCNEMAR_EXACT:
        p = mcnemar_exact_p(discordant_ab, discordant_ba)
    else:
        p = two_proportion_p(yes_a, yes_b, len(items))
    return ComparisonResult(
        method_a=method_a,
        method_b=method_b,
        dimension=dimension,
        proportion_a=yes_a / len(items),
        proportion_b=yes_b / len(items),
        p_value=p,
        discordant=(discordant_ab, discordant_ba),
        test=test,
        zero_discordant=(discordant_ab + discordant_ba) == 0,
    )


@dataclass(frozen=True)
class DisaggregationCell:
    review_label: str
    method: str
    dimension: str
    mean: float
    sd: float
    n_raters: int
    n_items: int
    decoy_fraction: float


def disaggregate(study: Study, ratings: Iterable[Rating], partial: bool = False) -> list[DisaggregationCell]:
    """Mean and dispersion of per-rater yes-rates per (label, method, dimension).

    Each rater's yes-rate is computed over the sampled reviews carrying the
    label; the cell reports the mean and population standard deviation of
    those per-rater rates. Decoy-substituted statements stay in the data
    (their fraction is reported) so substituted real needs show up exactly
    as the attention-check pattern predicts.
    """
    by_key = _answer_lookup(study, ratings)
    labels = sorted({study.review_labels.get(v, "unlabeled") for v in study.sample})
    cells = []
    for label in labels:
        vids = [v for v in study.sample if study.review_labels.get(v, "unlabeled") == label]
        for method in study.design.methods:
            decoys = 0
            for vid in vids:
                ballot = study.ballot(f"{study.design.study_id}:{study.design.raters[0]}:{vid}")
                if any(s.method == method and s.is_decoy for s in ballot.hidden_assignment.values()):
                    decoys += 1
            for dim in study.design.dimensions:
                rates = []
                for rater in study.design.raters:
                    answers = []
                    for vid in vids:
                        ballot_id = f"{study.design.study_id}:{rater}:{vid}"
                        rating = by_key.get((rater, ballot_id))
                        if rating is None:
                            if partial:
                                continue
                            raise ValueError(f"missing rating for {ballot_id!r}")
                        ballot = study.ballot(ballot_id)
                        slot = next(s for s, src in ballot.hidden_assignment.items()
                                    if src.method == method)
                        answers.append(rating.answers[(slot, dim.dim_id)])
                    if answers:
                        rates.append(sum(answers) / len(answers))
                if not rates:
                    continue
                mean = sum(rates) / len(rates)
                sd = math.sqrt(sum((r - mean) ** 2 for r in rates) / len(rates))
                cells.append(DisaggregationCell(
                    review_label=label,
                    method=method,
                    dimension=dim.dim_id,
                    mean=mean,
                    sd=sd,
                    n_raters=len(rates),
                    n_items=len(vids),
                    decoy_fraction=decoys / len(vids) if vids else 0.0,
                ))
    return cells


# ---------------------------------------------------------------------------
# Persistence


def study_to_json(study: Study) -> dict:
    return {
        "design": {
            "study_id": study.design.study_id,
            "methods": study.design.methods,
            "raters": study.design.raters,
            "seed": study.design.seed,
            "dimensions": [
                {"dim_id": d.dim_id, "short_name": d.short_name, "instruction": d.instruction}
                for d in study.design.dimensions
            ],
            "sample_spec": study.design.sample_spec,
            "general_comment": study.design.general_comment,
        },
        "sample": study.sample,
        "review_labels": study.review_labels,
        "ballots": [
            {
                "ballot_id": b.ballot_id,
                "rater_id": b.rater_id,
                "verbatim_id": b.verbatim_id,
                "verbatim_text": b.verbatim_text,
                "statements": b.statements,
                "hidden_assignment": {
                    str(slot): {"method": src.method, "is_decoy": src.is_decoy}
                    for slot, src in b.hidden_assignment.items()
                },
                "review_label": b.review_label,
            }
            for b in study.ballots
        ],
    }


def study_from_json(data: dict) -> Study:
    d = data["design"]
    design = StudyDesign(
        study_id=d["study_id"],
        methods=list(d["methods"]),
        raters=list(d["raters"]),
        seed=int(d["seed"]),
        dimensions=[Dimension(x["dim_id"], x["short_name"], x["instruction"])
                    for x in d["dimensions"]],
        sample_spec={k: int(v) for k, v in d["sample_spec"].items()},
        general_comment=d.get("general_comment", DEFAULT_GENERAL_COMMENT),
    )
    ballots = [
        Ballot(
            ballot_id=b["ballot_id"],
            rater_id=b["rater_id"],
            verbatim_id=b["verbatim_id"],
            verbatim_text=b["verbatim_text"],
            statements=list(b["statements"]),
            hidden_assignment={
                int(slot): SlotSource(src["method"], bool(src["is_decoy"]))
                for slot, src in b["hidden_assignment"].items()
            },
            review_label=b["review_label"],
        )
        for b in data["ballots"]
    ]
    return Study(
        design=design,
        sample=list(data["sample"]),
        review_labels=dict(data["review_labels"]),
        ballots=ballots,
    )


def save_study(study: Study, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(study_to_json(study), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_study(path: str | Path) -> Study:
    with open(path, encoding="utf-8") as fh:
        return study_from_json(json.load(fh))
