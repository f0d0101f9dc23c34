"""Near-duplicate grouping to assist human winnowing.

Groups similar customer-need statements with token-set Jaccard similarity
and single-linkage so an analyst can review redundancy candidates. The
output is a worksheet, never a merge decision; winnowing stays a human
judgment.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

STOPWORDS = frozenset("""
a an and are as at be by for from has have i in is it its my of on or so
that the their this to was we will with you your
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class DuplicateGroup:
    group_id: str
    member_ids: tuple[str, ...]
    representative_id: str
    pairwise_scores: dict[tuple[str, str], float]

    @property
    def max_similarity(self) -> float:
        return max(self.pairwise_scores.values(), default=0.0)


def tokenize(statement: str) -> frozenset[str]:
    return frozenset(t for t in _TOKEN_RE.findall(statement.casefold()) if t not in STOPWORDS)


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def group_near_duplicates(
    statements: dict[str, str] | list[str],
    threshold: float = 0.6,
) -> list[DuplicateGroup]:
    """Partition statements into single-linkage groups at the given threshold.

    Accepts either {statement_id: text} or a plain list (ids are assigned
    by position). Two statements link when their stopword-filtered token
    sets have Jaccard similarity >= threshold; connected components form
    the groups. The representative is the member with the largest summed
    similarity to its group, ties broken by id so the result is invariant
    to input order.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if isinstance(statements, dict):
        items = statements
    else:
        width = len(str(max(len(statements) - 1, 0)))
        items = {f"s{idx:0{width}d}": text for idx, text in enumerate(statements)}

    ids = sorted(items)
    tokens = {sid: tokenize(items[sid]) for sid in ids}

    parent = {sid: sid for sid in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    scores: dict[tuple[str, str], float] = {}
    for i, left in enumerate(ids):
        for right in ids[i + 1:]:
            score = jaccard(tokens[left], tokens[right])
            scores[(left, right)] = score
            if score >= threshold:
                ra, rb = find(left), find(right)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    members: dict[str, list[str]] = {}
    for sid in ids:
        members.setdefault(find(sid), []).append(sid)

    groups = []
    for root in sorted(members):
        group_ids = sorted(members[root])
        group_scores = {
            (a, b): scores[(a, b)]
            for i, a in enumerate(group_ids) for b in group_ids[i + 1:]
        }
        representative = min(
            group_ids,
            key=lambda sid: (-sum(
                group_scores.get((min(sid, other), max(sid, other)), 0.0)
                for other in group_ids if other != sid
            ), sid),
        )
        groups.append(DuplicateGroup(
            group_id=f"g:{root}",
            member_ids=tuple(group_ids),
            representative_id=representative,
            pairwise_scores=group_scores,
        ))
    return groups


def write_worksheet(
    groups: list[DuplicateGroup],
    statements: dict[str, str],
    path: str | Path,
) -> None:
    """Review worksheet: group id, representative flag, text, max in-group similarity."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_id", "representative", "statement_id", "statement", "max_similarity"])
        for group in groups:
            for sid in group.member_ids:
                best = max(
                    (score for pair, score in group.pairwise_scores.items() if sid in pair),
                    default=0.0,
                )
                writer.writerow([
                    group.group_id,
                    "yes" if sid == group.representative_id else "no",
                    sid,
                    statements[sid],
                    f"{best:.4f}",
                ])
