"""Support-set construction and safe query pricing.

The buyer's knowledge about the provider relation is modeled by a finite
support set of neighbor instances, each stored as a one-delta edit of the
reference. A query's price is the total weight of members whose answer
disagrees with the true answer; a sale permanently removes those members.
Before quoting a finite price, the gate checks that every tuple's X-group
keeps at least k ground Y-candidates across the agreeing members, so a paid
answer never narrows a sensitive linkage below k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .anonymity import AnonymitySpec
from .errors import EmptyRelation, PacasError, StalePartition
from .gquery import GeneralizedQuery, eval_gq
from .relation import GeneralizedRelation, Row
from .rng import child_rng


class Infinite:
    """Sentinel for unsafe quotes; deliberately supports no arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = Infinite()


def is_infinite(amount) -> bool:
    return isinstance(amount, Infinite)


@dataclass(frozen=True)
class Member:
    """One neighbor instance, stored as a delta against the reference."""

    kind: str  # update | insert | delete
    tid: str
    attr: str | None = None
    value: str | None = None
    payload: tuple[tuple[str, str], ...] | None = None
    weight: int = 1

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind, "tuple_id": self.tid, "weight": self.weight}
        if self.kind == "update":
            doc["attr"] = self.attr
            doc["value"] = self.value
        elif self.kind == "insert":
            doc["values"] = dict(self.payload or ())
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Member":
        kind = doc["kind"]
        if kind == "update":
            return cls(kind, doc["tuple_id"], attr=doc["attr"], value=doc["value"],
                       weight=int(doc.get("weight", 1)))
        if kind == "insert":
            return cls(kind, doc["tuple_id"],
                       payload=tuple(sorted(doc["values"].items())),
                       weight=int(doc.get("weight", 1)))
        if kind == "delete":
            return cls(kind, doc["tuple_id"], weight=int(doc.get("weight", 1)))
        raise PacasError(f"unknown member kind {kind!r}")


@dataclass(frozen=True)
class PriceQuote:
    amount: object  # int or INFINITE
    query_fingerprint: str

    @property
    def infinite(self) -> bool:
        return is_infinite(self.amount)


@dataclass(frozen=True)
class Partition:
    """Result of splitting the support set by agreement with a query answer."""

    survivors: tuple[Member, ...]
    conflicts: tuple[Member, ...]
    snapshot: tuple[Member, ...]


class SupportSet:
    def __init__(self, reference: GeneralizedRelation, members: Iterable[Member], seed: int = 0):
        self.reference = reference
        self.members: list[Member] = list(members)
        self.seed = seed
        self._materialized: dict[Member, GeneralizedRelation] = {}
        self._group_index: dict[tuple, dict] = {}

    def __len__(self) -> int:
        return len(self.members)

    @property
    def total_weight(self) -> int:
        return sum(m.weight for m in self.members)

    def materialize(self, member: Member) -> GeneralizedRelation:
        inst = self._materialized.get(member)
        if inst is None:
            inst = _apply_delta(self.reference, member)
            self._materialized[member] = inst
        return inst

    def group_index(self, member: Member, x: tuple[str, ...], y: tuple[str, ...]) -> dict:
        """X-vector -> set of ground Y-vectors within one member instance."""
        key = (member, x, y)
        index = self._group_index.get(key)
        if index is None:
            index = {}
            for row in self.materialize(member).rows:
                xvec = tuple(row.values[a] for a in x)
                index.setdefault(xvec, set()).add(tuple(row.values[a] for a in y))
            self._group_index[key] = index
        return index

    def to_json(self) -> dict:
        return {"seed": self.seed, "members": [m.to_json() for m in self.members]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def from_json(cls, doc: dict, reference: GeneralizedRelation) -> "SupportSet":
        return cls(reference, [Member.from_json(m) for m in doc["members"]],
                   seed=int(doc.get("seed", 0)))

    @classmethod
    def load(cls, path: str | Path, reference: GeneralizedRelation) -> "SupportSet":
        return cls.from_json(json.loads(Path(path).read_text()), reference)


def _apply_delta(reference: GeneralizedRelation, member: Member) -> GeneralizedRelation:
    rows = [Row(r.tid, dict(r.values)) for r in reference.rows]
    if member.kind == "update":
        for row in rows:
            if row.tid == member.tid:
                row.values[member.attr] = member.value
                break
        else:
            raise PacasError(f"update targets missing tuple {member.tid!r}")
    elif member.kind == "delete":
        rows = [r for r in rows if r.tid != member.tid]
    elif member.kind == "insert":
        rows.append(Row(member.tid, dict(member.payload or ())))
    else:
        raise PacasError(f"unknown member kind {member.kind!r}")
    return GeneralizedRelation(schema=reference.schema, rows=rows,
                               hierarchies=reference.hierarchies)


def build_support_set(
    reference: GeneralizedRelation,
    size: int,
    seed: int,
    mix: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> SupportSet:
    """Sample `size` distinct seeded neighbors of the reference relation.

    The mix gives the probability of single-cell updates, tuple inserts and
    tuple deletes; replacement values come from the ground domain observed in
    the reference column.
    """
    if not reference.rows:
        raise EmptyRelation("cannot build a support set over an empty relation")
    if size < 1:
        raise ValueError("support set size must be at least 1")
    rng = child_rng(seed, "support")
    attrs = reference.schema.attributes
    domains = {
        a: sorted({row.values[a] for row in reference.rows}) for a in attrs
    }
    members: list[Member] = []
    seen: set = set()
    insert_counter = 0
    attempts = 0
    while len(members) < size:
        attempts += 1
        if attempts > 200 * size:
            raise PacasError("exhausted distinct neighbors for the requested support size")
        roll = rng.random()
        if roll < mix[0]:
            row = rng.choice(reference.rows)
            attr = rng.choice(attrs)
            choices = [v for v in domains[attr] if v != row.values[attr]]
            if not choices:
                continue
            member = Member("update", row.tid, attr=attr, value=rng.choice(choices))
            signature = ("update", member.tid, member.attr, member.value)
        elif roll < mix[0] + mix[1]:
            insert_counter += 1
            payload = tuple(sorted((a, rng.choice(domains[a])) for a in attrs))
            member = Member("insert", f"+{insert_counter}", payload=payload)
            signature = ("insert", payload)
        else:
            row = rng.choice(reference.rows)
            member = Member("delete", row.tid)
            signature = ("delete", row.tid)
        if signature in seen:
            continue
        seen.add(signature)
        members.append(member)
    return SupportSet(reference, members, seed=seed)


def baseline_price(
    q: GeneralizedQuery,
    relation: GeneralizedRelation,
    support: SupportSet,
    weight: Callable[[Member], int] | None = None,
) -> int:
    """Weighted-cover price: total weight of members answering differently."""
    w = weight or (lambda m: m.weight)
    truth = eval_gq(q, relation)
    return sum(w(m) for m in support.members if eval_gq(q, support.materialize(m)) != truth)


def safe_price(
    q: GeneralizedQuery,
    relation: GeneralizedRelation,
    support: SupportSet,
    spec: AnonymitySpec,
    weight: Callable[[Member], int] | None = None,
) -> tuple[PriceQuote, Partition]:
    """Price a query and gate it on the buyer's residual uncertainty.

    Members disagreeing with the true answer form the conflict set and sum to
    the price. A finite quote additionally requires, for every tuple of the
    true relation, at least k ground Y-candidates for its X-group across the
    agreeing members. INFINITE quotes are values, not errors, and must stay
    side-effect free.
    """
    w = weight or (lambda m: m.weight)
    truth = eval_gq(q, relation)
    survivors: list[Member] = []
    conflicts: list[Member] = []
    for member in support.members:
        if eval_gq(q, support.materialize(member)) == truth:
            survivors.append(member)
        else:
            conflicts.append(member)
    partition = Partition(tuple(survivors), tuple(conflicts), tuple(support.members))
    fingerprint = q.fingerprint()
    price = sum(w(m) for m in conflicts)
    for row in relation.rows:
        xvec = tuple(row.values[a] for a in spec.x)
        candidates: set = set()
        for member in survivors:
            candidates |= support.group_index(member, spec.x, spec.y).get(xvec, set())
            if len(candidates) >= spec.k:
                break
        if len(candidates) < spec.k:
            return PriceQuote(INFINITE, fingerprint), partition
    return PriceQuote(price, fingerprint), partition


def commit_sale(support: SupportSet, partition: Partition) -> SupportSet:
    """Remove the conflict members after a paid query; survivors remain."""
    if partition.snapshot != tuple(support.members):
        raise StalePartition("support set changed since this quote was issued")
    support.members = list(partition.survivors)
    return support
