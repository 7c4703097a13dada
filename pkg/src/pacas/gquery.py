"""Generalized queries: select-project queries paired with output levels.

Answers are computed at the ground storage level and then lifted cell-wise to
the requested levels, with set semantics throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import hierarchy as hi
from .relation import GeneralizedRelation


@dataclass(frozen=True)
class GeneralizedQuery:
    """Conjunctive equality selection + projection + per-column output levels."""

    projection: tuple[str, ...]
    selection: tuple[tuple[str, str], ...]
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.levels) != len(self.projection):
            raise ValueError("levels must align with the projection")

    def fingerprint(self) -> str:
        return json.dumps(
            {
                "project": list(self.projection),
                "select": sorted(self.selection),
                "levels": list(self.levels),
            },
            separators=(",", ":"),
            sort_keys=True,
        )


def eval_ground(q: GeneralizedQuery, relation: GeneralizedRelation) -> frozenset[tuple[str, ...]]:
    """Distinct projected tuples matching the selection by exact equality."""
    for attr in q.projection:
        relation.schema.require(attr)
    for attr, _ in q.selection:
        relation.schema.require(attr)
    out = set()
    for row in relation.rows:
        if all(row.values[attr] == value for attr, value in q.selection):
            out.add(tuple(row.values[attr] for attr in q.projection))
    return frozenset(out)


def eval_gq(q: GeneralizedQuery, relation: GeneralizedRelation) -> frozenset[tuple[str, ...]]:
    """Ground answers lifted to the query's levels, deduplicated as a set."""
    ground = eval_ground(q, relation)
    lifted = set()
    for answer in ground:
        lifted.add(
            tuple(
                hi.generalize_to(relation.hierarchies.for_attribute(attr), value, level)
                for attr, value, level in zip(q.projection, answer, q.levels)
            )
        )
    return frozenset(lifted)


def xgroup_query(
    row, x: tuple[str, ...], y: tuple[str, ...], levels: tuple[int, ...]
) -> GeneralizedQuery:
    """Probe query binding the X attributes to the row's values and projecting
    Y at the given levels."""
    return GeneralizedQuery(
        projection=tuple(y),
        selection=tuple((attr, row.values[attr]) for attr in x),
        levels=tuple(levels),
    )
