"""Service-provider session: request translation, quoting and query answering.

A value request (tuple, attribute, level) is translated through a matching
dependency into a generalized query against the curated relation. Quotes are
free and side-effect free; paying commits the sale, shrinks the support set
and returns a single value at the requested level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .anonymity import AnonymitySpec
from .errors import NoApplicableMD, NoMatch, QuoteMismatch, UnsafeRequest, UnknownValue
from .gquery import GeneralizedQuery, eval_ground
from .hierarchy import generalize_to
from .pricing import SupportSet, commit_sale, is_infinite, safe_price
from .relation import MD, GeneralizedRelation


@dataclass(frozen=True)
class ValueRequest:
    tuple_id: str
    attribute: str
    level: int

    def to_json(self) -> dict:
        return {"tuple_id": self.tuple_id, "attr": self.attribute, "level": self.level}

    @classmethod
    def from_json(cls, doc: Mapping) -> "ValueRequest":
        return cls(str(doc["tuple_id"]), str(doc["attr"]), int(doc["level"]))


def translate_request(
    request: ValueRequest, client_tuple: Mapping[str, str], mds: Sequence[MD]
) -> GeneralizedQuery:
    """Build the provider-side query for a request using the first MD whose
    target covers the requested attribute."""
    for md in mds:
        client_attr, provider_attr = md.target
        if client_attr != request.attribute:
            continue
        try:
            selection = tuple(
                (sp_attr, client_tuple[cl_attr]) for cl_attr, sp_attr in md.match
            )
        except KeyError as exc:
            raise UnknownValue(f"client tuple lacks match attribute {exc}") from exc
        return GeneralizedQuery(
            projection=(provider_attr,),
            selection=selection,
            levels=(request.level,),
        )
    raise NoApplicableMD(f"no matching dependency targets {request.attribute!r}")


@dataclass
class ProviderSession:
    """Per-client pricing and answering state over one curated relation."""

    master: GeneralizedRelation
    support: SupportSet
    spec: AnonymitySpec
    mds: tuple[MD, ...]
    ledger: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.master.is_ground():
            raise UnknownValue("the curated relation must be ground")

    @property
    def total_weight(self) -> int:
        return self.support.total_weight

    def _validate(self, request: ValueRequest) -> None:
        for md in self.mds:
            if md.target[0] == request.attribute:
                provider_attr = md.target[1]
                height = self.master.hierarchies.for_attribute(provider_attr).height
                if not 0 <= request.level <= height:
                    raise UnknownValue(
                        f"level {request.level} outside [0, {height}] for {provider_attr!r}"
                    )
                return

    def quote(self, request: ValueRequest, client_tuple: Mapping[str, str]):
        self._validate(request)
        q = translate_request(request, client_tuple, self.mds)
        return q, safe_price(q, self.master, self.support, self.spec)

    def ask_price(self, request: ValueRequest, client_tuple: Mapping[str, str]):
        """Quote a request; records the quote, never mutates the support set."""
        q, (quote, _) = self.quote(request, client_tuple)
        self.ledger.append(
            {
                "op": "quote",
                "request": request.to_json(),
                "fingerprint": quote.query_fingerprint,
                "price": "infinite" if quote.infinite else quote.amount,
            }
        )
        return quote.amount

    def pay(self, price, request: ValueRequest, client_tuple: Mapping[str, str]):
        """Execute a purchase at the currently quoted price.

        Returns (value, level). The answer is the matched value with the
        largest ground support, ties broken lexicographically. The sale is
        committed only after a non-empty answer is found, so failed purchases
        cost nothing and leave no trace in the support set.
        """
        q, (quote, partition) = self.quote(request, client_tuple)
        if quote.infinite:
            raise UnsafeRequest(f"request {request} cannot be answered safely")
        if is_infinite(price) or price != quote.amount:
            raise QuoteMismatch(f"offered {price!r}, current quote is {quote.amount!r}")
        provider_attr = q.projection[0]
        h = self.master.hierarchies.for_attribute(provider_attr)
        matches = eval_ground(
            GeneralizedQuery(q.projection, q.selection, (0,)), self.master
        )
        if not matches:
            raise NoMatch(f"no curated tuple matches request {request}")
        counts: dict[str, int] = {}
        for (ground_value,) in matches:
            lifted = generalize_to(h, ground_value, request.level)
            support_size = sum(
                1
                for row in self.master.rows
                if all(row.values[a] == v for a, v in q.selection)
                and generalize_to(h, row.values[provider_attr], request.level) == lifted
            )
            counts[lifted] = support_size
        best = max(sorted(counts), key=lambda v: counts[v])
        commit_sale(self.support, partition)
        self.ledger.append(
            {
                "op": "sale",
                "request": request.to_json(),
                "fingerprint": quote.query_fingerprint,
                "price": quote.amount,
                "value": best,
                "level": request.level,
            }
        )
        return best, request.level
