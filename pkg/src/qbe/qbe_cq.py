"""QBE and definability tests for CQ, TW(k), UCQ and UTW(k) over a relational
database, canonical explanations and evaluation of TW(k)-explanations.

Class parameters are treewidths: the TW(k) and UTW(k) entry points play the
(k+1)-pebble game.  The ``*_pebble`` tests take the game parameter directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .core import (
    Budget,
    Database,
    EmptyPositiveExamples,
    ExampleSets,
    PointedDatabase,
    PreconditionError,
    QbeError,
    pointed_product,
    product,
    sorted_tuples,
)
from .homsolver import evaluate_cq, find_hom
from .pebble import RelationalArena, pebble_game

UNSAFE = "unsafe-product"
FAILING_NEGATIVE = "failing-negative"
FAILING_PAIR = "failing-pair"


@dataclass(frozen=True)
class Witness:
    kind: str
    negative: tuple | None = None
    positive: tuple | None = None
    # None for game-based tests: a won game carries no single assignment
    assignment: dict | None = None


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    witness: Witness | None = None
    checked: int = 0

    def __post_init__(self):
        if self.accepted and self.witness is not None:
            raise ValueError("an accepting verdict carries no witness")
        if not self.accepted and self.witness is None:
            raise ValueError("a rejecting verdict needs a witness")

    def __bool__(self) -> bool:
        return self.accepted


@dataclass(frozen=True)
class CanonicalExplanation:
    kind: str  # "cq" or "ucq"
    disjuncts: tuple[PointedDatabase, ...]

    @property
    def query(self) -> PointedDatabase:
        if self.kind != "cq":
            raise QbeError("a UCQ explanation has no single query")
        return self.disjuncts[0]

    def evaluate(self, db: Database) -> set[tuple]:
        out: set[tuple] = set()
        for q in self.disjuncts:
            out |= evaluate_cq(q, db)
        return out


def _positive(positive: Iterable, db: Database | None = None) -> list[tuple]:
    pos = sorted_tuples(positive)
    if not pos:
        raise EmptyPositiveExamples("the set of positive examples must be nonempty")
    ExampleSets.build(pos).check_over(db.domain if db is not None else {e for t in pos for e in t})
    return pos


def _check_k(k: int) -> None:
    if k < 2:
        raise QbeError(f"the pebble game parameter must be >= 2, got {k}")


def _complement(db: Database, positive: Iterable[tuple]) -> Iterator[tuple]:
    pos = set(positive)
    n = len(next(iter(pos)))
    return (t for t in db.tuples(n) if t not in pos)


def _tick(budget: Budget | None) -> None:
    if budget is not None:
        budget.check()


def _synchronized(db: Database, positive: list[tuple], negatives: Iterable[tuple],
                  maps: Callable[[PointedDatabase, PointedDatabase], object],
                  budget: Budget | None) -> Verdict:
    prod_db, point, safe = product([PointedDatabase(db, a) for a in positive])
    if not safe:
        return Verdict(False, Witness(UNSAFE))
    src = PointedDatabase(prod_db, point)
    checked = 0
    for b in negatives:
        _tick(budget)
        checked += 1
        found = maps(src, PointedDatabase(db, b))
        if found is not None and found is not False:
            return Verdict(False, Witness(FAILING_NEGATIVE, negative=b,
                                          assignment=found if isinstance(found, dict) else None), checked)
    return Verdict(True, checked=checked)


def _desynchronized(db: Database, positive: list[tuple], negatives: list[tuple],
                    maps: Callable[[PointedDatabase, PointedDatabase], object],
                    budget: Budget | None) -> Verdict:
    checked = 0
    for b in negatives:
        for a in positive:
            _tick(budget)
            checked += 1
            found = maps(PointedDatabase(db, a), PointedDatabase(db, b))
            if found is not None and found is not False:
                return Verdict(False, Witness(FAILING_PAIR, negative=b, positive=a,
                                              assignment=found if isinstance(found, dict) else None), checked)
    return Verdict(True, checked=checked)


def _game(k: int):
    arenas: dict = {}

    def play(src: PointedDatabase, dst: PointedDatabase) -> bool:
        key = id(src.db), src.point
        if key not in arenas:
            arenas[key] = (src, RelationalArena(src))
        return arenas[key][1].play(dst, k)[0]

    return play


def qbe_test_cq(db: Database, ex: ExampleSets, budget: Budget | None = None) -> Verdict:
    """Safe product of the positives and no homomorphism into any negative."""
    ex.check_over(db.domain)
    return _synchronized(db, ex.sorted_positive(), ex.sorted_negative(), find_hom, budget)


def definability_test_cq(db: Database, positive: Iterable, budget: Budget | None = None) -> Verdict:
    pos = _positive(positive, db)
    return _synchronized(db, pos, _complement(db, pos), find_hom, budget)


def qbe_test_pebble(db: Database, ex: ExampleSets, k: int, budget: Budget | None = None) -> Verdict:
    """The k-pebble QBE test (game parameter k)."""
    _check_k(k)
    ex.check_over(db.domain)
    return _synchronized(db, ex.sorted_positive(), ex.sorted_negative(), _game(k), budget)


def definability_test_pebble(db: Database, positive: Iterable, k: int, budget: Budget | None = None) -> Verdict:
    _check_k(k)
    pos = _positive(positive, db)
    return _synchronized(db, pos, _complement(db, pos), _game(k), budget)


def qbe_test_desync(db: Database, ex: ExampleSets, budget: Budget | None = None) -> Verdict:
    """No positive maps homomorphically onto any negative; no safety clause."""
    ex.check_over(db.domain)
    return _desynchronized(db, ex.sorted_positive(), ex.sorted_negative(), find_hom, budget)


def definability_test_desync(db: Database, positive: Iterable, budget: Budget | None = None) -> Verdict:
    pos = _positive(positive, db)
    return _desynchronized(db, pos, list(_complement(db, pos)), find_hom, budget)


def qbe_test_desync_pebble(db: Database, ex: ExampleSets, k: int, budget: Budget | None = None) -> Verdict:
    _check_k(k)
    ex.check_over(db.domain)
    return _desynchronized(db, ex.sorted_positive(), ex.sorted_negative(), _game(k), budget)


def definability_test_desync_pebble(db: Database, positive: Iterable, k: int,
                                    budget: Budget | None = None) -> Verdict:
    _check_k(k)
    pos = _positive(positive, db)
    return _desynchronized(db, pos, list(_complement(db, pos)), _game(k), budget)


# Treewidth-facing entry points.

def qbe_test_tw(db: Database, ex: ExampleSets, k: int, budget: Budget | None = None) -> Verdict:
    """Is there a TW(k)-explanation?  Plays the (k+1)-pebble game."""
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return qbe_test_pebble(db, ex, k + 1, budget)


def definability_test_tw(db: Database, positive: Iterable, k: int, budget: Budget | None = None) -> Verdict:
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return definability_test_pebble(db, positive, k + 1, budget)


def qbe_test_utw(db: Database, ex: ExampleSets, k: int, budget: Budget | None = None) -> Verdict:
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return qbe_test_desync_pebble(db, ex, k + 1, budget)


def definability_test_utw(db: Database, positive: Iterable, k: int, budget: Budget | None = None) -> Verdict:
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return definability_test_desync_pebble(db, positive, k + 1, budget)


def canonical_explanation(db: Database, ex: ExampleSets, kind: str = "cq") -> CanonicalExplanation:
    """The product query (CQ) or the union of the positives (UCQ).

    Raises PreconditionError when the corresponding test rejects.
    """
    if kind == "cq":
        if not qbe_test_cq(db, ex):
            raise PreconditionError("the QBE test for CQs rejects; no canonical CQ explanation")
        return CanonicalExplanation("cq", (pointed_product([PointedDatabase(db, a) for a in ex.sorted_positive()]),))
    if kind == "ucq":
        if not qbe_test_desync(db, ex):
            raise PreconditionError("the desynchronized QBE test rejects; no canonical UCQ explanation")
        return CanonicalExplanation("ucq", tuple(PointedDatabase(db, a) for a in ex.sorted_positive()))
    raise ValueError(f"unknown explanation class {kind!r}")


def canonical_definition(db: Database, positive: Iterable, kind: str = "cq") -> CanonicalExplanation:
    pos = _positive(positive, db)
    if kind == "cq":
        if not definability_test_cq(db, pos):
            raise PreconditionError("the definability test for CQs rejects")
        return CanonicalExplanation("cq", (pointed_product([PointedDatabase(db, a) for a in pos]),))
    if kind == "ucq":
        if not definability_test_desync(db, pos):
            raise PreconditionError("the desynchronized definability test rejects")
        return CanonicalExplanation("ucq", tuple(PointedDatabase(db, a) for a in pos))
    raise ValueError(f"unknown definition class {kind!r}")


def tw_evaluation_set(db: Database, positive: Iterable, game_k: int, batched: bool = True) -> set[tuple]:
    """All n-tuples b over the domain with the positives' product ->_game_k (db, b)."""
    pos = _positive(positive, db)
    src = pointed_product([PointedDatabase(db, a) for a in pos])
    candidates = list(db.tuples(len(pos[0])))
    if batched:
        arena = RelationalArena(src)
        wins = [arena.play(PointedDatabase(db, b), game_k)[0] for b in candidates]
    else:
        wins = [pebble_game(src, PointedDatabase(db, b), game_k) for b in candidates]
    return {b for b, won in zip(candidates, wins) if won}


def evaluate_tw_explanation(db: Database, ex: ExampleSets, k: int) -> set[tuple]:
    """Answers of some TW(k)-explanation, computed without building the query."""
    if not qbe_test_tw(db, ex, k):
        raise PreconditionError(f"no TW({k})-explanation exists; the {k + 1}-pebble QBE test rejects")
    return tw_evaluation_set(db, ex.positive, k + 1)


def evaluate_utw_explanation(db: Database, ex: ExampleSets, k: int) -> set[tuple]:
    """Answers of a UTW(k)-explanation: the union of per-positive game closures."""
    if not qbe_test_utw(db, ex, k):
        raise PreconditionError(f"no UTW({k})-explanation exists")
    out: set[tuple] = set()
    for a in ex.sorted_positive():
        out |= tw_evaluation_set(db, [a], k + 1)
    return out
