"""Relational data model: schemas, databases, pointed databases, example sets
and direct products.

Elements are any hashable values; files produce strings.  Elements of an
m-fold product (m >= 2) are flat m-tuples of factor elements in factor order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as cartesian
from typing import Any, Hashable, Iterable, Iterator, Mapping, Sequence

Element = Hashable
Atom = tuple  # (relation name, tuple of elements)


class QbeError(Exception):
    """Base class for errors raised by the engine."""


class SchemaMismatch(QbeError, ValueError):
    pass


class ArityMismatch(QbeError, ValueError):
    pass


class EmptyPositiveExamples(QbeError, ValueError):
    pass


class PreconditionError(QbeError, ValueError):
    pass


class BudgetExceeded(QbeError):
    pass


def element_key(e: Any):
    """Total order over elements of mixed type (ints, strings, nested tuples)."""
    if isinstance(e, tuple):
        return (2, tuple(element_key(x) for x in e))
    if isinstance(e, bool):
        return (1, str(e))
    if isinstance(e, int):
        return (0, e)
    return (1, str(e))


def tuple_key(t: Sequence) -> tuple:
    return tuple(element_key(e) for e in t)


def sorted_elements(elems: Iterable) -> list:
    return sorted(elems, key=element_key)


def sorted_tuples(tuples: Iterable[Sequence]) -> list[tuple]:
    return sorted((tuple(t) for t in tuples), key=tuple_key)


def format_element(e: Any) -> str:
    if isinstance(e, tuple):
        return "(" + ",".join(format_element(x) for x in e) + ")"
    return str(e)


@dataclass(frozen=True)
class Schema:
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate relation names in {names}")
        for name, arity in self.relations:
            if not isinstance(arity, int) or arity < 1:
                raise ArityMismatch(f"relation {name} has arity {arity!r}; arities must be >= 1")
        object.__setattr__(self, "relations", tuple(sorted(self.relations)))

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Schema":
        return cls(tuple(mapping.items()))

    @cached_property
    def arities(self) -> dict[str, int]:
        return dict(self.relations)

    def __contains__(self, name: str) -> bool:
        return name in self.arities

    def arity(self, name: str) -> int:
        return self.arities[name]

    def compatible(self, other: "Schema") -> bool:
        """Shared relation names agree on arity."""
        mine, theirs = self.arities, other.arities
        return all(theirs[r] == a for r, a in mine.items() if r in theirs)

    def union(self, other: "Schema") -> "Schema":
        if not self.compatible(other):
            raise SchemaMismatch(f"incompatible schemas {self.arities} and {other.arities}")
        merged = dict(self.arities)
        merged.update(other.arities)
        return Schema.of(merged)


@dataclass(frozen=True)
class Database:
    """A finite set of atoms ``(R, (e1, ..., en))`` over a schema."""

    atoms: frozenset = frozenset()
    schema: Schema = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        atoms = frozenset((rel, tuple(args)) for rel, args in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if self.schema is None:
            inferred: dict[str, int] = {}
            for rel, args in atoms:
                if inferred.setdefault(rel, len(args)) != len(args):
                    raise ArityMismatch(f"relation {rel} used with arities {inferred[rel]} and {len(args)}")
            object.__setattr__(self, "schema", Schema.of(inferred))
        else:
            for rel, args in atoms:
                if rel not in self.schema:
                    raise SchemaMismatch(f"relation {rel} not in schema")
                if self.schema.arity(rel) != len(args):
                    raise ArityMismatch(f"atom {rel}{args} does not match arity {self.schema.arity(rel)}")

    @classmethod
    def of(cls, *atoms: Atom, schema: Schema | None = None) -> "Database":
        return cls(frozenset(atoms), schema)

    @cached_property
    def domain(self) -> frozenset:
        return frozenset(e for _, args in self.atoms for e in args)

    @cached_property
    def by_relation(self) -> dict[str, frozenset[tuple]]:
        out: dict[str, set] = {}
        for rel, args in self.atoms:
            out.setdefault(rel, set()).add(args)
        return {rel: frozenset(ts) for rel, ts in out.items()}

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(sorted(self.atoms, key=lambda a: (a[0], tuple_key(a[1]))))

    def tuples(self, n: int) -> Iterator[tuple]:
        """All n-tuples over the active domain in sorted order."""
        return cartesian(sorted_elements(self.domain), repeat=n)


@dataclass(frozen=True)
class PointedDatabase:
    """A database with a distinguished tuple.

    Point elements need not occur in the atoms: unsafe products produce
    exactly such points.
    """

    db: Database
    point: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))

    @property
    def arity(self) -> int:
        return len(self.point)

    @property
    def safe(self) -> bool:
        return all(e in self.db.domain for e in self.point)


@dataclass(frozen=True)
class ExampleSets:
    positive: frozenset
    negative: frozenset = frozenset()
    arity: int = 0

    def __post_init__(self):
        pos = frozenset(tuple(t) for t in self.positive)
        neg = frozenset(tuple(t) for t in self.negative)
        if not pos:
            raise EmptyPositiveExamples("the set of positive examples must be nonempty")
        arities = {len(t) for t in pos | neg}
        if len(arities) != 1:
            raise ArityMismatch(f"examples mix arities {sorted(arities)}")
        (n,) = arities
        if n < 1:
            raise ArityMismatch("examples must have arity >= 1")
        if self.arity and self.arity != n:
            raise ArityMismatch(f"declared arity {self.arity} but examples have arity {n}")
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)
        object.__setattr__(self, "arity", n)

    @classmethod
    def build(cls, positive: Iterable[Sequence], negative: Iterable[Sequence] = ()) -> "ExampleSets":
        return cls(frozenset(tuple(t) for t in positive), frozenset(tuple(t) for t in negative))

    def check_over(self, domain: Iterable) -> None:
        dom = set(domain)
        for t in sorted_tuples(self.positive | self.negative):
            missing = [e for e in t if e not in dom]
            if missing:
                raise PreconditionError(f"example {format_element(t)} mentions {missing} outside the domain")

    def sorted_positive(self) -> list[tuple]:
        return sorted_tuples(self.positive)

    def sorted_negative(self) -> list[tuple]:
        return sorted_tuples(self.negative)


def tensor(tuples: Sequence[Sequence]) -> tuple:
    """Componentwise pairing a1 (x) ... (x) am of equal-length tuples."""
    if len(tuples) == 1:
        return tuple(tuples[0])
    return tuple(zip(*tuples))


def product(factors: Sequence[PointedDatabase]) -> tuple[Database, tuple, bool]:
    """Direct product of pointed databases.

    Returns the product database, the product point and whether the product
    is safe (every point element occurs in some product atom).
    """
    if not factors:
        raise QbeError("product of an empty sequence of databases")
    schema = factors[0].db.schema
    arity = factors[0].arity
    for f in factors[1:]:
        if f.db.schema != schema:
            raise SchemaMismatch("product factors must share one schema")
        if f.arity != arity:
            raise ArityMismatch("product factors must have points of equal arity")
    if len(factors) == 1:
        return factors[0].db, factors[0].point, True
    atoms = set()
    for rel, _ in schema.relations:
        rows = [sorted_tuples(f.db.by_relation.get(rel, ())) for f in factors]
        for combo in cartesian(*rows):
            atoms.add((rel, tuple(zip(*combo))))
    db = Database(frozenset(atoms), schema)
    point = tensor([f.point for f in factors])
    return db, point, all(e in db.domain for e in point)


def pointed_product(factors: Sequence[PointedDatabase]) -> PointedDatabase:
    db, point, _ = product(factors)
    return PointedDatabase(db, point)


def projection(element: Any, coordinate: int) -> Any:
    """Component ``coordinate`` of a product element.

    Elements that are not tuples are depth-1 and project to themselves at
    coordinate 0.
    """
    if not isinstance(element, tuple):
        if coordinate != 0:
            raise IndexError(f"coordinate {coordinate} out of range for depth-1 element {element!r}")
        return element
    if not 0 <= coordinate < len(element):
        raise IndexError(f"coordinate {coordinate} out of range for {element!r}")
    return element[coordinate]


def flatten(element: Any) -> tuple:
    """Flatten nested product elements into a tuple of base elements."""
    if isinstance(element, tuple):
        return tuple(x for part in element for x in flatten(part))
    return (element,)


def rename(db: Database, mapping: Mapping) -> Database:
    return Database(frozenset((r, tuple(mapping[e] for e in args)) for r, args in db.atoms), db.schema)


class Budget:
    """Cooperative wall-clock budget, checked between independent subtests."""

    def __init__(self, seconds: float | None = None):
        self.seconds = seconds
        self.started = time.monotonic()

    def check(self) -> None:
        if self.seconds is not None and time.monotonic() - self.started > self.seconds:
            raise BudgetExceeded(f"time budget of {self.seconds}s exceeded")

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started
