"""Homomorphism checking and backtracking search between (pointed) databases."""

from __future__ import annotations

from collections import Counter
from typing import Iterator, Mapping

from .core import (
    ArityMismatch,
    Database,
    PointedDatabase,
    SchemaMismatch,
    element_key,
    sorted_elements,
)


def check_partial_hom(src: Database, dst: Database, mapping: Mapping) -> bool:
    """Every src atom whose elements are all mapped has its image in dst."""
    for rel, args in src.atoms:
        if all(e in mapping for e in args):
            if (rel, tuple(mapping[e] for e in args)) not in dst.atoms:
                return False
    return True


def bind_point(src: PointedDatabase, dst: PointedDatabase) -> dict | None:
    """The map a_i -> b_i, or None when it is not a function."""
    binding: dict = {}
    for a, b in zip(src.point, dst.point):
        if binding.setdefault(a, b) != b:
            return None
    return binding


def _check_compatible(src: PointedDatabase, dst: PointedDatabase) -> None:
    if not src.db.schema.compatible(dst.db.schema):
        raise SchemaMismatch(f"schemas {src.db.schema.arities} and {dst.db.schema.arities} disagree")
    if src.arity != dst.arity:
        raise ArityMismatch(f"point arities {src.arity} and {dst.arity} differ")


class _Search:
    """Backtracking over source elements with fail-first static ordering."""

    def __init__(self, src: Database, dst: Database, binding: dict):
        self.src, self.dst = src, dst
        self.binding = binding
        occurrences = Counter(e for _, args in src.atoms for e in args)
        free = [e for e in src.domain if e not in binding]
        # descending degree, ties by element order
        self.order = sorted(free, key=lambda e: (-occurrences[e], element_key(e)))
        self.atoms_of: dict = {e: [] for e in src.domain}
        for atom in src.atoms:
            for e in set(atom[1]):
                self.atoms_of[e].append(atom)
        targets = sorted_elements(dst.domain)
        self.candidates = {}
        for e in self.order:
            allowed = set(targets)
            for rel, args in self.atoms_of[e]:
                rows = dst.by_relation.get(rel, ())
                for pos, x in enumerate(args):
                    if x == e:
                        allowed &= {row[pos] for row in rows}
            self.candidates[e] = [t for t in targets if t in allowed]

    def _consistent(self, assignment: dict, e) -> bool:
        for rel, args in self.atoms_of[e]:
            rows = self.dst.by_relation.get(rel)
            if not rows:
                return False
            if all(x in assignment for x in args):
                if tuple(assignment[x] for x in args) not in rows:
                    return False
                continue
            # some dst row must agree with the assigned positions
            fixed = [(i, assignment[x]) for i, x in enumerate(args) if x in assignment]
            if not any(all(row[i] == v for i, v in fixed) and _repeats_ok(args, row) for row in rows):
                return False
        return True

    def initial_ok(self) -> bool:
        if not check_partial_hom(self.src, self.dst, self.binding):
            return False
        return all(self.candidates[e] for e in self.order)

    def solutions(self) -> Iterator[dict]:
        if not self.initial_ok():
            return
        assignment = dict(self.binding)
        yield from self._extend(assignment, 0)

    def _extend(self, assignment: dict, depth: int) -> Iterator[dict]:
        if depth == len(self.order):
            yield dict(assignment)
            return
        e = self.order[depth]
        for t in self.candidates[e]:
            assignment[e] = t
            if self._consistent(assignment, e):
                yield from self._extend(assignment, depth + 1)
            del assignment[e]


def _repeats_ok(args: tuple, row: tuple) -> bool:
    seen: dict = {}
    for x, v in zip(args, row):
        if seen.setdefault(x, v) != v:
            return False
    return True


def iter_homs(src: PointedDatabase, dst: PointedDatabase) -> Iterator[dict]:
    """Enumerate homomorphisms (D, a) -> (D', b) as dicts.

    Point elements that occur in no atom are included with their forced image.
    """
    _check_compatible(src, dst)
    binding = bind_point(src, dst)
    if binding is None:
        return iter(())
    return _Search(src.db, dst.db, binding).solutions()


def find_hom(src: PointedDatabase, dst: PointedDatabase) -> dict | None:
    """Some homomorphism from src to dst pinning the point, or None."""
    return next(iter_homs(src, dst), None)


def evaluate_cq(query: PointedDatabase, data: Database) -> set[tuple]:
    """Answers of the CQ whose canonical database and free tuple are ``query``.

    Free variables that occur in no atom range over the active domain of
    ``data``.
    """
    _check_compatible(query, PointedDatabase(data, query.point))
    answers = set()
    for candidate in data.tuples(query.arity):
        if find_hom(query, PointedDatabase(data, candidate)) is not None:
            answers.add(candidate)
    return answers
