"""Existential k-pebble game via greatest fixpoint over partial homomorphisms.

A position of the game is a partial map from at most k source elements to
target elements (pebbles stacked on one element collapse).  The duplicator
wins iff the empty map survives the deletion of every map that either has a
one-pebble restriction outside the family, or has fewer than k pebbles and
some source element it cannot be extended to.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

from .core import PointedDatabase, QbeError, sorted_elements
from .homsolver import _check_compatible, bind_point, check_partial_hom

# A partial map over interned ids: tuple of (src, dst) pairs sorted by src.
IMap = tuple


def _insert(f: IMap, c: int, d: int) -> IMap:
    out = list(f)
    for i, (x, _) in enumerate(out):
        if x > c:
            out.insert(i, (c, d))
            return tuple(out)
    out.append((c, d))
    return tuple(out)


def solve_family(
    n_src: int,
    n_dst: int,
    k: int,
    forced: dict[int, int],
    compatible: Callable[[dict, int, int], bool],
    order: str = "fifo",
) -> set[IMap]:
    """Greatest family of admissible partial maps closed under the game rules.

    ``compatible(assign, c, d)`` decides whether adding c -> d to an admissible
    ``assign`` (which already holds the point binding) keeps it admissible.
    ``forced`` pins the images of point elements.
    """
    if order not in ("fifo", "lifo"):
        raise ValueError(f"unknown deletion order {order!r}")
    base = dict(forced)

    def images(c: int):
        return (forced[c],) if c in forced else range(n_dst)

    family: set[IMap] = {()}
    level = [()]
    for _ in range(k):
        nxt = []
        for f in level:
            start = f[-1][0] + 1 if f else 0
            assign = dict(base)
            assign.update(f)
            for c in range(start, n_src):
                for d in images(c):
                    if compatible(assign, c, d):
                        nxt.append(f + ((c, d),))
        family.update(nxt)
        level = nxt

    support: dict[tuple[IMap, int], int] = {}
    for g in family:
        for i, (c, _) in enumerate(g):
            key = (g[:i] + g[i + 1:], c)
            support[key] = support.get(key, 0) + 1

    queue: deque[IMap] = deque()
    for f in family:
        if len(f) < k:
            dom = {c for c, _ in f}
            if any(c not in dom and not support.get((f, c)) for c in range(n_src)):
                queue.append(f)

    pop = queue.popleft if order == "fifo" else queue.pop
    while queue:
        g = pop()
        if g not in family:
            continue
        family.discard(g)
        for i, (c, _) in enumerate(g):
            f = g[:i] + g[i + 1:]
            key = (f, c)
            support[key] -= 1
            if support[key] == 0 and f in family:
                queue.append(f)
        if len(g) < k:
            dom = {c for c, _ in g}
            for c in range(n_src):
                if c in dom:
                    continue
                for d in images(c):
                    h = _insert(g, c, d)
                    if h in family:
                        queue.append(h)
    return family


class RelationalArena:
    """Source-side indexing for games played from one pointed database."""

    def __init__(self, src: PointedDatabase):
        self.src = src
        self.elements = sorted_elements(src.db.domain | set(src.point))
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.atoms_of: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in self.elements]
        for rel, args in src.db.atoms:
            ids = tuple(self.index[e] for e in args)
            for c in set(ids):
                self.atoms_of[c].append((rel, ids))

    def play(self, dst: PointedDatabase, k: int, order: str = "fifo") -> tuple[bool, set[IMap], list]:
        _check_compatible(self.src, dst)
        if k < 2:
            raise QbeError(f"pebble games need k >= 2, got {k}")
        binding = bind_point(self.src, dst)
        if binding is None or not check_partial_hom(self.src.db, dst.db, binding):
            return False, set(), []
        targets = sorted_elements(dst.db.domain | set(dst.point))
        t_index = {e: i for i, e in enumerate(targets)}
        dst_atoms = {(rel, tuple(t_index[e] for e in args)) for rel, args in dst.db.atoms}
        forced = {self.index[a]: t_index[b] for a, b in binding.items()}
        atoms_of = self.atoms_of

        def compatible(assign: dict, c: int, d: int) -> bool:
            assign[c] = d
            try:
                for rel, ids in atoms_of[c]:
                    if all(x in assign for x in ids):
                        if (rel, tuple(assign[x] for x in ids)) not in dst_atoms:
                            return False
                return True
            finally:
                if c in forced:
                    assign[c] = forced[c]
                else:
                    del assign[c]

        # point elements outside the atoms stay pebbleable; their image is pinned
        family = solve_family(len(self.elements), len(targets), k, forced, compatible, order)
        return () in family, family, targets


def pebble_game(src: PointedDatabase, dst: PointedDatabase, k: int) -> bool:
    """Whether the duplicator wins the existential k-pebble game from src to dst."""
    return RelationalArena(src).play(dst, k)[0]


def pebble_family(src: PointedDatabase, dst: PointedDatabase, k: int, order: str = "fifo") -> frozenset:
    """Final winning family as a set of partial maps over the original elements."""
    arena = RelationalArena(src)
    _, family, targets = arena.play(dst, k, order)
    return frozenset(
        frozenset((arena.elements[c], targets[d]) for c, d in f) for f in family
    )


def pebble_closure(src: PointedDatabase, targets: Sequence[PointedDatabase], k: int) -> list[bool]:
    """``pebble_game(src, t, k)`` for every target, sharing source indexing."""
    arena = RelationalArena(src)
    return [arena.play(t, k)[0] for t in targets]
