"""Brute-force reference implementations used to cross-check the engine.

Nothing here shares search code with the modules it checks: homomorphisms are
enumerated exhaustively, pebble games are solved on the explicit position
graph with numbered pebbles, and language containment is decided by
Hopcroft-Karp equivalence of L(a) + L(b) with L(b).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, permutations
from itertools import product as cartesian
from typing import Callable, Iterable, Sequence

from .core import (
    Database,
    ExampleSets,
    PointedDatabase,
    QbeError,
    sorted_elements,
    sorted_tuples,
)
from .graphcore import GraphDatabase, Nfa, PointedGraph
from .homsolver import find_hom


# --- homomorphisms ---------------------------------------------------------

def _is_hom(src: Database, dst: Database, h: dict) -> bool:
    return all((rel, tuple(h[e] for e in args)) in dst.atoms for rel, args in src.atoms)


def all_homs(src: PointedDatabase, dst: PointedDatabase) -> list[dict]:
    """Every homomorphism src -> dst pinning the point, by exhaustive enumeration."""
    elems = sorted_elements(src.db.domain | set(src.point))
    targets = sorted_elements(dst.db.domain | set(dst.point))
    out = []
    for images in cartesian(targets, repeat=len(elems)):
        h = dict(zip(elems, images))
        if tuple(h[a] for a in src.point) != tuple(dst.point):
            continue
        if _is_hom(src.db, dst.db, h):
            out.append(h)
    return out


# --- explicit pebble games -------------------------------------------------

def _solve_positions(k: int, n_src: int, n_dst: int, admissible: Callable[[tuple], bool],
                     incremental: bool) -> bool:
    """Safety game over positions = k numbered pebbles with duplicator replies.

    Simultaneous convention: every pebble is always on the board and the
    duplicator must answer any full first placement.  Incremental convention:
    pebbles start off the board (None); the spoiler may place, move or lift a
    pebble; play starts from the empty position.
    """
    slot_values: list = [(c, d) for c in range(n_src) for d in range(n_dst)]
    if incremental:
        slot_values.append(None)
    if n_src == 0:
        return admissible(())

    alive = {p for p in cartesian(slot_values, repeat=k) if admissible(p)}

    def rest(p: tuple, i: int) -> tuple:
        return p[:i] + p[i + 1:]

    # count[(i, rest, c)] = replies d keeping p[i] = (c, d) alive
    count: dict = {}
    for p in alive:
        for i, slot in enumerate(p):
            if slot is not None:
                key = (i, rest(p, i), slot[0])
                count[key] = count.get(key, 0) + 1
    by_rest: dict = {}
    for p in alive:
        for i in range(k):
            by_rest.setdefault((i, rest(p, i)), []).append(p)

    queue = deque()
    for (i, r), ps in by_rest.items():
        if any(count.get((i, r, c), 0) == 0 for c in range(n_src)):
            queue.extend(ps)
    if incremental:
        for p in alive:
            for i, slot in enumerate(p):
                if slot is not None and p[:i] + (None,) + p[i + 1:] not in alive:
                    queue.append(p)

    dead = set()
    while queue:
        q = queue.popleft()
        if q in dead:
            continue
        dead.add(q)
        for i, slot in enumerate(q):
            r = rest(q, i)
            if slot is not None:
                key = (i, r, slot[0])
                count[key] -= 1
                if count[key] == 0:
                    queue.extend(p for p in by_rest[(i, r)] if p not in dead)
            elif incremental:
                # positions that lift pebble i into q lose
                queue.extend(p for p in by_rest[(i, r)] if p not in dead and p[i] is not None)

    won = alive - dead
    if incremental:
        return (None,) * k in won
    won_placements = {tuple(c for c, _ in p) for p in won}
    return all(cs in won_placements for cs in cartesian(range(n_src), repeat=k))


def _relational_admissible(src: PointedDatabase, dst: PointedDatabase):
    elems = sorted_elements(src.db.domain)
    targets = sorted_elements(dst.db.domain | set(dst.point))
    point_pairs = list(zip(src.point, dst.point))

    def admissible(p: tuple) -> bool:
        h: dict = {}
        pairs = point_pairs + [(elems[s[0]], targets[s[1]]) for s in p if s is not None]
        for a, b in pairs:
            if h.setdefault(a, b) != b:
                return False
        for rel, args in src.db.atoms:
            if all(e in h for e in args) and (rel, tuple(h[e] for e in args)) not in dst.db.atoms:
                return False
        return True

    return elems, targets, admissible


class _Hk:
    """Pair-language containment by Hopcroft-Karp on lazily determinised automata."""

    def __init__(self, g1: GraphDatabase, g2: GraphDatabase):
        self.labels = sorted(g1.alphabet | g2.alphabet)
        self.delta: dict = {}
        for tag, g in ((1, g1), (2, g2)):
            for u, a, v in g.edges:
                self.delta.setdefault(((tag, u), a), set()).add((tag, v))
        self.memo: dict = {}

    def _step(self, subset: frozenset, a: str) -> frozenset:
        out = set()
        for s in subset:
            out |= self.delta.get((s, a), set())
        return frozenset(out)

    def contained(self, v, v2, u, u2) -> bool:
        key = (v, v2, u, u2)
        if key in self.memo:
            return self.memo[key]
        final = {(1, v2), (2, u2)}
        left0 = frozenset({(1, v), (2, u)})
        right0 = frozenset({(2, u)})
        parent: dict = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        result = True
        todo = [(left0, right0)]
        parent[left0], parent[right0] = left0, right0
        if find(left0) != find(right0):
            parent[find(left0)] = find(right0)
        while todo:
            x, y = todo.pop()
            if bool(x & final) != bool(y & final):
                result = False
                break
            for a in self.labels:
                x2, y2 = self._step(x, a), self._step(y, a)
                parent.setdefault(x2, x2)
                parent.setdefault(y2, y2)
                rx, ry = find(x2), find(y2)
                if rx != ry:
                    parent[rx] = ry
                    todo.append((x2, y2))
        self.memo[key] = result
        return result


def _strong_admissible(factors: Sequence[PointedGraph], target: PointedGraph):
    checkers = [_Hk(f.graph, target.graph) for f in factors]
    nodes = list(cartesian(*(sorted_elements(f.graph.nodes) for f in factors)))
    targets = sorted_elements(target.graph.nodes)
    point = list(zip(zip(*(f.point for f in factors)), target.point))

    def pair_ok(v: tuple, w: tuple, u, u2) -> bool:
        return any(chk.contained(v[i], w[i], u, u2) for i, chk in enumerate(checkers))

    def admissible(p: tuple) -> bool:
        h: dict = {}
        pairs = point + [(nodes[s[0]], targets[s[1]]) for s in p if s is not None]
        for a, b in pairs:
            if h.setdefault(a, b) != b:
                return False
        return all(pair_ok(v, w, h[v], h[w]) for v in h for w in h)

    return nodes, targets, admissible


def game_tree_pebble(src, dst, k: int, strong: bool = False, convention: str = "both") -> bool:
    """Decide the (strong) existential k-pebble game on the explicit position graph.

    For ``strong=True`` ``src`` is a sequence of PointedGraph factors and
    ``dst`` a PointedGraph.  With ``convention="both"`` the simultaneous and
    incremental placement rules are both solved and must agree.
    """
    if k < 2:
        raise QbeError("pebble games need k >= 2")
    if strong:
        elems, targets, admissible = _strong_admissible(src, dst)
    else:
        elems, targets, admissible = _relational_admissible(src, dst)
    results = {}
    if convention in ("both", "simultaneous"):
        results["simultaneous"] = _solve_positions(k, len(elems), len(targets), admissible, False)
    if convention in ("both", "incremental"):
        results["incremental"] = _solve_positions(k, len(elems), len(targets), admissible, True)
    if not results:
        raise ValueError(f"unknown convention {convention!r}")
    values = set(results.values())
    if len(values) != 1:
        raise AssertionError(f"placement conventions disagree: {results}")
    return values.pop()


def brute_strong_hom(factors: Sequence[PointedGraph], target: PointedGraph) -> dict | None:
    """Exhaustive search for a strong homomorphism (tiny products only)."""
    nodes, targets, admissible = _strong_admissible(factors, target)
    for images in cartesian(range(len(targets)), repeat=len(nodes)):
        p = tuple(zip(range(len(nodes)), images))
        if admissible(p):
            return {(v[0] if len(factors) == 1 else v): targets[s] for v, s in zip(nodes, images)}
    return None


# --- treewidth -------------------------------------------------------------

@dataclass(frozen=True)
class TreeDecomposition:
    parent: dict  # tree node -> parent tree node (root maps to None)
    bags: dict  # tree node -> frozenset of vertices

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def is_valid(self, vertices: Iterable, edges: Iterable) -> bool:
        vertices, edges = set(vertices), [tuple(e) for e in edges]
        if any(b - vertices for b in self.bags.values()):
            return False
        for u, v in edges:
            if u != v and not any({u, v} <= b for b in self.bags.values()):
                return False
        for x in vertices:
            holding = {t for t, b in self.bags.items() if x in b}
            if not holding:
                return False
            # connected iff exactly one holding node has its parent outside
            tops = [t for t in holding if self.parent[t] not in holding]
            if len(tops) != 1:
                return False
        return True


def _adjacency(vertices, edges) -> dict:
    adj = {v: set() for v in vertices}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _elimination_width(adj: dict, order: Sequence) -> int:
    adj = {v: set(ns) for v, ns in adj.items()}
    width = -1
    for v in order:
        ns = adj.pop(v)
        width = max(width, len(ns))
        for a in ns:
            adj[a] |= ns - {a}
            adj[a].discard(v)
    return width


def treewidth(vertices: Iterable, edges: Iterable) -> int:
    """Exact treewidth by trying every elimination ordering (small graphs only)."""
    vertices = sorted_elements(vertices)
    if not vertices:
        return -1
    adj = _adjacency(vertices, edges)
    return min(_elimination_width(adj, order) for order in permutations(vertices))


def tree_decomposition(vertices: Iterable, edges: Iterable) -> TreeDecomposition:
    """Optimal decomposition built from the best elimination ordering."""
    vertices = sorted_elements(vertices)
    adj = _adjacency(vertices, edges)
    if not vertices:
        return TreeDecomposition({}, {})
    best = min(permutations(vertices), key=lambda o: _elimination_width(adj, o))
    pos = {v: i for i, v in enumerate(best)}
    work = {v: set(ns) for v, ns in adj.items()}
    bags, parent = {}, {}
    for v in best:
        ns = work.pop(v)
        bags[v] = frozenset(ns | {v})
        for a in ns:
            work[a] |= ns - {a}
            work[a].discard(v)
    for v in best:
        later = [u for u in bags[v] if u != v]
        parent[v] = min(later, key=pos.__getitem__) if later else None
    # join the roots of a forest into one tree
    roots = [v for v in best if parent[v] is None]
    for r in roots[:-1]:
        parent[r] = roots[-1]
    return TreeDecomposition(parent, bags)


# --- bounded CQ enumeration ------------------------------------------------

@dataclass(frozen=True)
class CqCandidate:
    atoms: tuple  # ((relation, (var, ...)), ...)
    free: tuple

    @cached_property
    def existential(self) -> frozenset:
        used = {x for _, args in self.atoms for x in args}
        return frozenset(used - set(self.free))

    @cached_property
    def gaifman_edges(self) -> frozenset:
        out = set()
        for _, args in self.atoms:
            ex = sorted({x for x in args if x in self.existential})
            out.update(combinations(ex, 2))
        return frozenset(out)

    @property
    def treewidth(self) -> int:
        return max(treewidth(self.existential, self.gaifman_edges), 0)

    @property
    def safe(self) -> bool:
        used = {x for _, args in self.atoms for x in args}
        return all(x in used for x in self.free)

    def pointed(self) -> PointedDatabase:
        return PointedDatabase(Database(frozenset(self.atoms)), self.free)

    def answers(self, db: Database, t: tuple) -> bool:
        return find_hom(self.pointed(), PointedDatabase(db, t)) is not None

    def __str__(self) -> str:
        body = ", ".join(f"{r}({','.join(args)})" for r, args in self.atoms)
        return f"q({','.join(self.free)}) :- {body}"


def _free_patterns(n: int, max_vars: int) -> list[tuple]:
    """Restricted growth strings: free tuples up to renaming."""
    out = []

    def grow(prefix: list, used: int):
        if len(prefix) == n:
            out.append(tuple(f"x{i}" for i in prefix))
            return
        for v in range(min(used + 1, max_vars)):
            grow(prefix + [v], max(used, v + 1))

    grow([], 0)
    return out


def _candidates(schema, n: int, k: int, max_atoms: int, max_vars: int,
                keep: Callable[[CqCandidate], bool]) -> Iterable[CqCandidate]:
    """Candidates by increasing number of atoms; ``keep`` failing prunes supersets."""
    for size in range(1, max_atoms + 1):
        for free in _free_patterns(n, max_vars):
            n_free = len(set(free))
            pool = [f"x{i}" for i in range(max_vars)]
            universe = [(rel, args) for rel, arity in schema.relations
                        for args in cartesian(pool, repeat=arity)]

            def extend(chosen: list, start: int):
                if chosen:
                    cand = CqCandidate(tuple(chosen), free)
                    if cand.treewidth > k or not keep(cand):
                        return
                    if len(chosen) == size:
                        ex = sorted(int(x[1:]) for x in cand.existential)
                        if cand.safe and ex == list(range(n_free, n_free + len(ex))):
                            yield cand
                        return
                for j in range(start, len(universe)):
                    yield from extend(chosen + [universe[j]], j + 1)

            yield from extend([], 0)


def enumerate_tw_explanations(db: Database, ex: ExampleSets, k: int,
                              max_atoms: int = 3, max_vars: int = 4) -> CqCandidate | None:
    """First TW(k) CQ within the bounds with S+ in q(D) and no negatives, or None."""
    if max_atoms <= 0 or max_vars <= 0 or k < 1:
        raise ValueError("bounds must be positive")
    pos, neg = ex.sorted_positive(), ex.sorted_negative()

    def covers_positives(cand: CqCandidate) -> bool:
        return all(cand.answers(db, a) for a in pos)

    for cand in _candidates(db.schema, ex.arity, k, max_atoms, max_vars, covers_positives):
        if not any(cand.answers(db, b) for b in neg):
            return cand
    return None


def enumerate_utw_explanations(db: Database, ex: ExampleSets, k: int,
                               max_atoms: int = 3, max_vars: int = 4) -> dict:
    """Per positive tuple, a TW(k) CQ selecting it and no negative (or None)."""
    out = {}
    for a in ex.sorted_positive():
        single = ExampleSets.build([a], ex.negative)
        out[a] = enumerate_tw_explanations(db, single, k, max_atoms, max_vars)
    return out


# --- words -----------------------------------------------------------------

def word_counterexample(a: Nfa, b: Nfa, max_len: int) -> tuple | None:
    """Some word of length <= max_len in L(a) but not L(b), by enumeration."""
    labels = sorted(a.alphabet | b.alphabet)
    for length in range(max_len + 1):
        for word in cartesian(labels, repeat=length):
            if _run(a, word) and not _run(b, word):
                return word
    return None


def _run(nfa: Nfa, word: Sequence[str]) -> bool:
    current = set(nfa.start)
    for letter in word:
        current = {q for p, x, q in nfa.transitions if p in current and x == letter}
        if not current:
            return False
    return bool(current & nfa.final)


def word_containment(a: Nfa, b: Nfa, max_len: int) -> bool:
    """False iff a word of length <= max_len separates L(a) from L(b)."""
    return word_counterexample(a, b, max_len) is None


def sorted_answers(tuples: Iterable) -> list:
    return sorted_tuples(tuples)
