"""Graph databases, their direct products, node-pair languages and regular
language containment."""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from itertools import product as cartesian
from math import prod
from typing import Hashable, Iterable, Sequence

from .core import Database, QbeError, element_key, sorted_elements, tuple_key

Node = Hashable
Label = str
Edge = tuple  # (source, label, target)

DEFAULT_NODE_BUDGET = 10**6


class ProductTooLarge(QbeError):
    pass


@dataclass(frozen=True)
class GraphDatabase:
    nodes: frozenset
    alphabet: frozenset
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for u, a, v in self.edges:
            if u not in self.nodes or v not in self.nodes:
                raise QbeError(f"edge {(u, a, v)} has an endpoint outside the node set")
            if a not in self.alphabet:
                raise QbeError(f"edge label {a!r} not in alphabet")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], nodes: Iterable = (), alphabet: Iterable = ()) -> "GraphDatabase":
        edges = frozenset(tuple(e) for e in edges)
        all_nodes = set(nodes) | {u for u, _, _ in edges} | {v for _, _, v in edges}
        labels = set(alphabet) | {a for _, a, _ in edges}
        return cls(frozenset(all_nodes), frozenset(labels), edges)

    @classmethod
    def cycle(cls, n: int, label: Label = "a") -> "GraphDatabase":
        """Directed cycle over nodes 1..n."""
        return cls.from_edges(((i, label, i % n + 1) for i in range(1, n + 1)), alphabet=[label])

    @cached_property
    def successors(self) -> dict:
        out: dict = {v: [] for v in self.nodes}
        for u, a, v in sorted(self.edges, key=lambda e: (e[1], element_key(e[0]), element_key(e[2]))):
            out[u].append((a, v))
        return out

    def sorted_nodes(self) -> list:
        return sorted_elements(self.nodes)

    def with_alphabet(self, alphabet: Iterable[Label]) -> "GraphDatabase":
        return GraphDatabase(self.nodes, self.alphabet | frozenset(alphabet), self.edges)


@dataclass(frozen=True)
class PointedGraph:
    graph: GraphDatabase
    point: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))
        missing = [v for v in self.point if v not in self.graph.nodes]
        if missing:
            raise QbeError(f"point nodes {missing} are not graph nodes")


@dataclass(frozen=True)
class Nfa:
    states: frozenset
    alphabet: frozenset
    transitions: frozenset
    start: frozenset
    final: frozenset

    def __post_init__(self):
        for s in self.start | self.final:
            if s not in self.states:
                raise QbeError(f"start/final state {s!r} is not a state")
        for p, _, q in self.transitions:
            if p not in self.states or q not in self.states:
                raise QbeError("transition endpoint is not a state")

    @cached_property
    def delta(self) -> dict:
        out: dict = {}
        for p, a, q in self.transitions:
            out.setdefault((p, a), set()).add(q)
        return {key: sorted_elements(qs) for key, qs in out.items()}

    def step(self, states: Iterable, label: Label) -> frozenset:
        out = set()
        for p in states:
            out.update(self.delta.get((p, label), ()))
        return frozenset(out)

    def accepts(self, word: Sequence[Label]) -> bool:
        current = self.start
        for a in word:
            current = self.step(current, a)
        return bool(current & self.final)


def graph_product(factors: Sequence[GraphDatabase], node_budget: int = DEFAULT_NODE_BUDGET) -> GraphDatabase:
    """Direct product; all node tuples are kept, edges synchronise on labels."""
    if not factors:
        raise QbeError("product of an empty sequence of graphs")
    alphabet = factors[0].alphabet
    if any(g.alphabet != alphabet for g in factors[1:]):
        raise QbeError("graph product factors must share one alphabet")
    if len(factors) == 1:
        return factors[0]
    size = prod(len(g.nodes) for g in factors)
    if size > node_budget:
        raise ProductTooLarge(f"product has {size} nodes, budget is {node_budget}")
    nodes = frozenset(cartesian(*(g.sorted_nodes() for g in factors)))
    edges = set()
    for a in sorted(alphabet):
        per_factor = [[(u, v) for u, b, v in g.edges if b == a] for g in factors]
        for combo in cartesian(*per_factor):
            edges.add((tuple(u for u, _ in combo), a, tuple(v for _, v in combo)))
    return GraphDatabase(nodes, alphabet, frozenset(edges))


def product_size(factors: Sequence[GraphDatabase]) -> int:
    return prod(len(g.nodes) for g in factors)


def pair_language(g: GraphDatabase, v: Node, v2: Node) -> Nfa:
    """Labels of paths from v to v2, as an NFA over the graph itself."""
    for x in (v, v2):
        if x not in g.nodes:
            raise QbeError(f"node {x!r} is not in the graph")
    return Nfa(g.nodes, g.alphabet, g.edges, frozenset([v]), frozenset([v2]))


def graph_to_database(g: GraphDatabase) -> Database:
    """One binary relation per label."""
    return Database(frozenset((a, (u, v)) for u, a, v in g.edges))


def canonical_form(g: GraphDatabase) -> tuple:
    """Isomorphism-invariant form by brute force over node orderings."""
    nodes = g.sorted_nodes()
    best = None
    for perm in permutations(range(len(nodes))):
        rename = dict(zip(nodes, perm))
        form = tuple(sorted((rename[u], a, rename[v]) for u, a, v in g.edges))
        if best is None or form < best:
            best = form
    return (len(nodes), tuple(sorted(g.alphabet)), best or ())


def counterexample(a: Nfa, b: Nfa) -> tuple | None:
    """Shortest word in L(a) minus L(b), or None when L(a) is contained in L(b).

    Breadth-first search over pairs (state of a, reachable subset of b), which
    is the product of a with the lazily determinised complement of b.  Labels
    absent from b's alphabet lead to the empty (dead) subset.
    """
    labels = sorted(a.alphabet | b.alphabet)
    parent: dict = {}
    queue: deque = deque()
    for q in sorted_elements(a.start):
        node = (q, b.start)
        if node not in parent:
            parent[node] = None
            queue.append(node)
    while queue:
        q, subset = queue.popleft()
        if q in a.final and not (subset & b.final):
            word = []
            node = (q, subset)
            while parent[node] is not None:
                node, label = parent[node]
                word.append(label)
            return tuple(reversed(word))
        for label in labels:
            succ = a.delta.get((q, label))
            if not succ:
                continue
            nxt_subset = b.step(subset, label)
            for q2 in succ:
                node = (q2, nxt_subset)
                if node not in parent:
                    parent[node] = ((q, subset), label)
                    queue.append(node)
    return None


def contains(a: Nfa, b: Nfa) -> bool:
    """Whether L(a) is a subset of L(b)."""
    return counterexample(a, b) is None


class ContainmentCache:
    """Memoised containments L^{G_i}_{v,v'} within L^{G}_{u,u'}.

    For a fixed (factor, v, u) one search over pairs (node of G_i, subset of
    target nodes) answers every (v', u') at once: v' is contained for exactly
    the u' lying in every subset reachable together with v'.  Determinised
    target transitions are shared across all queries.
    """

    def __init__(self, factors: Sequence[GraphDatabase], target: GraphDatabase):
        self.factors = list(factors)
        self.target = target
        self._slot: list[int] = []
        for g in self.factors:
            for j, h in enumerate(self.factors[: len(self._slot)]):
                if h == g:
                    self._slot.append(self._slot[j])
                    break
            else:
                self._slot.append(len(self._slot))
        self._all_targets = frozenset(target.nodes)
        self._tgt_delta: dict = {}
        for u, a, v in target.edges:
            self._tgt_delta.setdefault((u, a), set()).add(v)
        self._step_memo: dict = {}
        self._rows: dict = {}
        self._reach_memo: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _step(self, subset: frozenset, label: Label) -> frozenset:
        key = (subset, label)
        out = self._step_memo.get(key)
        if out is None:
            acc = set()
            for u in subset:
                acc.update(self._tgt_delta.get((u, label), ()))
            out = self._step_memo[key] = frozenset(acc)
        return out

    def row(self, i: int, v: Node, u: Node) -> dict:
        """Map v' -> set of u' with L^{G_i}_{v,v'} contained in L_{u,u'}.

        Nodes v' unreachable from v are absent (empty language: contained in
        everything).
        """
        key = (self._slot[i], v, u)
        with self._lock:
            hit = self._rows.get(key)
            if hit is not None:
                self.hits += 1
                return hit
            self.misses += 1
        g = self.factors[i]
        start = (v, frozenset([u]))
        seen = {start}
        queue = deque([start])
        meet: dict = {}
        while queue:
            x, subset = queue.popleft()
            meet[x] = meet[x] & subset if x in meet else subset
            for a, y in g.successors[x]:
                node = (y, self._step(subset, a))
                if node not in seen:
                    seen.add(node)
                    queue.append(node)
        with self._lock:
            self._rows.setdefault(key, meet)
        return meet

    def contains(self, i: int, v: Node, v2: Node, u: Node, u2: Node) -> bool:
        got = self.row(i, v, u).get(v2)
        return True if got is None else u2 in got

    def contained_targets(self, i: int, v: Node, v2: Node, u: Node) -> frozenset:
        got = self.row(i, v, u).get(v2)
        return self._all_targets if got is None else got

    def nonempty(self, i: int, v: Node, v2: Node) -> bool:
        """Whether some path leads from v to v2 in factor i."""
        return v2 in self._reach(i, v)

    def _reach(self, i: int, v: Node) -> frozenset:
        key = (self._slot[i], v)
        with self._lock:
            got = self._reach_memo.get(key)
        if got is not None:
            return got
        g = self.factors[i]
        seen = {v}
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for _, y in g.successors[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        got = frozenset(seen)
        with self._lock:
            self._reach_memo.setdefault(key, got)
        return got

    def matrix(self, i: int) -> dict:
        """Full containment matrix for factor i keyed by (v, v', u, u')."""
        g = self.factors[i]
        out = {}
        for v in g.sorted_nodes():
            for u in self.target.sorted_nodes():
                for v2 in g.sorted_nodes():
                    for u2 in self.target.sorted_nodes():
                        out[(v, v2, u, u2)] = self.contains(i, v, v2, u, u2)
        return out


def format_word(word: Sequence[Label]) -> str:
    if all(len(a) == 1 for a in word):
        return "".join(word)
    return " ".join(word)


def sorted_edges(g: GraphDatabase) -> list:
    return sorted(g.edges, key=lambda e: (element_key(e[0]), e[1], element_key(e[2])))


def sort_node_tuples(tuples: Iterable) -> list:
    return sorted(tuples, key=tuple_key)
