"""Strong homomorphisms from graph products, the strong existential k-pebble
game, and the QBE/definability tests for CRPQ and CTW(k).

A map h from the product nodes to target nodes is admissible on a pair of
product nodes (v, v') when, for some coordinate i, every label of a path from
v_i to v'_i in factor i also labels a path from h(v) to h(v') in the target.
Every ordered pair is constrained, including v = v'.
"""

from __future__ import annotations

from itertools import product as cartesian
from typing import Iterable, Sequence

from .core import (
    ArityMismatch,
    Budget,
    EmptyPositiveExamples,
    ExampleSets,
    PreconditionError,
    QbeError,
    sorted_tuples,
)
from .graphcore import (
    DEFAULT_NODE_BUDGET,
    ContainmentCache,
    GraphDatabase,
    PointedGraph,
    ProductTooLarge,
    product_size,
)
from .pebble import solve_family
from .qbe_cq import FAILING_NEGATIVE, Verdict, Witness


class StrongArena:
    """Product-side structure shared by every strong test against one target graph.

    Product nodes are handled internally as m-tuples even when m = 1.
    """

    def __init__(self, factors: Sequence[PointedGraph], target_graph: GraphDatabase,
                 node_budget: int = DEFAULT_NODE_BUDGET, cache: ContainmentCache | None = None):
        if not factors:
            raise QbeError("strong homomorphisms need at least one factor")
        graphs = [f.graph for f in factors]
        alphabet = graphs[0].alphabet
        if any(g.alphabet != alphabet for g in graphs) or target_graph.alphabet != alphabet:
            raise QbeError("factors and target must share one alphabet")
        arities = {len(f.point) for f in factors}
        if len(arities) != 1:
            raise ArityMismatch("factor points must share one arity")
        size = product_size(graphs)
        if size > node_budget:
            raise ProductTooLarge(f"product has {size} nodes, budget is {node_budget}")
        self.m = len(factors)
        self.target_graph = target_graph
        self.nodes = list(cartesian(*(g.sorted_nodes() for g in graphs)))
        self.index = {v: i for i, v in enumerate(self.nodes)}
        self.point = tuple(zip(*(f.point for f in factors)))
        self.targets = target_graph.sorted_nodes()
        self.t_index = {u: i for i, u in enumerate(self.targets)}
        self.cache = cache if cache is not None else ContainmentCache(graphs, target_graph)
        self._pair_memo: dict = {}

    def external(self, v: tuple):
        """Node name as produced by graph_product (bare node when m = 1)."""
        return v[0] if self.m == 1 else v

    def allowed(self, x: int, y: int) -> frozenset | None:
        """Target pairs (s, t) admissible for product nodes (x, y); None if unconstrained."""
        key = (x, y)
        if key in self._pair_memo:
            return self._pair_memo[key]
        v, w = self.nodes[x], self.nodes[y]
        cache = self.cache
        if any(not cache.nonempty(i, v[i], w[i]) for i in range(self.m)):
            out = None
        else:
            pairs = set()
            for s, u in enumerate(self.targets):
                reach = set()
                for i in range(self.m):
                    reach |= cache.contained_targets(i, v[i], w[i], u)
                pairs.update((s, self.t_index[u2]) for u2 in reach)
            out = frozenset(pairs)
        self._pair_memo[key] = out
        return out

    def ok(self, x: int, y: int, s: int, t: int) -> bool:
        pairs = self.allowed(x, y)
        return pairs is None or (s, t) in pairs

    def binding(self, target_point: Sequence) -> dict[int, int] | None:
        if len(target_point) != len(self.point):
            raise ArityMismatch("product point and target point differ in arity")
        out: dict[int, int] = {}
        for v, u in zip(self.point, target_point):
            if out.setdefault(self.index[v], self.t_index[u]) != self.t_index[u]:
                return None
        return out

    def admissible(self, assign: dict[int, int]) -> bool:
        items = list(assign.items())
        for x, s in items:
            for y, t in items:
                if not self.ok(x, y, s, t):
                    return False
        return True

    # total maps

    def search(self, target_point: Sequence) -> dict | None:
        binding = self.binding(target_point)
        if binding is None or not self.admissible(binding):
            return None
        n, T = len(self.nodes), len(self.targets)
        domains: list[set[int]] = []
        for x in range(n):
            if x in binding:
                dom = {binding[x]}
            else:
                dom = set(range(T))
            domains.append({s for s in dom if self.ok(x, x, s, s)})
            if not domains[x]:
                return None
        neighbours: list[list[int]] = [[] for _ in range(n)]
        for x in range(n):
            for y in range(x + 1, n):
                if self.allowed(x, y) is not None or self.allowed(y, x) is not None:
                    neighbours[x].append(y)
                    neighbours[y].append(x)

        def compatible(x: int, s: int, y: int, t: int) -> bool:
            return self.ok(x, y, s, t) and self.ok(y, x, t, s)

        if not _arc_consistency(domains, neighbours, compatible):
            return None
        assignment: dict[int, int] = {}
        if not _backtrack(domains, neighbours, compatible, assignment):
            return None
        return {self.external(self.nodes[x]): self.targets[s] for x, s in assignment.items()}

    # pebble game

    def game(self, target_point: Sequence, k: int, order: str = "fifo") -> bool:
        return () in self.family(target_point, k, order)

    def family(self, target_point: Sequence, k: int, order: str = "fifo") -> set:
        if k < 2:
            raise QbeError(f"pebble games need k >= 2, got {k}")
        binding = self.binding(target_point)
        if binding is None or not self.admissible(binding):
            return set()
        ok = self.ok

        def compatible(assign: dict, c: int, d: int) -> bool:
            if not ok(c, c, d, d):
                return False
            for c2, d2 in assign.items():
                if c2 == c:
                    continue
                if not (ok(c, c2, d, d2) and ok(c2, c, d2, d)):
                    return False
            return True

        return solve_family(len(self.nodes), len(self.targets), k, binding, compatible, order)


def _arc_consistency(domains, neighbours, compatible) -> bool:
    queue = [(x, y) for x in range(len(domains)) for y in neighbours[x]]
    while queue:
        x, y = queue.pop()
        removed = {s for s in domains[x] if not any(compatible(x, s, y, t) for t in domains[y])}
        if removed:
            domains[x] -= removed
            if not domains[x]:
                return False
            queue.extend((z, x) for z in neighbours[x] if z != y)
    return True


def _backtrack(domains, neighbours, compatible, assignment) -> bool:
    unassigned = [x for x in range(len(domains)) if x not in assignment]
    if not unassigned:
        return True
    x = min(unassigned, key=lambda v: (len(domains[v]), -len(neighbours[v]), v))
    for s in sorted(domains[x]):
        pruned = []
        failed = False
        for y in neighbours[x]:
            if y in assignment:
                continue
            drop = {t for t in domains[y] if not compatible(x, s, y, t)}
            if drop:
                domains[y] -= drop
                pruned.append((y, drop))
                if not domains[y]:
                    failed = True
                    break
        if not failed:
            assignment[x] = s
            if _backtrack(domains, neighbours, compatible, assignment):
                return True
            del assignment[x]
        for y, drop in pruned:
            domains[y] |= drop
    return False


def strong_hom(factors: Sequence[PointedGraph], target: PointedGraph,
               node_budget: int = DEFAULT_NODE_BUDGET) -> dict | None:
    """A strong homomorphism from the product of the factors to the target, or None."""
    return StrongArena(factors, target.graph, node_budget).search(target.point)


def strong_pebble_game(factors: Sequence[PointedGraph], target: PointedGraph, k: int,
                       node_budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """Whether the duplicator wins the strong existential k-pebble game."""
    if k < 2:
        raise QbeError(f"pebble games need k >= 2, got {k}")
    return StrongArena(factors, target.graph, node_budget).game(target.point, k)


def _positives(g: GraphDatabase, positive: Iterable) -> list[tuple]:
    pos = sorted_tuples(positive)
    if not pos:
        raise EmptyPositiveExamples("the set of positive examples must be nonempty")
    ExampleSets.build(pos).check_over(g.nodes)
    return pos


def _arena(g: GraphDatabase, pos: list[tuple], node_budget: int,
           cache: ContainmentCache | None = None) -> StrongArena:
    return StrongArena([PointedGraph(g, a) for a in pos], g, node_budget, cache)


def _run(arena: StrongArena, negatives: Iterable[tuple], k: int | None,
         budget: Budget | None) -> Verdict:
    checked = 0
    for b in negatives:
        if budget is not None:
            budget.check()
        checked += 1
        if k is None:
            h = arena.search(b)
            if h is not None:
                return Verdict(False, Witness(FAILING_NEGATIVE, negative=b, assignment=h), checked)
        elif arena.game(b, k):
            return Verdict(False, Witness(FAILING_NEGATIVE, negative=b), checked)
    return Verdict(True, checked=checked)


def _complement(g: GraphDatabase, pos: list[tuple]) -> Iterable[tuple]:
    keep = set(pos)
    return (t for t in cartesian(g.sorted_nodes(), repeat=len(pos[0])) if t not in keep)


def qbe_test_crpq(g: GraphDatabase, ex: ExampleSets, budget: Budget | None = None,
                  node_budget: int = DEFAULT_NODE_BUDGET,
                  cache: ContainmentCache | None = None) -> Verdict:
    """No strong homomorphism from the positives' product onto any negative."""
    ex.check_over(g.nodes)
    return _run(_arena(g, ex.sorted_positive(), node_budget, cache), ex.sorted_negative(), None, budget)


def definability_test_crpq(g: GraphDatabase, positive: Iterable, budget: Budget | None = None,
                           node_budget: int = DEFAULT_NODE_BUDGET,
                           cache: ContainmentCache | None = None) -> Verdict:
    pos = _positives(g, positive)
    return _run(_arena(g, pos, node_budget, cache), _complement(g, pos), None, budget)


def qbe_test_crpq_pebble(g: GraphDatabase, ex: ExampleSets, k: int, budget: Budget | None = None,
                         node_budget: int = DEFAULT_NODE_BUDGET,
                         cache: ContainmentCache | None = None) -> Verdict:
    """The k-pebble QBE test for CRPQs (game parameter k)."""
    if k < 2:
        raise QbeError(f"the pebble game parameter must be >= 2, got {k}")
    ex.check_over(g.nodes)
    return _run(_arena(g, ex.sorted_positive(), node_budget, cache), ex.sorted_negative(), k, budget)


def definability_test_crpq_pebble(g: GraphDatabase, positive: Iterable, k: int,
                                  budget: Budget | None = None,
                                  node_budget: int = DEFAULT_NODE_BUDGET,
                                  cache: ContainmentCache | None = None) -> Verdict:
    if k < 2:
        raise QbeError(f"the pebble game parameter must be >= 2, got {k}")
    pos = _positives(g, positive)
    return _run(_arena(g, pos, node_budget, cache), _complement(g, pos), k, budget)


def qbe_test_ctw(g: GraphDatabase, ex: ExampleSets, k: int, **kw) -> Verdict:
    """Is there a CTW(k)-explanation?  Plays the strong (k+1)-pebble game."""
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return qbe_test_crpq_pebble(g, ex, k + 1, **kw)


def definability_test_ctw(g: GraphDatabase, positive: Iterable, k: int, **kw) -> Verdict:
    if k < 1:
        raise QbeError(f"treewidth bound must be >= 1, got {k}")
    return definability_test_crpq_pebble(g, positive, k + 1, **kw)


def strong_evaluation_set(g: GraphDatabase, positive: Iterable, game_k: int | None,
                          node_budget: int = DEFAULT_NODE_BUDGET,
                          cache: ContainmentCache | None = None) -> set[tuple]:
    """Tuples b with the positives' product => (g, b), or =>_game_k when given."""
    pos = _positives(g, positive)
    arena = _arena(g, pos, node_budget, cache)
    out = set()
    for b in cartesian(g.sorted_nodes(), repeat=len(pos[0])):
        won = arena.search(b) is not None if game_k is None else arena.game(b, game_k)
        if won:
            out.add(b)
    return out


def evaluate_ctw_explanation(g: GraphDatabase, ex: ExampleSets, k: int,
                             node_budget: int = DEFAULT_NODE_BUDGET) -> set[tuple]:
    """Answers of some CTW(k)-explanation, without building the query."""
    if not qbe_test_ctw(g, ex, k, node_budget=node_budget):
        raise PreconditionError(f"no CTW({k})-explanation exists; the strong {k + 1}-pebble test rejects")
    return strong_evaluation_set(g, ex.positive, k + 1, node_budget)


def evaluate_crpq_explanation(g: GraphDatabase, ex: ExampleSets,
                              node_budget: int = DEFAULT_NODE_BUDGET) -> set[tuple]:
    """Answers of the canonical CRPQ-explanation: the strong-homomorphism sweep."""
    if not qbe_test_crpq(g, ex, node_budget=node_budget):
        raise PreconditionError("no CRPQ-explanation exists")
    return strong_evaluation_set(g, ex.positive, None, node_budget)
