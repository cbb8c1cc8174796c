"""Shared instance generators and stored fixtures for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from hypothesis import strategies as st

from qbe.core import Database, ExampleSets, PointedDatabase
from qbe.graphcore import GraphDatabase, Nfa, PointedGraph

FIXTURES = Path(__file__).parent / "fixtures"

ELEMENTS = ["a", "b", "c", "d"]
SCHEMA = [("E", 2), ("U", 1)]


# ---- random relational instances -------------------------------------------

def random_db(rng: random.Random, max_domain: int = 4, max_atoms: int = 6, min_atoms: int = 1) -> Database:
    elems = ELEMENTS[: rng.randint(1, max_domain)]
    atoms = set()
    for _ in range(rng.randint(min_atoms, max_atoms)):
        rel, arity = rng.choice(SCHEMA)
        atoms.add((rel, tuple(rng.choice(elems) for _ in range(arity))))
    return Database(frozenset(atoms))


def random_examples(rng: random.Random, db: Database, n: int | None = None,
                    max_pos: int = 2, max_neg: int = 3) -> ExampleSets:
    n = n or rng.randint(1, 2)
    tuples = list(db.tuples(n))
    pos = rng.sample(tuples, rng.randint(1, min(max_pos, len(tuples))))
    rest = [t for t in tuples if t not in pos]
    neg = rng.sample(rest, rng.randint(0, min(max_neg, len(rest))))
    return ExampleSets.build(pos, neg)


def random_instance(rng: random.Random, **kw) -> tuple[Database, ExampleSets]:
    db = random_db(rng, **kw)
    return db, random_examples(rng, db)


def random_pointed_pair(rng: random.Random, max_domain: int = 4, max_atoms: int = 6):
    src = random_db(rng, max_domain, max_atoms)
    dst = random_db(rng, max_domain, max_atoms)
    n = rng.randint(0, 2)
    a = tuple(rng.choice(sorted(src.domain)) for _ in range(n))
    b = tuple(rng.choice(sorted(dst.domain)) for _ in range(n))
    return PointedDatabase(src, a), PointedDatabase(dst, b)


@st.composite
def databases(draw, max_domain: int = 4, max_atoms: int = 6):
    elems = ELEMENTS[: draw(st.integers(1, max_domain))]
    atom = st.one_of(
        st.tuples(st.just("E"), st.tuples(st.sampled_from(elems), st.sampled_from(elems))),
        st.tuples(st.just("U"), st.tuples(st.sampled_from(elems))),
    )
    return Database(frozenset(draw(st.lists(atom, min_size=1, max_size=max_atoms))))


@st.composite
def pointed(draw, db: Database, n: int):
    return PointedDatabase(db, tuple(draw(st.sampled_from(sorted(db.domain))) for _ in range(n)))


# ---- random graphs and automata --------------------------------------------

def random_graph(rng: random.Random, n_nodes: int, labels: str = "ab", max_edges: int = 6,
                 offset: int = 0) -> GraphDatabase:
    nodes = range(offset, offset + n_nodes)
    edges = [(rng.choice(nodes), rng.choice(labels), rng.choice(nodes)) for _ in range(rng.randint(0, max_edges))]
    return GraphDatabase.from_edges(edges, nodes=nodes, alphabet=labels)


def random_strong_instance(rng: random.Random, max_product: int = 6, max_target: int = 4):
    """Factors (pointed, unary points) with product size <= max_product and a target."""
    labels = rng.choice(["a", "ab"])
    sizes = rng.choice([s for s in ([1], [2], [3], [4], [5], [6], [2, 2], [2, 3], [3, 2], [1, 3], [2, 1])
                        if _prod(s) <= max_product])
    factors = []
    for i, size in enumerate(sizes):
        g = random_graph(rng, size, labels, max_edges=5, offset=10 * i)
        factors.append(PointedGraph(g, (rng.choice(g.sorted_nodes()),)))
    target = random_graph(rng, rng.randint(1, max_target), labels, max_edges=6, offset=100)
    return factors, PointedGraph(target, (rng.choice(target.sorted_nodes()),))


def random_graph_instance(rng: random.Random, n_nodes: int = 3, labels: str = "ab", max_pos: int = 2):
    g = random_graph(rng, n_nodes, labels, max_edges=6)
    nodes = g.sorted_nodes()
    pos = rng.sample(nodes, rng.randint(1, min(max_pos, len(nodes))))
    rest = [v for v in nodes if v not in pos]
    neg = rng.sample(rest, rng.randint(0, len(rest)))
    return g, ExampleSets.build([(v,) for v in pos], [(v,) for v in neg])


def _prod(sizes):
    out = 1
    for s in sizes:
        out *= s
    return out


def random_nfa(rng: random.Random, n_states: int = 3, labels: str = "ab") -> Nfa:
    states = frozenset(range(n_states))
    trans = frozenset((rng.randrange(n_states), rng.choice(labels), rng.randrange(n_states))
                      for _ in range(rng.randint(0, 2 * n_states)))
    start = frozenset(rng.sample(sorted(states), rng.randint(1, 2)))
    final = frozenset(rng.sample(sorted(states), rng.randint(0, 2)))
    return Nfa(states, frozenset(labels), trans, start, final)


# ---- stored fixtures ---------------------------------------------------------

def example1() -> tuple[Database, ExampleSets]:
    db = Database.of(("R", ("a", "b")), ("S", ("c", "d")))
    return db, ExampleSets.build([("a", "b"), ("c", "d")])


def symmetric_clique(n: int, prefix: str = "", rel: str = "E") -> Database:
    names = [f"{prefix}{i}" for i in range(1, n + 1)]
    return Database(frozenset((rel, (u, v)) for u in names for v in names if u != v))


def triangle_edge() -> tuple[PointedDatabase, PointedDatabase]:
    """Symmetric triangle and symmetric edge, empty points."""
    return (PointedDatabase(symmetric_clique(3), ()),
            PointedDatabase(Database.of(("E", ("c", "d")), ("E", ("d", "c"))), ()))


def clique_pair() -> tuple[PointedDatabase, PointedDatabase]:
    """Symmetric K4 onto symmetric K3, empty points."""
    return PointedDatabase(symmetric_clique(4, "x"), ()), PointedDatabase(symmetric_clique(3, "y"), ())


def strong_clique_pair() -> tuple[list[PointedGraph], PointedGraph]:
    def k(n, prefix):
        names = [f"{prefix}{i}" for i in range(1, n + 1)]
        return GraphDatabase.from_edges((u, "a", v) for u in names for v in names if u != v)
    return [PointedGraph(k(4, "x"))], PointedGraph(k(3, "y"))


def strong_subdivided_triangle() -> tuple[list[PointedGraph], PointedGraph]:
    src = GraphDatabase.from_edges([
        ("m12", "a", "1"), ("m12", "b", "2"),
        ("m23", "a", "2"), ("m23", "b", "3"),
        ("m31", "a", "3"), ("m31", "b", "1"),
    ])
    dst = GraphDatabase.from_edges([("p", "a", "c"), ("p", "b", "d"), ("q", "a", "d"), ("q", "b", "c")])
    return [PointedGraph(src)], PointedGraph(dst)


def cycles() -> dict[int, GraphDatabase]:
    return {n: GraphDatabase.cycle(n) for n in (2, 3, 6)}
