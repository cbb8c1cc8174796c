import itertools
import random

import pytest

from helpers import cycles, example1, random_nfa, random_pointed_pair
from qbe import oracle
from qbe.core import Database, ExampleSets, PointedDatabase
from qbe.graphcore import pair_language
from qbe.homsolver import evaluate_cq

TWO_CYCLE = Database.of(("E", ("a", "b")), ("E", ("b", "a")))
EDGE = Database.of(("E", ("c", "d")))


def test_all_homs_identity_and_empty():
    db, _ = example1()
    homs = oracle.all_homs(PointedDatabase(db, ()), PointedDatabase(db, ()))
    assert {e: e for e in db.domain} in homs
    assert oracle.all_homs(PointedDatabase(TWO_CYCLE, ("a",)), PointedDatabase(EDGE, ("c",))) == []


def test_game_tree_examples():
    db, _ = example1()
    a = PointedDatabase(db, ("a", "b"))
    assert oracle.game_tree_pebble(a, a, 2)
    assert not oracle.game_tree_pebble(PointedDatabase(TWO_CYCLE, ("a",)), PointedDatabase(EDGE, ("c",)), 2)


def test_conventions_agree():
    rng = random.Random(21)
    for _ in range(150):
        src, dst = random_pointed_pair(rng)
        for k in (2, 3):
            s = oracle.game_tree_pebble(src, dst, k, convention="simultaneous")
            i = oracle.game_tree_pebble(src, dst, k, convention="incremental")
            assert s == i


def test_treewidth_examples():
    path = [(i, i + 1) for i in range(4)]
    star = [(0, i) for i in range(1, 5)]
    assert oracle.treewidth(range(5), path) == 1
    assert oracle.treewidth(range(5), star) == 1
    for n in (3, 4, 5, 6):
        assert oracle.treewidth(range(n), [(i, (i + 1) % n) for i in range(n)]) == 2
    for k in (2, 3, 4, 5):
        assert oracle.treewidth(range(k), itertools.combinations(range(k), 2)) == k - 1


def test_tree_decompositions_are_valid():
    rng = random.Random(22)
    for _ in range(60):
        n = rng.randint(1, 6)
        edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < 0.4]
        td = oracle.tree_decomposition(range(n), edges)
        assert td.is_valid(range(n), edges)
        assert td.width == max(oracle.treewidth(range(n), edges), 0)


def test_invalid_decomposition_detected():
    td = oracle.TreeDecomposition({0: None, 1: 0, 2: 1}, {0: frozenset({"x"}), 1: frozenset({"y"}), 2: frozenset({"x"})})
    assert not td.is_valid({"x", "y"}, [])
    assert not td.is_valid({"x", "y"}, [("x", "y")])


def test_candidate_treewidth_uses_existential_variables():
    cand = oracle.CqCandidate((("E", ("x0", "x1")), ("E", ("x1", "x2")), ("E", ("x2", "x0"))), ("x0",))
    assert cand.existential == {"x1", "x2"}
    assert cand.treewidth == 1
    closed = oracle.CqCandidate(cand.atoms, ())
    assert closed.treewidth == 2


def test_enumerator_finds_one_atom_query():
    db = Database.of(("E", ("a", "b")), ("E", ("b", "b")))
    found = oracle.enumerate_tw_explanations(db, ExampleSets.build([("a",)]), 1)
    assert found is not None and len(found.atoms) == 1


def test_enumerator_path_query_fixture():
    # a has an outgoing 2-path, c has only a single edge
    db = Database.of(("E", ("a", "b")), ("E", ("b", "d")), ("E", ("c", "e")))
    ex = ExampleSets.build([("a",)], [("c",)])
    found = oracle.enumerate_tw_explanations(db, ex, 1)
    assert found is not None and len(found.atoms) == 2 and found.treewidth <= 1
    answers = evaluate_cq(found.pointed(), db)
    assert ("a",) in answers and ("c",) not in answers


def test_enumerator_bounds():
    db, ex = example1()
    with pytest.raises(ValueError):
        oracle.enumerate_tw_explanations(db, ex, 1, max_atoms=0)


def test_word_containment_examples():
    c = cycles()
    l2 = pair_language(c[2], 1, 2)
    l6 = pair_language(c[6], 1, 2)
    assert oracle.word_containment(l2, l2, 8)
    assert not oracle.word_containment(l2, l6, 3)
    assert oracle.word_counterexample(l2, l6, 3) == ("a", "a", "a")


def test_word_containment_is_one_sided():
    rng = random.Random(23)
    for _ in range(50):
        a, b = random_nfa(rng), random_nfa(rng)
        if not oracle.word_containment(a, b, 4):
            assert not oracle.word_containment(a, b, 6)
