"""Search orientations of two 4-cliques next to a symmetric 3-clique (unary
alphabet) for an instance where the desynchronized relational QBE test accepts S+ = {1, 1'},
S- = {1''} while the CRPQ QBE test rejects.

Only the block of the product spanned by the two 4-cliques constrains a strong
homomorphism: node pairs whose coordinates lie in different components have an
empty language on some coordinate.  With the 3-clique symmetric, distinct
nodes only clash when they share an image and are adjacent on both
coordinates, so the block must be properly 3-coloured.  The search therefore runs the strong
homomorphism test on that block and confirms hits on the full graph.

Usage: python scripts/find_converse_fixture.py [--out tests/fixtures] [--budget 60]
"""

import argparse
import itertools
import time
from pathlib import Path

from qbe.core import ExampleSets
from qbe.graphcore import GraphDatabase, PointedGraph, graph_to_database, sorted_edges
from qbe.qbe_cq import qbe_test_desync
from qbe.qbe_crpq import qbe_test_crpq, strong_hom


def orientations(nodes):
    pairs = list(itertools.combinations(nodes, 2))
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        yield [(u, "a", v) if b == 0 else (v, "a", u) for (u, v), b in zip(pairs, bits)]


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default="tests/fixtures")
    parser.add_argument("--budget", type=float, default=60.0)
    args = parser.parse_args()

    A = ["1", "2", "3", "4"]
    B = ["1'", "2'", "3'", "4'"]
    C = ["1''", "2''", "3''"]
    started = time.perf_counter()
    tried = 0
    ec = [(u, "a", v) for u in C for v in C if u != v]
    for ea in orientations(A):
        # the edge between 1 and 4 points from 1 to 4 ...
        if ("1", "a", "4") not in ea:
            continue
        for eb in orientations(B):
            # ... and the one between 1' and 4' from 4' to 1'
            if ("4'", "a", "1'") not in eb:
                continue
            if time.perf_counter() - started > args.budget:
                print(f"budget exhausted after {tried} candidates")
                return 1
            tried += 1
            g = GraphDatabase.from_edges(ea + eb + ec, alphabet="a")
            ga = GraphDatabase.from_edges(ea, alphabet="a")
            gb = GraphDatabase.from_edges(eb, alphabet="a")
            if strong_hom([PointedGraph(ga, ("1",)), PointedGraph(gb, ("1'",))], PointedGraph(g, ("1''",))) is None:
                continue
            ex = ExampleSets.build([("1",), ("1'",)], [("1''",)])
            if qbe_test_desync(graph_to_database(g), ex) and not qbe_test_crpq(g, ex):
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                (out / "converse.graph").write_text("".join(f"{u} {a} {v}\n" for u, a, v in sorted_edges(g)))
                (out / "converse.db").write_text("".join(f"{a}({u},{v})\n" for u, a, v in sorted_edges(g)))
                (out / "converse.pos").write_text("1\n1'\n")
                (out / "converse.neg").write_text("1''\n")
                print(f"found after {tried} candidates in {time.perf_counter() - started:.2f}s")
                for e in sorted_edges(g):
                    print(*e)
                return 0
    print(f"no fixture among {tried} candidates")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
