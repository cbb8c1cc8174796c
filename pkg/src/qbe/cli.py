"""Batch frontend: read a database and example files, run one test, print a
JSON report.

Exit status: 0 accept, 2 reject, 1 usage, parse or budget error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import oracle
from . import qbe_cq as cq
from . import qbe_crpq as crpq
from .core import (
    Budget,
    BudgetExceeded,
    Database,
    ExampleSets,
    PointedDatabase,
    QbeError,
    format_element,
    sorted_tuples,
)
from .graphcore import (
    DEFAULT_NODE_BUDGET,
    ContainmentCache,
    GraphDatabase,
    PointedGraph,
    graph_to_database,
    sorted_edges,
)

IDENT = r"[A-Za-z0-9_']+"
ATOM_RE = re.compile(rf"^\s*({IDENT})\s*\(\s*({IDENT}(?:\s*,\s*{IDENT})*)\s*\)\s*$")
TUPLE_RE = re.compile(rf"^\s*\(\s*({IDENT}(?:\s*,\s*{IDENT})*)\s*\)\s*$")
BARE_RE = re.compile(rf"^\s*({IDENT})\s*$")
CLASS_RE = re.compile(r"^(cq|ucq|crpq|tw|utw|ctw)(?::(\d+))?$")

RELATIONAL = {"cq", "tw", "ucq", "utw"}
GRAPH = {"crpq", "ctw"}


class ParseError(QbeError):
    pass


def _lines(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield number, line


def parse_database(path: str | Path) -> Database:
    """One atom ``R(e1,...,en)`` per line; the schema is inferred."""
    atoms = set()
    arities: dict[str, int] = {}
    for number, line in _lines(path):
        m = ATOM_RE.match(line)
        if not m:
            raise ParseError(f"{path}:{number}: malformed atom {line!r}")
        rel = m.group(1)
        args = tuple(a.strip() for a in m.group(2).split(","))
        if arities.setdefault(rel, len(args)) != len(args):
            raise ParseError(f"{path}:{number}: relation {rel} used with arity {len(args)}, "
                             f"earlier with arity {arities[rel]}")
        atoms.add((rel, args))
    return Database(frozenset(atoms))


def parse_graph(path: str | Path) -> GraphDatabase:
    """One edge ``u label v`` per line."""
    edges = set()
    for number, line in _lines(path):
        parts = line.split()
        if len(parts) != 3 or not all(re.fullmatch(IDENT, p) for p in parts):
            raise ParseError(f"{path}:{number}: expected 'source label target', got {line!r}")
        edges.add(tuple(parts))
    return GraphDatabase.from_edges(edges)


def parse_examples(path: str | Path) -> set[tuple]:
    """One tuple per line, ``(e1,...,en)``; unary tuples may drop the parentheses."""
    tuples = set()
    arity = None
    for number, line in _lines(path):
        m = TUPLE_RE.match(line)
        if m:
            t = tuple(a.strip() for a in m.group(1).split(","))
        else:
            m = BARE_RE.match(line)
            if not m:
                raise ParseError(f"{path}:{number}: malformed tuple {line!r}")
            t = (m.group(1),)
        if arity is None:
            arity = len(t)
        elif len(t) != arity:
            raise ParseError(f"{path}:{number}: tuple of arity {len(t)} in a file of arity {arity}")
        tuples.add(t)
    return tuples


def dump_database(db: Database) -> str:
    return "".join(f"{rel}({','.join(map(str, args))})\n" for rel, args in db)


def dump_graph(g: GraphDatabase) -> str:
    return "".join(f"{u} {a} {v}\n" for u, a, v in sorted_edges(g))


@dataclass
class RunConfig:
    model: str
    task: str
    cls: str
    k: int | None
    db: str
    pos: str | None = None
    neg: str | None = None
    emit_witness: bool = False
    emit_eval: bool = False
    emit_canonical: bool = False
    budget_nodes: int = DEFAULT_NODE_BUDGET
    budget_seconds: float | None = None
    timings: bool = False
    oracle: bool = False
    stats: dict = field(default_factory=dict)

    @property
    def class_name(self) -> str:
        return self.cls if self.k is None else f"{self.cls}:{self.k}"


class UsageError(QbeError):
    pass


def parse_class(text: str) -> tuple[str, int | None]:
    m = CLASS_RE.match(text)
    if not m:
        raise UsageError(f"unknown class {text!r}")
    name, k = m.group(1), m.group(2)
    if name in ("tw", "utw", "ctw"):
        if k is None or int(k) < 1:
            raise UsageError(f"class {name} needs a treewidth bound k >= 1, e.g. {name}:1")
        return name, int(k)
    if k is not None:
        raise UsageError(f"class {name} takes no parameter")
    return name, None


def _json_element(e: Any) -> str:
    return format_element(e)


def _json_tuple(t: Sequence) -> list[str]:
    return [_json_element(e) for e in t]


def _json_assignment(h: dict | None) -> dict | None:
    if h is None:
        return None
    return {_json_element(k): _json_element(v) for k, v in h.items()}


def _json_witness(w: cq.Witness | None, full: bool) -> dict | None:
    if w is None:
        return None
    out: dict = {"kind": w.kind}
    if w.negative is not None:
        out["negative"] = _json_tuple(w.negative)
    if w.positive is not None:
        out["positive"] = _json_tuple(w.positive)
    if full:
        out["assignment"] = _json_assignment(w.assignment)
    return out


def _json_query(q: PointedDatabase) -> dict:
    return {
        "atoms": [[rel, _json_tuple(args)] for rel, args in q.db],
        "free": _json_tuple(q.point),
    }


def _json_canonical(expl: cq.CanonicalExplanation) -> dict:
    if expl.kind == "cq":
        return {"kind": "cq", **_json_query(expl.query)}
    return {"kind": "ucq", "disjuncts": [_json_query(q) for q in expl.disjuncts]}


def _relational(cfg: RunConfig, budget: Budget, report: dict) -> bool:
    db = parse_database(cfg.db)
    positive = parse_examples(cfg.pos)
    negative = parse_examples(cfg.neg) if (cfg.neg and cfg.task == "qbe") else set()
    ex = ExampleSets.build(positive, negative)
    ex.check_over(db.domain)
    k = cfg.k
    if cfg.task == "qbe":
        run = {
            "cq": lambda: cq.qbe_test_cq(db, ex, budget),
            "ucq": lambda: cq.qbe_test_desync(db, ex, budget),
            "tw": lambda: cq.qbe_test_tw(db, ex, k, budget),
            "utw": lambda: cq.qbe_test_utw(db, ex, k, budget),
        }[cfg.cls]
    else:
        run = {
            "cq": lambda: cq.definability_test_cq(db, ex.positive, budget),
            "ucq": lambda: cq.definability_test_desync(db, ex.positive, budget),
            "tw": lambda: cq.definability_test_tw(db, ex.positive, k, budget),
            "utw": lambda: cq.definability_test_utw(db, ex.positive, k, budget),
        }[cfg.cls]
    verdict = run()
    report["accepted"] = verdict.accepted
    report["witness"] = _json_witness(verdict.witness, cfg.emit_witness)
    cfg.stats["tests_run"] = verdict.checked
    cfg.stats["domain_size"] = len(db.domain)
    if verdict.accepted and cfg.emit_canonical:
        kind = "cq" if cfg.cls == "cq" else "ucq"
        expl = (cq.canonical_explanation(db, ex, kind) if cfg.task == "qbe"
                else cq.canonical_definition(db, ex.positive, kind))
        report["canonical"] = _json_canonical(expl)
    if verdict.accepted and cfg.emit_eval:
        if cfg.cls in ("cq", "ucq"):
            kind = "cq" if cfg.cls == "cq" else "ucq"
            expl = (cq.canonical_explanation(db, ex, kind) if cfg.task == "qbe"
                    else cq.canonical_definition(db, ex.positive, kind))
            answers = expl.evaluate(db)
        elif cfg.cls == "tw":
            answers = cq.tw_evaluation_set(db, ex.positive, k + 1)
        else:
            answers = set()
            for a in ex.sorted_positive():
                answers |= cq.tw_evaluation_set(db, [a], k + 1)
        report["evaluation"] = [_json_tuple(t) for t in sorted_tuples(answers)]
    if cfg.oracle:
        report["oracle"] = _oracle_relational(cfg, db, ex)
    return verdict.accepted


def _oracle_relational(cfg: RunConfig, db: Database, ex: ExampleSets) -> dict:
    out: dict = {}
    if cfg.cls in ("tw", "utw") and cfg.task == "qbe":
        if cfg.cls == "tw":
            found = oracle.enumerate_tw_explanations(db, ex, cfg.k)
            out["bounded_explanation"] = None if found is None else str(found)
        else:
            found = oracle.enumerate_utw_explanations(db, ex, cfg.k)
            out["bounded_explanations"] = {
                format_element(a): (None if q is None else str(q)) for a, q in found.items()
            }
    if cfg.cls in ("cq", "ucq"):
        pos = ex.sorted_positive()
        negatives = ex.sorted_negative() if cfg.task == "qbe" else [
            t for t in db.tuples(ex.arity) if t not in ex.positive]
        if cfg.cls == "cq":
            src = PointedDatabase(*_product(db, pos))
            out["homomorphic_negatives"] = [
                _json_tuple(b) for b in negatives if oracle.all_homs(src, PointedDatabase(db, b))
            ] if len(src.db.domain) <= 6 else "skipped: product too large for exhaustive search"
    return out


def _product(db: Database, pos):
    from .core import product

    prod_db, point, _ = product([PointedDatabase(db, a) for a in pos])
    return prod_db, point


def _graph(cfg: RunConfig, budget: Budget, report: dict) -> bool:
    g = parse_graph(cfg.db)
    positive = parse_examples(cfg.pos)
    negative = parse_examples(cfg.neg) if (cfg.neg and cfg.task == "qbe") else set()
    ex = ExampleSets.build(positive, negative)
    ex.check_over(g.nodes)
    nb = cfg.budget_nodes
    game_k = None if cfg.cls == "crpq" else cfg.k + 1
    cache = ContainmentCache([g] * len(ex.positive), g)
    cfg.stats["node_count"] = len(g.nodes)
    try:
        if cfg.task == "qbe":
            if game_k is None:
                verdict = crpq.qbe_test_crpq(g, ex, budget, node_budget=nb, cache=cache)
            else:
                verdict = crpq.qbe_test_crpq_pebble(g, ex, game_k, budget, node_budget=nb, cache=cache)
        else:
            if game_k is None:
                verdict = crpq.definability_test_crpq(g, ex.positive, budget, node_budget=nb, cache=cache)
            else:
                verdict = crpq.definability_test_crpq_pebble(g, ex.positive, game_k, budget,
                                                             node_budget=nb, cache=cache)
    finally:
        cfg.stats["cache_hits"] = cache.hits
        cfg.stats["cache_misses"] = cache.misses
    report["accepted"] = verdict.accepted
    report["witness"] = _json_witness(verdict.witness, cfg.emit_witness)
    cfg.stats["tests_run"] = verdict.checked
    if verdict.accepted and cfg.emit_eval:
        answers = crpq.strong_evaluation_set(g, ex.positive, game_k, nb, cache=cache)
        report["evaluation"] = [_json_tuple(t) for t in sorted_tuples(answers)]
    if cfg.oracle:
        factors = [PointedGraph(g, a) for a in ex.sorted_positive()]
        negatives = ex.sorted_negative()
        if game_k is not None:
            report["oracle"] = {"game_tree_negatives": [
                _json_tuple(b) for b in negatives
                if oracle.game_tree_pebble(factors, PointedGraph(g, b), game_k, strong=True)]}
        else:
            report["oracle"] = {"relational_desync": cq.qbe_test_desync(graph_to_database(g), ex).accepted}
    return verdict.accepted


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one configuration; returns the exit status and the report."""
    report: dict = {
        "accepted": None,
        "canonical": None,
        "class": cfg.class_name,
        "evaluation": None,
        "stats": cfg.stats,
        "witness": None,
    }
    budget = Budget(cfg.budget_seconds)
    started = time.perf_counter()
    try:
        if cfg.model == "relational":
            accepted = _relational(cfg, budget, report)
        else:
            accepted = _graph(cfg, budget, report)
    finally:
        if cfg.timings:
            cfg.stats["seconds"] = round(time.perf_counter() - started, 6)
    return (0 if accepted else 2), report


def _validate(args: argparse.Namespace) -> RunConfig:
    name, k = parse_class(args.cls)
    model = args.model or ("graph" if name in GRAPH else "relational")
    if model == "relational" and name not in RELATIONAL:
        raise UsageError(f"class {name} needs --model graph")
    if model == "graph" and name not in GRAPH:
        raise UsageError(f"class {name} needs --model relational")
    if args.emit_canonical and name not in ("cq", "ucq"):
        raise UsageError("--emit-canonical is only valid for classes cq and ucq")
    if args.pos is None:
        raise UsageError("--pos is required")
    return RunConfig(
        model=model, task=args.task, cls=name, k=k, db=args.db, pos=args.pos, neg=args.neg,
        emit_witness=args.emit_witness, emit_eval=args.emit_eval, emit_canonical=args.emit_canonical,
        budget_nodes=args.budget_nodes, budget_seconds=args.budget_seconds,
        timings=args.timings, oracle=args.oracle,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbe", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", choices=["relational", "graph"],
                   help="data model (default: inferred from --class)")
    p.add_argument("--task", choices=["qbe", "define"], default="qbe")
    p.add_argument("--class", dest="cls", default="cq",
                   help="cq | tw:<k> | ucq | utw:<k> | crpq | ctw:<k> (default: cq)")
    p.add_argument("--db", required=True, help="database file (atoms) or graph file (edges)")
    p.add_argument("--pos", help="positive examples, one tuple per line")
    p.add_argument("--neg", help="negative examples (qbe task)")
    p.add_argument("--emit-witness", action="store_true", help="include the witnessing assignment")
    p.add_argument("--emit-eval", action="store_true", help="include the evaluation of an explanation")
    p.add_argument("--emit-canonical", action="store_true", help="include the canonical explanation")
    p.add_argument("--budget-nodes", type=int, default=DEFAULT_NODE_BUDGET,
                   help="largest graph product allowed (default: %(default)s)")
    p.add_argument("--budget-seconds", type=float, default=None, help="wall-clock budget")
    p.add_argument("--timings", action="store_true", help="add wall-clock seconds to stats")
    p.add_argument("--dump", action="store_true", help="print the parsed database and exit")
    p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    cfg = None
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.dump:
            name, _ = parse_class(args.cls)
            graph = args.model == "graph" or (args.model is None and name in GRAPH)
            sys.stdout.write(dump_graph(parse_graph(args.db)) if graph else dump_database(parse_database(args.db)))
            return 0
        cfg = _validate(args)
        status, report = run(cfg)
    except BudgetExceeded as exc:
        print(f"qbe: error: {exc}; partial stats {json.dumps(cfg.stats, sort_keys=True)}", file=sys.stderr)
        return 1
    except (QbeError, OSError) as exc:
        print(f"qbe: error: {exc}", file=sys.stderr)
        return 1
    json.dump(report, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
