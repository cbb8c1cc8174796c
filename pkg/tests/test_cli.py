import json

import pytest

from helpers import FIXTURES, cycles, example1
from qbe.cli import ParseError, dump_database, dump_graph, main, parse_database, parse_examples, parse_graph
from qbe.graphcore import canonical_form


def run_cli(capsys, *argv):
    status = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return status, (json.loads(out) if out.strip().startswith("{") else out), err


def test_parse_database(tmp_path):
    db, _ = example1()
    assert parse_database(FIXTURES / "example1.db") == db
    empty = tmp_path / "empty.db"
    empty.write_text("")
    parsed = parse_database(empty)
    assert len(parsed) == 0 and parsed.schema.relations == ()
    bad = tmp_path / "bad.db"
    bad.write_text("R(a,b)\nR(a)\n")
    with pytest.raises(ParseError, match=":2:"):
        parse_database(bad)
    bad.write_text("# comment\n\nR(a,b\n")
    with pytest.raises(ParseError, match=":3:"):
        parse_database(bad)


def test_parse_graph(tmp_path):
    c = cycles()
    assert parse_graph(FIXTURES / "c2.graph") == c[2].__class__.from_edges(
        [("1", "a", "2"), ("2", "a", "1")])
    assert canonical_form(parse_graph(FIXTURES / "c6.graph")) == canonical_form(c[6])
    empty = tmp_path / "empty.graph"
    empty.write_text("")
    assert not parse_graph(empty).nodes
    empty.write_text("1 a\n")
    with pytest.raises(ParseError, match=":1:"):
        parse_graph(empty)


def test_parse_examples(tmp_path):
    assert parse_examples(FIXTURES / "example1.pos") == {("a", "b"), ("c", "d")}
    assert parse_examples(FIXTURES / "converse.pos") == {("1",), ("1'",)}
    with pytest.raises(ParseError):
        parse_examples(FIXTURES / "mixed.pos")


def test_round_trip(tmp_path):
    for name in ("example1.db", "cone.db", "converse.db"):
        db = parse_database(FIXTURES / name)
        out = tmp_path / name
        out.write_text(dump_database(db))
        assert parse_database(out) == db
    g = parse_graph(FIXTURES / "converse.graph")
    out = tmp_path / "g.graph"
    out.write_text(dump_graph(g))
    assert parse_graph(out) == g


def test_dump_mode(capsys):
    status, out, _ = run_cli(capsys, "--dump", "--db", FIXTURES / "example1.db")
    assert status == 0 and out == "R(a,b)\nS(c,d)\n"


def test_example1_rejects_unsafe(capsys):
    status, report, _ = run_cli(capsys, "--class", "cq", "--db", FIXTURES / "example1.db",
                                "--pos", FIXTURES / "example1.pos")
    assert status == 2
    assert report["witness"] == {"kind": "unsafe-product"}
    assert set(report) == {"accepted", "canonical", "class", "evaluation", "stats", "witness"}


def test_safe_product_without_negatives_accepts(capsys):
    status, report, _ = run_cli(capsys, "--db", FIXTURES / "cone.db", "--pos", FIXTURES / "cone.pos",
                                "--emit-canonical", "--emit-eval")
    assert status == 0 and report["accepted"]
    assert report["canonical"]["free"] == ["a"]
    assert ["a"] in report["evaluation"]


def test_converse_fixture(capsys):
    args = ["--pos", FIXTURES / "converse.pos", "--neg", FIXTURES / "converse.neg"]
    status, report, _ = run_cli(capsys, "--class", "ucq", "--db", FIXTURES / "converse.db", *args)
    assert status == 0
    status, report, _ = run_cli(capsys, "--class", "crpq", "--db", FIXTURES / "converse.graph", *args)
    assert status == 2 and report["witness"]["negative"] == ["1''"]
    assert "assignment" not in report["witness"]
    assert report["stats"]["cache_misses"] > 0


def test_class_mapping(capsys):
    args = ["--db", FIXTURES / "cone.db", "--pos", FIXTURES / "cone.pos", "--neg", FIXTURES / "cone.neg"]
    assert run_cli(capsys, "--class", "tw:1", *args)[0] == 2
    assert run_cli(capsys, "--class", "tw:2", *args)[0] == 0
    status, report, _ = run_cli(capsys, "--class", "utw:1", "--emit-witness", *args)
    assert status == 2 and report["witness"]["kind"] == "failing-pair"
    assert report["witness"]["assignment"] is None


def test_examples_outside_graph_rejected(capsys):
    # 1' is not a node of C3
    status, _, err = run_cli(capsys, "--class", "ctw:1", "--task", "define", "--db", FIXTURES / "c3.graph",
                             "--pos", FIXTURES / "converse.pos")
    assert status == 1 and "outside the domain" in err


def test_graph_definability_with_evaluation(capsys):
    status, report, _ = run_cli(capsys, "--class", "crpq", "--task", "define", "--emit-eval",
                                "--db", FIXTURES / "path.graph", "--pos", FIXTURES / "path.pos")
    assert status == 0 and report["evaluation"] == [["1"]]


def test_usage_errors(capsys):
    db, pos = FIXTURES / "example1.db", FIXTURES / "example1.pos"
    for argv in (
        ["--class", "tw:0", "--db", db, "--pos", pos],
        ["--class", "tw", "--db", db, "--pos", pos],
        ["--class", "cq:2", "--db", db, "--pos", pos],
        ["--class", "crpq", "--model", "relational", "--db", db, "--pos", pos],
        ["--class", "tw:1", "--emit-canonical", "--db", db, "--pos", pos],
        ["--db", db],
        ["--db", db, "--pos", FIXTURES / "mixed.pos"],
        ["--db", FIXTURES / "missing.db", "--pos", pos],
        ["--bogus"],
    ):
        status, _, err = run_cli(capsys, *argv)
        assert status == 1, argv
        assert err


def test_budget_error(capsys):
    status, _, err = run_cli(capsys, "--class", "crpq", "--budget-nodes", "10", "--db", FIXTURES / "converse.graph",
                             "--pos", FIXTURES / "converse.pos", "--neg", FIXTURES / "converse.neg")
    assert status == 1 and "budget" in err
    status, _, err = run_cli(capsys, "--task", "define", "--budget-seconds", "0", "--db", FIXTURES / "cone.db",
                             "--pos", FIXTURES / "cone.pos")
    assert status == 1 and "partial stats" in err


def test_timings_are_opt_in(capsys):
    args = ["--db", FIXTURES / "cone.db", "--pos", FIXTURES / "cone.pos"]
    assert "seconds" not in run_cli(capsys, *args)[1]["stats"]
    assert "seconds" in run_cli(capsys, "--timings", *args)[1]["stats"]


def test_hidden_oracle_flag(capsys):
    status, report, _ = run_cli(capsys, "--class", "tw:1", "--oracle", "--db", FIXTURES / "cone.db",
                                "--pos", FIXTURES / "cone.pos", "--neg", FIXTURES / "cone.neg")
    assert status == 2 and report["oracle"]["bounded_explanation"] is None
    main(["--help"])
    assert "--oracle" not in capsys.readouterr().out
