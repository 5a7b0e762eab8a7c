from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pgclabs.ast import (
    Assign,
    BinOp,
    BoundedUntil,
    Cmp,
    DemonicChoice,
    ExpectedReward,
    If,
    Loop,
    Num,
    ProbChoice,
    Seq,
    Skip,
    Var,
)
from pgclabs.generate import random_model, random_predicate, random_decls
from pgclabs.syntax import (
    ParseError,
    parse_arith,
    parse_expectation,
    parse_model,
    parse_predicate,
    parse_predicate_file,
    parse_program,
    parse_query,
    to_source,
)
from pgclabs.validate import validate_model

INC = "var x : 0..3 wrap;\nx := x / 2 [1/2] x := x + 1"


def test_inc_parses():
    m = parse_model(INC)
    assert m.decls[0].name == "x" and m.decls[0].wrap and m.decls[0].size == 4
    p = m.program
    assert isinstance(p, ProbChoice) and p.prob == Fraction(1, 2)
    assert p.left == Assign("x", BinOp("/", Var("x"), Num(2)))


def test_precedence_seq_binds_loosest():
    p = parse_program("x := 1; y := 2 [] skip")
    assert isinstance(p, Seq) and isinstance(p.second, DemonicChoice)
    q = parse_program("x := 1 [1/3] y := 2 [] skip")
    assert isinstance(q, DemonicChoice) and isinstance(q.left, ProbChoice)


def test_if_and_loop():
    p = parse_program("if x > 0 then x := x - 1 fi; do x < 3 -> x := x + 1; od")
    assert isinstance(p.first, If) and p.first.orelse == Skip()
    assert isinstance(p.second, Loop)


def test_operator_aliases():
    assert parse_predicate("x == 1 && !(y = 2) || true") == parse_predicate("x = 1 and not (y = 2) or true")


def test_arith_and_expectation():
    assert parse_arith("x - -1") == BinOp("-", Var("x"), parse_arith("-1"))
    e = parse_expectation("1/2 * [x = 0 or x = 2] + max([x=1], 1/4)")
    assert to_source(parse_expectation(to_source(e))) == to_source(e)


def test_queries():
    q = parse_query("Pmin=? [true U<=7 x = 1]")
    assert q == BoundedUntil(Cmp("=", Var("x"), Num(1)), 7, "min")
    r = parse_query('Rmax=? [F "exit"]')
    assert isinstance(r, ExpectedReward) and r.mode == "max"


def test_negative_horizon_rejected():
    with pytest.raises(ParseError, match="non-negative"):
        parse_query("Pmax=? [true U<=-1 x = 1]")


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("var x : 0..3;\nx := (x + 1", 2, 12),
        ("var x : 0..3;\ndo x < 1 -> skip", 2, 17),
        ("", 1, 1),
    ],
)
def test_errors_have_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_model(text)
    d = info.value.diagnostic
    assert (d.line, d.col) == (line, col)
    assert d.severity == "error"


def test_validation_diagnostics():
    m = parse_model("var x : 0..3;\nx := y [3/2] x := x + 1")
    msgs = [d.message for d in validate_model(m)]
    assert any("undeclared variable 'y'" in s for s in msgs)
    assert any("probability 3/2" in s for s in msgs)


def test_domain_check_flags_overflow_only_when_reachable():
    bad = parse_model("var x : 0..3;\nx := x + 1")
    assert [d.severity for d in validate_model(bad)] == ["error"]
    guarded = parse_model("var x : 0..3;\nif x < 3 then x := x + 1 fi")
    assert validate_model(guarded) == []


def test_division_by_zero_is_a_warning():
    m = parse_model("var x : 0..3; var y : 0..3;\nx := x / y")
    assert [d.severity for d in validate_model(m)] == ["warning"]


def test_predicate_file_comments():
    preds = parse_predicate_file("# header\nx = y  // equal\n\n x < y # order\n")
    assert [to_source(p) for p in preds] == ["x = y", "x < y"]


def test_predicate_file_error_line():
    with pytest.raises(ParseError) as info:
        parse_predicate_file("x = y\nx <")
    assert info.value.diagnostic.line == 2


def test_model_round_trip():
    m = parse_model(INC)
    assert parse_model(to_source(m)) == m


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_random_programs_round_trip(rng):
    m = random_model(rng)
    text = to_source(m)
    again = parse_model(text)
    assert again == m
    assert to_source(again) == text


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_random_predicates_round_trip(rng):
    p = random_predicate(rng, random_decls(rng), 3)
    assert parse_predicate(to_source(p)) == p
