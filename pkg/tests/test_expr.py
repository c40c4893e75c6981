"""Tests for the expression parser and evaluator."""

import math
import random

import pytest

from symode.expr import (
    Binary,
    Const,
    EvalDomainError,
    Expression,
    ExprSyntaxError,
    Unary,
    UnknownSymbolError,
    Var,
    evaluate,
    parse,
    to_text,
)


def test_parse_eval_basic():
    e = parse("1/r + r")
    assert evaluate(e, 1.0) == 2.0
    assert evaluate(e, 2.0) == 2.5


def test_identity_expression():
    assert evaluate(parse("r"), 3.5) == 3.5


def test_exp_log_inverse():
    assert evaluate(parse("exp(log(r))"), 2.0) == pytest.approx(2.0, abs=1e-15)


def test_perfect_square_root():
    assert evaluate(parse("r^2 - 2*r + 1"), 1.0) == 0.0


def test_precedence():
    assert evaluate(parse("1.5 + 2.5*3.0"), 0.0) == 1.5 + (2.5 * 3.0)
    assert evaluate(parse("2^3^2"), 0.0) == 512.0  # right-associative power
    assert evaluate(parse("-r^2"), 2.0) == -4.0  # ^ binds tighter than unary minus
    assert evaluate(parse("(2+3)*4"), 0.0) == 20.0
    assert evaluate(parse("2 - 3 - 4"), 0.0) == -5.0


def test_precedence_random_constants():
    rng = random.Random(7)
    for _ in range(50):
        a, b, c = (rng.uniform(-5, 5) for _ in range(3))
        text = f"{a!r} + {b!r} * {c!r}"
        assert evaluate(parse(text), 0.0) == a + (b * c)


def test_log_negative_is_domain_error():
    with pytest.raises(EvalDomainError):
        evaluate(parse("log(r)"), -1.0)


def test_sqrt_negative_is_domain_error():
    with pytest.raises(EvalDomainError):
        evaluate(parse("sqrt(r)"), -4.0)


def test_division_by_zero():
    with pytest.raises(EvalDomainError):
        evaluate(parse("1/r"), 0.0)


def test_overflow_is_domain_error():
    with pytest.raises(EvalDomainError):
        evaluate(parse("exp(r)"), 1e4)
    with pytest.raises(EvalDomainError):
        evaluate(parse("r^r"), 1e300)


def test_syntax_error_carries_offset_and_expected():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 + * 2")
    assert info.value.offset == 4
    assert info.value.expected  # non-empty expected-token set
    with pytest.raises(ExprSyntaxError) as info:
        parse("(1 + r")
    assert info.value.offset == 6


def test_unknown_identifier():
    with pytest.raises(UnknownSymbolError) as info:
        parse("x + 1")
    assert info.value.name == "x"
    assert info.value.offset == 0
    with pytest.raises(UnknownSymbolError):
        parse("tan(r)")


def test_evaluation_deterministic():
    e = parse("sin(r) * exp(r) - sqrt(r) / (r + 1)")
    values = {evaluate(e, 0.731) for _ in range(10)}
    assert len(values) == 1


def _random_ast(rng: random.Random, depth: int):
    roll = rng.random()
    if depth == 0 or roll < 0.25:
        if rng.random() < 0.5:
            return Var()
        return Const(rng.uniform(-4.0, 4.0))
    if roll < 0.5:
        op = rng.choice(["neg", "exp", "log", "sqrt", "sin", "cos"])
        return Unary(op, _random_ast(rng, depth - 1))
    op = rng.choice(["+", "-", "*", "/", "^"])
    return Binary(op, _random_ast(rng, depth - 1), _random_ast(rng, depth - 1))


def _try_eval(e: Expression, r: float):
    try:
        return evaluate(e, r)
    except EvalDomainError:
        return "domain-error"


def test_print_parse_roundtrip_random_asts():
    """Printed-and-reparsed ASTs evaluate identically (1 ulp) at random points."""
    rng = random.Random(2024)
    checked = 0
    for _ in range(200):
        original = Expression(_random_ast(rng, rng.randint(1, 6)))
        reparsed = parse(to_text(original))
        for _ in range(100):
            r = rng.uniform(0.01, 5.0)
            a, b = _try_eval(original, r), _try_eval(reparsed, r)
            if a == "domain-error" or b == "domain-error":
                assert a == b
            else:
                assert a == b or abs(a - b) <= math.ulp(max(abs(a), abs(b)))
                checked += 1
    assert checked > 1000  # enough non-degenerate evaluations


def test_roundtrip_preserves_structure():
    for text in ["1/r + r", "-(r + 1)^2", "exp(-r) * sin(r)", "2^-r"]:
        e = parse(text)
        assert parse(to_text(e)) == e
