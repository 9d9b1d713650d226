"""Instance model: parsing, validation, serialization, random generation."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from arcticauction.market import (
    Equilibrium,
    MarketFormatError,
    MarketInstance,
    RunStats,
    format_rational,
    generate_random_instance,
    instance_bit_bounds,
    parse_equilibrium,
    parse_instance,
    parse_rational,
    serialize_equilibrium,
    serialize_instance,
    validate_instance,
)

rationals = st.fractions(
    min_value=Fraction(-100), max_value=Fraction(100), max_denominator=50
)
positive_rationals = st.fractions(
    min_value=Fraction(1, 50), max_value=Fraction(100), max_denominator=50
)


def test_parse_single_buyer_single_good():
    inst = parse_instance('{"money":["1"],"utilities":[["2"]]}')
    assert inst.n_buyers == 1 and inst.n_goods == 1
    assert inst.money == (Fraction(1),)
    assert inst.utilities == ((Fraction(2),),)


def test_parse_two_by_two():
    inst = parse_instance('{"money":["1","1"],"utilities":[["2","1"],["1","2"]]}')
    assert inst.n_buyers == 2 and inst.n_goods == 2
    assert inst.utilities[0] == (Fraction(2), Fraction(1))


def test_parse_rejects_buyer_without_positive_utility():
    with pytest.raises(MarketFormatError, match="no positive utility"):
        parse_instance('{"money":["3/2"],"utilities":[["0"]]}')


def test_parse_rejects_malformed_documents():
    with pytest.raises(MarketFormatError):
        parse_instance("not json")
    with pytest.raises(MarketFormatError):
        parse_instance('{"money":["1"]}')
    with pytest.raises(MarketFormatError):
        parse_instance('{"money":["1","2"],"utilities":[["1"]]}')
    with pytest.raises(MarketFormatError):
        parse_instance('{"money":["1"],"utilities":[["1/0"]]}')


def test_validate_accepts_positive_instance():
    inst = MarketInstance(
        money=(Fraction(1), Fraction(2)),
        utilities=((Fraction(1), Fraction(2)), (Fraction(3), Fraction(1))),
    )
    assert validate_instance(inst).ok


def test_validate_flags_undesired_good():
    inst = MarketInstance(
        money=(Fraction(1),),
        utilities=((Fraction(1), Fraction(0)),),
    )
    report = validate_instance(inst)
    assert not report.ok
    assert any("undesired" in v for v in report.violations)


def test_validate_flags_nonpositive_money():
    inst = MarketInstance(money=(Fraction(0),), utilities=((Fraction(1),),))
    report = validate_instance(inst)
    assert any("nonpositive money" in v for v in report.violations)


@given(a=rationals, b=rationals)
def test_rational_arithmetic_is_exact(a, b):
    assert (a + b) - b == a
    if b != 0:
        assert (a * b) / b == a


@given(x=positive_rationals)
def test_rational_string_round_trip(x):
    assert parse_rational(format_rational(x)) == x


def _random_equilibrium(rng_seed: int) -> tuple[MarketInstance, Equilibrium]:
    import random

    rng = random.Random(rng_seed)
    n, m = rng.randint(1, 3), rng.randint(1, 3)
    inst = generate_random_instance(rng_seed, n, m, 9)
    prices = tuple(Fraction(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(m))
    allocation = tuple(
        tuple(Fraction(rng.randint(0, 5), rng.randint(1, 7)) for _ in range(m))
        for _ in range(n)
    )
    returned = tuple(Fraction(rng.randint(0, 3), rng.randint(1, 5)) for _ in range(n))
    alpha = tuple(
        max(inst.utilities[i][j] / prices[j] for j in range(m)) for i in range(n)
    )
    bundle = tuple(
        sum((inst.utilities[i][j] * allocation[i][j] for j in range(m)), Fraction(0))
        for i in range(n)
    )
    return inst, Equilibrium(prices, allocation, returned, alpha, bundle)


@pytest.mark.parametrize("seed", range(20))
def test_equilibrium_serialization_round_trip(seed):
    inst, eq = _random_equilibrium(seed)
    stats = RunStats(phase_count=3, type1=2, type3=1, maxflow_calls=17)
    stats.potential_trace = [
        (1, 2, Fraction(5, 3), Fraction(1, 3), "I"),
        (2, 2, Fraction(1, 3), Fraction(0), "III"),
    ]
    text = serialize_equilibrium(eq, stats)
    back, back_stats = parse_equilibrium(text, inst)
    assert back == eq
    assert back_stats.phase_count == 3
    assert back_stats.maxflow_calls == 17
    assert back_stats.potential_trace == stats.potential_trace


def test_serialize_uses_rational_strings():
    inst, eq = _random_equilibrium(3)
    text = serialize_equilibrium(eq, RunStats())
    assert "e-" not in text and "." not in text.replace('"note": null', "")


def test_generator_is_deterministic():
    a = generate_random_instance(7, 2, 2, 5)
    b = generate_random_instance(7, 2, 2, 5)
    assert a == b
    assert serialize_instance(a) == serialize_instance(b)


@pytest.mark.parametrize("seed", range(30))
def test_generator_output_is_valid(seed):
    inst = generate_random_instance(seed, 1 + seed % 4, 1 + seed % 3, 10)
    assert validate_instance(inst).ok


def test_generator_respects_ranges():
    inst = generate_random_instance(1, 4, 3, 10)
    assert inst.n_buyers == 4 and inst.n_goods == 3
    assert all(1 <= m <= 10 and m.denominator == 1 for m in inst.money)
    assert all(0 <= u <= 10 and u.denominator == 1 for row in inst.utilities for u in row)


def test_bit_bounds():
    inst = MarketInstance(
        money=(Fraction(3), Fraction(5)),
        utilities=((Fraction(1), Fraction(7, 2)), (Fraction(2), Fraction(1))),
    )
    mn, total, mx, bits = instance_bit_bounds(inst)
    assert mn == 3 and total == 8 and mx == Fraction(7, 2)
    assert bits > 0


def test_names_metadata_round_trips():
    text = '{"money":["1"],"utilities":[["2"]],"names":{"buyers":["alice"]}}'
    inst = parse_instance(text)
    assert inst.names == {"buyers": ["alice"]}
    again = parse_instance(serialize_instance(inst))
    assert again.names == inst.names


def test_rejects_decimal_and_exponent_tokens():
    for token in ("2.5", "1e3", "nan", "inf", "1/2/3"):
        with pytest.raises(MarketFormatError):
            parse_rational(token)


@given(st.integers(min_value=0, max_value=9), st.integers(min_value=0, max_value=9))
def test_validation_matches_mild_assumptions(a, b):
    # A 2x2 instance is valid exactly when every row and column of the
    # utility matrix has a positive entry (money is fixed positive here).
    inst = MarketInstance(
        money=(Fraction(1), Fraction(2)),
        utilities=((Fraction(a), Fraction(b)), (Fraction(b), Fraction(a))),
    )
    rows_ok = all(any(u > 0 for u in row) for row in inst.utilities)
    cols_ok = all(any(row[j] > 0 for row in inst.utilities) for j in range(2))
    assert validate_instance(inst).ok == (rows_ok and cols_ok)
