"""Market instance data model, validation, serialization and random generation.

All quantities are exact rationals (`fractions.Fraction`).  Instances and
equilibria are immutable value objects; the JSON wire format writes every
number as an integer literal or a "p/q" string, never as a float.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction


class MarketFormatError(ValueError):
    """Raised when an instance or solution document cannot be parsed."""


_RATIONAL_TOKEN = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(token) -> Fraction:
    """Parse an integer literal or "p/q" string into an exact rational.

    Decimal and exponent forms are rejected: the wire format carries no
    floating-point numbers.
    """
    if isinstance(token, bool):
        raise MarketFormatError(f"not a rational token: {token!r}")
    if isinstance(token, int):
        return Fraction(token)
    if isinstance(token, str) and _RATIONAL_TOKEN.match(token.strip()):
        try:
            return Fraction(token.strip())
        except ZeroDivisionError as exc:
            raise MarketFormatError(f"zero denominator: {token!r}") from exc
    raise MarketFormatError(f"not a rational token: {token!r}")


def format_rational(value: Fraction) -> str:
    """Render a rational as "p" or "p/q", the inverse of parse_rational."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class MarketInstance:
    """Buyers with money endowments and a linear utility matrix.

    ``utilities[i][j]`` is buyer i's utility for one unit of good j and
    doubles as the price ceiling at which i is still willing to buy j.
    """

    money: tuple[Fraction, ...]
    utilities: tuple[tuple[Fraction, ...], ...]
    names: dict | None = None

    @property
    def n_buyers(self) -> int:
        return len(self.money)

    @property
    def n_goods(self) -> int:
        return len(self.utilities[0]) if self.utilities else 0

    @property
    def buyers(self) -> range:
        return range(self.n_buyers)

    @property
    def goods(self) -> range:
        return range(self.n_goods)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Equilibrium:
    """Prices, allocation, refunds and per-buyer bang-per-buck of a solution."""

    prices: tuple[Fraction, ...]
    allocation: tuple[tuple[Fraction, ...], ...]
    returned: tuple[Fraction, ...]
    alpha: tuple[Fraction, ...]
    bundle_utility: tuple[Fraction, ...]


@dataclass
class RunStats:
    """Run ledger: phase counts, flow-work and exact potential trace."""

    phase_count: int = 0
    type1: int = 0
    type2: int = 0
    type3: int = 0
    maxflow_calls: int = 0
    min_money: Fraction = Fraction(0)
    total_money: Fraction = Fraction(0)
    max_utility: Fraction = Fraction(0)
    input_bits: int = 0
    # (phase index, live buyers at phase start, phi before, phi after, type)
    potential_trace: list[tuple[int, int, Fraction, Fraction, str]] = field(default_factory=list)
    output_max_denominator: int = 1
    note: str | None = None


def bit_size(x: Fraction) -> int:
    return abs(x.numerator).bit_length() + x.denominator.bit_length()


def instance_bit_bounds(inst: MarketInstance) -> tuple[Fraction, Fraction, Fraction, int]:
    """Return (min money, total money, max utility, total input bit size)."""
    min_money = min(inst.money)
    total_money = sum(inst.money, Fraction(0))
    max_utility = max(max(row) for row in inst.utilities)
    bits = sum(bit_size(m) for m in inst.money)
    bits += sum(bit_size(u) for row in inst.utilities for u in row)
    return min_money, total_money, max_utility, bits


def validate_instance(inst: MarketInstance) -> ValidationReport:
    """Check positivity of money and both mild market assumptions.

    Every buyer must desire some good and every good must be desired by
    some buyer; zero-money buyers are rejected outright.
    """
    violations = []
    if inst.n_buyers == 0:
        violations.append("no buyers")
    if inst.n_goods == 0:
        violations.append("no goods")
    for i, row in enumerate(inst.utilities):
        if len(row) != inst.n_goods:
            violations.append(f"utility row {i} has wrong length")
    for i, m in enumerate(inst.money):
        if m <= 0:
            violations.append(f"buyer {i}: nonpositive money")
    for i, row in enumerate(inst.utilities):
        if any(u < 0 for u in row):
            violations.append(f"buyer {i}: negative utility")
        if all(u <= 0 for u in row):
            violations.append(f"buyer {i}: no positive utility for any good")
    for j in range(inst.n_goods):
        if all(row[j] <= 0 for row in inst.utilities):
            violations.append(f"good {j}: undesired by every buyer")
    return ValidationReport(tuple(violations))


def _parse_matrix(doc: dict) -> MarketInstance:
    if not isinstance(doc, dict):
        raise MarketFormatError("instance document must be a JSON object")
    try:
        money_raw = doc["money"]
        util_raw = doc["utilities"]
    except KeyError as exc:
        raise MarketFormatError(f"missing field: {exc.args[0]}") from exc
    if not isinstance(money_raw, list) or not isinstance(util_raw, list):
        raise MarketFormatError("'money' and 'utilities' must be arrays")
    money = tuple(parse_rational(tok) for tok in money_raw)
    if len(util_raw) != len(money):
        raise MarketFormatError(
            f"{len(money)} buyers but {len(util_raw)} utility rows"
        )
    rows = []
    width = None
    for row in util_raw:
        if not isinstance(row, list):
            raise MarketFormatError("utility rows must be arrays")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MarketFormatError("ragged utility matrix")
        rows.append(tuple(parse_rational(tok) for tok in row))
    return MarketInstance(money=money, utilities=tuple(rows), names=doc.get("names"))


def parse_instance(text: str) -> MarketInstance:
    """Parse and validate the instance JSON format.

    Raises MarketFormatError listing every violation when the document is
    malformed or the mild assumptions fail.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MarketFormatError(f"malformed JSON: {exc}") from exc
    inst = _parse_matrix(doc)
    report = validate_instance(inst)
    if not report.ok:
        raise MarketFormatError("invalid instance: " + "; ".join(report.violations))
    return inst


def serialize_instance(inst: MarketInstance) -> str:
    doc = {
        "money": [format_rational(m) for m in inst.money],
        "utilities": [[format_rational(u) for u in row] for row in inst.utilities],
    }
    if inst.names is not None:
        doc["names"] = inst.names
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def stats_to_doc(stats: RunStats) -> dict:
    return {
        "phase_count": stats.phase_count,
        "type1": stats.type1,
        "type2": stats.type2,
        "type3": stats.type3,
        "maxflow_calls": stats.maxflow_calls,
        "min_money": format_rational(stats.min_money),
        "total_money": format_rational(stats.total_money),
        "max_utility": format_rational(stats.max_utility),
        "input_bits": stats.input_bits,
        "potential_trace": [
            [idx, n_live, format_rational(before), format_rational(after), kind]
            for idx, n_live, before, after, kind in stats.potential_trace
        ],
        "output_max_denominator": stats.output_max_denominator,
        "note": stats.note,
    }


def stats_from_doc(doc: dict) -> RunStats:
    stats = RunStats()
    stats.phase_count = doc.get("phase_count", 0)
    stats.type1 = doc.get("type1", 0)
    stats.type2 = doc.get("type2", 0)
    stats.type3 = doc.get("type3", 0)
    stats.maxflow_calls = doc.get("maxflow_calls", 0)
    stats.min_money = parse_rational(doc.get("min_money", "0"))
    stats.total_money = parse_rational(doc.get("total_money", "0"))
    stats.max_utility = parse_rational(doc.get("max_utility", "0"))
    stats.input_bits = doc.get("input_bits", 0)
    stats.potential_trace = [
        (row[0], row[1], parse_rational(row[2]), parse_rational(row[3]), row[4])
        for row in doc.get("potential_trace", [])
    ]
    stats.output_max_denominator = doc.get("output_max_denominator", 1)
    stats.note = doc.get("note")
    return stats


def serialize_equilibrium(eq: Equilibrium, stats: RunStats | None = None) -> str:
    """Emit the equilibrium JSON document with exact rational strings."""
    doc = {
        "prices": [format_rational(p) for p in eq.prices],
        "allocation": [[format_rational(x) for x in row] for row in eq.allocation],
        "returned": [format_rational(s) for s in eq.returned],
        "alpha": [format_rational(a) for a in eq.alpha],
        "stats": stats_to_doc(stats) if stats is not None else {},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_equilibrium(text: str, inst: MarketInstance | None = None) -> tuple[Equilibrium, RunStats]:
    """Parse an equilibrium document; inverse of serialize_equilibrium.

    Bundle utilities are not part of the wire format; pass the instance to
    have them recomputed, otherwise they are left as zeros.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MarketFormatError(f"malformed JSON: {exc}") from exc
    try:
        prices = tuple(parse_rational(t) for t in doc["prices"])
        allocation = tuple(tuple(parse_rational(t) for t in row) for row in doc["allocation"])
        returned = tuple(parse_rational(t) for t in doc["returned"])
        alpha = tuple(parse_rational(t) for t in doc["alpha"])
    except KeyError as exc:
        raise MarketFormatError(f"missing field: {exc.args[0]}") from exc
    if inst is not None:
        bundle = tuple(
            sum((inst.utilities[i][j] * allocation[i][j] for j in inst.goods), Fraction(0))
            for i in inst.buyers
        )
    else:
        bundle = tuple(Fraction(0) for _ in allocation)
    eq = Equilibrium(
        prices=prices,
        allocation=allocation,
        returned=returned,
        alpha=alpha,
        bundle_utility=bundle,
    )
    stats = stats_from_doc(doc.get("stats", {}))
    return eq, stats


def equilibrium_for_instance(
    inst: MarketInstance,
    prices: tuple[Fraction, ...],
    allocation: tuple[tuple[Fraction, ...], ...],
    returned: tuple[Fraction, ...],
) -> Equilibrium:
    """Build an Equilibrium, deriving alphas and bundle utilities from inst."""
    alpha = tuple(
        max(inst.utilities[i][j] / prices[j] for j in inst.goods)
        for i in inst.buyers
    )
    bundle = tuple(
        sum((inst.utilities[i][j] * allocation[i][j] for j in inst.goods), Fraction(0))
        for i in inst.buyers
    )
    return Equilibrium(
        prices=prices,
        allocation=allocation,
        returned=returned,
        alpha=alpha,
        bundle_utility=bundle,
    )


def rehydrate_equilibrium(inst: MarketInstance, eq: Equilibrium) -> Equilibrium:
    """Recompute derived fields of a parsed equilibrium against an instance."""
    return equilibrium_for_instance(inst, eq.prices, eq.allocation, eq.returned)


def generate_random_instance(seed: int, n: int, m: int, max_value: int) -> MarketInstance:
    """Deterministically generate a valid instance with integer data.

    Money is uniform in [1, max_value]; utilities are uniform in
    [0, max_value], resampled until both mild assumptions hold.
    """
    if n < 1 or m < 1 or max_value < 1:
        raise ValueError("need n, m >= 1 and max_value >= 1")
    rng = random.Random(seed)
    money = tuple(Fraction(rng.randint(1, max_value)) for _ in range(n))
    while True:
        rows = [[Fraction(rng.randint(0, max_value)) for _ in range(m)] for _ in range(n)]
        if all(any(u > 0 for u in row) for row in rows) and all(
            any(rows[i][j] > 0 for i in range(n)) for j in range(m)
        ):
            break
    utilities = tuple(tuple(row) for row in rows)
    return MarketInstance(money=money, utilities=utilities)
