"""The sixteen premise/conclusion rule pairs plus Exit, their taxonomy, and
feasibility of argument classes given the debaters' positions.

A non-Exit strategy is a pair (premise rule, conclusion rule). Each rule
refers to one debater's beliefs: accept-rules require every referenced
literal to be satisfied by that debater's position, reject-rules require at
least one referenced literal to be falsified. An argument class is
consistent with a strategy if at least one of its syntactic members passes
both rules; it is valid if it does not rule out the true position.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .logic import (
    ArgumentClass,
    Literal,
    Position,
    enumerate_argument_classes,
    truth_position,
)


class Rule(enum.Enum):
    SELF_ACCEPT = "S+"
    SELF_REJECT = "S-"
    OTHER_ACCEPT = "O+"
    OTHER_REJECT = "O-"

    def __str__(self) -> str:
        return self.value


class Group(enum.Enum):
    BOLD = "bold"
    CONSERVATIVE = "conservative"
    COMPROMISING = "compromise"
    REFUSENIK = "refusenik"


class Arity(enum.Enum):
    MONADIC = "monadic"
    DYADIC = "dyadic"


@dataclass(frozen=True)
class StrategyGroup:
    group: Group
    arity: Arity


@dataclass(frozen=True, order=True)
class StrategySpec:
    """A premise/conclusion rule pair, or Exit (both rules None)."""

    premise_rule: Rule | None
    conclusion_rule: Rule | None

    @property
    def is_exit(self) -> bool:
        return self.premise_rule is None

    @property
    def name(self) -> str:
        """Canonical serialized name (uses U+2212 for the minus sign)."""
        if self.is_exit:
            return "Exit"
        raw = self.premise_rule.value + self.conclusion_rule.value
        return raw.replace("-", "−")

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"StrategySpec({self.name!r})"


EXIT = StrategySpec(None, None)


def _s(text: str) -> StrategySpec:
    return StrategySpec(Rule(text[:2]), Rule(text[2:]))


# Canonical strategy order; tables and CSV output follow it.
ALL_STRATEGIES: tuple[StrategySpec, ...] = (
    _s("S+S-"), _s("O+O-"),                                          # bold
    _s("S-S-"), _s("S-S+"), _s("O-O-"), _s("O-O+"), _s("S+S+"), _s("O+O+"),
    _s("S-O-"), _s("S+O-"), _s("S+O+"), _s("O-S-"), _s("O+S-"), _s("O+S+"),
    _s("O-S+"), _s("S-O+"),                                          # refusenik
    EXIT,
)

NUM_STRATEGIES = len(ALL_STRATEGIES)

_GROUPS: dict[StrategySpec, StrategyGroup] = {
    _s("S+S-"): StrategyGroup(Group.BOLD, Arity.MONADIC),
    _s("O+O-"): StrategyGroup(Group.BOLD, Arity.MONADIC),
    _s("S-S-"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("S-S+"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("O-O-"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("O-O+"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("S+S+"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("O+O+"): StrategyGroup(Group.CONSERVATIVE, Arity.MONADIC),
    _s("S-O-"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("S+O-"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("S+O+"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("O-S-"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("O+S-"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("O+S+"): StrategyGroup(Group.COMPROMISING, Arity.DYADIC),
    _s("O-S+"): StrategyGroup(Group.REFUSENIK, Arity.DYADIC),
    _s("S-O+"): StrategyGroup(Group.REFUSENIK, Arity.DYADIC),
    EXIT: StrategyGroup(Group.REFUSENIK, Arity.DYADIC),
}


def group_of(strategy: StrategySpec) -> StrategyGroup:
    return _GROUPS[strategy]


def parse_strategy(text: str) -> StrategySpec:
    """Parse a serialized strategy name; ASCII '-' and U+2212 both accepted."""
    cleaned = text.strip().replace("−", "-")
    if cleaned.lower() == "exit":
        return EXIT
    try:
        spec = _s(cleaned)
    except (ValueError, IndexError):
        raise ValueError(f"unknown strategy name: {text!r}") from None
    return spec


def literal_satisfies_rule(
    rule: Rule, literal: Literal, p_self: Position, p_other: Position
) -> bool:
    """Whether one literal meets a rule given the two debaters' positions.

    Accept-rules hold when the referenced debater's position satisfies the
    literal; reject-rules when it falsifies it. Premise rules compose over
    the two premise literals (accept: all, reject: at least one); conclusion
    rules apply to the single conclusion literal.
    """
    prop, polarity = literal
    pos = p_self if rule in (Rule.SELF_ACCEPT, Rule.SELF_REJECT) else p_other
    satisfied = bool((pos >> prop) & 1) == polarity
    if rule in (Rule.SELF_ACCEPT, Rule.OTHER_ACCEPT):
        return satisfied
    return not satisfied


def _member_consistent(
    member: tuple[tuple[Literal, Literal], Literal],
    premise_rule: Rule,
    conclusion_rule: Rule,
    p_self: Position,
    p_other: Position,
) -> bool:
    premises, conclusion = member
    if premise_rule in (Rule.SELF_ACCEPT, Rule.OTHER_ACCEPT):
        premise_ok = all(
            literal_satisfies_rule(premise_rule, lit, p_self, p_other)
            for lit in premises
        )
    else:
        premise_ok = any(
            literal_satisfies_rule(premise_rule, lit, p_self, p_other)
            for lit in premises
        )
    if not premise_ok:
        return False
    return literal_satisfies_rule(conclusion_rule, conclusion, p_self, p_other)


def class_consistent(
    arg: ArgumentClass,
    strategy: StrategySpec,
    p_self: Position,
    p_other: Position,
) -> bool:
    """A class is strategy-consistent if any syntactic member passes."""
    return any(
        _member_consistent(
            m, strategy.premise_rule, strategy.conclusion_rule, p_self, p_other
        )
        for m in arg.members()
    )


@lru_cache(maxsize=None)
def consistent_classes(
    n: int, strategy: StrategySpec, p_self: Position, p_other: Position
) -> tuple[ArgumentClass, ...]:
    """All strategy-consistent classes, in canonical class order.

    Consistency depends only on the two positions, never on the tenable set.
    """
    if strategy.is_exit:
        raise ValueError("Exit produces no arguments")
    return tuple(
        arg
        for arg in enumerate_argument_classes(n)
        if class_consistent(arg, strategy, p_self, p_other)
    )


@lru_cache(maxsize=None)
def consistent_class_split(
    n: int, strategy: StrategySpec, p_self: Position, p_other: Position
) -> tuple[tuple[ArgumentClass, ...], tuple[ArgumentClass, ...]]:
    """Strategy-consistent classes split into (valid, invalid).

    Validity is judged against the fixed true position only: a consistent
    class is invalid when its eliminated set contains the truth.
    """
    truth = truth_position(n)
    valid = []
    invalid = []
    for arg in consistent_classes(n, strategy, p_self, p_other):
        if (arg.eliminated >> truth) & 1:
            invalid.append(arg)
        else:
            valid.append(arg)
    return tuple(valid), tuple(invalid)


def feasible_classes(
    state, strategy: StrategySpec, truth_present: bool = True
) -> tuple[tuple[ArgumentClass, ...], tuple[ArgumentClass, ...]]:
    """(valid, invalid) classes for the proponent state.p1 against state.p2.

    With the truth already removed from the tenable set no argument can rule
    it out, so every consistent class counts as valid and invalid is empty.
    """
    if truth_present:
        return consistent_class_split(state.n, strategy, state.p1, state.p2)
    return consistent_classes(state.n, strategy, state.p1, state.p2), ()


@lru_cache(maxsize=None)
def feasibility_masks(
    n: int, strategy: StrategySpec, p_self: Position, p_other: Position
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Eliminated-set bitmasks of the (valid, invalid) consistent classes."""
    valid, invalid = consistent_class_split(n, strategy, p_self, p_other)
    return (
        tuple(c.eliminated for c in valid),
        tuple(c.eliminated for c in invalid),
    )
