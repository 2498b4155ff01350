"""Positions, Hamming geometry, argument equivalence classes, and tenable sets.

A position assigns a truth value to each of n propositions and is encoded as
an n-bit integer: bit i holds the value of proposition i+1. The factually
true position is the all-ones index. Tenable sets are bitmasks over the 2**n
positions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

Position = int
TenableSet = int

# (proposition index, polarity); polarity True asserts the proposition,
# False asserts its negation.
Literal = tuple[int, bool]

MIN_PROPOSITIONS = 3


class TenabilityViolation(RuntimeError):
    """An argument emptied the tenable set; callers must filter these out."""


def truth_position(n: int) -> Position:
    return (1 << n) - 1


def full_tenable_set(n: int) -> TenableSet:
    return (1 << (1 << n)) - 1


def position_from_bits(bits: tuple[int, ...]) -> Position:
    """Encode a (p1, ..., pn) truth-value tuple as a position index."""
    index = 0
    for i, b in enumerate(bits):
        if b:
            index |= 1 << i
    return index


def position_bits(p: Position, n: int) -> tuple[int, ...]:
    """Decode a position index into its (p1, ..., pn) truth-value tuple."""
    return tuple((p >> i) & 1 for i in range(n))


def positions_in(mask: TenableSet) -> Iterator[Position]:
    """Yield the positions of a tenable set in ascending index order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def tenable_set_from(positions) -> TenableSet:
    mask = 0
    for p in positions:
        mask |= 1 << p
    return mask


def hamming(a: Position, b: Position) -> int:
    """Number of propositions on which two positions disagree."""
    return (a ^ b).bit_count()


def accuracy(p: Position, n: int) -> int:
    """Number of true beliefs held at position p (equals n minus the
    Hamming distance to the true position)."""
    return (p & truth_position(n)).bit_count()


def consensus(p1: Position, p2: Position, n: int) -> float:
    """Fraction of propositions on which two positions agree."""
    return (n - hamming(p1, p2)) / n


@dataclass(frozen=True)
class ArgumentClass:
    """Equivalence class of two-premise, one-conclusion arguments.

    A class is identified by the set of positions it eliminates: every
    position that satisfies both premises and the negated conclusion. The
    eliminated set is a full assignment on three propositions (``props``,
    ascending) fixed to the bits of ``pattern``, with the remaining
    propositions free, so it always has 2**(n-3) members.
    """

    n: int
    props: tuple[int, int, int]
    pattern: int
    eliminated: TenableSet

    def members(self) -> tuple[tuple[tuple[Literal, Literal], Literal], ...]:
        """The three distinct (premise pair, conclusion) readings of the class.

        Choosing proposition k as the conclusion leaves the other two as
        premises asserting the eliminated pattern; the conclusion is the
        negation of the pattern's value on k. Premise order never matters
        for rule checks, so ordered variants are not enumerated.
        """
        out = []
        for k in range(3):
            concl: Literal = (self.props[k], not self._bit(k))
            prems = tuple(
                (self.props[i], self._bit(i)) for i in range(3) if i != k
            )
            out.append((prems, concl))
        return tuple(out)

    def canonical_form(self) -> tuple[tuple[Literal, Literal], Literal]:
        """Lexicographically smallest (premise pair, conclusion) member."""
        return min(self.members())

    def _bit(self, k: int) -> bool:
        return bool((self.pattern >> k) & 1)

    def __repr__(self) -> str:
        prems, concl = self.canonical_form()
        fmt = lambda lit: ("" if lit[1] else "~") + f"P{lit[0] + 1}"
        return f"[{fmt(prems[0])},{fmt(prems[1])} |- {fmt(concl)}]"


def _eliminated_mask(n: int, props: tuple[int, int, int], pattern: int) -> int:
    base = 0
    for k, prop in enumerate(props):
        if (pattern >> k) & 1:
            base |= 1 << prop
    free = [i for i in range(n) if i not in props]
    mask = 0
    for combo in range(1 << len(free)):
        pos = base
        for bit, prop in enumerate(free):
            if (combo >> bit) & 1:
                pos |= 1 << prop
        mask |= 1 << pos
    return mask


@lru_cache(maxsize=None)
def enumerate_argument_classes(n: int) -> tuple[ArgumentClass, ...]:
    """All argument classes for n propositions, in canonical order.

    There are exactly 8 * C(n, 3) classes: one per choice of three distinct
    propositions and per truth-value pattern on them. Raises ValueError for
    n < 3 since two-premise arguments need three distinct propositions.
    """
    if n < MIN_PROPOSITIONS:
        raise ValueError(f"need at least {MIN_PROPOSITIONS} propositions, got {n}")
    classes = []
    for props in itertools.combinations(range(n), 3):
        for pattern in range(8):
            classes.append(
                ArgumentClass(
                    n=n,
                    props=props,
                    pattern=pattern,
                    eliminated=_eliminated_mask(n, props, pattern),
                )
            )
    return tuple(classes)


def argument_class_count(n: int) -> int:
    return 8 * n * (n - 1) * (n - 2) // 6


def apply_argument(tenable: TenableSet, arg: ArgumentClass) -> TenableSet:
    """Contract a tenable set by an argument's eliminated positions."""
    result = tenable & ~arg.eliminated
    if result == 0:
        raise TenabilityViolation(f"argument {arg!r} eliminated every tenable position")
    return result


@lru_cache(maxsize=None)
def nearest_tenable(p: Position, tenable: TenableSet) -> tuple[Position, ...]:
    """All tenable positions at minimal Hamming distance from p.

    Returns (p,) when p itself is tenable. The result is ascending and
    nonempty for any nonempty tenable set. Cached: relocation is on the hot
    path of both the simulator and the exact solver.
    """
    if tenable == 0:
        raise ValueError("tenable set is empty")
    if (tenable >> p) & 1:
        return (p,)
    best_d = -1
    best: list[Position] = []
    for q in positions_in(tenable):
        d = hamming(p, q)
        if best_d < 0 or d < best_d:
            best_d = d
            best = [q]
        elif d == best_d:
            best.append(q)
    return tuple(best)
