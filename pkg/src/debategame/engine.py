"""Stochastic debate execution and seeded Monte Carlo ensembles.

Each round one debater is drawn at random to speak. The speaker's
strategy-consistent argument classes are split into valid ones and invalid
ones (those ruling out the truth), keeping only classes that still eliminate
some tenable position: exhausted classes would repeat an argument already on
the table, so a debater with nothing new to say passes. Selection follows
the error weight alpha: valid classes carry weight 1 and invalid ones weight
alpha when both kinds exist, a lone invalid pool fires only with probability
alpha, and an empty pool means the speaker passes. Debaters whose position
is eliminated move to a uniformly chosen nearest tenable position. After
every round the debate stops with probability 1 - delta, so the number of
rounds is geometric: P(rounds = t) = delta**t * (1 - delta).
"""

from __future__ import annotations

import hashlib
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .logic import (
    Position,
    TenableSet,
    consensus,
    full_tenable_set,
    hamming,
    nearest_tenable,
)
from .strategies import EXIT, StrategySpec, feasibility_masks


class DebateState(NamedTuple):
    n: int
    tenable: TenableSet
    p1: Position
    p2: Position


@dataclass(frozen=True)
class DebateParams:
    n: int
    delta: float
    w: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be at least 3, got {self.n}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if self.w < 0.0:
            raise ValueError(f"w must be nonnegative, got {self.w}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class DebateRealization:
    params: DebateParams
    states: tuple[DebateState, ...]
    v1: int
    v2: int
    d1: int
    d2: int

    @property
    def u1(self) -> float:
        return self.params.w * self.v1 - self.d1

    @property
    def u2(self) -> float:
        return self.params.w * self.v2 - self.d2

    @property
    def final(self) -> DebateState:
        return self.states[-1]

    @property
    def consensus(self) -> float:
        return consensus(self.final.p1, self.final.p2, self.params.n)


def debate_rng(seed: int, index: int) -> random.Random:
    """Independent, platform-stable RNG stream for one debate of an ensemble."""
    digest = hashlib.blake2b(f"{seed}:{index}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


def init_state(n: int, rng: random.Random) -> DebateState:
    """Fresh debate: every position tenable, both positions i.i.d. uniform."""
    size = 1 << n
    return DebateState(n, full_tenable_set(n), rng.randrange(size), rng.randrange(size))


@lru_cache(maxsize=None)
def _speaker_masks(
    n: int, strategy: StrategySpec, p_self: Position, p_other: Position
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """(valid, invalid, merged) eliminated-set masks for one speaker.

    merged is the truth-absent pool, where every consistent class is valid.
    """
    valid, invalid = feasibility_masks(n, strategy, p_self, p_other)
    return valid, invalid, valid + invalid


def _select_mask(
    valid: tuple[int, ...],
    invalid: tuple[int, ...],
    alpha: float,
    rng: random.Random,
) -> int | None:
    """Draw an argument class mask per the alpha cases, or None for a pass.

    Both pools must already be restricted to speakable classes.
    """
    nv = len(valid)
    ni = len(invalid)
    if nv:
        if not ni or alpha == 0.0:
            return valid[int(rng.random() * nv)] if nv > 1 else valid[0]
        r = rng.random() * (nv + alpha * ni)
        if r < nv:
            return valid[int(r)]
        return invalid[min(int((r - nv) / alpha), ni - 1)]
    if ni and alpha > 0.0:
        r = rng.random()
        if r < alpha:
            return invalid[min(int(r / alpha * ni), ni - 1)]
    return None


def step(
    state: DebateState,
    s1: StrategySpec,
    s2: StrategySpec,
    alpha: float,
    rng: random.Random,
) -> tuple[DebateState, tuple[int, int]]:
    """One round: draw the speaker, select and apply an argument, relocate.

    Returns the successor state and the two debaters' relocation distances.
    Neither strategy may be Exit.
    """
    if s1.is_exit or s2.is_exit:
        raise ValueError("Exit strategies never take a turn")
    n, tenable, p1, p2 = state
    truth_bit = (1 << n) - 1
    if rng.random() < 0.5:
        valid, invalid, merged = _speaker_masks(n, s1, p1, p2)
    else:
        valid, invalid, merged = _speaker_masks(n, s2, p2, p1)
    if not (tenable >> truth_bit) & 1:
        valid, invalid = merged, ()
    valid = tuple(m for m in valid if tenable & m and tenable & ~m)
    invalid = tuple(m for m in invalid if tenable & m and tenable & ~m)
    mask = _select_mask(valid, invalid, alpha, rng)
    if mask is None:
        return state, (0, 0)
    new_tenable = tenable & ~mask
    d1 = d2 = 0
    if (mask >> p1) & 1:
        options = nearest_tenable(p1, new_tenable)
        new_p1 = options[int(rng.random() * len(options))] if len(options) > 1 else options[0]
        d1 = hamming(p1, new_p1)
        p1 = new_p1
    if (mask >> p2) & 1:
        options = nearest_tenable(p2, new_tenable)
        new_p2 = options[int(rng.random() * len(options))] if len(options) > 1 else options[0]
        d2 = hamming(p2, new_p2)
        p2 = new_p2
    return DebateState(n, new_tenable, p1, p2), (d1, d2)


def _is_absorbing(state: DebateState, s1: StrategySpec, s2: StrategySpec, alpha: float) -> bool:
    """True when no selectable class of either debater can still change T."""
    n, tenable, p1, p2 = state
    truth_present = bool((tenable >> ((1 << n) - 1)) & 1)
    for strategy, me, other in ((s1, p1, p2), (s2, p2, p1)):
        valid, invalid, merged = _speaker_masks(n, strategy, me, other)
        if not truth_present:
            pool = merged
        elif alpha > 0.0:
            pool = merged
        else:
            pool = valid
        for m in pool:
            if tenable & m and tenable & ~m:
                return False
    return True


def run_debate(
    params: DebateParams,
    s1: StrategySpec,
    s2: StrategySpec,
    rng: random.Random,
    early_exit: bool = True,
) -> DebateRealization:
    """Play one debate to termination and report the realized metrics.

    Exit by either side ends the debate before any argument. Otherwise the
    round loop continues with probability delta per round; when early_exit is
    set, rounds stop as soon as the state can no longer change (the remaining
    geometric tail cannot alter any metric).
    """
    state = init_state(params.n, rng)
    states = [state]
    d1 = d2 = 0
    if not (s1.is_exit or s2.is_exit):
        alpha = params.alpha
        absorbed = early_exit and _is_absorbing(state, s1, s2, alpha)
        while not absorbed and rng.random() < params.delta:
            new_state, (m1, m2) = step(state, s1, s2, alpha, rng)
            d1 += m1
            d2 += m2
            if new_state != state:
                state = new_state
                states.append(state)
                absorbed = early_exit and _is_absorbing(state, s1, s2, alpha)
            else:
                states.append(state)
    return DebateRealization(
        params=params,
        states=tuple(states),
        v1=state.p1.bit_count(),
        v2=state.p2.bit_count(),
        d1=d1,
        d2=d2,
    )


@dataclass(frozen=True)
class EnsembleStats:
    """Order-independent aggregate of independent debate realizations.

    All moments are accumulated as exact integer sums, so results are
    bit-identical however the debates are partitioned across workers.
    Standard errors are sample standard deviation / sqrt(count); NaN when
    count == 1.
    """

    params: DebateParams
    count: int
    mean_v1: float
    mean_v2: float
    mean_d1: float
    mean_d2: float
    mean_u1: float
    mean_u2: float
    mean_consensus: float
    mean_collective: float
    se_v1: float
    se_v2: float
    se_d1: float
    se_d2: float
    se_u1: float
    se_u2: float
    se_consensus: float
    se_collective: float


def _simulate_sums(
    params: DebateParams,
    s1: StrategySpec,
    s2: StrategySpec,
    lo: int,
    hi: int,
    seed: int,
    early_exit: bool,
) -> tuple[int, ...]:
    sums = [0] * 13
    for index in range(lo, hi):
        r = run_debate(params, s1, s2, debate_rng(seed, index), early_exit)
        agree = params.n - hamming(r.final.p1, r.final.p2)
        coll = r.v1 + r.v2
        vals = (
            r.v1, r.v1 * r.v1, r.d1, r.d1 * r.d1, r.v1 * r.d1,
            r.v2, r.v2 * r.v2, r.d2, r.d2 * r.d2, r.v2 * r.d2,
            agree, agree * agree, coll * coll,
        )
        for i, v in enumerate(vals):
            sums[i] += v
    return tuple(sums)


def _mean_se(total: int, total_sq: int, count: int, scale: float = 1.0) -> tuple[float, float]:
    mean = total / count
    if count < 2:
        return mean * scale, float("nan")
    var = (total_sq - total * total / count) / (count - 1)
    var = max(var, 0.0)
    return mean * scale, math.sqrt(var / count) * scale


def ensemble(
    params: DebateParams,
    s1: StrategySpec,
    s2: StrategySpec,
    count: int,
    seed: int,
    workers: int = 1,
    early_exit: bool = True,
) -> EnsembleStats:
    """Aggregate `count` independent seeded debates into summary statistics.

    Debate i draws its RNG stream from (seed, i), so the result does not
    depend on worker count or execution order.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if workers > 1 and count >= 4 * workers:
        bounds = [count * k // (workers * 4) for k in range(workers * 4 + 1)]
        chunks = [
            (params, s1, s2, lo, hi, seed, early_exit)
            for lo, hi in zip(bounds, bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_sums_star, chunks))
        sums = [sum(col) for col in zip(*results)]
    else:
        sums = list(_simulate_sums(params, s1, s2, 0, count, seed, early_exit))

    (sv1, sv1q, sd1, sd1q, svd1, sv2, sv2q, sd2, sd2q, svd2, sa, saq, scq) = sums
    n, w = params.n, params.w
    mean_v1, se_v1 = _mean_se(sv1, sv1q, count)
    mean_v2, se_v2 = _mean_se(sv2, sv2q, count)
    mean_d1, se_d1 = _mean_se(sd1, sd1q, count)
    mean_d2, se_d2 = _mean_se(sd2, sd2q, count)
    mean_cons, se_cons = _mean_se(sa, saq, count, scale=1.0 / n)
    mean_coll, se_coll = _mean_se(sv1 + sv2, scq, count, scale=1.0 / (2 * n))

    def u_stats(sv, svq, sd, sdq, svd):
        mean = (w * sv - sd) / count
        if count < 2:
            return mean, float("nan")
        var_v = (svq - sv * sv / count) / (count - 1)
        var_d = (sdq - sd * sd / count) / (count - 1)
        cov = (svd - sv * sd / count) / (count - 1)
        var = max(w * w * var_v + var_d - 2.0 * w * cov, 0.0)
        return mean, math.sqrt(var / count)

    mean_u1, se_u1 = u_stats(sv1, sv1q, sd1, sd1q, svd1)
    mean_u2, se_u2 = u_stats(sv2, sv2q, sd2, sd2q, svd2)
    return EnsembleStats(
        params=params,
        count=count,
        mean_v1=mean_v1, mean_v2=mean_v2,
        mean_d1=mean_d1, mean_d2=mean_d2,
        mean_u1=mean_u1, mean_u2=mean_u2,
        mean_consensus=mean_cons, mean_collective=mean_coll,
        se_v1=se_v1, se_v2=se_v2, se_d1=se_d1, se_d2=se_d2,
        se_u1=se_u1, se_u2=se_u2,
        se_consensus=se_cons, se_collective=se_coll,
    )


def _simulate_sums_star(args) -> tuple[int, ...]:
    return _simulate_sums(*args)
