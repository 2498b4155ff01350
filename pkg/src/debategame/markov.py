"""Exact expected payoffs for small debates via the discounted Markov chain.

A chain state is a triplet (tenable set, position 1, position 2) with both
positions tenable. One Markov step is one speaker draw: each debater speaks
with probability 1/2, selects among argument classes per the error weight
alpha, and relocation ties split uniformly over the reachable successor
states. Final-state and visit distributions come from sparse solves of
(I - delta*M); the expected number of rounds is geometric with continuation
probability delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .logic import full_tenable_set, nearest_tenable, positions_in, truth_position
from .strategies import StrategySpec, feasibility_masks

# Exact enumeration beyond n = 3 is out of reach (n = 4 already has millions
# of states); the simulation engine covers larger debates.
MAX_EXACT_PROPOSITIONS = 3

StateKey = tuple[int, int, int]  # (tenable mask, p1, p2)


class CapacityError(Exception):
    """The requested computation exceeds the exact solver's state capacity."""


@dataclass(frozen=True)
class StateSpace:
    """Dense indexing of all debate states for one n.

    With include_truth_removed, tenable sets range over every nonempty
    subset of positions; otherwise only truth-keeping subsets occur (the
    error-free dynamics never leave them).
    """

    n: int
    include_truth_removed: bool
    states: tuple[StateKey, ...]
    index: dict[StateKey, int]

    def __len__(self) -> int:
        return len(self.states)

    def initial_distribution(self) -> np.ndarray:
        """Uniform over the states whose tenable set is still complete."""
        full = full_tenable_set(self.n)
        y0 = np.zeros(len(self.states))
        weight = 1.0 / (1 << (2 * self.n))
        for i, (tenable, _, _) in enumerate(self.states):
            if tenable == full:
                y0[i] = weight
        return y0

    def accuracy_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        acc1 = np.array([p1.bit_count() for _, p1, _ in self.states], dtype=float)
        acc2 = np.array([p2.bit_count() for _, _, p2 in self.states], dtype=float)
        return acc1, acc2

    def consensus_vector(self) -> np.ndarray:
        n = self.n
        return np.array(
            [(n - (p1 ^ p2).bit_count()) / n for _, p1, p2 in self.states]
        )


def enumerate_states(n: int, include_truth_removed: bool = False) -> StateSpace:
    """Enumerate every (tenable set, p1, p2) state in canonical order.

    Raises CapacityError for n > 3.
    """
    if n > MAX_EXACT_PROPOSITIONS:
        raise CapacityError(
            f"exact state enumeration supports n <= {MAX_EXACT_PROPOSITIONS}, got {n}"
        )
    truth_bit = 1 << truth_position(n)
    states: list[StateKey] = []
    for tenable in range(1, 1 << (1 << n)):
        if not include_truth_removed and not tenable & truth_bit:
            continue
        members = list(positions_in(tenable))
        for p1 in members:
            for p2 in members:
                states.append((tenable, p1, p2))
    index = {s: i for i, s in enumerate(states)}
    return StateSpace(
        n=n,
        include_truth_removed=include_truth_removed,
        states=tuple(states),
        index=index,
    )


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic chain for one strategy profile, with per-transition
    relocation distances for both debaters on the same sparsity."""

    M: sp.csr_matrix
    Q1: sp.csr_matrix
    Q2: sp.csr_matrix


@dataclass(frozen=True)
class ExactOutcome:
    v1: float
    v2: float
    d1: float
    d2: float
    u1: float
    u2: float
    consensus: float

    @property
    def collective(self) -> float:
        return (self.v1 + self.v2) / 2.0


class ExactSolver:
    """Assembles and solves debate chains for every strategy profile.

    Speaker operators (one per strategy and speaker role) are independent of
    delta and w, so they are built once and shared across the whole
    parameter grid; only the sparse solve depends on delta, and w enters
    payoffs linearly at the end.
    """

    def __init__(
        self,
        n: int = 3,
        alpha: float = 0.0,
        include_truth_removed: bool | None = None,
    ):
        if include_truth_removed is None:
            include_truth_removed = alpha > 0.0
        self.n = n
        self.alpha = alpha
        self.space = enumerate_states(n, include_truth_removed)
        self._truth_bit = 1 << truth_position(n)
        self._operators: dict[tuple[StrategySpec, int], sp.csr_matrix] = {}
        self._kernels: dict[tuple[StrategySpec, StrategySpec, float], tuple] = {}
        self._p1 = np.array([p1 for _, p1, _ in self.space.states])
        self._p2 = np.array([p2 for _, _, p2 in self.space.states])

    # -- chain assembly ----------------------------------------------------

    def successor_distribution(
        self, state: StateKey, strategy: StrategySpec, role: int = 1
    ) -> dict[StateKey, float]:
        """Distribution over successor states when one debater speaks.

        role selects the speaker (1 or 2); pass mass sits on the state
        itself. Only classes that still eliminate a tenable position are
        speakable: exhausted ones would repeat an argument already on the
        table, so a debater with nothing new to say passes. Probabilities
        follow class selection (valid weight 1, invalid weight alpha), then
        uniform tie-splitting across the states reachable from the chosen
        class.
        """
        if strategy.is_exit:
            raise ValueError("Exit produces no arguments")
        tenable, p1, p2 = state
        if role == 1:
            p_self, p_other = p1, p2
        else:
            p_self, p_other = p2, p1
        valid, invalid = feasibility_masks(self.n, strategy, p_self, p_other)
        if not tenable & self._truth_bit:
            valid, invalid = valid + invalid, ()
        # selectable classes must still eliminate something, and may not
        # exhaust every tenable position
        valid = tuple(m for m in valid if tenable & m and tenable & ~m)
        invalid = tuple(m for m in invalid if tenable & m and tenable & ~m)
        nv, ni = len(valid), len(invalid)
        alpha = self.alpha
        weighted: list[tuple[int, float]] = []
        pass_prob = 0.0
        if nv:
            z = nv + alpha * ni
            weighted = [(m, 1.0 / z) for m in valid]
            if alpha > 0.0:
                weighted += [(m, alpha / z) for m in invalid]
        elif ni and alpha > 0.0:
            pass_prob = 1.0 - alpha
            weighted = [(m, alpha / ni) for m in invalid]
        else:
            pass_prob = 1.0

        row: dict[StateKey, float] = {}
        if pass_prob:
            row[state] = pass_prob
        for mask, prob in weighted:
            new_tenable = tenable & ~mask
            opts1 = nearest_tenable(p1, new_tenable) if (mask >> p1) & 1 else (p1,)
            opts2 = nearest_tenable(p2, new_tenable) if (mask >> p2) & 1 else (p2,)
            share = prob / (len(opts1) * len(opts2))
            for a in opts1:
                for b in opts2:
                    key = (new_tenable, a, b)
                    row[key] = row.get(key, 0.0) + share
        return row

    def _speaker_operator(self, strategy: StrategySpec, role: int) -> sp.csr_matrix:
        cached = self._operators.get((strategy, role))
        if cached is not None:
            return cached
        index = self.space.index
        rows: list[int] = []
        cols: list[int] = []
        data: list[float] = []
        for i, state in enumerate(self.space.states):
            for key, prob in self.successor_distribution(state, strategy, role).items():
                rows.append(i)
                cols.append(index[key])
                data.append(prob)
        m = len(self.space.states)
        op = sp.coo_matrix((data, (rows, cols)), shape=(m, m)).tocsr()
        self._operators[(strategy, role)] = op
        return op

    def build_transition_matrix(self, s1: StrategySpec, s2: StrategySpec) -> TransitionMatrix:
        """Average the two speakers' operators and attach relocation costs."""
        if s1.is_exit or s2.is_exit:
            raise ValueError("Exit profiles have no transition chain")
        M = (self._speaker_operator(s1, 1) + self._speaker_operator(s2, 2)) * 0.5
        M.sum_duplicates()
        coo = M.tocoo()
        d1 = _popcount(self._p1[coo.row] ^ self._p1[coo.col]).astype(float)
        d2 = _popcount(self._p2[coo.row] ^ self._p2[coo.col]).astype(float)
        q1 = sp.csr_matrix((d1, (coo.row, coo.col)), shape=M.shape)
        q2 = sp.csr_matrix((d2, (coo.row, coo.col)), shape=M.shape)
        return TransitionMatrix(M=M.tocsr(), Q1=q1, Q2=q2)

    # -- discounted solves ---------------------------------------------------

    def _kernel(self, s1: StrategySpec, s2: StrategySpec, delta: float) -> tuple:
        """(v1, v2, d1, d2, consensus): every w-independent expectation."""
        key = (s1, s2, delta)
        cached = self._kernels.get(key)
        if cached is not None:
            return cached
        tm = self.build_transition_matrix(s1, s2)
        y0 = self.space.initial_distribution()
        z = expected_visits(tm.M, delta, y0)
        y = (1.0 - delta) * z
        acc1, acc2 = self.space.accuracy_vectors()
        cons = self.space.consensus_vector()
        mq1 = np.asarray(tm.M.multiply(tm.Q1).sum(axis=1)).ravel()
        mq2 = np.asarray(tm.M.multiply(tm.Q2).sum(axis=1)).ravel()
        kernel = (
            float(y @ acc1),
            float(y @ acc2),
            float(delta * (z @ mq1)),
            float(delta * (z @ mq2)),
            float(y @ cons),
        )
        self._kernels[key] = kernel
        return kernel

    def exact_outcome(self, s1: StrategySpec, s2: StrategySpec, params) -> ExactOutcome:
        """Expected accuracies, obstinacy penalties, payoffs, and consensus."""
        if params.n != self.n or params.alpha != self.alpha:
            raise ValueError("params do not match this solver's n/alpha")
        n, w = self.n, params.w
        if s1.is_exit or s2.is_exit:
            half = n / 2.0
            return ExactOutcome(
                v1=half, v2=half, d1=0.0, d2=0.0,
                u1=w * half, u2=w * half, consensus=0.5,
            )
        v1, v2, d1, d2, cons = self._kernel(s1, s2, params.delta)
        return ExactOutcome(
            v1=v1, v2=v2, d1=d1, d2=d2,
            u1=w * v1 - d1, u2=w * v2 - d2, consensus=cons,
        )

    def metrics_over_time(
        self, s1: StrategySpec, s2: StrategySpec, t_max: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-round expected (normalized collective accuracy, consensus)
        for t = 0..t_max rounds."""
        if s1.is_exit or s2.is_exit:
            half = np.full(t_max + 1, 0.5)
            return half, half.copy()
        tm = self.build_transition_matrix(s1, s2)
        mt = tm.M.T.tocsr()
        acc1, acc2 = self.space.accuracy_vectors()
        coll = (acc1 + acc2) / (2.0 * self.n)
        cons = self.space.consensus_vector()
        y = self.space.initial_distribution()
        coll_curve = np.empty(t_max + 1)
        cons_curve = np.empty(t_max + 1)
        for t in range(t_max + 1):
            coll_curve[t] = y @ coll
            cons_curve[t] = y @ cons
            if t < t_max:
                y = mt @ y
        return coll_curve, cons_curve


def discounted_final_distribution(M: sp.spmatrix, delta: float, y0: np.ndarray) -> np.ndarray:
    """Distribution over final states: (1-delta) * y0 * (I - delta*M)^-1."""
    return (1.0 - delta) * expected_visits(M, delta, y0)


def expected_visits(M: sp.spmatrix, delta: float, y0: np.ndarray) -> np.ndarray:
    """Discounted expected visit counts: y0 * (I - delta*M)^-1.

    Solved as a sparse linear system; the inverse always exists for
    delta < 1. Entries are nonnegative and sum to 1/(1-delta).
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if delta == 0.0:
        return y0.astype(float).copy()
    m = M.shape[0]
    system = (sp.identity(m, format="csr") - delta * M.tocsr()).T.tocsc()
    z = spla.spsolve(system, y0)
    return np.asarray(z).ravel()


_POPCOUNT_TABLE = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _popcount(values: np.ndarray) -> np.ndarray:
    values = values.astype(np.int64)
    out = np.zeros(values.shape, dtype=np.int64)
    while values.any():
        out += _POPCOUNT_TABLE[values & 0xFF]
        values >>= 8
    return out


@lru_cache(maxsize=4)
def get_solver(n: int = 3, alpha: float = 0.0) -> ExactSolver:
    """Shared solver per (n, alpha); speaker operators are expensive."""
    return ExactSolver(n=n, alpha=alpha)
