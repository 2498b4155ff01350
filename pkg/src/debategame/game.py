"""The 17x17 strategy game: payoff tables, dominance, Nash equilibria,
cooperate-defect pairs, dilemma classification, harmony, and selection.

The game is symmetric: `U[i][j]` is the row player's expected payoff and the
column player receives `U[j][i]`. Exact tables use epsilon = 1e-9 payoff
comparisons (float noise only); ensemble-backed tables widen epsilon to four
times the largest payoff standard error.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .engine import DebateParams, ensemble
from .markov import CapacityError, get_solver
from .strategies import ALL_STRATEGIES, Group, StrategySpec, group_of

EXACT_EPS = 1e-9


@dataclass(frozen=True)
class ExactBackend:
    kind: str = field(default="exact", init=False)


@dataclass(frozen=True)
class EnsembleBackend:
    count: int
    seed: int
    workers: int = 1
    kind: str = field(default="ensemble", init=False)


@dataclass(frozen=True, eq=False)
class PayoffTable:
    """Expected-payoff matrix plus accuracy/obstinacy/consensus side tables
    for one parameter point, all from the row player's perspective."""

    strategies: tuple[StrategySpec, ...]
    U: np.ndarray
    V: np.ndarray
    D: np.ndarray
    C: np.ndarray
    params: DebateParams
    eps: float
    backend: str
    seed: int | None = None
    samples: int | None = None

    def __len__(self) -> int:
        return len(self.strategies)

    def index_of(self, strategy: StrategySpec) -> int:
        return self.strategies.index(strategy)

    def collective_normalized(self) -> np.ndarray:
        """Mean of the two debaters' accuracies, scaled to [0, 1]."""
        return (self.V + self.V.T) / (2.0 * self.params.n)

    def average_payoff(self) -> np.ndarray:
        return (self.U + self.U.T) / 2.0


def _pair_seed(seed: int, i: int, j: int) -> int:
    digest = hashlib.blake2b(f"pair:{seed}:{i}:{j}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def build_payoff_table(
    params: DebateParams,
    backend: ExactBackend | EnsembleBackend = ExactBackend(),
    strategies: tuple[StrategySpec, ...] = ALL_STRATEGIES,
) -> PayoffTable:
    """Fill every profile's expected metrics; Exit entries are analytic.

    The exact backend requires n = 3. Each unordered pair is computed once
    and mirrored, so the table is exactly consistent under role swap.
    """
    k = len(strategies)
    U = np.zeros((k, k))
    V = np.zeros((k, k))
    D = np.zeros((k, k))
    C = np.zeros((k, k))
    n, w = params.n, params.w
    half = n / 2.0
    se_max = 0.0

    if backend.kind == "exact":
        if n != 3:
            raise CapacityError(f"exact payoff tables require n = 3, got {n}")
        solver = get_solver(n, params.alpha)
        for i in range(k):
            for j in range(i, k):
                out = solver.exact_outcome(strategies[i], strategies[j], params)
                if i == j:
                    U[i][i] = (out.u1 + out.u2) / 2.0
                    V[i][i] = (out.v1 + out.v2) / 2.0
                    D[i][i] = (out.d1 + out.d2) / 2.0
                else:
                    U[i][j], U[j][i] = out.u1, out.u2
                    V[i][j], V[j][i] = out.v1, out.v2
                    D[i][j], D[j][i] = out.d1, out.d2
                C[i][j] = C[j][i] = out.consensus
        return PayoffTable(
            strategies=tuple(strategies), U=U, V=V, D=D, C=C,
            params=params, eps=EXACT_EPS, backend="exact",
        )

    for i in range(k):
        for j in range(i, k):
            s1, s2 = strategies[i], strategies[j]
            if s1.is_exit or s2.is_exit:
                U[i][j] = U[j][i] = w * half
                V[i][j] = V[j][i] = half
                C[i][j] = C[j][i] = 0.5
                continue
            st = ensemble(
                params, s1, s2, backend.count,
                seed=_pair_seed(backend.seed, i, j), workers=backend.workers,
            )
            se_max = max(se_max, st.se_u1, st.se_u2)
            if i == j:
                U[i][i] = (st.mean_u1 + st.mean_u2) / 2.0
                V[i][i] = (st.mean_v1 + st.mean_v2) / 2.0
                D[i][i] = (st.mean_d1 + st.mean_d2) / 2.0
            else:
                U[i][j], U[j][i] = st.mean_u1, st.mean_u2
                V[i][j], V[j][i] = st.mean_v1, st.mean_v2
                D[i][j], D[j][i] = st.mean_d1, st.mean_d2
            C[i][j] = C[j][i] = st.mean_consensus
    return PayoffTable(
        strategies=tuple(strategies), U=U, V=V, D=D, C=C,
        params=params, eps=4.0 * se_max if se_max else EXACT_EPS,
        backend="ensemble", seed=backend.seed, samples=backend.count,
    )


# -- equilibria --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EquilibriumProfile:
    kind: str  # "pure" or "mixed"
    x: np.ndarray
    y: np.ndarray
    payoff1: float
    payoff2: float
    collective_accuracy: float  # normalized to [0, 1]
    support1: tuple[int, ...]
    support2: tuple[int, ...]

    def sort_key(self):
        # symmetric profiles first so accuracy ties in the refusenik regime
        # resolve to (Exit,Exit)-style agreements rather than lopsided ones
        return (
            self.kind != "pure",
            self.support1 != self.support2,
            self.support1,
            self.support2,
            tuple(np.round(self.x, 12)),
            tuple(np.round(self.y, 12)),
        )

    def strategies_in_support(self, table: PayoffTable) -> tuple[tuple[StrategySpec, ...], tuple[StrategySpec, ...]]:
        return (
            tuple(table.strategies[i] for i in self.support1),
            tuple(table.strategies[i] for i in self.support2),
        )


def make_profile(table: PayoffTable, x: np.ndarray, y: np.ndarray, kind: str) -> EquilibriumProfile:
    coll = table.collective_normalized()
    return EquilibriumProfile(
        kind=kind,
        x=x,
        y=y,
        payoff1=float(x @ table.U @ y),
        payoff2=float(x @ table.U.T @ y),
        collective_accuracy=float(x @ coll @ y),
        support1=tuple(int(i) for i in np.flatnonzero(x > 0)),
        support2=tuple(int(j) for j in np.flatnonzero(y > 0)),
    )


def pure_profile(table: PayoffTable, i: int, j: int) -> EquilibriumProfile:
    k = len(table)
    x = np.zeros(k)
    y = np.zeros(k)
    x[i] = 1.0
    y[j] = 1.0
    return make_profile(table, x, y, "pure")


def pure_nash(table: PayoffTable, eps: float | None = None) -> list[EquilibriumProfile]:
    """All ordered profiles of mutual best responses within eps."""
    eps = table.eps if eps is None else eps
    U = table.U
    col_max = U.max(axis=0)
    out = []
    for i in range(len(table)):
        for j in range(len(table)):
            if U[i][j] >= col_max[j] - eps and U[j][i] >= col_max[i] - eps:
                out.append(pure_profile(table, i, j))
    return out


def iterated_weak_dominance(table: PayoffTable, eps: float | None = None) -> tuple[int, ...]:
    """Surviving strategy indices after simultaneous iterated removal of
    weakly dominated strategies (<= everywhere, < somewhere, within eps).

    The game is symmetric, so row- and column-dominance coincide and the
    survivor set is order-invariant.
    """
    eps = table.eps if eps is None else eps
    U = table.U
    alive = list(range(len(table)))
    while True:
        sub = U[np.ix_(alive, alive)]
        dominated = set()
        for a in range(len(alive)):
            for b in range(len(alive)):
                if a == b:
                    continue
                diff = sub[b] - sub[a]
                if np.all(diff >= -eps) and np.any(diff > eps):
                    dominated.add(alive[a])
                    break
        if not dominated or len(dominated) == len(alive):
            return tuple(alive)
        alive = [s for s in alive if s not in dominated]


def mixed_nash(
    table: PayoffTable,
    max_support: int = 4,
    eps: float | None = None,
    restrict: tuple[int, ...] | None = None,
) -> list[EquilibriumProfile]:
    """Mixed equilibria by support enumeration on the dominance-reduced game.

    Equal-size supports from 2 to max_support are solved via the
    indifference linear system and verified as best responses against the
    full strategy set. Pure profiles (support size 1) are pure_nash's job.
    """
    if max_support < 2:
        raise ValueError("max_support must be at least 2")
    eps = table.eps if eps is None else eps
    survivors = restrict if restrict is not None else iterated_weak_dominance(table, eps)
    U = table.U
    k = len(table)
    found: list[EquilibriumProfile] = []
    seen: set[tuple] = set()
    for size in range(2, min(max_support, len(survivors)) + 1):
        for sup_x in itertools.combinations(survivors, size):
            for sup_y in itertools.combinations(survivors, size):
                profile = _solve_support(U, k, sup_x, sup_y, eps)
                if profile is None:
                    continue
                x, y = profile
                key = (tuple(np.round(x, 10)), tuple(np.round(y, 10)))
                if key in seen:
                    continue
                seen.add(key)
                found.append(make_profile(table, x, y, "mixed"))
    found.sort(key=lambda e: e.sort_key())
    return found


def _solve_support(U, k, sup_x, sup_y, eps):
    """Solve the indifference system for one support pair; None if it fails
    feasibility or the best-response check."""
    size = len(sup_x)
    ix = np.array(sup_x)
    iy = np.array(sup_y)
    # y makes every row in sup_x indifferent at value v
    a = np.zeros((size + 1, size + 1))
    a[:size, :size] = U[np.ix_(ix, iy)]
    a[:size, size] = -1.0
    a[size, :size] = 1.0
    b = np.zeros(size + 1)
    b[size] = 1.0
    # x makes every column in sup_y indifferent (column payoffs U[j][i])
    c = np.zeros((size + 1, size + 1))
    c[:size, :size] = U[np.ix_(iy, ix)]
    c[:size, size] = -1.0
    c[size, :size] = 1.0
    try:
        y_sol = np.linalg.solve(a, b)
        x_sol = np.linalg.solve(c, b)
    except np.linalg.LinAlgError:
        return None
    y_probs, v_row = y_sol[:size], y_sol[size]
    x_probs, v_col = x_sol[:size], x_sol[size]
    if y_probs.min() < -1e-9 or x_probs.min() < -1e-9:
        return None
    x = np.zeros(k)
    y = np.zeros(k)
    x[ix] = np.clip(x_probs, 0.0, None)
    y[iy] = np.clip(y_probs, 0.0, None)
    x /= x.sum()
    y /= y.sum()
    tol = max(eps, 1e-9)
    if (U @ y).max() > v_row + tol:
        return None
    if (U @ x).max() > v_col + tol:
        return None
    return x, y


def best_response_violation(table: PayoffTable, eq: EquilibriumProfile) -> float:
    """Largest payoff gain any unilateral deviation achieves; independent
    verification that a profile is an equilibrium (<= eps)."""
    row_values = table.U @ eq.y
    col_values = table.U @ eq.x
    return max(
        float(row_values.max() - eq.payoff1),
        float(col_values.max() - eq.payoff2),
    )


# -- cooperation and dilemmas -------------------------------------------------


def social_optima(table: PayoffTable, eps: float | None = None) -> list[tuple[int, int]]:
    """All ordered profiles maximizing the players' average payoff."""
    eps = table.eps if eps is None else eps
    avg = table.average_payoff()
    top = avg.max()
    return [
        (i, j)
        for i in range(len(table))
        for j in range(len(table))
        if avg[i][j] >= top - eps
    ]


def cooperate_defect_pairs(table: PayoffTable, eps: float | None = None) -> list[tuple[int, int]]:
    """Ordered (C, D) pairs satisfying the cooperation externality
    inequalities: mutual cooperation beats mutual defection, neither facing
    a defector nor defecting against a cooperator pays worse than the
    corresponding defection profile, and at least one such comparison is
    strict."""
    eps = table.eps if eps is None else eps
    U = table.U
    out = []
    for c in range(len(table)):
        for d in range(len(table)):
            if c == d:
                continue
            r, s, t, p = U[c][c], U[c][d], U[d][c], U[d][d]
            if r <= p + eps:
                continue
            if r < s - eps or t < p - eps:
                continue
            if r > s + eps or t > p + eps:
                out.append((c, d))
    return out


DILEMMA_CLASSES = ("PrisonersDilemma", "StagHunt", "Snowdrift")


def classify_2x2(table: PayoffTable, c: int, d: int, eps: float | None = None) -> tuple[str | None, str]:
    """Classify the restricted {C, D} game by its equilibrium structure.

    Returns (class, note); class is None when the pattern is none of the
    three dilemma games or a deciding payoff comparison ties within eps.
    """
    eps = table.eps if eps is None else eps
    U = table.U
    r, s, t, p = U[c][c], U[c][d], U[d][c], U[d][d]
    if abs(r - t) <= eps:
        return None, f"tie: U(C,C)={r!r} vs U(D,C)={t!r}"
    if abs(p - s) <= eps:
        return None, f"tie: U(D,D)={p!r} vs U(C,D)={s!r}"
    cc_stable = r > t
    dd_stable = p > s
    if cc_stable and dd_stable:
        return "StagHunt", ""
    if not cc_stable and dd_stable:
        return "PrisonersDilemma", ""
    if not cc_stable and not dd_stable:
        return "Snowdrift", ""
    return None, "mutual cooperation is the unique equilibrium of the restricted game"


@dataclass(frozen=True, eq=False)
class DilemmaReport:
    cooperate: StrategySpec
    defect: StrategySpec
    dilemma_class: str
    witness_equilibrium: EquilibriumProfile
    witness_optimum: tuple[StrategySpec, StrategySpec]
    payoffs: tuple[float, float, float, float]  # U(C,C), U(C,D), U(D,C), U(D,D)
    witness_strictly_suboptimal: bool
    note: str = ""


def cooperative_dilemmas(
    table: PayoffTable, eps: float | None = None, include_unclassified: bool = False
) -> list[DilemmaReport]:
    """Cooperate-defect pairs whose cooperator sits in a social optimum while
    the defector is played in a pure equilibrium, classified by the
    restricted 2x2 game.

    Pairs whose 2x2 game is degenerate (a deciding payoff ties within eps,
    as happens against Exit) or matches none of the three dilemma games are
    not dilemmas; pass include_unclassified to inspect them anyway. The
    witness equilibrium prefers one whose average payoff is strictly below
    the social optimum, but an exactly payoff-tied equilibrium still
    witnesses the dilemma (asymmetric optima can tie by mirror symmetry).
    """
    eps = table.eps if eps is None else eps
    avg = table.average_payoff()
    opt_val = avg.max()
    optima = social_optima(table, eps)
    in_optimum = {i for pair in optima for i in pair}
    strict_witness: dict[int, EquilibriumProfile] = {}
    any_witness: dict[int, EquilibriumProfile] = {}
    for eq in pure_nash(table, eps):
        for idx in (eq.support1[0], eq.support2[0]):
            any_witness.setdefault(idx, eq)
            if (eq.payoff1 + eq.payoff2) / 2.0 < opt_val - eps:
                strict_witness.setdefault(idx, eq)
    reports = []
    for c, d in cooperate_defect_pairs(table, eps):
        if c not in in_optimum or d not in any_witness:
            continue
        label, note = classify_2x2(table, c, d, eps)
        if label is None and not include_unclassified:
            continue
        opt_pair = next(pair for pair in optima if c in pair)
        u = table.U
        reports.append(
            DilemmaReport(
                cooperate=table.strategies[c],
                defect=table.strategies[d],
                dilemma_class=label if label is not None else "Unclassified",
                witness_equilibrium=strict_witness.get(d, any_witness[d]),
                witness_optimum=(
                    table.strategies[opt_pair[0]],
                    table.strategies[opt_pair[1]],
                ),
                payoffs=(u[c][c], u[c][d], u[d][c], u[d][d]),
                witness_strictly_suboptimal=d in strict_witness,
                note=note,
            )
        )
    return reports


# -- harmony and selection ----------------------------------------------------


def harmony_index(table: PayoffTable, eps: float | None = None) -> float | None:
    """Correlation between the two players' payoffs over all profiles of the
    dominance-reduced game; None when undefined (fewer than two surviving
    strategies).

    Product-moment correlation of the payoff pairs (U[i][j], U[j][i]), the
    game-harmony measure: -1 is pure conflict, +1 perfectly aligned
    interests. A table where both players always receive identical payoffs
    scores +1 even when payoffs are constant.
    """
    survivors = iterated_weak_dominance(table, eps)
    if len(survivors) < 2:
        return None
    mine = []
    theirs = []
    for i in survivors:
        for j in survivors:
            mine.append(table.U[i][j])
            theirs.append(table.U[j][i])
    if mine == theirs:
        return 1.0
    return float(np.corrcoef(mine, theirs)[0, 1])


def select_equilibrium(
    equilibria: list[EquilibriumProfile],
    criterion: str,
    tie_break_tol: float = 1e-12,
) -> EquilibriumProfile:
    """Pick the most truth-conducive (epistemic) or highest average payoff
    (utilitarian) equilibrium; ties break by canonical profile order."""
    if not equilibria:
        raise ValueError("no equilibria to select from")
    if criterion == "epistemic":
        key = lambda e: e.collective_accuracy
    elif criterion == "utilitarian":
        key = lambda e: (e.payoff1 + e.payoff2) / 2.0
    else:
        raise ValueError(f"unknown selection criterion: {criterion}")
    ordered = sorted(equilibria, key=lambda e: e.sort_key())
    best = max(key(e) for e in ordered)
    for eq in ordered:
        if key(eq) >= best - tie_break_tol:
            return eq
    raise AssertionError("unreachable")


def profile_groups(table: PayoffTable, eq: EquilibriumProfile) -> frozenset[Group]:
    """Strategy groups present in the equilibrium's combined support."""
    groups = set()
    for idx in eq.support1 + eq.support2:
        groups.add(group_of(table.strategies[idx]).group)
    return frozenset(groups)


_GROUP_ORDER = (Group.BOLD, Group.CONSERVATIVE, Group.COMPROMISING, Group.REFUSENIK)


def regime_label(table: PayoffTable, eq: EquilibriumProfile) -> str:
    """Slash-joined group composition of the support, e.g. 'bold/compromise'."""
    groups = profile_groups(table, eq)
    return "/".join(g.value for g in _GROUP_ORDER if g in groups)
