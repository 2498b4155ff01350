"""Sweep configuration, grid orchestration, and CSV/manifest emission.

Every command is a deterministic function of (config, seed): rows are
emitted in canonical grid order (alpha, then delta, then w, then strategy
pair), floats are serialized with 17 significant digits, and the manifest
records the config hash, code version, and seeds, so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, asdict

from . import __version__
from .engine import DebateParams, ensemble
from .game import (
    EnsembleBackend,
    ExactBackend,
    build_payoff_table,
    cooperative_dilemmas,
    harmony_index,
    iterated_weak_dominance,
    mixed_nash,
    pure_nash,
    regime_label,
    select_equilibrium,
)
from .markov import CapacityError, get_solver
from .strategies import ALL_STRATEGIES, Group, StrategySpec, group_of, parse_strategy

SCHEMA_VERSION = "1"

COMMANDS = ("payoffs", "curves", "equilibria", "dilemmas", "harmony", "simulate")

DEFAULT_DELTAS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DEFAULT_WS = tuple(round(0.5 * k, 1) for k in range(1, 25))  # 0.5 .. 12.0
DEFAULT_ALPHAS = (0.0,)


class ConfigError(Exception):
    """Invalid sweep configuration; carries the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass
class SweepConfig:
    n: int = 3
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    ws: tuple[float, ...] = DEFAULT_WS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    strategies: tuple[str, ...] = tuple(s.name for s in ALL_STRATEGIES)
    backend: str = "exact"
    samples: int = 200_000
    seed: int = 0
    workers: int = 1
    max_support: int = 4
    include_dominated: bool = False
    t_max: int = 50
    outputs: tuple[str, ...] = COMMANDS

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        kwargs = dict(data)
        for key in ("deltas", "ws", "alphas", "strategies", "outputs"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def load(cls, path: str) -> "SweepConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.n < 3:
            raise ConfigError("n", f"must be at least 3, got {self.n}")
        for name in ("deltas", "ws", "alphas"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(name, "grid must be nonempty")
        for d in self.deltas:
            if not 0.0 <= d < 1.0:
                raise ConfigError("deltas", f"delta must lie in [0, 1), got {d}")
        for w in self.ws:
            if w < 0.0:
                raise ConfigError("ws", f"w must be nonnegative, got {w}")
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise ConfigError("alphas", f"alpha must lie in [0, 1], got {a}")
        if not self.strategies:
            raise ConfigError("strategies", "strategy subset must be nonempty")
        seen = set()
        for name in self.strategies:
            spec = self.parse_strategy_checked(name)
            if spec in seen:
                raise ConfigError("strategies", f"duplicate strategy {name!r}")
            seen.add(spec)
        if self.backend not in ("exact", "sim"):
            raise ConfigError("backend", f"must be 'exact' or 'sim', got {self.backend!r}")
        if self.backend == "exact" and self.n != 3:
            raise CapacityError(f"exact backend requires n = 3, got n = {self.n}")
        if self.samples < 1:
            raise ConfigError("samples", "must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        if self.max_support < 2:
            raise ConfigError("max_support", "must be at least 2")
        if self.t_max < 0:
            raise ConfigError("t_max", "must be nonnegative")
        for out in self.outputs:
            if out not in COMMANDS:
                raise ConfigError("outputs", f"unknown output {out!r}")

    @staticmethod
    def parse_strategy_checked(name: str) -> StrategySpec:
        try:
            return parse_strategy(name)
        except ValueError as exc:
            raise ConfigError("strategies", str(exc)) from None

    def strategy_specs(self) -> tuple[StrategySpec, ...]:
        return tuple(self.parse_strategy_checked(name) for name in self.strategies)

    def grid(self):
        """Canonical parameter-point order shared by every command."""
        for alpha in self.alphas:
            for delta in self.deltas:
                for w in self.ws:
                    yield DebateParams(n=self.n, delta=delta, w=w, alpha=alpha)

    def payoff_backend(self):
        if self.backend == "exact":
            return ExactBackend()
        return EnsembleBackend(count=self.samples, seed=self.seed, workers=self.workers)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def fmt(value) -> str:
    """Serialize one CSV cell; floats always carry 17 significant digits."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path: str, header: list[str], rows: list[list]) -> int:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(cell) for cell in row])
    return len(rows)


# -- command implementations ---------------------------------------------------


def run_payoffs(config: SweepConfig):
    strategies = config.strategy_specs()
    backend = config.payoff_backend()
    header = [
        "n", "delta", "w", "alpha", "strategy1", "strategy2",
        "u1", "u2", "v1", "v2", "d1", "d2", "consensus", "collective_accuracy",
        "backend", "samples", "seed",
    ]
    rows = []
    for params in config.grid():
        table = build_payoff_table(params, backend, strategies)
        cn = table.collective_normalized()
        for i, s1 in enumerate(strategies):
            for j, s2 in enumerate(strategies):
                rows.append([
                    params.n, params.delta, params.w, params.alpha,
                    s1.name, s2.name,
                    table.U[i][j], table.U[j][i],
                    table.V[i][j], table.V[j][i],
                    table.D[i][j], table.D[j][i],
                    table.C[i][j], cn[i][j],
                    table.backend, table.samples, table.seed,
                ])
    return header, rows


def curve_panel(s1: StrategySpec, s2: StrategySpec) -> str:
    """Figure panel for a profile: A has a bold strategy, B both
    conservative, C both refusenik, D everything else (at least one
    compromising strategy, or a conservative/refusenik mix)."""
    g1, g2 = group_of(s1).group, group_of(s2).group
    if Group.BOLD in (g1, g2):
        return "A"
    if g1 == g2 == Group.CONSERVATIVE:
        return "B"
    if g1 == g2 == Group.REFUSENIK:
        return "C"
    return "D"


def run_curves(config: SweepConfig):
    """Per-round accuracy/consensus curves; one row per unordered profile
    and round. Curves come from the undiscounted chain, so neither delta
    nor w enters."""
    if config.backend != "exact":
        raise ConfigError("backend", "curves require the exact backend")
    strategies = config.strategy_specs()
    header = [
        "n", "alpha", "strategy1", "strategy2", "panel",
        "t", "collective_accuracy", "consensus",
    ]
    rows = []
    for alpha in config.alphas:
        solver = get_solver(config.n, alpha)
        for i, s1 in enumerate(strategies):
            for s2 in strategies[i:]:
                coll, cons = solver.metrics_over_time(s1, s2, config.t_max)
                panel = curve_panel(s1, s2)
                for t in range(config.t_max + 1):
                    rows.append([
                        config.n, alpha, s1.name, s2.name, panel,
                        t, float(coll[t]), float(cons[t]),
                    ])
    return header, rows


def _equilibrium_pool(table, config: SweepConfig):
    pure = pure_nash(table)
    if config.include_dominated:
        survivors = tuple(range(len(table)))
    else:
        survivors = iterated_weak_dominance(table)
    mixed = mixed_nash(table, max_support=config.max_support, restrict=survivors)
    return pure + mixed, survivors


def _support_names(table, eq, side: int) -> str:
    support = eq.support1 if side == 1 else eq.support2
    return "|".join(table.strategies[i].name for i in support)


def _support_probs(eq, side: int) -> str:
    probs = eq.x[list(eq.support1)] if side == 1 else eq.y[list(eq.support2)]
    return "|".join(format(float(p), ".17g") for p in probs)


def run_equilibria(config: SweepConfig):
    strategies = config.strategy_specs()
    backend = config.payoff_backend()
    header = [
        "n", "delta", "w", "alpha", "kind", "support1", "support2", "x", "y",
        "u1", "u2", "collective_accuracy", "groups",
        "selected_epistemic", "selected_utilitarian",
    ]
    rows = []
    detail = []
    for params in config.grid():
        table = build_payoff_table(params, backend, strategies)
        pool, survivors = _equilibrium_pool(table, config)
        chosen_ep = select_equilibrium(pool, "epistemic") if pool else None
        chosen_ut = select_equilibrium(pool, "utilitarian") if pool else None
        point_eqs = []
        for eq in sorted(pool, key=lambda e: e.sort_key()):
            record = {
                "kind": eq.kind,
                "support1": _support_names(table, eq, 1).split("|"),
                "support2": _support_names(table, eq, 2).split("|"),
                "x": [float(p) for p in eq.x[list(eq.support1)]],
                "y": [float(p) for p in eq.y[list(eq.support2)]],
                "u1": eq.payoff1,
                "u2": eq.payoff2,
                "collective_accuracy": eq.collective_accuracy,
                "groups": regime_label(table, eq),
                "selected_epistemic": eq is chosen_ep,
                "selected_utilitarian": eq is chosen_ut,
            }
            point_eqs.append(record)
            rows.append([
                params.n, params.delta, params.w, params.alpha,
                eq.kind,
                _support_names(table, eq, 1), _support_names(table, eq, 2),
                _support_probs(eq, 1), _support_probs(eq, 2),
                eq.payoff1, eq.payoff2, eq.collective_accuracy,
                regime_label(table, eq),
                eq is chosen_ep, eq is chosen_ut,
            ])
        detail.append({
            "n": params.n, "delta": params.delta, "w": params.w, "alpha": params.alpha,
            "survivors": [table.strategies[i].name for i in survivors],
            "regime": regime_label(table, chosen_ep) if chosen_ep else "none",
            "equilibria": point_eqs,
        })
    return header, rows, detail


def run_dilemmas(config: SweepConfig):
    strategies = config.strategy_specs()
    backend = config.payoff_backend()
    header = [
        "n", "delta", "w", "alpha", "dilemma_class", "cooperate", "defect",
        "u_cc", "u_cd", "u_dc", "u_dd",
        "witness_eq_strategy1", "witness_eq_strategy2",
        "witness_opt_strategy1", "witness_opt_strategy2",
        "witness_strictly_suboptimal", "note",
    ]
    rows = []
    for params in config.grid():
        table = build_payoff_table(params, backend, strategies)
        for report in cooperative_dilemmas(table):
            eq = report.witness_equilibrium
            rows.append([
                params.n, params.delta, params.w, params.alpha,
                report.dilemma_class, report.cooperate.name, report.defect.name,
                *report.payoffs,
                table.strategies[eq.support1[0]].name,
                table.strategies[eq.support2[0]].name,
                report.witness_optimum[0].name, report.witness_optimum[1].name,
                report.witness_strictly_suboptimal, report.note,
            ])
    return header, rows


def run_harmony(config: SweepConfig):
    strategies = config.strategy_specs()
    backend = config.payoff_backend()
    header = ["n", "delta", "w", "alpha", "harmony", "survivors"]
    rows = []
    for params in config.grid():
        table = build_payoff_table(params, backend, strategies)
        value = harmony_index(table)
        survivors = iterated_weak_dominance(table)
        rows.append([
            params.n, params.delta, params.w, params.alpha,
            "undefined" if value is None else value,
            "|".join(table.strategies[i].name for i in survivors),
        ])
    return header, rows


def run_simulate(config: SweepConfig):
    if config.backend != "sim":
        raise ConfigError("backend", "simulate requires the sim backend")
    strategies = config.strategy_specs()
    header = [
        "n", "delta", "w", "alpha", "strategy1", "strategy2", "samples", "seed",
        "mean_u1", "se_u1", "mean_u2", "se_u2",
        "mean_v1", "se_v1", "mean_v2", "se_v2",
        "mean_d1", "se_d1", "mean_d2", "se_d2",
        "mean_consensus", "se_consensus", "mean_collective", "se_collective",
    ]
    rows = []
    for params in config.grid():
        for i, s1 in enumerate(strategies):
            for s2 in strategies[i:]:
                if s1.is_exit or s2.is_exit:
                    half = params.n / 2.0
                    stats_row = [
                        params.w * half, 0.0, params.w * half, 0.0,
                        half, 0.0, half, 0.0,
                        0.0, 0.0, 0.0, 0.0,
                        0.5, 0.0, 0.5, 0.0,
                    ]
                else:
                    st = ensemble(
                        params, s1, s2, config.samples,
                        seed=config.seed, workers=config.workers,
                    )
                    stats_row = [
                        st.mean_u1, st.se_u1, st.mean_u2, st.se_u2,
                        st.mean_v1, st.se_v1, st.mean_v2, st.se_v2,
                        st.mean_d1, st.se_d1, st.mean_d2, st.se_d2,
                        st.mean_consensus, st.se_consensus,
                        st.mean_collective, st.se_collective,
                    ]
                rows.append([
                    params.n, params.delta, params.w, params.alpha,
                    s1.name, s2.name, config.samples, config.seed,
                    *stats_row,
                ])
    return header, rows


# -- output layer ---------------------------------------------------------------


def _file_entry(path: str, rows: int) -> dict:
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return {"name": os.path.basename(path), "rows": rows, "sha256": digest}


def _write_manifest(out_dir: str, command: str, config: SweepConfig, files: list[dict]):
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest = {"schema_version": SCHEMA_VERSION, "code_version": __version__, "commands": {}}
    if os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            existing = json.load(fh)
        if isinstance(existing, dict) and "commands" in existing:
            manifest["commands"] = existing["commands"]
    manifest["commands"][command] = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "files": files,
    }
    body = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(body)
    return manifest_path


def run_command(command: str, config: SweepConfig, out_dir: str) -> list[str]:
    """Execute one CLI command; returns the paths written."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    if command not in config.outputs:
        raise ConfigError("outputs", f"config does not list {command!r} as an output")
    os.makedirs(out_dir, exist_ok=True)
    files = []
    paths = []
    if command == "equilibria":
        header, rows, detail = run_equilibria(config)
        csv_path = os.path.join(out_dir, "equilibria.csv")
        count = write_csv(csv_path, header, rows)
        files.append(_file_entry(csv_path, count))
        json_path = os.path.join(out_dir, "equilibria.json")
        with open(json_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(json.dumps(detail, sort_keys=True, indent=2) + "\n")
        files.append(_file_entry(json_path, len(detail)))
        paths = [csv_path, json_path]
    else:
        runner = {
            "payoffs": run_payoffs,
            "curves": run_curves,
            "dilemmas": run_dilemmas,
            "harmony": run_harmony,
            "simulate": run_simulate,
        }[command]
        header, rows = runner(config)
        csv_path = os.path.join(out_dir, f"{command}.csv")
        count = write_csv(csv_path, header, rows)
        files.append(_file_entry(csv_path, count))
        paths = [csv_path]
    paths.append(_write_manifest(out_dir, command, config, files))
    return paths


def read_csv(path: str) -> tuple[list[str], list[dict]]:
    """Round-trip helper: parse a command CSV into header + row dicts."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows
