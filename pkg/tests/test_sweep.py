import hashlib
import json
import math
import os

import pytest

from debategame.cli import main as cli_main
from debategame.markov import CapacityError
from debategame.sweep import (
    ConfigError,
    SweepConfig,
    curve_panel,
    fmt,
    read_csv,
    run_command,
)
from debategame.strategies import parse_strategy


def tiny_config(**overrides):
    base = dict(
        n=3,
        deltas=[0.8],
        ws=[9.5],
        alphas=[0.0],
        backend="exact",
        t_max=3,
        samples=500,
        seed=11,
    )
    base.update(overrides)
    return SweepConfig.from_dict(base)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "overrides, field",
        [
            (dict(deltas=[1.0]), "deltas"),
            (dict(deltas=[]), "deltas"),
            (dict(ws=[-1.0]), "ws"),
            (dict(alphas=[1.5]), "alphas"),
            (dict(n=2), "n"),
            (dict(strategies=[]), "strategies"),
            (dict(strategies=["S+S-", "S+S-"]), "strategies"),
            (dict(strategies=["bogus"]), "strategies"),
            (dict(backend="quantum"), "backend"),
            (dict(samples=0), "samples"),
            (dict(workers=0), "workers"),
            (dict(max_support=1), "max_support"),
            (dict(outputs=["plots"]), "outputs"),
            (dict(nonsense=1), "nonsense"),
        ],
    )
    def test_rejects_invalid_values(self, overrides, field):
        with pytest.raises(ConfigError) as err:
            tiny_config(**overrides)
        assert err.value.field_name == field

    def test_exact_backend_with_large_n_is_capacity_error(self):
        with pytest.raises(CapacityError):
            tiny_config(n=4)

    def test_sim_backend_allows_larger_n(self):
        config = tiny_config(n=4, backend="sim")
        assert config.n == 4

    def test_ascii_minus_in_strategy_names(self):
        config = tiny_config(strategies=["S+S-", "Exit"])
        assert config.strategy_specs()[0] == parse_strategy("S+S−")


class TestFloatFormatting:
    def test_seventeen_digit_round_trip(self):
        for x in (0.1, 0.8, 1 / 3, 2.5000000000000004, 1e-17, 123456.789):
            assert float(fmt(x)) == x

    def test_nan_and_none(self):
        assert fmt(float("nan")) == "nan"
        assert fmt(None) == ""
        assert fmt(True) == "1"


class TestPayoffsCommand:
    def test_full_table_rows_and_exit_analytics(self, tmp_path):
        config = tiny_config()
        paths = run_command("payoffs", config, str(tmp_path))
        header, rows = read_csv(paths[0])
        assert len(rows) == 289
        exit_rows = [r for r in rows if "Exit" in (r["strategy1"], r["strategy2"])]
        assert len(exit_rows) == 33
        for r in exit_rows:
            assert float(r["u1"]) == 9.5 * 1.5
            assert float(r["u2"]) == 9.5 * 1.5
        both = [r for r in exit_rows if r["strategy1"] == r["strategy2"] == "Exit"]
        assert float(both[0]["collective_accuracy"]) == 0.5

    def test_rerun_is_byte_identical(self, tmp_path):
        config = tiny_config(ws=[2.5])
        first = run_command("payoffs", config, str(tmp_path / "a"))
        second = run_command("payoffs", config, str(tmp_path / "b"))
        assert open(first[0], "rb").read() == open(second[0], "rb").read()
        assert open(first[1], "rb").read() == open(second[1], "rb").read()

    def test_row_payoffs_respect_symmetry(self, tmp_path):
        config = tiny_config()
        paths = run_command("payoffs", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        seen = {(r["strategy1"], r["strategy2"]): r for r in rows}
        for (s1, s2), r in seen.items():
            mirror = seen[(s2, s1)]
            assert r["u1"] == mirror["u2"]
            assert r["consensus"] == mirror["consensus"]


class TestCurvesCommand:
    def test_initial_rows_at_one_half(self, tmp_path):
        config = tiny_config(strategies=["S+S-", "O-O-", "Exit"])
        paths = run_command("curves", config, str(tmp_path))
        header, rows = read_csv(paths[0])
        assert "delta" not in header and "w" not in header
        zero_rows = [r for r in rows if r["t"] == "0"]
        assert zero_rows
        for r in zero_rows:
            assert float(r["collective_accuracy"]) == pytest.approx(0.5, abs=1e-12)

    def test_requires_exact_backend(self, tmp_path):
        config = tiny_config(backend="sim")
        with pytest.raises(ConfigError):
            run_command("curves", config, str(tmp_path))

    def test_panel_rules_match_caption(self):
        panel = lambda a, b: curve_panel(parse_strategy(a), parse_strategy(b))
        assert panel("S+S-", "O-O-") == "A"      # one bold
        assert panel("S-S-", "O+O+") == "B"      # both conservative
        assert panel("Exit", "S-O+") == "C"      # both refusenik
        assert panel("S+O+", "O-O-") == "D"      # compromising, none bold
        assert panel("S-S-", "Exit") == "D"      # leftover mix joins D
        # the four panels partition all 289 profiles
        from debategame.strategies import ALL_STRATEGIES
        labels = {panel(a.name, b.name) for a in ALL_STRATEGIES for b in ALL_STRATEGIES}
        assert labels == {"A", "B", "C", "D"}


class TestEquilibriaCommand:
    def test_csv_and_json_agree(self, tmp_path):
        config = tiny_config(ws=[3.5])
        paths = run_command("equilibria", config, str(tmp_path))
        header, rows = read_csv(paths[0])
        detail = json.loads(open(paths[1]).read())
        assert len(detail) == 1
        assert len(detail[0]["equilibria"]) == len(rows)
        selected = [r for r in rows if r["selected_epistemic"] == "1"]
        assert len(selected) == 1
        assert selected[0]["kind"] in ("pure", "mixed")
        pairs = {(r["support1"], r["support2"]) for r in rows if r["kind"] == "pure"}
        assert ("S+S−", "S+O+") in pairs

    def test_probabilities_sum_to_one(self, tmp_path):
        config = tiny_config(ws=[2.5], deltas=[0.9])
        paths = run_command("equilibria", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        for r in rows:
            probs = [float(p) for p in r["x"].split("|")]
            assert sum(probs) == pytest.approx(1.0, abs=1e-9)


class TestDilemmasCommand:
    def test_table_one_prisoners_dilemma_row(self, tmp_path):
        config = tiny_config(ws=[2.5])
        paths = run_command("dilemmas", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        found = {(r["dilemma_class"], r["cooperate"], r["defect"]) for r in rows}
        assert ("PrisonersDilemma", "S−O−", "S+S+") in found

    def test_no_dilemmas_at_high_truth_weight(self, tmp_path):
        config = tiny_config(ws=[9.5])
        paths = run_command("dilemmas", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        assert rows == []


class TestHarmonyCommand:
    def test_values_or_undefined(self, tmp_path):
        config = tiny_config(ws=[2.5, 9.5])
        paths = run_command("harmony", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        by_w = {r["w"]: r for r in rows}
        assert float(by_w[fmt(2.5)]["harmony"]) > 0.0
        assert by_w[fmt(9.5)]["harmony"] == "undefined"
        assert by_w[fmt(9.5)]["survivors"] == "S+S−"


class TestSimulateCommand:
    def test_requires_sim_backend(self, tmp_path):
        with pytest.raises(ConfigError):
            run_command("simulate", tiny_config(), str(tmp_path))

    def test_stats_schema_and_exit_rows(self, tmp_path):
        config = tiny_config(
            backend="sim", samples=300,
            strategies=["S+S-", "S+O+", "Exit"], ws=[4.5],
        )
        paths = run_command("simulate", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        assert len(rows) == 6  # unordered pairs of 3 strategies
        exit_exit = [r for r in rows if r["strategy1"] == r["strategy2"] == "Exit"][0]
        assert float(exit_exit["mean_d1"]) == 0.0
        assert float(exit_exit["mean_u1"]) == 4.5 * 1.5

    def test_single_sample_se_flagged_nan(self, tmp_path):
        config = tiny_config(backend="sim", samples=1, strategies=["S+S-", "S+O+"], ws=[4.5])
        paths = run_command("simulate", config, str(tmp_path))
        _, rows = read_csv(paths[0])
        assert rows[0]["se_u1"] == "nan"
        assert math.isnan(float(rows[0]["se_u1"]))

    def test_worker_count_invariance(self, tmp_path):
        kwargs = dict(backend="sim", samples=800, strategies=["S+S-", "O-O-"], ws=[4.5])
        a = run_command("simulate", SweepConfig.from_dict(dict(tiny_config().to_dict(), **kwargs, workers=1)), str(tmp_path / "w1"))
        b = run_command("simulate", SweepConfig.from_dict(dict(tiny_config().to_dict(), **kwargs, workers=2)), str(tmp_path / "w2"))
        assert open(a[0], "rb").read() == open(b[0], "rb").read()


class TestManifest:
    def test_manifest_records_hash_and_checksums(self, tmp_path):
        config = tiny_config()
        paths = run_command("payoffs", config, str(tmp_path))
        manifest = json.loads(open(paths[-1]).read())
        assert manifest["schema_version"] == "1"
        entry = manifest["commands"]["payoffs"]
        assert entry["config_hash"] == config.config_hash()
        digest = hashlib.sha256(open(paths[0], "rb").read()).hexdigest()
        assert entry["files"][0]["sha256"] == digest
        assert entry["files"][0]["rows"] == 289

    def test_multiple_commands_share_manifest(self, tmp_path):
        config = tiny_config(ws=[2.5])
        run_command("payoffs", config, str(tmp_path))
        run_command("harmony", config, str(tmp_path))
        manifest = json.loads(open(tmp_path / "manifest.json").read())
        assert set(manifest["commands"]) == {"payoffs", "harmony"}


class TestCli:
    def _write_config(self, tmp_path, **overrides):
        data = dict(deltas=[0.8], ws=[9.5], alphas=[0.0], t_max=2)
        data.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_success_exit_code(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        code = cli_main(["payoffs", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0].endswith("payoffs.csv")

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, ws=[])
        assert cli_main(["payoffs", "--config", cfg, "--out", str(tmp_path / "out")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_capacity_error_exit_code(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, n=4)
        assert cli_main(["payoffs", "--config", cfg, "--out", str(tmp_path / "out")]) == 3
        assert "capacity error" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path):
        cfg = self._write_config(tmp_path, backend="sim", samples=200,
                                 strategies=["S+S-", "Exit"], ws=[4.5])
        out = tmp_path / "out"
        assert cli_main(["simulate", "--config", cfg, "--out", str(out), "--seed", "99"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["commands"]["simulate"]["seed"] == 99

    def test_missing_config_file(self, tmp_path):
        assert cli_main(["payoffs", "--config", str(tmp_path / "nope.json")]) == 2
