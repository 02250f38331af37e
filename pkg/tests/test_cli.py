import filecmp
import math
from pathlib import Path

import pytest

from kleinwalk.cli import main, run_experiment
from kleinwalk.config import (
    ExperimentConfig,
    load_config,
    parse_config,
    resolve_group,
    resolved_text,
)
from kleinwalk.errors import ConfigError, KleinwalkError

SMALL_DIAGNOSE = """
preset = gamma2
orbit_depth = 9
walk_paths = 1200
ps_resample = 1200
probe_count = 120
bootstrap = 200
gap_n_max = 32
lemma_n_max = 64
seed = 99
"""


def _dirs_equal(a: Path, b: Path) -> bool:
    fa = sorted(p.name for p in a.iterdir())
    fb = sorted(p.name for p in b.iterdir())
    if fa != fb:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, fa, shallow=False)
    return not mismatch and not errors


class TestConfig:
    def test_minimal_fills_defaults(self):
        cfg = parse_config("preset = gamma2\n")
        assert cfg == ExperimentConfig()

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("preset = gamma2\nbogus = 1\n")

    def test_malformed_value_names_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("walk_paths = many\n")

    def test_unknown_preset_names_catalog(self):
        with pytest.raises(ConfigError, match="catalog"):
            parse_config("preset = nosuch\n")

    def test_asymmetric_mu_names_symmetry(self):
        with pytest.raises(ConfigError, match="symmetry"):
            parse_config("mu = 0.4,0.1,0.4,0.1\n")

    def test_comments_and_blanks(self):
        cfg = parse_config("# c\n\npreset = schottky2  # inline\n")
        assert cfg.preset == "schottky2"

    def test_resolved_text_round_trip(self):
        cfg = parse_config(SMALL_DIAGNOSE)
        again = parse_config(resolved_text(cfg))
        import dataclasses

        assert dataclasses.replace(again, out=cfg.out, workers=cfg.workers) == cfg

    def test_resolve_group_uniform_mu(self):
        spec, mu = resolve_group(ExperimentConfig())
        assert spec.name == "gamma2"
        assert mu.weights == (0.25,) * 4


class TestCommands:
    def test_orbit_depth_three_row_count(self, tmp_path):
        cfg = parse_config("preset = gamma2\norbit_depth = 3\n")
        import dataclasses

        cfg = dataclasses.replace(cfg, out=str(tmp_path / "o"))
        assert run_experiment(cfg, "orbit") == 0
        lines = (tmp_path / "o" / "orbit.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 53
        assert lines[0] == "word,word_length,hyp_radius,dir_x,dir_y,dir_z"
        growth = (tmp_path / "o" / "growth.csv").read_text().splitlines()
        assert growth[0] == "r,count"

    def test_resolved_config_echoed(self, tmp_path):
        cfg = parse_config("preset = gamma2\norbit_depth = 2\n")
        import dataclasses

        cfg = dataclasses.replace(cfg, out=str(tmp_path / "r"))
        run_experiment(cfg, "orbit")
        echoed = load_config(tmp_path / "r" / "resolved-config")
        assert echoed.orbit_depth == 2

    def test_green_schema(self, tmp_path):
        text = "preset = schottky2\ngreen_trials = 5000\ngreen_words_max_len = 1\n"
        import dataclasses

        cfg = dataclasses.replace(parse_config(text), out=str(tmp_path / "g"))
        run_experiment(cfg, "green")
        lines = (tmp_path / "g" / "green.csv").read_text().splitlines()
        assert lines[0] == "word,F_hat,stderr,dG,method,trials,horizon"
        assert any(",montecarlo," in ln for ln in lines)
        assert any(",tree-exact," in ln for ln in lines)

    def test_walk_outputs(self, tmp_path):
        text = "preset = gamma2\nwalk_paths = 300\nwalk_length = 120\n"
        import dataclasses

        cfg = dataclasses.replace(parse_config(text), out=str(tmp_path / "w"))
        run_experiment(cfg, "walk")
        assert (tmp_path / "w" / "harmonic.csv").exists()
        assert (tmp_path / "w" / "harmonic.meta.json").exists()
        drift = (tmp_path / "w" / "drift.csv").read_text()
        assert "ell_word" in drift and "entropy_green_drift" in drift

    def test_unknown_command(self):
        with pytest.raises(KleinwalkError):
            run_experiment(ExperimentConfig(), "frobnicate")

    def test_strict_exit_on_warning(self, tmp_path):
        text = "preset = gamma2\norbit_depth = 6\norbit_csv_max_rows = 10\nstrict = true\n"
        import dataclasses

        cfg = dataclasses.replace(parse_config(text), out=str(tmp_path / "s"))
        assert run_experiment(cfg, "orbit") == 1

    def test_custom_group_file_end_to_end(self, tmp_path):
        ch, sh = math.cosh(2), math.sinh(2)
        group = tmp_path / "grp.txt"
        group.write_text(
            "name = pair\nambient = 2\nfree = true\n"
            f"gen = {ch!r}, {sh!r}, {sh!r}, {ch!r}\n"
            f"gen = {ch + 4 * sh!r}, {-15 * sh!r}, {sh!r}, {ch - 4 * sh!r}\n"
            f"cap = disk, {ch / sh!r}, 0, {1.15 / sh!r}\n"
            f"cap = disk, {-ch / sh!r}, 0, {1.15 / sh!r}\n"
            f"cap = disk, {4 + ch / sh!r}, 0, {1.15 / sh!r}\n"
            f"cap = disk, {4 - ch / sh!r}, 0, {1.15 / sh!r}\n",
            encoding="utf-8",
        )
        import dataclasses

        cfg = dataclasses.replace(
            ExperimentConfig(), group_file=str(group), orbit_depth=2, out=str(tmp_path / "c")
        )
        assert run_experiment(cfg, "orbit") == 0
        lines = (tmp_path / "c" / "orbit.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 17


class TestDeterminism:
    def test_diagnose_byte_identical_and_worker_invariant(self, tmp_path):
        argv_base = ["diagnose", "--seed", "99"]
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(SMALL_DIAGNOSE, encoding="utf-8")
        for name, extra in (("d1", []), ("d2", []), ("d3", ["--workers", "2"])):
            rc = main(argv_base + ["--config", str(cfg_file), "--out", str(tmp_path / name)] + extra)
            assert rc == 0
        assert _dirs_equal(tmp_path / "d1", tmp_path / "d2")
        assert _dirs_equal(tmp_path / "d1", tmp_path / "d3")

    def test_cli_error_status(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("preset = nosuch\n", encoding="utf-8")
        assert main(["orbit", "--config", str(bad)]) == 2
