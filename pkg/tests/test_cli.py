"""End-to-end CLI behaviour, run in-process through main()."""

import json

import numpy as np
import pytest

import resprune as rp
from resprune.cli import main, pgm_bytes, render_mask

from conftest import REFERENCE_INDICES, REFERENCE_MASK, REFERENCE_RECON


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSelect:
    def test_frozen_result_to_stdout(self, capsys, probe_files):
        visual, text = probe_files
        code, out, err = _run(capsys, ["select", "--visual", visual, "--text", text, "-k", "4"])
        assert code == 0
        payload = json.loads(out)
        assert payload["indices"] == list(REFERENCE_INDICES)
        assert payload["recon_error"] == pytest.approx(REFERENCE_RECON, abs=1e-9)
        assert payload["config"]["alpha"] == 0.75
        assert payload["config"]["seed_strategy"] == "norm"

    def test_out_file_matches_stdout(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        out_path = tmp_path / "result.json"
        code, out, _ = _run(
            capsys,
            ["select", "--visual", visual, "--text", text, "-k", "4", "--out", str(out_path)],
        )
        assert code == 0
        assert out == ""
        code, stdout_text, _ = _run(capsys, ["select", "--visual", visual, "--text", text, "-k", "4"])
        assert out_path.read_text() == stdout_text

    def test_repeat_runs_byte_identical(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            code, _, _ = _run(
                capsys,
                ["select", "--visual", visual, "--text", text, "-k", "4", "--out", str(path)],
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_mask_rendering(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        mask_path = tmp_path / "mask.txt"
        pgm_path = tmp_path / "mask.pgm"
        code, _, _ = _run(
            capsys,
            [
                "select", "--visual", visual, "--text", text, "-k", "4",
                "--grid", "4x3", "--out", str(tmp_path / "r.json"),
                "--mask", str(mask_path), "--mask-pgm", str(pgm_path),
            ],
        )
        assert code == 0
        assert mask_path.read_text() == REFERENCE_MASK
        raw = pgm_path.read_bytes()
        assert raw.startswith(b"P5\n3 4\n255\n")
        body = raw[len(b"P5\n3 4\n255\n"):]
        assert len(body) == 12
        kept = {i for i, byte in enumerate(body) if byte == 255}
        assert kept == set(REFERENCE_INDICES)
        assert all(byte in (0, 255) for byte in body)

    def test_mask_without_grid_is_constraint_error(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        code, _, err = _run(
            capsys,
            ["select", "--visual", visual, "--text", text, "-k", "4",
             "--mask", str(tmp_path / "m.txt")],
        )
        assert code == 5
        assert "grid" in err

    def test_text_free_run(self, capsys, probe_files):
        visual, _ = probe_files
        code, out, _ = _run(capsys, ["select", "--visual", visual, "-k", "4"])
        assert code == 0
        payload = json.loads(out)
        assert payload["weights"] == [1.0] * 12

    def test_scores_drive_seed(self, capsys, probe_files, tmp_path):
        visual, _ = probe_files
        scores = np.zeros(12, dtype=np.float32)
        scores[7] = 5.0
        scores_path = tmp_path / "scores.npy"
        rp.write_npy(scores_path, scores)
        code, out, _ = _run(
            capsys, ["select", "--visual", visual, "--scores", str(scores_path), "-k", "2"]
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["indices"][0] == 7
        assert payload["config"]["seed_strategy"] == "scores"

    def test_score_length_mismatch(self, capsys, probe_files, tmp_path):
        visual, _ = probe_files
        scores_path = tmp_path / "scores.npy"
        rp.write_npy(scores_path, np.ones(5, dtype=np.float32))
        code, _, err = _run(
            capsys, ["select", "--visual", visual, "--scores", str(scores_path), "-k", "2"]
        )
        assert code == 5
        assert "entries" in err


class TestExitCodes:
    def test_missing_file_is_3(self, capsys, tmp_path):
        code, _, err = _run(capsys, ["select", "--visual", str(tmp_path / "nope.npy"), "-k", "2"])
        assert code == 3
        assert "resprune:" in err

    def test_malformed_file_is_4(self, capsys, tmp_path):
        bad = tmp_path / "bad.npy"
        bad.write_bytes(b"not an array at all")
        code, _, _ = _run(capsys, ["select", "--visual", str(bad), "-k", "2"])
        assert code == 4

    def test_constraint_violation_is_5(self, capsys, probe_files):
        visual, _ = probe_files
        code, _, err = _run(capsys, ["select", "--visual", visual, "-k", "13"])
        assert code == 5
        assert "exceeds token count" in err

    def test_usage_error_is_2(self, probe_files):
        with pytest.raises(SystemExit) as exc:
            main(["select"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["select", "--visual", "v.npy", "-k", "2", "--grid", "4y3"])
        assert exc.value.code == 2

    def test_dimension_mismatch_is_5(self, capsys, probe_files, tmp_path):
        visual, _ = probe_files
        other = tmp_path / "text8.npy"
        rp.write_npy(other, np.ones((2, 8), dtype=np.float32))
        code, _, err = _run(capsys, ["select", "--visual", visual, "--text", str(other), "-k", "2"])
        assert code == 5
        assert "dimension mismatch" in err


class TestConfigPrecedence:
    def _alpha_of(self, capsys, argv):
        code, out, _ = _run(capsys, argv)
        assert code == 0
        return json.loads(out)["config"]["alpha"]

    def test_toml_overrides_defaults(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("budget = 4\nalpha = 0.2\n")
        argv = ["select", "--visual", visual, "--text", text, "--config", str(cfg)]
        assert self._alpha_of(capsys, argv) == 0.2

    def test_preset_overrides_toml(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("budget = 4\nalpha = 0.2\n")
        argv = ["select", "--visual", visual, "--text", text, "--config", str(cfg),
                "--preset", "qwen"]
        assert self._alpha_of(capsys, argv) == 0.3

    def test_flags_override_everything(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("budget = 4\nalpha = 0.2\n")
        argv = ["select", "--visual", visual, "--text", text, "--config", str(cfg),
                "--preset", "qwen", "--alpha", "0.9"]
        assert self._alpha_of(capsys, argv) == 0.9

    def test_unknown_config_key_is_5(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("budget = 4\nalfa = 0.2\n")
        code, _, err = _run(capsys, ["select", "--visual", visual, "--text", text,
                                     "--config", str(cfg)])
        assert code == 5
        assert "unknown config keys" in err

    def test_broken_toml_is_4(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("budget = [unclosed\n")
        code, _, _ = _run(capsys, ["select", "--visual", visual, "--text", text,
                                   "--config", str(cfg), "-k", "4"])
        assert code == 4

    def test_missing_budget_is_5(self, capsys, probe_files):
        visual, text = probe_files
        code, _, err = _run(capsys, ["select", "--visual", visual, "--text", text])
        assert code == 5
        assert "budget" in err


class TestTextMasking:
    def test_keep_mask_and_clean_text_agree(self, capsys, probe_files, tmp_path):
        visual, text = probe_files
        mask_path = tmp_path / "mask.txt"
        mask_path.write_text("1\n0\n0\n")
        tokens_path = tmp_path / "tokens.txt"
        tokens_path.write_text("dog\n<image>\nanswer\n")
        base = ["select", "--visual", visual, "--text", text, "-k", "4"]
        code, out_mask, _ = _run(capsys, base + ["--keep-mask", str(mask_path)])
        assert code == 0
        code, out_clean, _ = _run(capsys, base + ["--clean-text", str(tokens_path)])
        assert code == 0
        assert out_mask == out_clean

    def test_mask_flags_mutually_exclusive(self, probe_files, tmp_path):
        visual, text = probe_files
        with pytest.raises(SystemExit) as exc:
            main(["select", "--visual", visual, "--text", text, "-k", "2",
                  "--keep-mask", "a", "--clean-text", "b"])
        assert exc.value.code == 2


class TestCompare:
    def test_with_text_runs_six_methods(self, capsys, probe_files):
        visual, text = probe_files
        code, out, _ = _run(
            capsys,
            ["compare", "--visual", visual, "--text", text, "--budgets", "2,4,6"],
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "method,budget,recon_error,wall_time"
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 18
        methods = sorted({row[0] for row in rows})
        assert methods == ["maxmin", "random", "resprune", "resprune-α0",
                           "top-norm", "top-relevance"]
        keys = [(row[0], int(row[1])) for row in rows]
        assert keys == sorted(keys)
        for row in rows:
            assert float(row[2]) >= 0.0
            assert float(row[3]) >= 0.0

    def test_without_text_skips_relevance_method(self, capsys, probe_files):
        visual, _ = probe_files
        code, out, _ = _run(capsys, ["compare", "--visual", visual, "--budgets", "2,4,6"])
        assert code == 0
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        assert len(rows) == 15
        assert "top-relevance" not in {row[0] for row in rows}

    def test_alpha_zero_method_matches_explicit_alpha_zero(self, capsys, probe_files):
        visual, text = probe_files
        code, out_default, _ = _run(
            capsys, ["compare", "--visual", visual, "--text", text, "--budgets", "4"]
        )
        assert code == 0
        code, out_zeroed, _ = _run(
            capsys,
            ["compare", "--visual", visual, "--text", text, "--budgets", "4", "--alpha", "0"],
        )
        assert code == 0

        def recon(output, method):
            for line in output.strip().splitlines()[1:]:
                parts = line.split(",")
                if parts[0] == method:
                    return parts[2]
            raise AssertionError(f"method {method} missing")

        assert recon(out_default, "resprune-α0") == recon(out_zeroed, "resprune")

    def test_greedy_beats_random_on_probe(self, capsys, probe_files):
        visual, text = probe_files
        code, out, _ = _run(
            capsys, ["compare", "--visual", visual, "--text", text, "--budgets", "5"]
        )
        assert code == 0
        errors = {}
        for line in out.strip().splitlines()[1:]:
            parts = line.split(",")
            errors[parts[0]] = float(parts[2])
        assert errors["resprune"] <= errors["random"] + 1e-9

    def test_recon_columns_stable_across_runs_and_threads(
        self, capsys, probe_files, monkeypatch
    ):
        visual, text = probe_files
        argv = ["compare", "--visual", visual, "--text", text, "--budgets", "2,4"]

        def recon_rows(output):
            return [line.rsplit(",", 1)[0] for line in output.strip().splitlines()]

        code, serial, _ = _run(capsys, argv)
        assert code == 0
        monkeypatch.setenv("RESPRUNE_THREADS", "3")
        code, threaded, _ = _run(capsys, argv)
        assert code == 0
        assert recon_rows(serial) == recon_rows(threaded)


class TestOracleCommand:
    def test_report_fields(self, capsys, probe_files):
        visual, _ = probe_files
        code, out, _ = _run(capsys, ["oracle", "--visual", visual, "--budget", "2"])
        assert code == 0
        payload = json.loads(out)
        assert set(payload) == {"greedy_error", "optimal_error", "optimal_subset",
                                "greedy_subset", "ratio"}
        assert payload["greedy_error"] >= payload["optimal_error"] - 1e-9
        assert len(payload["optimal_subset"]) == 2

    def test_subset_limit_is_5(self, capsys, probe_files):
        visual, _ = probe_files
        code, _, err = _run(capsys, ["oracle", "--visual", visual, "--budget", "6",
                                     "--max-subsets", "100"])
        assert code == 5
        assert "exceed" in err


class TestFlopsCommand:
    def test_unit_case(self, capsys):
        code, out, _ = _run(
            capsys,
            ["flops", "--hidden-dim", "1", "--mlp-dim", "1", "--layers", "1",
             "--visual-tokens", "1", "--budget", "1"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["full_flops"] == 18
        assert payload["pruned_flops"] == 18
        assert payload["reduction_percent"] == 0.0

    def test_preset_case(self, capsys):
        code, out, _ = _run(
            capsys, ["flops", "--preset", "llava-next", "--budget", "640",
                     "--text-tokens", "50"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["shape"]["visual_tokens"] == 2880
        assert payload["full_flops"] > payload["pruned_flops"] > 0
        assert payload["selection"]["relevance_macs"] == 2880 * 50 * 4096
        assert payload["selection"]["total_macs"] == sum(
            payload["selection"][key]
            for key in ("relevance_macs", "greedy_macs", "basis_macs")
        )

    def test_dims_required_without_preset(self, capsys):
        code, _, err = _run(capsys, ["flops", "--budget", "4"])
        assert code == 5
        assert "required" in err


class TestBenchCommand:
    def test_rows_and_mac_columns(self, capsys):
        code, out, _ = _run(
            capsys,
            ["bench", "--tokens", "50,30", "--dims", "8", "--budgets", "5",
             "--text-len", "4", "--repeat", "1", "--seed", "0"],
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == ("visual_tokens,text_tokens,embed_dim,budget,wall_time,"
                            "relevance_macs,greedy_macs,basis_macs")
        rows = [line.split(",") for line in lines[1:]]
        assert [int(r[0]) for r in rows] == [30, 50]
        for row in rows:
            count, text_len, dim, budget = (int(row[i]) for i in range(4))
            cost = rp.selection_cost(count, text_len, dim, budget)
            assert int(row[5]) == cost.relevance_macs
            assert int(row[6]) == cost.greedy_macs
            assert int(row[7]) == cost.basis_macs
            assert float(row[4]) >= 0.0

    def test_budget_over_tokens_is_5(self, capsys):
        code, _, _ = _run(capsys, ["bench", "--tokens", "4", "--dims", "8",
                                   "--budgets", "5", "--repeat", "1"])
        assert code == 5


class TestRenderHelpers:
    def test_render_mask_small(self):
        assert render_mask([3], (2, 2)) == "..\n.#\n"
        assert render_mask([0, 1, 2, 3], (2, 2)) == "##\n##\n"

    def test_pgm_layout(self):
        raw = pgm_bytes([0, 3], (2, 2))
        assert raw == b"P5\n2 2\n255\n" + bytes([255, 0, 0, 255])
