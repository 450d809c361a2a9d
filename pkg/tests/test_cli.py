import csv
import json

import pytest

from hopflab.cli import (EXIT_CONFIG, EXIT_DIVERGED, EXIT_FAIL, EXIT_PASS, ConfigError, config_digest,
                         main, parse_config_text, resolve_config, run)


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParsing:
    def test_values(self):
        raw = parse_config_text("n = 2, 3  # dims\n\nepsilons = [1/8, 2^-4]\noperator = laplacian\n")
        cfg = resolve_config(raw, "flame-sweep")
        assert cfg["n"] == (2, 3)
        assert cfg["epsilons"] == (0.125, 0.0625)
        assert cfg["operator"] == "laplacian"

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("n = 2\nn = 3\n")

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="'foo'"):
            resolve_config({"foo": "1"}, "solve")

    def test_unknown_experiment_lists_valid(self):
        with pytest.raises(ConfigError, match="barrier-certify"):
            resolve_config({}, "nonsense")

    def test_digest_ignores_out(self):
        a = resolve_config({}, "campanato")
        b = dict(a, out="/elsewhere")
        assert config_digest(a) == config_digest(b)
        assert len(config_digest(a)) == 16
        assert config_digest(dict(a, seed=1)) != config_digest(a)


class TestExitCodes:
    def test_unknown_experiment(self, capsys):
        assert main(["nonsense"]) == EXIT_CONFIG
        assert "valid experiments" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "foo = 1\n")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "'foo'" in capsys.readouterr().err

    def test_invalid_parameter(self, tmp_path):
        cfg = write(tmp_path, "lambda = 3\nLambda = 1\n")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_mismatched_experiment(self, tmp_path):
        cfg = write(tmp_path, "experiment = solve\n")
        assert main(["campanato", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "none.cfg")]) == EXIT_CONFIG

    def test_defaults_pass(self, tmp_path):
        out = tmp_path / "o"
        assert main(["counterexample", "--out", str(out)]) == EXIT_PASS
        summary = json.loads((out / "summary.json").read_text())
        assert summary["passed"] and summary["exit_code"] == 0
        assert (out / "metadata.json").exists()

    def test_failing_check(self, tmp_path, capsys):
        cfg = write(tmp_path, "levels = 2\nm0 = 51\nmax_error = 1e-12\n")
        out = tmp_path / "o"
        assert run(cfg, "convergence", str(out)) == EXIT_FAIL
        assert str(out / "summary.json") in capsys.readouterr().err

    def test_refused_hypothesis_is_config_error(self, tmp_path):
        cfg = write(tmp_path, "field = quadratic\nT = 0.5\n")
        assert run(cfg, "constants-check", str(tmp_path / "o")) == EXIT_CONFIG

    def test_divergence(self, tmp_path):
        cfg = write(tmp_path, "alpha = 2\nrhs = 5\nouter = 1\nmax_iters = 1\ndelta_ladder = 0.1\ngrid_m = 201\n")
        assert run(cfg, "solve", str(tmp_path / "o")) == EXIT_DIVERGED


class TestArtifacts:
    def test_digest_column_on_every_row(self, tmp_path):
        cfg = write(tmp_path, "samples = 200\nn = 2\nlambda = 1\nLambda = 1\nalpha = 0, 1\n")
        out = tmp_path / "o"
        assert run(cfg, "barrier-certify", str(out)) == EXIT_PASS
        digest = json.loads((out / "summary.json").read_text())["config_digest"]
        rows = csv_rows(out / "barrier.csv")
        assert rows[0][-1] == "config_digest"
        assert len(rows) == 3 and all(r[-1] == digest for r in rows[1:])
        certs = sorted(p.name for p in (out / "certificates").iterdir())
        assert len(certs) == 2

    def test_run_subcommand_uses_experiment_key(self, tmp_path):
        cfg = write(tmp_path, "experiment = campanato\nfield = affine\n")
        out = tmp_path / "o"
        assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_PASS
        assert json.loads((out / "summary.json").read_text())["experiment"] == "campanato"

    def test_run_without_experiment_key(self, tmp_path):
        cfg = write(tmp_path, "seed = 1\n")
        assert main(["run", "--config", cfg]) == EXIT_CONFIG

    def test_deterministic(self, tmp_path):
        cfg = write(tmp_path, "runs = 3\nn = 2\nalpha = 0, 1\n")
        outs = [tmp_path / "a", tmp_path / "b"]
        for o in outs:
            assert run(cfg, "harnack-sweep", str(o), seed=7) == EXIT_PASS
        for name in ("harnack.csv", "summary.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        meta = json.loads((outs[0] / "metadata.json").read_text())
        assert "elapsed_seconds" in meta

    def test_seed_override_changes_digest(self, tmp_path):
        cfg = write(tmp_path, "runs = 2\nn = 2\nalpha = 0\n")
        run(cfg, "hopf-sweep", str(tmp_path / "a"), seed=1)
        run(cfg, "hopf-sweep", str(tmp_path / "b"), seed=2)
        da = json.loads((tmp_path / "a" / "summary.json").read_text())["config_digest"]
        db = json.loads((tmp_path / "b" / "summary.json").read_text())["config_digest"]
        assert da != db
