import json

import numpy as np
import pytest

from kecone.cli import main
from kecone.ke_profile import profile_from_json_dict


def run(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolve:
    def test_csv_to_stdout(self, capsys):
        code, out, _ = run(["solve", "--n", "2", "--c", "0.9", "--t-max", "20"],
                           capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "t,f,fp,fpp"
        assert len(lines) == 2049

    def test_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run(["solve", "--n", "2", "--c", "0.9",
                              "--output", str(path)], capsys)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_round_trip(self, tmp_path, capsys):
        path = tmp_path / "prof.json"
        code, _, _ = run(["solve", "--n", "2", "--c", "0.9", "--format", "json",
                          "--output", str(path)], capsys)
        assert code == 0
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        prof = profile_from_json_dict(doc)
        ts = np.linspace(0, 20, 301)
        f, _, _ = prof.evaluate(ts)
        assert np.all(np.isfinite(f))

    def test_validation_exit_code(self, capsys):
        code, _, err = run(["solve", "--n", "2", "--c", "1.5"], capsys)
        assert code == 3
        assert "InvalidInitialValue" in err

    def test_bad_flag_exit_code(self, capsys):
        code, _, _ = run(["solve", "--nope", "1"], capsys)
        assert code == 2

    def test_outdir_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("KECONE_OUTDIR", str(tmp_path))
        code, _, _ = run(["solve", "--n", "2", "--c", "0.9",
                          "--output", "env.csv"], capsys)
        assert code == 0
        assert (tmp_path / "env.csv").exists()


class TestCommands:
    def test_curvature_header(self, capsys):
        code, out, _ = run(["curvature", "--n", "2", "--c", "0.95"], capsys)
        assert code == 0
        assert out.splitlines()[0] == "t,Ktr,Kdisk,lambda,m,mu"

    def test_alphamap_decreasing(self, capsys):
        code, out, _ = run(["alphamap", "--n", "2", "--sweep", "0.86:0.99:5"],
                           capsys)
        assert code == 0
        rows = [line.split(",") for line in out.splitlines()[1:]]
        alphas = [float(r[1]) for r in rows]
        assert all(a > b for a, b in zip(alphas, alphas[1:]))

    def test_compare_requires_exactly_one_of_c_alpha(self, capsys):
        code, _, err = run(["compare", "--n", "2"], capsys)
        assert code == 2
        code, _, err = run(["compare", "--n", "2", "--c", "0.9", "--alpha", "2"],
                           capsys)
        assert code == 2

    def test_compare_json(self, tmp_path, capsys):
        path = tmp_path / "cmp.json"
        code, _, _ = run(["compare", "--n", "2", "--c", "0.9",
                          "--format", "json", "--output", str(path)], capsys)
        assert code == 0
        doc = json.loads(path.read_text())
        assert doc["ratio_fit"]["rate"] > 0
        assert doc["volume_fit"]["rate"] > 0

    def test_glue_sweep(self, tmp_path, capsys):
        path = tmp_path / "glue.csv"
        code, _, _ = run(["glue", "--n", "2", "--d", "2",
                          "--radii", "8,12", "--output", str(path)], capsys)
        assert code == 0
        lines = path.read_text().splitlines()
        assert lines[0] == "R,sup_defect,correction_norm,newton_iters"
        assert len(lines) == 3

    def test_vsn_verdict(self, capsys):
        code, out, _ = run(["vsn", "--n", "2"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["is_vsn"] is True
        assert doc["worst_margin"] == pytest.approx(1.0, abs=1e-9)

    def test_gnuplot_emitter(self, tmp_path, capsys):
        path = tmp_path / "c.csv"
        code, _, _ = run(["curvature", "--n", "2", "--c", "0.9", "--gnuplot",
                          "--output", str(path)], capsys)
        assert code == 0
        assert (tmp_path / "c.csv.gp").read_text().startswith("set datafile")


class TestConfig:
    def test_config_provides_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("c = 0.95\nt-max = 18\n")
        code, out, _ = run(["--config", str(cfg), "solve", "--n", "2"], capsys)
        assert code == 0
        last_t = out.splitlines()[-1].split(",")[0]
        assert float(last_t) == pytest.approx(18.0)

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t-max = 18\n")
        code, out, _ = run(["--config", str(cfg), "solve", "--n", "2",
                            "--c", "0.9", "--t-max", "16"], capsys)
        assert code == 0
        assert float(out.splitlines()[-1].split(",")[0]) == pytest.approx(16.0)

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        code, _, err = run(["--config", str(cfg), "solve"], capsys)
        assert code == 2
        assert "bogus" in err


class TestVerifyAll:
    def test_table_all_pass(self, capsys):
        code, out, _ = run(["verify-all", "--n", "2"], capsys)
        assert code == 0
        lines = [l for l in out.splitlines() if l.strip()]
        assert len(lines) >= 6
        assert all(line.endswith("PASS") for line in lines)
