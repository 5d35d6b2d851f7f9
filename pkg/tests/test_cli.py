import json

import pytest

from cli_helpers import header_of, rerun_matches
from kboot.cli import main
from kboot.experiments import FULL_SCALE


@pytest.fixture
def model_file(tmp_path, monkeypatch):
    monkeypatch.setenv("KBOOT_THREADS", "1")
    f = tmp_path / "x.csv"
    assert main(["simulate", "--n", "30", "--p", "8", "--seed", "3", "-o", str(f)]) == 0
    return f


@pytest.fixture
def traffic_file(tmp_path, monkeypatch):
    monkeypatch.setenv("KBOOT_THREADS", "1")
    f = tmp_path / "traffic.csv"
    assert main(["simulate", "--kind", "traffic", "--segments", "20", "--days", "15",
                 "--shift", "5", "--seed", "1", "-o", str(f)]) == 0
    return f


class TestPvalue:
    def test_json(self, model_file, tmp_path):
        out = tmp_path / "r.json"
        assert main(["pvalue", "--data", str(model_file), "--kappa", "2", "--B", "100",
                     "-o", str(out)]) == 0
        d = json.loads(out.read_text())
        assert d["schema_version"] == 1 and d["seed"] == 0
        assert d["kappa"] == 2 and 0 <= d["p_value"] <= 1
        assert d["command"][0] == "pvalue"
        assert "--output" not in d["command"]

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    @pytest.mark.parametrize("threads", [1, 4])
    def test_rerun_identical(self, model_file, tmp_path, monkeypatch, fmt, threads):
        a = tmp_path / f"a.{fmt}"
        assert main(["pvalue", "--data", str(model_file), "--B", "300", "--format", fmt,
                     "--method", "empirical", "-o", str(a)]) == 0
        assert rerun_matches(a, tmp_path / f"b.{fmt}", monkeypatch, threads)

    def test_missing_values_rejected(self, traffic_file):
        assert main(["pvalue", "--data", str(traffic_file), "--header", "--row-labels"]) == 3


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert main(["pvalue", "--data", str(tmp_path / "none.csv")]) == 3

    def test_bad_kappa(self, model_file):
        assert main(["pvalue", "--data", str(model_file), "--kappa", "99"]) == 2

    def test_bad_B(self, model_file):
        assert main(["pvalue", "--data", str(model_file), "--B", "-1"]) == 2

    def test_unknown_flag(self):
        assert main(["pvalue", "--bogus"]) == 2

    def test_bad_seed(self, model_file):
        assert main(["pvalue", "--data", str(model_file), "--seed", "-4"]) == 2

    def test_parse_error(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,2\n3\n")
        assert main(["pvalue", "--data", str(f)]) == 3

    def test_impute_axis_required(self, traffic_file):
        assert main(["test", "--data", str(traffic_file), "--header", "--row-labels"]) == 2

    def test_bad_threads_env(self, model_file, monkeypatch):
        monkeypatch.setenv("KBOOT_THREADS", "zero")
        assert main(["pvalue", "--data", str(model_file)]) == 2


class TestTest:
    def test_traffic_workflow(self, traffic_file, tmp_path, monkeypatch):
        out = tmp_path / "t.json"
        argv = ["test", "--data", str(traffic_file), "--header", "--row-labels",
                "--impute-axis", "column", "--tensor", "20,15,2", "--windows", "0,1",
                "--sided", "two_sided", "--B", "500", "-o", str(out)]
        assert main(argv) == 0
        d = json.loads(out.read_text())
        assert (d["n"], d["p"]) == (15, 20)
        assert d["missing_count"] == round(0.0129 * 20 * 15 * 2)
        assert d["reports"][0]["p_value"] < 0.01
        assert rerun_matches(out, tmp_path / "t2.json", monkeypatch, 4)

    def test_all_kappas(self, traffic_file, tmp_path):
        out = tmp_path / "t.json"
        assert main(["test", "--data", str(traffic_file), "--header", "--row-labels",
                     "--impute-axis", "row", "--all-kappas", "--B", "50", "-o", str(out)]) == 0
        d = json.loads(out.read_text())
        assert [r["kappa"] for r in d["reports"]] == list(range(1, 11))

    def test_windows_need_tensor(self, traffic_file):
        assert main(["test", "--data", str(traffic_file), "--header", "--row-labels",
                     "--impute-axis", "column", "--windows", "0,1"]) == 2


class TestSimulate:
    def test_rerun(self, model_file, tmp_path, monkeypatch):
        assert rerun_matches(model_file, tmp_path / "again.csv", monkeypatch, 4)

    def test_traffic_rerun(self, traffic_file, tmp_path, monkeypatch):
        assert rerun_matches(traffic_file, tmp_path / "again.csv", monkeypatch, 1)


class TestUniformity:
    def test_small_run(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KBOOT_THREADS", "1")
        out = tmp_path / "u"
        assert main(["uniformity", "--n", "20", "--p", "10", "--B", "40", "--N", "10",
                     "--kappas", "1,3", "--outdir", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["pvalues.csv", "qq.csv", "summary.json"]
        s = json.loads((out / "summary.json").read_text())
        assert set(s["ks"]) == {"1", "3"}
        assert len((out / "pvalues.csv").read_text().splitlines()) == 12
        assert rerun_matches(out, tmp_path / "u2", monkeypatch, 4)

    def test_full_scale_flag_echoed(self, tmp_path, monkeypatch):
        # stop before running: only the resolved config matters here
        from kboot import cli
        captured = {}

        def fake(cfg, n_jobs=None):
            captured["cfg"] = cfg
            raise cli.ConfigError("stop")

        monkeypatch.setattr(cli, "run_uniformity", fake)
        assert main(["uniformity", "--paper-scale", "--outdir", str(tmp_path / "p")]) == 2
        cfg = captured["cfg"]
        assert (cfg.model.n, cfg.model.p, cfg.B, cfg.N) == tuple(
            FULL_SCALE[k] for k in ("n", "p", "B", "N"))


class TestCoverageAndValidate:
    def test_coverage(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KBOOT_THREADS", "1")
        out = tmp_path / "c.json"
        assert main(["coverage", "--n-list", "20,40", "--p", "5", "--kappa", "1",
                     "--methods", "multiplier,empirical", "--reps", "20", "--B", "50",
                     "-o", str(out)]) == 0
        d = json.loads(out.read_text())
        assert len(d["cells"]) == 4
        assert set(d["non_increasing_within_2se"]) == {"multiplier", "empirical"}
        assert rerun_matches(out, tmp_path / "c2.json", monkeypatch, 4)

    def test_validate_smooth(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KBOOT_THREADS", "1")
        out = tmp_path / "v.json"
        assert main(["validate", "--suite", "smooth", "-o", str(out)]) == 0
        d = json.loads(out.read_text())
        assert d["passed"] and d["n_failed"] == 0
        assert rerun_matches(out, tmp_path / "v2.json", monkeypatch, 4)

    def test_validate_failure_exit(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["validate", "--suite", "smooth", "--bound-scale", "0.01",
                     "-o", str(out)]) == 1
        assert header_of(out)["passed"] is False
