import io
import json

import numpy as np
import pytest
from scipy import stats

from dosectp.cli import (AnalysisRequest, InputError, format_p, main, parse_csv, render_report,
                         run_analysis)


def write_csv(path, groups, labels=None):
    labels = labels or [str(i) for i in range(len(groups))]
    lines = ["dose,response"]
    for lab, ys in zip(labels, groups):
        lines += [f"{lab},{float(y)!r}" for y in ys]
    path.write_text("\n".join(lines) + "\n")
    return path


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def three_dose_csv(tmp_path):
    rng = np.random.default_rng(0)
    groups = [m + rng.standard_normal(6) for m in (0, 0.4, 1.0, 1.6)]
    return write_csv(tmp_path / "d.csv", groups)


class TestParse:
    def test_two_groups(self, tmp_path):
        data = parse_csv(write_csv(tmp_path / "a.csv", [[1, 2, 3], [2, 3, 4]]))
        assert data.labels == ("0", "1") and data.n == (3, 3)

    def test_numeric_label_order(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [[5, 6], [1, 2], [3, 4]], labels=["10", "2", "1"])
        data = parse_csv(p)
        assert data.labels == ("1", "2", "10")
        np.testing.assert_array_equal(data.samples[0], [3, 4])

    def test_dose_order_override(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [[1, 2], [3, 4], [5, 6]], labels=["ctl", "hi", "lo"])
        assert parse_csv(p).labels == ("ctl", "hi", "lo")
        assert parse_csv(p, ["ctl", "lo", "hi"]).labels == ("ctl", "lo", "hi")
        with pytest.raises(InputError, match="missing"):
            parse_csv(p, ["ctl", "lo"])

    @pytest.mark.parametrize("body,needle", [
        ("dose,response\n0,1\n0,2\ndose,response\n1,3\n1,4\n", "row 4"),
        ("dose,response\n0,1\n0,abc\n1,3\n1,4\n", "row 3"),
        ("dose,response\n0,1\n0,2\n1,3,7\n1,4\n", "row 4"),
        ("dose,response\n0,1\n0,nan\n1,3\n1,4\n", "row 3"),
        ("dose,value\n0,1\n", "row 1"),
        ("dose,response\n0,1\n0,2\n1,3\n", "fewer than 2"),
        ("dose,response\n0,1\n0,2\n", "at least 2"),
        ("", "empty"),
    ])
    def test_errors(self, tmp_path, body, needle):
        p = tmp_path / "bad.csv"
        p.write_text(body)
        with pytest.raises(InputError, match=needle):
            parse_csv(p)


class TestAnalysis:
    def test_k1_collapse(self, tmp_path):
        a, b = [0.1, 0.5, -0.3, 0.2], [0.9, 1.4, 0.6, 1.1, 0.8]
        p = write_csv(tmp_path / "k1.csv", [a, b])
        rep = run_analysis(AnalysisRequest(str(p)))
        ref = stats.ttest_ind(b, a, alternative="greater").pvalue
        cells = rep["comparisons"][0]
        for m in ("dunnett", "williams", "cw", "cp"):
            assert abs(cells[m]["adj_p"] - ref) < 1e-6

    def test_structure(self, three_dose_csv):
        rep = run_analysis(AnalysisRequest(str(three_dose_csv)))
        assert [c["dose"] for c in rep["comparisons"]] == [3, 2, 1]
        assert rep["comparisons"][0]["comparison"] == "3 - 0"
        assert rep["comparisons"][1]["williams"] is None
        assert rep["comparisons"][0]["williams"] is not None
        assert rep["df"] == 20
        for c in rep["comparisons"]:
            for m in ("dunnett", "cw", "cp"):
                assert c[m]["reject"] == (c[m]["adj_p"] <= 0.05)

    def test_chain_monotone(self, three_dose_csv):
        rep = run_analysis(AnalysisRequest(str(three_dose_csv)))
        for m in ("cw", "cp"):
            ps = [c[m]["adj_p"] for c in rep["comparisons"]]
            assert ps[0] <= ps[1] <= ps[2]

    def test_method_subset(self, three_dose_csv):
        rep = run_analysis(AnalysisRequest(str(three_dose_csv), methods=("cp",)))
        assert rep["methods"] == ["cp"]
        assert set(rep["comparisons"][0]) == {"comparison", "dose", "cp"}

    @pytest.mark.parametrize("kw", [dict(methods=()), dict(methods=("holm",)), dict(alpha=0),
                                    dict(direction="both"), dict(output_format="xml")])
    def test_bad_request(self, kw):
        with pytest.raises(InputError):
            AnalysisRequest("x.csv", **kw)

    def test_json_round_trip(self, three_dose_csv):
        rep = run_analysis(AnalysisRequest(str(three_dose_csv), methods=("dunnett", "cp")))
        assert json.loads(render_report(rep, "json")) == rep


def test_format_p():
    assert format_p(3.2e-15) == "3.2e-15"
    assert format_p(0.40612) == "0.406"
    assert format_p(1.51e-3) == "0.00151"
    assert format_p(None) == "NA"


class TestMain:
    def test_analyze_table(self, three_dose_csv):
        code, out, err = run(["analyze", "--input", str(three_dose_csv)])
        assert code == 0, err
        lines = out.splitlines()
        assert lines[0].split() == ["comparison", "dunnett", "williams", "cw", "cp"]
        assert lines[1].startswith("3 - 0")
        assert "NA" in lines[2]

    def test_analyze_json_deterministic(self, three_dose_csv):
        argv = ["analyze", "--input", str(three_dose_csv), "--output-format", "json",
                "--methods", "dunnett,cw", "--seed", "4"]
        a, b = run(argv), run(argv)
        assert a[0] == 0 and a[1] == b[1]
        assert json.loads(a[1])["seed"] == 4

    def test_analyze_csv(self, three_dose_csv):
        code, out, _ = run(["analyze", "--input", str(three_dose_csv), "--methods", "cp",
                            "--output-format", "csv"])
        assert code == 0
        assert out.splitlines()[0] == "comparison,method,adj_p,error_bound,reject"
        assert len(out.splitlines()) == 4

    def test_lesser(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [[5, 6, 7], [1, 2, 3]])
        code, out, _ = run(["analyze", "--input", str(p), "--direction", "lesser",
                            "--output-format", "json"])
        assert code == 0
        assert json.loads(out)["comparisons"][0]["cp"]["adj_p"] < 0.05

    def test_input_errors_exit_2(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("dose,response\n0,1\n0,x\n")
        code, _, err = run(["analyze", "--input", str(p)])
        assert code == 2 and "row 3" in err
        assert run(["analyze", "--input", str(tmp_path / "missing.csv")])[0] == 2
        assert run(["analyze"])[0] == 2
        assert run(["frobnicate"])[0] == 2

    def test_degenerate_data_exit_2(self, tmp_path):
        p = write_csv(tmp_path / "c.csv", [[1, 1], [1, 1]])
        assert run(["analyze", "--input", str(p)])[0] == 2

    def test_mvt(self, tmp_path):
        corr = tmp_path / "r.csv"
        corr.write_text("1,0.5\n0.5,1\n")
        code, out, err = run(["mvt", "--upper", "0,0", "--corr", str(corr)])
        assert code == 0, err
        doc = json.loads(out)
        assert abs(doc["value"] - 1 / 3) < 1e-4

    def test_mvt_numeric_failure_exit_3(self, tmp_path):
        corr = tmp_path / "r.csv"
        corr.write_text("1,0.9,-0.9\n0.9,1,0.9\n-0.9,0.9,1\n")
        code, _, err = run(["mvt", "--upper", "0,0,0", "--corr", str(corr), "--df", "5"])
        assert code == 3 and "numerical" in err

    def test_mvt_bad_input(self, tmp_path):
        corr = tmp_path / "r.csv"
        corr.write_text("1,0\n0,1\n")
        assert run(["mvt", "--upper", "0,a", "--corr", str(corr)])[0] == 2
        assert run(["mvt", "--upper", "0,0,0", "--corr", str(corr)])[0] == 2
        assert run(["mvt", "--upper", "0,0", "--corr", str(corr), "--df", "many"])[0] == 2

    def test_simulate_deterministic(self, tmp_path):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text("replications: 1000\nseed: 11\ndelta: 0.5\nshapes: [H0, M6]\n")
        code1, out1, _ = run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
        code2, _, _ = run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")])
        assert code1 == code2 == 0
        for name in ("power_table.csv", "power_table.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert "M6" in out1

    def test_simulate_bad_config_exit_2(self, tmp_path):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text("methods: [D, Bonferroni]\n")
        code, _, err = run(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 2 and "methods" in err
