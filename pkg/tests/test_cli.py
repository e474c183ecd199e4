"""End-to-end command line checks: reports, exit codes, determinism."""

import json

import pytest

from kolbounds import cli, mc


@pytest.fixture()
def files(tmp_path):
    paths = {}

    def put(name, text):
        p = tmp_path / name
        p.write_text(text)
        paths[name] = str(p)

    put("A.csv", "0,1,0.5\n1,0,1\n0.5,1,0\n")
    put("zero.csv", "0,0\n0,0\n")
    put(
        "w.json",
        json.dumps(
            {
                "n": 4,
                "order": 2,
                "entries": [
                    {"subset": [0, 1], "value": 1.0},
                    {"subset": [0, 2], "value": 1.0},
                    {"subset": [1, 2], "value": 1.0},
                    {"subset": [2, 3], "value": 0.5},
                ],
            }
        ),
    )
    put("tri.json", '{"vertices": 3, "edges": [[0, 1], [0, 2], [1, 2]]}')
    put(
        "law.json",
        json.dumps({"type": "finite", "atoms": [[-1.0, 0.5], [0.0, 0.25], [2.0, 0.25]]}),
    )
    put("sweep_q.json", '{"sizes": [6, 12], "samples": 1000, "delta": 0.05}')
    put("sweep_g.json", '{"n": [8, 12], "p": [0.4], "samples": 1000}')
    put("sweep_empty.json", '{"n": [], "p": [0.4]}')
    put("sweep_sum.json", '{"n": [8], "p": [0.4], "samples": 1000, "combine": "sum"}')
    paths["dir"] = str(tmp_path)
    return paths


def _run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_qform_report_oracles(files, capsys):
    code, out, _ = _run(
        ["qform", "--matrix", files["A.csv"], "--law", "rademacher", "--seed", "7", "--samples", "2000"],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "qform"
    ana = rep["results"]["analysis"]
    assert ana["sigma2"] == pytest.approx(9.0)
    assert ana["tr_a4"] == pytest.approx(10.125)
    rates = rep["results"]["rates"]
    assert rates["r1"] == pytest.approx(1.3740754546394718, rel=1e-12)
    assert rates["r2"] == pytest.approx(0.35355339059327373, rel=1e-12)
    assert rates["spectral"] == pytest.approx(0.7948543305840879, rel=1e-12)
    exact = rep["results"]["exact"]["value"]
    assert exact == pytest.approx(0.38055865981823633, rel=1e-12)
    emp = rep["results"]["empirical"]
    assert emp["n"] == 2000
    assert abs(emp["value"] - exact) <= emp["dkw"] + 0.01
    assert rep["constant_free"]["r1"] is False
    assert rep["constant_free"]["exact"] is True


def test_reports_are_byte_identical(files, capsys, monkeypatch, tmp_path):
    argv = [
        "qform",
        "--matrix",
        files["A.csv"],
        "--law",
        "three-point",
        "--seed",
        "11",
        "--samples",
        "600",
    ]
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    monkeypatch.delenv(mc.WORKERS_ENV, raising=False)
    assert cli.main(argv + ["--out", out1]) == 0
    monkeypatch.setenv(mc.WORKERS_ENV, "3")
    assert cli.main(argv + ["--out", out2]) == 0
    capsys.readouterr()
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_samples_zero_is_analytic_only(files, capsys):
    code, out, _ = _run(
        ["qform", "--matrix", files["A.csv"], "--law", "rademacher", "--samples", "0"], capsys
    )
    assert code == 0
    rep = json.loads(out)
    assert "empirical" not in rep["results"]
    assert "exact" in rep["results"]


def test_constant_is_echoed_and_scales(files, capsys):
    code, out, _ = _run(
        [
            "qform",
            "--matrix",
            files["A.csv"],
            "--law",
            "rademacher",
            "--constant",
            "2.5",
            "--samples",
            "0",
        ],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["constant"] == 2.5
    for key, v in rep["results"]["rates"].items():
        assert rep["results"]["scaled_rates"][key] == pytest.approx(2.5 * v, rel=1e-15)


def test_bad_inputs_exit_two(files, capsys):
    cases = [
        ["qform", "--matrix", files["dir"] + "/missing.csv", "--law", "rademacher"],
        ["qform", "--matrix", files["A.csv"], "--law", "rademacher", "--samples", "50"],
        ["qform", "--matrix", files["A.csv"], "--law", "rademacher", "--delta", "1.5"],
        ["qform", "--matrix", files["A.csv"], "--law", "rademacher", "--seed", "-1"],
        ["qform", "--law", "rademacher"],
        [
            "qform",
            "--matrix",
            files["A.csv"],
            "--sweep",
            files["sweep_q.json"],
            "--law",
            "rademacher",
            "--out",
            files["dir"] + "/x.json",
        ],
        ["qform", "--sweep", files["sweep_q.json"], "--law", "rademacher"],
        ["qform", "--matrix", files["A.csv"], "--law", files["dir"] + "/missing_law.json"],
        ["qform", "--matrix", files["tri.json"], "--law", "rademacher"],
        ["ustat", "--weights", files["tri.json"], "--law", "rademacher"],
        ["graph", "--graph", files["tri.json"], "--law", "rademacher", "--sweep", files["sweep_sum.json"], "--out", files["dir"] + "/g.json"],
    ]
    for argv in cases:
        code, _, err = _run(argv, capsys)
        assert code == 2, argv
        assert "kolbounds:" in err


def test_degenerate_matrix_exits_three(files, capsys):
    code, _, err = _run(["qform", "--matrix", files["zero.csv"], "--law", "rademacher"], capsys)
    assert code == 3
    assert "variance" in err


def test_law_keyword_normalization(files, capsys):
    code, out, _ = _run(
        ["qform", "--matrix", files["A.csv"], "--law", "Three_Point", "--samples", "0"], capsys
    )
    assert code == 0
    atoms = json.loads(out)["config"]["law"]["atoms"]
    assert atoms == [[-1.0, 0.25], [0.0, 0.5], [1.0, 0.25]]


def test_law_from_json_file(files, capsys):
    code, out, _ = _run(
        ["qform", "--matrix", files["A.csv"], "--law", files["law.json"], "--samples", "0"], capsys
    )
    assert code == 0
    assert json.loads(out)["config"]["law"]["atoms"][2] == [2.0, 0.25]


def test_qform_sweep_csv(files, capsys, tmp_path):
    out = str(tmp_path / "sweep.json")
    code, _, _ = _run(
        [
            "qform",
            "--sweep",
            files["sweep_q.json"],
            "--law",
            "rademacher",
            "--seed",
            "3",
            "--out",
            out,
        ],
        capsys,
    )
    assert code == 0
    rep = json.loads(open(out).read())
    rows = rep["results"]["rows"]
    assert [r["n"] for r in rows] == [6, 12]
    assert rows[0]["rate_r2"] > rows[1]["rate_r2"]
    lines = open(out + ".csv").read().splitlines()
    assert lines[0] == "n,rate_r1,rate_r2,dk_emp,dkw"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert int(first[0]) == 6
    assert float(first[3]) == pytest.approx(rows[0]["dk_emp"], rel=1e-15)


def test_graph_sweep_csv_and_empty_grid(files, capsys, tmp_path):
    out = str(tmp_path / "g.json")
    code, _, _ = _run(
        [
            "graph",
            "--graph",
            files["tri.json"],
            "--law",
            "rademacher",
            "--sweep",
            files["sweep_g.json"],
            "--seed",
            "5",
            "--out",
            out,
        ],
        capsys,
    )
    assert code == 0
    rows = json.loads(open(out).read())["results"]["rows"]
    assert [(r["n"], r["p"]) for r in rows] == [(8, 0.4), (12, 0.4)]
    assert rows[0]["rg_rate"] > rows[1]["rg_rate"]
    lines = open(out + ".csv").read().splitlines()
    assert lines[0] == "n,p,rg_rate,dk_emp,dkw"
    assert len(lines) == 3

    out2 = str(tmp_path / "empty.json")
    code, _, _ = _run(
        [
            "graph",
            "--graph",
            files["tri.json"],
            "--law",
            "rademacher",
            "--sweep",
            files["sweep_empty.json"],
            "--out",
            out2,
        ],
        capsys,
    )
    assert code == 0
    assert open(out2 + ".csv").read() == "n,p,rg_rate,dk_emp,dkw\n"


def test_ustat_report(files, capsys):
    code, out, _ = _run(
        ["ustat", "--weights", files["w.json"], "--law", "rademacher", "--samples", "500", "--seed", "2"],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    res = rep["results"]
    assert res["order"] == 2
    assert res["sigma2"] > 0.0
    assert res["rate"] > 0.0
    assert "exact" in res
    assert abs(res["empirical"]["value"] - res["exact"]["value"]) <= res["empirical"]["dkw"] + 0.05


def test_chaos_verify_clean_and_corrupt(files, capsys, tmp_path):
    code, out, err = _run(["chaos-verify", "--seed", "0"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert all(c["passed"] for c in rep["results"]["checks"])

    report = str(tmp_path / "corrupt.json")
    code, _, err = _run(["chaos-verify", "--seed", "0", "--corrupt", "--out", report], capsys)
    assert code == 4
    assert "identity failure:" in err
    assert "multiplication" in err
    rep = json.loads(open(report).read())
    failed = [c["name"] for c in rep["results"]["checks"] if not c["passed"]]
    assert "multiplication" in failed


def test_config_hash_tracks_content_not_path(files, capsys, tmp_path):
    alias = tmp_path / "renamed.csv"
    alias.write_text(open(files["A.csv"]).read())
    argv = ["qform", "--law", "rademacher", "--samples", "0", "--matrix"]
    _, out1, _ = _run(argv + [files["A.csv"]], capsys)
    _, out2, _ = _run(argv + [str(alias)], capsys)
    assert json.loads(out1)["config_sha256"] == json.loads(out2)["config_sha256"]
    _, out3, _ = _run(argv + [files["A.csv"], "--seed", "1"], capsys)
    assert json.loads(out1)["config_sha256"] != json.loads(out3)["config_sha256"]
