import json

import pytest
from click.testing import CliRunner

from siegelbk.cli import RunConfig, build_config, cli, main, read_config


def run(*args):
    res = CliRunner().invoke(cli, list(args), catch_exceptions=False)
    return res


def test_hecke_cosets():
    res = run("hecke", "cosets", "--m", "1")
    assert res.exit_code == 0
    obj = json.loads(res.output)
    assert obj["command"] == "hecke cosets" and obj["result"] == 1


def test_fit(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("k,value\n2,8\n4,64\n8,512\n")
    obj = json.loads(run("bk", "fit", "--csv", str(p)).output)
    assert obj["result"]["slope"] == pytest.approx(3.0)
    q = tmp_path / "h.csv"
    q.write_text("2,8\n4,64\n8,512\n")
    assert json.loads(run("bk", "fit", "--csv", str(q)).output)["result"]["slope"] == pytest.approx(3.0)


def test_petersson_p1_and_csv():
    obj = json.loads(run("petersson", "p1", "--k", "12", "--t", "2").output)
    assert obj["result"]["p"] == pytest.approx(576 * 965845.7091681851, rel=1e-9)
    out = run("--format", "csv", "petersson", "p1", "--k", "12", "--t", "2").output.splitlines()
    assert out[0].split(",")[-1] == "config_hash"
    assert len(out) == 2


def test_bk_eval_n1():
    obj = json.loads(run("bk", "eval", "--n", "1", "--k", "12", "--Z", "1 0;1 1").output)
    # y^12 |Delta(i)|^2 / <Delta, Delta>
    assert obj["result"]["value"] == pytest.approx(3.0786771474080963, rel=1e-9)
    assert obj["quality"] == "heuristic"


def test_cy_count():
    obj = json.loads(run("cy", "count", "--n", "2", "--k", "40", "--Y", "2 2 0 3").output)
    assert obj["result"] == {"count": 462, "borderline": 0}


def test_deterministic():
    a = run("amp", "gap", "--p", "11").output
    b = run("amp", "gap", "--p", "11").output
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        ["hecke", "cosets"],
        ["hecke", "cosets", "--m", "0"],
        ["amp", "gap", "--p", "12"],
        ["bk", "eval", "--n", "1", "--k", "12", "--Z", "1 0"],
        ["oracle", "p", "--n", "2", "--k", "10", "--T", "1"],
        ["nonsense"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# sample\ntol = 1e-10\nc_max=40\n")
    vals = read_config(str(p))
    cfg = build_config(vals, {"c_max": 50})
    assert cfg.tol == 1e-10 and cfg.c_max == 50
    assert cfg.hash() != RunConfig().hash()
    p.write_text("bogus = 1\n")
    assert main(["--config", str(p), "hecke", "cosets", "--m", "1"]) == 2
