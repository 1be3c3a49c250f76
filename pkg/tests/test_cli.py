import json
import math

import jsonschema
import pytest
from click.testing import CliRunner

from speclint import schemas
from speclint.cli import main

TAUT = "F[0,30]((v > 100) -> G[0,20](v > 100))\n"
REQ_ACK = "G[0,5](req -> F[0,10] ack)\n"
GRID5 = {"channels": {"u": {"times": [0, 5, 10, 15, 20], "levels": [0, 0.5, 1], "interp": "hold"}}}
GRID1 = {"channels": {"u": {"times": [0], "levels": [0, 0.5, 1], "interp": "hold"}}}


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text if isinstance(text, str) else json.dumps(text))
        return str(p)

    return write


def invoke(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env={"SPECLINT_COLOR": "0", **(env or {})})


def valid(result, schema):
    doc = json.loads(result.output)
    jsonschema.validate(doc, schemas.load(schema))
    return doc


def silent_trace(end=20):
    return "time,ack,req\n" + "".join(f"{k},0,0\n" for k in range(end + 1))


class TestLint:
    def test_tautology(self, files):
        r = invoke("lint", files("t.mitl", TAUT), "--delta", 1, "--horizon", 50)
        assert r.exit_code == 1
        doc = valid(r, "lint_report")
        assert [i["kind"] for i in doc["issues"]] == ["tautology"]

    def test_clean(self, files):
        r = invoke("lint", files("p.mitl", "p\n"))
        assert r.exit_code == 0
        assert valid(r, "lint_report")["stages_run"] == ["validity", "redundancy", "vacuity"]

    def test_until(self, files):
        r = invoke("lint", files("u.mitl", "p U[0,2] q\n"))
        assert r.exit_code == 2
        doc = valid(r, "lint_report")
        assert "until" in doc["error"].lower()

    def test_vacuity_witness(self, files):
        r = invoke("lint", files("r.mitl", REQ_ACK))
        assert r.exit_code == 1
        issue = valid(r, "lint_report")["issues"][0]
        assert issue["kind"] == "vacuous_antecedent" and "witness_csv" in issue

    def test_parse_error(self, files):
        r = invoke("lint", files("bad.mitl", "G[0,5] (p and\n"))
        assert r.exit_code == 2
        assert "bad.mitl:2:1" in r.output

    def test_missing_file(self):
        assert invoke("lint", "/nonexistent.mitl").exit_code == 2

    def test_template_literal(self):
        r = invoke("lint", "template:overshoot(x,ref=1,m=0.2,H=40)")
        assert r.exit_code == 0
        assert valid(r, "lint_report")["formula"] == "(G[0,40] (x < 1.2))"

    def test_template_file(self, files):
        r = invoke("lint", files("s.tpl", "template:settling(x,ref=1,r=0.1,ts=20,H=40)\n"))
        assert r.exit_code == 0

    def test_text_parity(self, files):
        path = files("r.mitl", REQ_ACK)
        doc = json.loads(invoke("lint", path).output)
        text = invoke("lint", path, "--format", "text").output
        assert doc["formula"] in text
        for issue in doc["issues"]:
            assert f"{issue['kind']} at {issue['path']}: {issue['detail']}" in text
        assert f"delta: {doc['delta']}  horizon: {doc['horizon']}" in text


class TestMonitor:
    def test_vacuous(self, files):
        r = invoke("monitor", files("r.mitl", REQ_ACK), files("t.csv", silent_trace()))
        assert r.exit_code == 4
        doc = valid(r, "monitor_result")
        assert doc["verdict"] == "satisfied" and doc["vacuous"]
        assert doc["vacuity"] == [{"path": [0], "antecedent": "req", "verdict": "vacuous"}]

    def test_satisfied(self, files):
        trace = "time,v\n" + "".join(f"{k},120\n" for k in range(31))
        r = invoke("monitor", files("s.mitl", "G[0,30](v > 100)\n"), files("t.csv", trace))
        assert r.exit_code == 0
        assert valid(r, "monitor_result")["robustness"] == 20

    def test_falsified(self, files):
        trace = "time,v\n0,90\n"
        r = invoke("monitor", files("s.mitl", "v > 100\n"), files("t.csv", trace))
        assert r.exit_code == 1
        assert valid(r, "monitor_result")["robustness"] == -10

    def test_inadequate(self, files):
        trace = "time,v\n" + "".join(f"{k},120\n" for k in range(31))
        r = invoke("monitor", files("s.mitl", "G[0,50](v > 100)\n"), files("t.csv", trace))
        assert r.exit_code == 2
        assert "missing 20" in r.output

    def test_t0(self, files):
        trace = "time,v\n0,0\n1/2,5\n1,7\n"
        r = invoke("monitor", files("s.mitl", "F[0,1/2](v > 6)\n"), files("t.csv", trace), "--t0", "1/2")
        assert r.exit_code == 0
        assert valid(r, "monitor_result")["t0"] == "0.5"

    def test_infinite_robustness_is_finite_json(self, files):
        r = invoke("monitor", files("s.mitl", "true\n"), files("t.csv", "time,v\n0,1\n"))
        doc = valid(r, "monitor_result")
        assert math.isfinite(doc["robustness"])

    def test_text_parity(self, files):
        args = (files("r.mitl", REQ_ACK), files("t.csv", silent_trace()))
        doc = json.loads(invoke("monitor", *args).output)
        text = invoke("monitor", *args, "--format", "text").output
        assert f"robustness: {doc['robustness']!r}" in text
        assert "satisfied (vacuously)" in text
        assert "antecedent req at [0]: vacuous" in text


class TestFalsify:
    def test_overshoot(self, files, tmp_path):
        dump = tmp_path / "best.csv"
        out = tmp_path / "res.json"
        r = invoke("falsify", files("o.mitl", "G[0,40](x < 1.2)\n"), "--model", "secondorder",
                   "--grid", files("g.json", GRID5), "--budget", 200, "--seed", 42,
                   "--dump-trace", dump, "--out", out)
        assert r.exit_code == 0
        doc = valid(r, "falsify_result")
        assert doc["status"] == "falsified" and doc["best_robustness"] < 0
        assert json.loads(out.read_text()) == doc
        assert dump.read_text().startswith("time,x\n0,0.0\n")

    def test_budget(self, files):
        r = invoke("falsify", files("t.mitl", "true\n"), "--model", "secondorder",
                   "--grid", files("g.json", GRID1), "--budget", 10)
        assert r.exit_code == 3
        assert valid(r, "falsify_result")["simulations_used"] == 10

    def test_unknown_model(self, files):
        r = invoke("falsify", files("t.mitl", "true\n"), "--model", "pendulum", "--grid", files("g.json", GRID1))
        assert r.exit_code == 2 and "pendulum" in r.output

    def test_bad_grid(self, files):
        r = invoke("falsify", files("t.mitl", "true\n"), "--model", "secondorder",
                   "--grid", files("g.json", {"channels": {"u": {"times": [0], "levels": [1]}}}))
        assert r.exit_code == 2

    def test_model_param(self, files):
        r = invoke("falsify", files("o.mitl", "G[0,40](x < 1.2)\n"), "--model", "secondorder",
                   "--model-param", "zeta=0.9", "--grid", files("g.json", GRID1), "--budget", 5)
        assert r.exit_code == 3
        assert valid(r, "falsify_result")["model"]["parameters"] == {"zeta": 0.9}

    def test_external(self, files, fixtures):
        import sys

        cmd = f"{sys.executable} {fixtures / 'echo_model.py'}"
        r = invoke("falsify", files("e.mitl", "G[0,2](u_out < 0.7)\n"), "--model", "external",
                   "--external-cmd", cmd, "--grid", files("g.json", GRID1), "--budget", 10)
        assert r.exit_code == 0
        assert valid(r, "falsify_result")["best_candidate"]["u"][0][1] == 1.0

    def test_text_parity(self, files):
        args = ("falsify", files("t.mitl", "G[0,10](x < 2)\n"), "--model", "secondorder",
                "--grid", files("g.json", GRID1), "--budget", 3)
        doc = json.loads(invoke(*args).output)
        text = invoke(*args, "--format", "text").output
        assert f"status: {doc['status']}" in text
        assert f"best robustness: {doc['best_robustness']!r}" in text
        assert f"simulations: {doc['simulations_used']}/3" in text


class TestMine:
    def test_overshoot(self, files):
        r = invoke("mine", "template:overshoot(x,ref=1,m=0.2,H=40)", "--param", "m", "--lo", 0, "--hi", 1,
                   "--iters", 6, "--model", "secondorder", "--grid", files("g.json", GRID1),
                   "--budget", 200, "--seed", 42)
        assert r.exit_code == 0
        doc = valid(r, "mine_result")
        assert 0.5 < doc["value"] < 0.6
        assert len(doc["rounds"]) == 6

    def test_zero_iterations(self, files):
        r = invoke("mine", "template:overshoot(x,ref=1,m=0.2,H=40)", "--param", "m", "--lo", 0, "--hi", 0.75,
                   "--iters", 0, "--model", "secondorder", "--grid", files("g.json", GRID1))
        assert r.exit_code == 0
        assert valid(r, "mine_result")["value"] == 0.75

    def test_non_monotone(self, files):
        r = invoke("mine", "template:overshoot(x,ref=1,m=0.2,H=40)", "--param", "H", "--lo", 0, "--hi", 1,
                   "--model", "secondorder", "--grid", files("g.json", GRID1))
        assert r.exit_code == 2 and "monotone" in r.output


def test_templates_listing():
    r = invoke("templates", "--format", "json")
    assert r.exit_code == 0
    assert [e["id"] for e in json.loads(r.output)] == ["settling", "overshoot"]
    assert "settling(channel, ref, r, ts, H)" in invoke("templates").output


def test_color_toggle(files):
    args = ["monitor", files("r.mitl", REQ_ACK), files("t.csv", silent_trace()), "--format", "text"]
    plain = CliRunner().invoke(main, args, color=True, env={"SPECLINT_COLOR": "0"}).output
    colored = CliRunner().invoke(main, args, color=True, env={"SPECLINT_COLOR": "1"}).output
    assert "\x1b[" not in plain
    assert "\x1b[" in colored
