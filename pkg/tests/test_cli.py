import json

import pandas as pd
import pytest

from tempodag.cli import main
from tempodag.spec_format import load_spec

from conftest import FIXTURES


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def fixture(name):
    return str(FIXTURES / name)


@pytest.fixture(autouse=True)
def plain_output(monkeypatch):
    monkeypatch.setenv("TEMPODAG_COLOR", "never")


class TestValidate:
    def test_ok(self, capsys):
        code, out, _ = run(["validate", fixture("selection_timeline.json")], capsys)
        assert code == 0
        assert out == "OK\n"

    def test_backward_edge(self, tmp_path, capsys):
        payload = json.loads((FIXTURES / "selection_timeline.json").read_text())
        payload["atomic"]["edges"].append(["Y@4", "X@0"])
        path = tmp_path / "backward.json"
        path.write_text(json.dumps(payload, indent=2))
        code, out, err = run(["validate", str(path)], capsys)
        assert code == 2
        assert out == ""
        assert "BackwardInTimeEdge" in err
        assert err.startswith(f"{path}:")

    def test_mixture_mass(self, tmp_path, capsys):
        payload = json.loads((FIXTURES / "mixing_product.json").read_text())
        payload["variables"][0]["support"] = [{"times": [0], "probability": "1.4"}]
        path = tmp_path / "mass.json"
        path.write_text(json.dumps(payload))
        code, _, err = run(["validate", str(path)], capsys)
        assert code == 2
        assert "BadDistribution" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["validate", str(tmp_path / "nope.json")], capsys)
        assert code == 2
        assert "ParseError" in err


class TestClassify:
    def test_golden(self, capsys, golden):
        code, out, _ = run(["classify", fixture("selection_timeline.json"), "--json"], capsys)
        assert code == 0
        assert out == golden("classify_selection_timeline.json")

    def test_byte_stable(self, capsys):
        _, first, _ = run(["classify", fixture("averaged_mediator.json"), "--json"], capsys)
        _, second, _ = run(["classify", fixture("averaged_mediator.json"), "--json"], capsys)
        assert first == second

    @pytest.mark.parametrize(
        "name, expected",
        [
            ("interleaved_means.json", 0),
            ("interleaved_means_feedback.json", 3),
            ("mean_cycle.json", 3),
            ("mixing_restricted.json", 0),
            ("mixing_product.json", 3),
        ],
    )
    def test_exit_codes(self, name, expected, capsys):
        code, _, _ = run(["classify", fixture(name)], capsys)
        assert code == expected

    def test_table_output(self, capsys):
        _, out, _ = run(["classify", fixture("interleaved_means.json")], capsys)
        assert "effect-acyclic" in out
        assert "X -> Y" in out

    def test_allow_mediation(self, capsys):
        _, out, _ = run(["classify", fixture("chain_faithful.json"), "--json"], capsys)
        assert [(e["from"], e["to"]) for e in json.loads(out)["graph"]["edges"]] == [("X", "Y"), ("Y", "Z")]

        code, out, _ = run(["classify", fixture("chain_faithful.json"), "--json", "--allow-mediation"], capsys)
        assert code == 0
        edges = [(e["from"], e["to"]) for e in json.loads(out)["graph"]["edges"]]
        assert edges == [("X", "Y"), ("X", "Z"), ("Y", "Z")]


class TestUnroll:
    def test_auto(self, tmp_path, capsys):
        out_path = tmp_path / "unrolled.json"
        code, out, _ = run(["unroll", fixture("mean_cycle.json"), "--auto", "--out", str(out_path), "--json"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["after"]["edges"] == [["X", "Y#2"], ["Y#1", "X"], ["Y#1", "Y#2"]]
        assert report["before"]["cycles"] == [["X", "Y"]]

        code, _, _ = run(["classify", str(out_path)], capsys)
        assert code == 0

    def test_threshold(self, tmp_path, capsys):
        out_path = tmp_path / "at.json"
        code, _, _ = run(["unroll", fixture("mean_cycle.json"), "--var", "Y", "--at", "7", "--out", str(out_path)], capsys)
        assert code == 0
        system, _ = load_spec(out_path).build()
        assert system.variable("Y#1").deterministic_times == (0,)
        assert system.variable("Y#2").deterministic_times == (10,)

    def test_explicit_partition(self, tmp_path, capsys):
        out_path = tmp_path / "part.json"
        code, _, _ = run(
            ["unroll", fixture("mean_cycle.json"), "--var", "Y", "--partition", "0|10", "--out", str(out_path)],
            capsys,
        )
        assert code == 0

    def test_already_acyclic(self, tmp_path, capsys):
        code, _, err = run(
            ["unroll", fixture("selection_timeline.json"), "--auto", "--out", str(tmp_path / "x.json")], capsys
        )
        assert code == 4
        assert "AlreadyAcyclic" in err

    def test_mixing_cycle(self, tmp_path, capsys):
        code, _, err = run(
            ["unroll", fixture("mixing_product.json"), "--auto", "--out", str(tmp_path / "x.json")], capsys
        )
        assert code == 3
        assert "UnresolvableWithMixing" in err

    def test_mixing_variable(self, tmp_path, capsys):
        code, _, err = run(
            ["unroll", fixture("mixing_product.json"), "--var", "X", "--at", "3", "--out", str(tmp_path / "x.json")],
            capsys,
        )
        assert code == 2
        assert "NonDeterministicSupport" in err

    def test_allow_mediation(self, tmp_path, capsys):
        out_path = tmp_path / "unrolled.json"
        code, out, _ = run(
            ["unroll", fixture("mean_cycle.json"), "--auto", "--allow-mediation", "--out", str(out_path), "--json"],
            capsys,
        )
        assert code == 0
        assert json.loads(out)["after"]["is_dag"] is True

        code, _, err = run(
            ["unroll", fixture("chain_faithful.json"), "--auto", "--allow-mediation", "--out", str(tmp_path / "x.json")],
            capsys,
        )
        assert code == 4
        assert "AlreadyAcyclic" in err


class TestFaithfulness:
    def test_violation(self, capsys):
        code, out, _ = run(["faithfulness", fixture("averaged_mediator.json"), "--json"], capsys)
        assert code == 5
        report = json.loads(out)
        assert [(v["pair"], v["conditioning"]) for v in report["violations"]] == [(["X", "Z"], [])]

    def test_faithful(self, capsys):
        code, out, _ = run(["faithfulness", fixture("chain_faithful.json")], capsys)
        assert code == 0
        assert "no violations" in out

    def test_missing_scm(self, tmp_path, capsys):
        payload = json.loads((FIXTURES / "chain_faithful.json").read_text())
        del payload["scm"]
        path = tmp_path / "noscm.json"
        path.write_text(json.dumps(payload))
        code, _, err = run(["faithfulness", str(path)], capsys)
        assert code == 2
        assert "MissingScm" in err

    def test_cyclic(self, capsys):
        code, _, err = run(["faithfulness", fixture("mean_cycle.json")], capsys)
        assert code == 3
        assert "NotADag" in err


class TestDiscover:
    def test_exact_golden(self, capsys, golden):
        code, out, _ = run(["discover", fixture("averaged_mediator.json"), "--exact", "--json"], capsys)
        assert code == 0
        assert out == golden("discover_averaged_mediator.json")

    def test_empirical(self, capsys):
        code, out, _ = run(
            ["discover", fixture("averaged_mediator.json"), "--samples", "100000", "--seed", "7", "--alpha", "0.01", "--json"],
            capsys,
        )
        assert code == 0
        report = json.loads(out)
        assert report["mode"] == "empirical"
        assert report["pdag"]["directed"] == [["X", "Y"], ["Z", "Y"]]

    def test_text_report(self, capsys):
        _, out, _ = run(["discover", fixture("averaged_mediator.json")], capsys)
        assert "Z -> Y points backward in time" in out

    def test_insufficient_samples(self, capsys):
        code, _, err = run(["discover", fixture("averaged_mediator.json"), "--samples", "3"], capsys)
        assert code == 2
        assert "InsufficientSamples" in err


class TestSimulate:
    def test_deterministic(self, tmp_path, capsys):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (first, second):
            code, _, _ = run(
                ["simulate", fixture("averaged_mediator.json"), "--samples", "1000", "--seed", "7", "--out", str(path)],
                capsys,
            )
            assert code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_independence_in_output(self, tmp_path, capsys):
        path = tmp_path / "big.csv"
        run(["simulate", fixture("averaged_mediator.json"), "--samples", "100000", "--seed", "7", "--out", str(path)], capsys)
        values = pd.read_csv(path)
        assert list(values.columns) == ["X", "Y", "Z"]
        assert abs(values["X"].corr(values["Z"])) <= 0.02

    def test_zero_samples(self, tmp_path, capsys):
        code, _, err = run(
            ["simulate", fixture("averaged_mediator.json"), "--samples", "0", "--out", str(tmp_path / "z.csv")],
            capsys,
        )
        assert code == 2
        assert "InvalidArgument" in err

    def test_summary_and_timeline(self, tmp_path, capsys):
        path = tmp_path / "mix.csv"
        timeline = tmp_path / "timeline.csv"
        code, out, _ = run(
            [
                "simulate", fixture("mixing_restricted.json"), "--samples", "500", "--seed", "1",
                "--out", str(path), "--summary", "--timeline", str(timeline),
            ],
            capsys,
        )
        assert code == 0
        assert (tmp_path / "mix_summary.json").exists()
        assert "X.times" in pd.read_csv(timeline).columns
        assert "variance" in out


def test_schema(capsys):
    code, out, _ = run(["schema"], capsys)
    assert code == 0
    assert "variables" in json.loads(out)["properties"]


def test_verify_corpus(capsys):
    code, out, _ = run(["verify", str(FIXTURES)], capsys)
    assert code == 0
    assert "❌" not in out
    assert "9/9 fixtures passed" in out


class TestSettings:
    def test_unknown_log_level(self, capsys):
        code, out, err = run(["--log-level", "LOUD", "classify", fixture("selection_timeline.json")], capsys)
        assert code == 2
        assert out == ""
        assert "InvalidArgument" in err
        assert "LOUD" in err

    def test_log_level_case_insensitive(self, capsys):
        code, _, _ = run(["--log-level", "error", "validate", fixture("selection_timeline.json")], capsys)
        assert code == 0

    def test_bad_color_setting(self, monkeypatch, capsys):
        monkeypatch.setenv("TEMPODAG_COLOR", "yes")
        code, out, err = run(["classify", fixture("selection_timeline.json")], capsys)
        assert code == 2
        assert out == ""
        assert "TEMPODAG_*" in err

    def test_bad_env_log_level(self, monkeypatch, capsys):
        monkeypatch.setenv("TEMPODAG_LOG_LEVEL", "chatty")
        code, _, err = run(["validate", fixture("selection_timeline.json")], capsys)
        assert code == 2
        assert "log_level" in err
