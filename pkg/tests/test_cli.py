"""Command-line surface: exit codes, report contents and determinism."""

import pytest

from main import main
from utils.records import ReportParser


@pytest.fixture
def run(capsys):
    def invoke(*argv):
        code = main([str(arg) for arg in argv])
        return code, capsys.readouterr().out
    return invoke


def _edited(instances, tmp_path, name, old, new):
    text = (instances / name).read_text(encoding="utf-8")
    assert old in text
    path = tmp_path / name
    path.write_text(text.replace(old, new), encoding="utf-8")
    return path


def test_validate_bundled_game(run, instances):
    code, out = run("validate", instances / "coordination.toml")
    assert code == 0
    assert "valid = true" in out
    sections, _ = ReportParser.parse(out)
    assert sections["manifest"]["command"] == "validate"
    assert sections["result"]["exit_code"] == "0"


def test_missing_schema_is_an_input_error(run, instances, tmp_path):
    path = _edited(instances, tmp_path, "micro.toml", "schema-version = 1\n", "")
    code, out = run("validate", path)
    assert code == 3
    assert out == ""


def test_discount_of_one_fails_validation(run, instances, tmp_path):
    path = _edited(instances, tmp_path, "micro.toml", "gamma = 0.9", "gamma = 1.0")
    code, out = run("validate", path)
    assert code == 2
    _, tables = ReportParser.parse(out)
    assert "discount" in tables["violations"]["location"].tolist()


def test_certify_equilibrium_strategy(run, instances):
    code, out = run("certify", instances / "coordination.toml", instances / "coordination-strategy.toml",
                    instances / "coordination-goal.toml")
    assert code == 0
    assert ReportParser.extract_section(out, "certification")["verdict"] == "pass"


def test_certify_miscoordinated_strategy_fails(run, instances):
    code, out = run("certify", instances / "coordination.toml", instances / "coordination-antigreedy.toml",
                    instances / "coordination-goal.toml")
    assert code == 2
    sections, _ = ReportParser.parse(out)
    assert sections["certification"]["verdict"] == "fail"
    assert sections["certification.one-shot"]["verdict"] == "pass"


def test_certify_individual_condition(run, instances):
    code, out = run("certify", instances / "coordination.toml", instances / "coordination-strategy.toml",
                    instances / "coordination-goal.toml", "--one-shot")
    assert code == 0
    assert "[certification.one-shot]" in out


def test_goal_of_another_game_is_an_input_error(run, instances):
    code, _ = run("certify", instances / "coordination.toml", instances / "coordination-strategy.toml",
                  instances / "micro-goal.toml")
    assert code == 3


def test_unknown_flag_is_a_usage_error(run, instances):
    code, _ = run("validate", instances / "micro.toml", "--frobnicate")
    assert code == 3


def test_design_micro_goal_is_deterministic(run, instances):
    argv = ("--seed", 5, "design", instances / "micro.toml", instances / "micro-goal.toml", "--restarts", 1)
    code, first = run(*argv)
    assert code == 0
    assert ReportParser.extract_section(first, "certificate")["verdict"] == "oil-certified"
    assert run(*argv) == (0, first)


def test_design_non_nash_goal_fails(run, instances):
    code, out = run("design", instances / "micro.toml", instances / "micro-nonnash-goal.toml",
                    "--restarts", 2, "--max-iters", 30)
    assert code == 2
    assert ReportParser.extract_section(out, "certificate")["verdict"] == "uncertified"


def test_optimal_design_needs_a_principal(run, instances):
    code, _ = run("design", instances / "micro.toml", "--optimal")
    assert code == 3


def test_design_writes_artifacts(run, instances, tmp_path):
    code, out = run("--out", tmp_path, "design", instances / "micro.toml", instances / "micro-goal.toml",
                    "--restarts", 1)
    assert code == 0
    assert (tmp_path / "design-report.txt").read_text(encoding="utf-8") == out
    assert (tmp_path / "design-solution.toml").exists()
    assert ReportParser.extract_section(out, "manifest")["option.out"] == str(tmp_path)


def test_evaluate_micro_values(run, instances, tmp_path):
    strategy = tmp_path / "micro-strategy.toml"
    strategy.write_text(
        "schema-version = 1\n\n[policy]\nagent_0 = [[[[1.0, 0.0]]]]\n\n[signaling]\ntable = [[[1.0]]]\n",
        encoding="utf-8")
    code, out = run("evaluate", instances / "micro.toml", strategy)
    assert code == 0
    _, tables = ReportParser.parse(out)
    assert tables["J"]["value"].tolist() == pytest.approx([10.0])
    assert tables["Q"]["value"].tolist() == pytest.approx([10.0, 9.0])


def test_simulate(run, instances):
    code, out = run("--seed", 1, "simulate", instances / "coordination.toml", instances / "coordination-strategy.toml",
                    "--runs", 200, "--horizon", 20)
    assert code == 0
    sections, tables = ReportParser.parse(out)
    assert sections["simulation"]["runs"] == "200"
    assert set(tables["returns"].columns) == {"joint_type", "agent", "state", "mean", "std_error"}
