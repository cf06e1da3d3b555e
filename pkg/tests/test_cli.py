import json

import pytest
from click.testing import CliRunner

from app.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def summary(result) -> dict:
    line = result.stdout.strip().splitlines()[-1]
    return dict(part.split("=", 1) for part in line.split())


def invoke(runner, *args, **kwargs):
    return runner.invoke(cli, ["--log-level", "WARNING", *args], **kwargs)


# --- simulate ---


def test_simulate_fifo_identical(runner):
    result = invoke(
        runner, "simulate", "--model", "identical", "--policy", "fifo", "--priority", "maw",
        "--n", "50", "--m", "10", "--dist", "e", "--seed", "1",
    )
    assert result.exit_code == 0
    values = summary(result)
    assert int(values["steps"]) <= 49
    assert values["flips"] == "0"
    assert values["ne"] == "true"


def test_simulate_single_user(runner):
    result = invoke(runner, "simulate", "--n", "1", "--m", "1", "--policy", "sjf")
    assert result.exit_code == 0
    assert summary(result)["steps"] == "0"


def test_simulate_coalitions_need_makespan(runner):
    result = invoke(runner, "simulate", "--coalitions", "--policy", "sjf", "--n", "6", "--m", "2")
    assert result.exit_code == 1


def test_simulate_coalitions(runner):
    result = invoke(runner, "simulate", "--coalitions", "--coalition-priority", "map", "--dist", "d", "--n", "12", "--m", "3")
    assert result.exit_code == 0
    values = summary(result)
    assert int(values["flips"]) <= int(values["steps"])


def test_simulate_cap_exhausted(runner):
    result = invoke(runner, "simulate", "--policy", "makespan", "--n", "10", "--m", "5", "--max-steps", "1")
    assert result.exit_code == 2
    assert summary(result)["ne"] == "false"


def test_simulate_unknown_flag(runner):
    assert invoke(runner, "simulate", "--bogus").exit_code == 1
    assert invoke(runner, "simulate", "--policy", "lifo").exit_code == 1


def test_simulate_instance_and_model_are_exclusive(runner, tmp_path):
    path = tmp_path / "instance.json"
    path.write_text(json.dumps({"model": "identical", "m": 2, "weights": [1, 2]}), encoding="utf-8")
    assert invoke(runner, "simulate", "--instance", str(path), "--model", "related").exit_code == 1


def test_simulate_writes_trace(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "identical", "m": 2, "weights": [3, 3, 2]}), encoding="utf-8")
    trace = tmp_path / "trace.csv"
    result = invoke(runner, "simulate", "--instance", str(instance), "--trace", str(trace))
    assert result.exit_code == 0
    assert summary(result) == {"steps": "1", "flips": "0", "ne": "true", "makespan": "5"}
    lines = trace.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("step,mover,source,target")
    assert lines[1] == "0,0,0,1,8,3,13,5,single"


def test_simulate_related_rational_makespan(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "related", "weights": [3], "speeds": [1, 2]}), encoding="utf-8")
    result = invoke(runner, "simulate", "--instance", str(instance), "--policy", "fifo")
    assert result.exit_code == 0
    assert summary(result)["makespan"] == "3/2"


def test_seed_from_environment(runner):
    args = ["simulate", "--priority", "random", "--dist", "d", "--n", "20", "--m", "4", "--policy", "sjf"]
    from_env = invoke(runner, *args, env={"SSLAB_SEED": "7"})
    from_flag = invoke(runner, *args, "--seed", "7")
    assert from_env.exit_code == 0
    assert from_env.stdout == from_flag.stdout


def test_simulate_deterministic(runner, tmp_path):
    args = ["simulate", "--priority", "random", "--initial", "random", "--dist", "d", "--n", "15", "--seed", "3"]
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    out_first = invoke(runner, *args, "--trace", str(first))
    out_second = invoke(runner, *args, "--trace", str(second))
    assert out_first.exit_code == 0
    assert out_first.stdout == out_second.stdout
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text(encoding="utf-8").startswith("step,mover,")


# --- nashify ---


def test_nashify_example(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "identical", "m": 2, "weights": [3, 3, 2]}), encoding="utf-8")
    assignment = tmp_path / "assignment.csv"
    assignment.write_text("user,machine\n0,0\n1,0\n2,0\n", encoding="utf-8")
    out = tmp_path / "out.csv"

    result = invoke(runner, "nashify", "--instance", str(instance), "--assignment", str(assignment), "--out", str(out))
    assert result.exit_code == 0
    assert result.stdout.strip() == "moves=1 makespan 8->5"
    assert out.read_text(encoding="utf-8") == "user,machine\n0,1\n1,0\n2,0\n"


def test_nashify_already_equilibrium(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "identical", "m": 2, "weights": [4, 2, 2]}), encoding="utf-8")
    assignment = tmp_path / "assignment.csv"
    assignment.write_text("user,machine\n0,0\n1,1\n2,1\n", encoding="utf-8")
    out = tmp_path / "out.csv"

    result = invoke(runner, "nashify", "--instance", str(instance), "--assignment", str(assignment), "--out", str(out))
    assert result.exit_code == 0
    assert result.stdout.strip() == "moves=0 makespan 4->4"
    assert out.read_text(encoding="utf-8") == assignment.read_text(encoding="utf-8")


def test_nashify_unrelated_rejected(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "unrelated", "cost_matrix": [[1, 2], [2, 1]]}), encoding="utf-8")
    assignment = tmp_path / "assignment.csv"
    assignment.write_text("user,machine\n0,0\n1,0\n", encoding="utf-8")
    result = invoke(
        runner, "nashify", "--instance", str(instance), "--assignment", str(assignment), "--out", str(tmp_path / "o.csv")
    )
    assert result.exit_code == 1


# --- verify ---


def test_verify_instance(runner, tmp_path):
    instance = tmp_path / "instance.json"
    instance.write_text(json.dumps({"model": "identical", "m": 2, "weights": [1, 1]}), encoding="utf-8")
    result = invoke(runner, "verify", "--instance", str(instance), "--policy", "makespan")
    assert result.exit_code == 0
    assert result.stdout.strip() == "states=4 ne_states=2 longest_path=1 cyclic=false"


def test_verify_generated_fifo(runner):
    result = invoke(runner, "verify", "--n", "4", "--m", "2", "--dist", "e", "--policy", "fifo")
    assert result.exit_code == 0
    values = summary(result)
    assert values["states"] == "16"
    assert values["cyclic"] == "false"


def test_verify_budget_exceeded(runner):
    assert invoke(runner, "verify", "--n", "8", "--m", "4", "--budget", "100").exit_code == 1


# --- experiment ---


def test_experiment_writes_outputs(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps({"policy": "sjf", "priority": "miw", "dist": "e", "n_values": [4, 8, 12, 16]}), encoding="utf-8"
    )
    out = tmp_path / "results"
    result = invoke(runner, "experiment", "--config", str(config), "--out", str(out))
    assert result.exit_code == 0
    header = (out / "series.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "n,policy,priority,coalition,dist,mean_steps,max_steps_observed,mean_flips,capped_runs"
    assert (out / "summary.txt").exists()


def test_experiment_empty_n_values(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"policy": "sjf", "priority": "miw", "dist": "e", "n_values": []}), encoding="utf-8")
    result = invoke(runner, "experiment", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == 1
    assert "n_values" in result.stderr
