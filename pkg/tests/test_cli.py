import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from cpcompletion.cli import main
from cpcompletion.pattern import parse_pattern

MOTIVATING = "dims: 2 2 2\n1 1 1\n2 1 1\n1 2 1\n1 1 2\n"


@pytest.fixture
def motivating(tmp_path):
    path = tmp_path / "motivating.pat"
    path.write_text(MOTIVATING)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_finite_golden(capsys, motivating):
    code, out, _ = run(capsys, "check-finite", motivating, "--rank", "1", "--one-based")
    assert code == 0 and out.splitlines()[0] == "finite"
    code, out, _ = run(capsys, "check-finite", motivating, "--rank", "1", "--one-based", "--json")
    data = json.loads(out)
    assert data["finite"]["verdict"] == "finite" and data["finite"]["witness"] == [1, 2]


def test_check_unique_inconclusive_exit_code(capsys, motivating):
    code, out, _ = run(capsys, "check-unique", motivating, "--rank", "1", "--one-based")
    assert code == 2 and out.startswith("inconclusive")


def test_zero_based_read_of_one_based_file_is_an_error(capsys, motivating):
    code, _, err = run(capsys, "check-finite", motivating, "--rank", "1")
    assert code == 1 and "out of bounds" in err


def test_usage_errors(capsys, motivating):
    code, _, err = run(capsys, "check-finite", motivating, "--rank", "1", "--bogus")
    assert code == 1 and "usage" in err
    assert run(capsys)[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys, "check-finite", motivating, "--rank", "1", "--limits", "x=1")[0] == 1
    assert run(capsys, "--help")[0] == 0


def test_constraint_output_and_sidecar(capsys, motivating, tmp_path):
    out_path = tmp_path / "ct.pat"
    code, _, _ = run(capsys, "constraint", motivating, "--rank", "1", "--one-based",
                     "-o", str(out_path))
    assert code == 0
    ct = parse_pattern(out_path.read_text(), one_based=True)
    assert ct.dims == (2, 2, 2) and ct.size == 4
    assert (tmp_path / "ct.pat.rows").read_text() == "1 1\n2 1\n"


def test_oracle_json(capsys, motivating):
    code, out, _ = run(capsys, "oracle", motivating, "--rank", "1", "--one-based")
    data = json.loads(out)
    assert code == 0 and data["reduced_rank"] == 2 and data["verdict_reduced"]
    code, out, _ = run(capsys, "oracle", motivating, "--rank", "1", "--one-based",
                       "--mode", "full")
    assert json.loads(out)["rank"] == 4


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "1000", "--d", "7", "--r", "50",
                       "--eps", "0.001", "--integer")
    data = json.loads(out)["bounds"]
    assert code == 0 and data["cp-finite"]["per_column_l"] == 510
    assert set(data) == {"unfolding", "cp-finite", "cp-unique", "probability-finite",
                         "probability-unique"}
    assert run(capsys, "bounds", "--n", "10", "--d", "3", "--r", "1", "--eps", "2")[0] == 1


def test_figure1(capsys, tmp_path):
    code, out, _ = run(capsys, "figure1", "--n", "1000", "--d", "7", "--eps", "0.001",
                       "--rmax", "150")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["r", "unfolding_total", "cp_total"] and len(rows) == 151
    assert all(float(c) < float(u) for _, u, c in rows[1:])
    code, out, _ = run(capsys, "figure1", "--rmax", "2", "--integer")
    assert out.splitlines()[1] == "1,344000000000000,474000000"


def test_gen_and_experiment_are_deterministic(capsys, monkeypatch):
    monkeypatch.setenv("CPCOMPLETE_SEED", "17")
    a = run(capsys, "gen", "--dims", "4", "4", "3", "--p", "0.4")[1]
    b = run(capsys, "gen", "--dims", "4", "4", "3", "--p", "0.4")[1]
    c = run(capsys, "gen", "--dims", "4", "4", "3", "--p", "0.4", "--seed", "18")[1]
    assert a == b != c and "seed=17" in a
    argv = ["experiment", "--dims", "3", "3", "3", "--rank", "1", "--p-grid", "0.2:0.6:0.2",
            "--trials", "4"]
    e1, e2 = run(capsys, *argv)[1], run(capsys, *argv)[1]
    assert e1 == e2 and len(e1.splitlines()) == 4
    monkeypatch.setenv("CPCOMPLETE_SEED", "x")
    assert run(capsys, "gen", "--dims", "2", "2", "--p", "0.5")[0] == 1


ARGV_ATOMS = ["check-finite", "check-unique", "constraint", "oracle", "bounds", "figure1",
              "gen", "experiment", "--rank", "1", "-1", "--json", "--one-based", "--n", "5",
              "--d", "--eps", "0.5", "--dims", "2", "--p", "--bogus", "PATTERN", "--rmax",
              "--mode", "full", "--trials", "0"]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from(ARGV_ATOMS), max_size=7))
def test_exit_code_contract_on_fuzzed_argv(tmp_path_factory, argv):
    path = tmp_path_factory.getbasetemp() / "fuzz.pat"
    path.write_text("dims: 2 2 2\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n")
    argv = [str(path) if a == "PATTERN" else a for a in argv]
    assert main(argv) in (0, 1, 2)
