import functools
import json

import pytest

import disloc.currents as currents_mod
import disloc.dislocation as dislocation_mod
import disloc.runner as runner_mod
from disloc.cli import main
from disloc.errors import ScenarioError
from disloc.examples import EXAMPLES, example_ids, load_example, select_examples
from disloc.runner import Settings, run_scenario
from disloc.scenario import CHECK_KINDS, CURRENT_KINDS, parse_scenario, scenario_json_schema

def _write(tmp_path, text, name="s.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_run_good_scenario_text_and_json(tmp_path, capsys):
    path = _write(tmp_path, EXAMPLES["step-interface"])
    assert main(["run", path]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["run", path, "--report", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["schema_version"] == 1
    assert all(c["verdict"] == "pass" for c in out["checks"])


def test_misspelled_reference_reports_line_and_column(tmp_path, capsys):
    text = EXAMPLES["step-interface"].replace("of: T}", "of: Tx}")
    assert text != EXAMPLES["step-interface"]
    path = _write(tmp_path, text)
    assert main(["run", path]) == 2
    err = capsys.readouterr().err
    assert "Tx" in err and "line" in err and "column" in err


def test_unknown_field_and_bad_yaml_are_input_errors(tmp_path, capsys):
    assert main(["run", _write(tmp_path, "id: x\npatch: {dim: 2}\nbogus: 1\n", "a.yaml")]) == 2
    assert main(["run", _write(tmp_path, "id: [unclosed\n", "b.yaml")]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    capsys.readouterr()


def test_scenario_error_carries_location():
    text = EXAMPLES["step-interface"].replace("of: T}", "of: Tx}")
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.line is not None and info.value.column is not None


def test_degree_mismatch_is_caught_before_numerics():
    # the boundary of T is a 0-current, T itself has degree 1
    text = EXAMPLES["step-interface"].replace("expected: expected", "expected: T")
    with pytest.raises(ScenarioError, match="degree"):
        parse_scenario(text)


def test_json_report_is_byte_identical_across_runs(capsys):
    assert main(["examples", "--filter", "step-interface", "--report", "json"]) == 0
    first = capsys.readouterr().out
    assert main(["examples", "--filter", "step-interface", "--report", "json"]) == 0
    assert capsys.readouterr().out == first
    assert "wall_time" not in first


def test_timings_flag_adds_wall_time(capsys):
    assert main(["examples", "--filter", "dirac-mass", "--report", "json", "--timings"]) == 0
    assert "wall_time" in capsys.readouterr().out


def test_examples_filter_exact_substring_and_unknown(capsys):
    assert [s.id for s in select_examples("step-interface")] == ["step-interface"]
    assert {s.id for s in select_examples("three-quarter")} == {
        "three-quarter-planes-balanced", "three-quarter-planes-unbalanced"}
    with pytest.raises(ScenarioError, match="available"):
        select_examples("no-such-example")
    assert main(["examples", "--filter", "no-such-example"]) == 2
    capsys.readouterr()


def test_examples_table_lists_topic_and_verdict(capsys):
    assert main(["examples", "--filter", "coframe"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split() == ["example", "topic", "verdict", "residual"]
    assert "coframe-torsion" in out


def test_expected_violation_counts_as_pass_and_unexpected_as_fail(tmp_path, capsys):
    text = EXAMPLES["weighted-line-constancy"]
    assert main(["run", _write(tmp_path, text)]) == 0
    flipped = text.replace("expect: violated", "expect: holds")
    assert flipped != text
    assert main(["run", _write(tmp_path, flipped, "f.yaml")]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_tolerance_scale_and_quadrature_flags(capsys):
    assert main(["examples", "--filter", "smooth-layering", "--quadrature-order", "8",
                 "--tolerance-scale", "2", "--report", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    check = out["reports"][0]["checks"][0]
    assert check["tolerance"] == pytest.approx(2e-5)


def test_schema_command_prints_json_schema(capsys):
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    text = json.dumps(schema)
    for kind in CURRENT_KINDS + CHECK_KINDS:
        assert f'"{kind}"' in text
    assert schema == scenario_json_schema()


def test_every_example_loads_and_passes():
    for eid in example_ids():
        report = run_scenario(load_example(eid), Settings())
        assert report.passed, eid


PUBLIC_CONSTRUCTORS = ["FormCurrent", "ChainCurrent", "WeightedChainCurrent", "DiracCurrent",
                       "Contraction", "Combination", "WeakBoundary"]
PUBLIC_CHECKERS = ["boundary_structural", "boundary_weak", "dislocation_current", "dislocation_density",
                   "total_dislocation", "torsion", "burgers_bracket", "tube_flux_check",
                   "closed_surface_flux", "detect_support", "frank_node_check",
                   "frank_constancy_check", "closedness_check"]


def test_schema_reaches_every_constructor_and_checker(monkeypatch):
    hits = set()

    def spy_init(cls):
        original = cls.__init__

        @functools.wraps(original)
        def wrapped(self, *args, **kwargs):
            hits.add(cls.__name__)
            original(self, *args, **kwargs)
        monkeypatch.setattr(cls, "__init__", wrapped)

    def spy_fn(name, fn):
        @functools.wraps(fn)
        def wrapped(*args, **kwargs):
            hits.add(name)
            return fn(*args, **kwargs)
        return wrapped

    for name in PUBLIC_CONSTRUCTORS:
        spy_init(getattr(currents_mod, name))
    for name in PUBLIC_CHECKERS:
        fn = getattr(dislocation_mod, name, None) or getattr(currents_mod, name)
        for module in (runner_mod, dislocation_mod, currents_mod):
            if hasattr(module, name):
                monkeypatch.setattr(module, name, spy_fn(name, fn))
    for eid in example_ids():
        run_scenario(load_example(eid), Settings())
    missing = set(PUBLIC_CONSTRUCTORS + PUBLIC_CHECKERS) - hits
    assert not missing, missing


def test_public_api_lists_are_complete():
    exported = {n for n in currents_mod.__all__} if hasattr(currents_mod, "__all__") else set()
    for name in exported:
        obj = getattr(currents_mod, name)
        if isinstance(obj, type) and issubclass(obj, currents_mod.Current) and obj is not currents_mod.Current:
            assert name in PUBLIC_CONSTRUCTORS
