"""Tests for scenario files, the bundled registry, and the command-line front end."""

import json
import os

import pytest

from reset_lab.cli import (
    ALL_KINDS,
    EXIT_INAPPLICABLE,
    EXIT_INCONCLUSIVE,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_UNSTABLE,
    _VERDICT_EXIT,
    RunOptions,
    RunResult,
    Scenario,
    dump_scenario,
    list_bundled,
    load_bundled,
    load_scenario,
    load_scenario_text,
    main,
    run_analysis,
)
from reset_lab.errors import ScenarioError

EXPECTED_BUNDLED = [
    "chaos_fore",
    "classical_fore",
    "horowitz_nom_010",
    "horowitz_nom_025",
    "horowitz_nom_135",
    "horowitz_nom_200",
    "horowitz_ranged",
    "horowitz_step",
    "sector_compare",
    "zero_equilibrium",
]

STEP_BLOCKS = {
    "plant": {"A_p": [[-1]], "B_p": [[1]], "C_p": [[1]]},
    "controller": {
        "A_r": [[0, 0], [0, 0]],
        "B_r": [[4], [1]],
        "C_r": [[1, 1]],
        "D_r": [[0]],
        "n_rho": 1,
    },
    "exosystem": {"A_w": [[0]], "C_w1": [[1]], "C_w2": [[0]]},
}


def literal_scenario(**over):
    base = {
        "version": 1,
        "name": "unit",
        "law": "ZeroCrossing",
        "policy": {"tau_min": 0.25},
        "initial": {"x0": [1.0, 0.3, 0.0]},
        "horizon": 5.0,
        "literal": {
            "A": [[-1, 1, 1], [-4, 0, 0], [-1, 0, 0]],
            "A_R": [[1, 0, 0], [0, 1, 0], [0, 0, 0]],
            "C": [[-1, 0, 0]],
            "n_rho": 1,
        },
    }
    base.update(over)
    return base


def expect_invalid(data):
    with pytest.raises(ScenarioError):
        load_scenario_text(json.dumps(data))


# ---------------------------------------------------------------------------
# bundled registry


class TestBundledRegistry:
    def test_expected_names(self):
        assert list_bundled() == EXPECTED_BUNDLED

    @pytest.mark.parametrize("name", EXPECTED_BUNDLED)
    def test_round_trip_identity(self, name):
        first = load_bundled(name)
        second = load_scenario_text(dump_scenario(first))
        assert second == first

    @pytest.mark.parametrize("name", EXPECTED_BUNDLED)
    def test_bundled_systems_build(self, name):
        scenario = load_bundled(name)
        system = scenario.build_system()
        assert system.n == len(scenario.initial.x0)

    def test_unknown_bundled_lists_available(self):
        with pytest.raises(ScenarioError, match="available"):
            load_bundled("no_such_scenario")

    def test_declared_analyses_are_known_kinds(self):
        known = {"simulate", "poincare-graph", "periodic", "stability", "compare"}
        for name in EXPECTED_BUNDLED:
            for ana in load_bundled(name).analyses:
                assert ana.kind in known


# ---------------------------------------------------------------------------
# schema validation


class TestScenarioValidation:
    def test_minimal_literal_scenario_loads(self):
        s = load_scenario_text(json.dumps(literal_scenario()))
        assert s.name == "unit"
        assert s.selection == "eager"
        assert s.initial.q0 == 1
        assert s.initial.tau0 == 0.0

    def test_not_json(self):
        with pytest.raises(ScenarioError, match="JSON"):
            load_scenario_text("{nope")

    def test_blocks_and_literal_together_rejected(self):
        expect_invalid(literal_scenario(blocks=STEP_BLOCKS))

    def test_neither_blocks_nor_literal_rejected(self):
        data = literal_scenario()
        del data["literal"]
        expect_invalid(data)

    def test_sector_literal_requires_quadratic_form(self):
        expect_invalid(literal_scenario(law="Sector"))

    def test_zero_crossing_literal_requires_output_row(self):
        data = literal_scenario()
        del data["literal"]["C"]
        expect_invalid(data)

    def test_wrong_state_length_rejected(self):
        expect_invalid(literal_scenario(initial={"x0": [1.0, 0.3]}))

    def test_bad_mode_sign_rejected(self):
        expect_invalid(literal_scenario(initial={"x0": [1.0, 0.3, 0.0], "q0": 0}))

    def test_negative_timer_rejected(self):
        expect_invalid(literal_scenario(initial={"x0": [1.0, 0.3, 0.0], "tau0": -0.5}))

    def test_timer_cap_below_floor_rejected(self):
        expect_invalid(literal_scenario(policy={"tau_min": 1.0, "tau_max": 0.5}))

    def test_nonpositive_dwell_floor_rejected(self):
        expect_invalid(literal_scenario(policy={"tau_min": -0.1}))

    def test_nonpositive_horizon_rejected(self):
        expect_invalid(literal_scenario(horizon=0.0))

    def test_degenerate_segment_rejected(self):
        expect_invalid(literal_scenario(segment={"a": 1.0, "b": 1.0}))

    def test_unknown_top_level_field_rejected(self):
        expect_invalid(literal_scenario(bogus=1))

    def test_unknown_nested_field_rejected(self):
        data = literal_scenario()
        data["literal"]["bogus"] = 1
        expect_invalid(data)

    def test_unknown_analysis_kind_rejected(self):
        expect_invalid(literal_scenario(analyses=[{"kind": "bogus"}]))

    def test_unknown_selection_rejected(self):
        expect_invalid(literal_scenario(selection="greedy"))

    def test_non_idempotent_reset_rejected(self):
        data = literal_scenario()
        data["literal"]["A_R"] = [[2, 0, 0], [0, 1, 0], [0, 0, 0]]
        expect_invalid(data)

    def test_analysis_lookup_accepts_cli_alias(self):
        s = load_bundled("horowitz_nom_025")
        ana = s.analysis_for("poincare")
        assert ana is not None and ana.kind == "poincare-graph"


# ---------------------------------------------------------------------------
# file/registry resolution


class TestLoadScenario:
    def test_load_from_path(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(literal_scenario()))
        s = load_scenario(str(path))
        assert s.name == "unit"

    def test_load_from_bundled_name(self):
        s = load_scenario("horowitz_step")
        assert s.name == "horowitz_step"

    def test_missing_bundled_name(self):
        with pytest.raises(ScenarioError, match="available"):
            load_scenario("horowitz_missing")

    def test_missing_path(self):
        with pytest.raises(ScenarioError, match="not found"):
            load_scenario(os.path.join("no", "such", "file.json"))


# ---------------------------------------------------------------------------
# dispatch


class TestRunAnalysis:
    def test_unknown_kind(self):
        s = load_bundled("horowitz_step")
        with pytest.raises(ScenarioError, match="unknown analysis kind"):
            run_analysis("bogus", s)

    def test_simulate_result_shape(self):
        s = load_bundled("horowitz_step")
        result = run_analysis("simulate", s)
        assert isinstance(result, RunResult)
        assert result.exit_code == EXIT_OK
        for key in ("name", "law", "jump_count", "reset_intervals", "final_state"):
            assert key in result.summary
        assert set(result.artifacts) == {
            "horowitz_step_trace.csv",
            "horowitz_step_summary.json",
        }
        assert all(isinstance(v, str) for v in result.artifacts.values())

    def test_verdict_exit_codes_cover_all_verdicts(self):
        assert _VERDICT_EXIT == {
            "Stable": EXIT_OK,
            "Inconclusive": EXIT_INCONCLUSIVE,
            "Unstable": EXIT_UNSTABLE,
        }

    def test_all_kinds_constant(self):
        assert ALL_KINDS == ("simulate", "poincare", "periodic", "stability", "compare")


# ---------------------------------------------------------------------------
# command-line entry point


def run_main(argv, tmp_path):
    out = tmp_path / "out"
    return main(argv + ["--out", str(out)]), out


class TestMainExitCodes:
    def test_simulate_ok(self, tmp_path, capsys):
        code, out = run_main(["simulate", "--scenario", "horowitz_step"], tmp_path)
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["name"] == "horowitz_step"
        assert (out / "horowitz_step_trace.csv").exists()
        assert (out / "horowitz_step_summary.json").exists()

    def test_periodic_ok(self, tmp_path, capsys):
        code, out = run_main(["periodic", "--scenario", "horowitz_nom_025"], tmp_path)
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["point_census_by_period"]["1"] >= 1
        assert (out / "horowitz_nom_025_orbits.json").exists()

    def test_stability_stable(self, tmp_path, capsys):
        code, out = run_main(["stability", "--scenario", "horowitz_nom_025"], tmp_path)
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["verdict"]["result"] == "Stable"
        assert (out / "horowitz_nom_025_verdict.json").exists()

    def test_stability_inconclusive(self, tmp_path, capsys):
        code, _ = run_main(["stability", "--scenario", "chaos_fore"], tmp_path)
        assert code == EXIT_INCONCLUSIVE
        assert json.loads(capsys.readouterr().out)["verdict"]["result"] == "Inconclusive"

    def test_stability_inapplicable_for_sector_law(self, tmp_path, capsys):
        code, _ = run_main(["stability", "--scenario", "sector_compare"], tmp_path)
        assert code == EXIT_INAPPLICABLE
        assert "not applicable" in capsys.readouterr().err

    def test_poincare_inapplicable_for_sector_law(self, tmp_path):
        code, _ = run_main(["poincare", "--scenario", "sector_compare"], tmp_path)
        assert code == EXIT_INAPPLICABLE

    def test_poincare_ok(self, tmp_path, capsys):
        code, out = run_main(
            ["poincare", "--scenario", "horowitz_nom_010", "--grid", "60"], tmp_path
        )
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["rows"] == 60
        assert (out / "horowitz_nom_010_map.csv").exists()

    def test_compare_ok(self, tmp_path, capsys):
        code, out = run_main(["compare", "--scenario", "sector_compare"], tmp_path)
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["sector_extra_jumps"] >= 1
        for suffix in ("_zero_crossing.csv", "_sector.csv", "_compare.json"):
            assert (out / f"sector_compare{suffix}").exists()

    def test_compare_inapplicable_without_blocks(self, tmp_path):
        code, _ = run_main(["compare", "--scenario", "horowitz_nom_025"], tmp_path)
        assert code == EXIT_INAPPLICABLE

    def test_unknown_scenario_name(self, tmp_path, capsys):
        code, _ = run_main(["simulate", "--scenario", "nope"], tmp_path)
        assert code == EXIT_INVALID
        assert "available" in capsys.readouterr().err

    def test_invalid_scenario_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _ = run_main(["simulate", "--scenario", str(bad)], tmp_path)
        assert code == EXIT_INVALID
        assert "JSON" in capsys.readouterr().err

    def test_missing_scenario_path(self, tmp_path):
        code, _ = run_main(
            ["simulate", "--scenario", os.path.join("no", "such", "file.json")], tmp_path
        )
        assert code == EXIT_INVALID


class TestMainOptions:
    def test_invalid_seed_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("RESET_LAB_SEED", "abc")
        code, _ = run_main(["stability", "--scenario", "horowitz_nom_025"], tmp_path)
        assert code == EXIT_INVALID
        assert "RESET_LAB_SEED" in capsys.readouterr().err

    def test_valid_seed_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("RESET_LAB_SEED", "7")
        code, _ = run_main(["stability", "--scenario", "horowitz_nom_025"], tmp_path)
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verdict"]["result"] == "Stable"

    def test_grid_and_kmax_overrides(self, tmp_path, capsys):
        code, _ = run_main(
            ["periodic", "--scenario", "horowitz_nom_025", "--grid", "300", "--kmax", "2"],
            tmp_path,
        )
        assert code == EXIT_OK
        census = json.loads(capsys.readouterr().out)["point_census_by_period"]
        assert set(census) <= {"1", "2"}
        assert census["1"] >= 1

    def test_method_override(self, tmp_path, capsys):
        code, _ = run_main(
            ["stability", "--scenario", "classical_fore", "--method", "eigen", "--grid", "400"],
            tmp_path,
        )
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["verdict"]["method"] == "EigenOrbit"
        assert summary["verdict"]["result"] == "Stable"

    def test_stdout_is_pure_json(self, tmp_path, capsys):
        code, _ = run_main(["simulate", "--scenario", "zero_equilibrium"], tmp_path)
        assert code == EXIT_OK
        captured = capsys.readouterr()
        json.loads(captured.out)
        assert "wrote" in captured.err


class TestArtifactContents:
    def test_trace_csv_header(self, tmp_path):
        _, out = run_main(["simulate", "--scenario", "horowitz_step"], tmp_path)
        header = (out / "horowitz_step_trace.csv").read_text().splitlines()[0]
        assert header == "t,j,q,tau,x_1,x_2,x_3,x_4"

    def test_verdict_json_fields(self, tmp_path):
        _, out = run_main(["stability", "--scenario", "horowitz_nom_025"], tmp_path)
        verdict = json.loads((out / "horowitz_nom_025_verdict.json").read_text())
        for key in ("method", "result", "orbits", "coverage_fraction", "notes"):
            assert key in verdict
        assert verdict["orbits"][0]["classification"] == "Sink"

    def test_map_csv_header(self, tmp_path):
        _, out = run_main(
            ["poincare", "--scenario", "horowitz_nom_010", "--grid", "40"], tmp_path
        )
        header = (out / "horowitz_nom_010_map.csv").read_text().splitlines()[0]
        assert header == "u,image,interval,status"

    def test_run_options_defaults(self):
        opts = RunOptions()
        assert opts.grid is None and opts.kmax is None and opts.eps is None
        assert opts.seed is None and opts.method is None

    def test_scenario_model_rejects_unknown_analysis_method(self):
        expect_invalid(
            literal_scenario(analyses=[{"kind": "stability", "method": "bogus"}])
        )

    def test_scenario_is_pydantic_model(self):
        assert issubclass(Scenario, object)
        s = load_bundled("horowitz_step")
        dumped = s.model_dump(mode="json")
        assert dumped["law"] == "ZeroCrossing"
