"""End-to-end pipeline: stage orchestration, partial failure, refinement."""

import pytest

from nullwave.pipeline import MIN_PICARD_DELTA, RunResult, run_pipeline
from nullwave.scenario import scenario_from_dict

BASE = {
    "name": "pipe",
    "model": "membrane",
    "profile": {"bump": {"A": 0.3, "width": 6.0}},
    "perturbation": {"eps": 1e-3, "center": 0.5, "width": 1.2},
    "grid": {"radius": 3.0, "h": 0.1},
    "solver": {"backend": "numpy", "contraction_seeds": 3,
               "rect_t_max": 1.0},
    "seed": 7,
}


def scenario(**overrides):
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in BASE.items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key] = dict(raw[key], **value)
        else:
            raw[key] = value
    return scenario_from_dict(raw)


@pytest.fixture(scope="module")
def full_run():
    return run_pipeline(scenario())


def test_all_stages_present_and_clean(full_run):
    rep = full_run.report
    assert rep["ok"] is True and rep["errors"] == []
    assert set(rep["stages"]) == {
        "data_gauge", "march", "picard", "geometry", "crossval"}
    assert rep["schema_version"] == 1
    assert rep["scenario"]["name"] == "pipe"


def test_run_result_carries_arrays(full_run):
    assert isinstance(full_run, RunResult)
    assert full_run.state is not None
    assert full_run.frame is not None
    assert full_run.coords is not None
    assert full_run.state.psi.shape == full_run.coords.t.shape


def test_data_gauge_section(full_run):
    sec = full_run.report["stages"]["data_gauge"]
    assert sec["eps_bar"] > 0.0
    assert sec["gamma_bar"] == 1.0
    assert sec["delta"] == pytest.approx(
        (12.0 * sec["eps_bar"]) ** 0.5, rel=1e-9)
    assert set(sec["data_sup"]) == {"psi", "psib", "xi"}


def test_march_section(full_run):
    sec = full_run.report["stages"]["march"]
    assert sec["backend"] == "numpy"
    assert 0.0 < sec["envelope_fits"]["delta"] < 0.1
    assert 0.0 < sec["sigma_wave_residual_sup"] < 1e-3


def test_picard_section_agrees_with_march(full_run):
    sec = full_run.report["stages"]["picard"]
    assert sec["converged"] is True
    assert 1 <= sec["iterations"] <= 10
    assert len(sec["residuals"]) == sec["iterations"]
    assert sec["metric_vs_march"] < 1e-9
    con = sec["contraction"]
    assert len(con["ratios"]) == 2 and max(con["ratios"]) < 1.0
    assert con["in_ball"] is True


def test_geometry_section(full_run):
    sec = full_run.report["stages"]["geometry"]
    assert sec["degeneracy"]["ok"] is True
    assert sec["curl_sup"] < 1e-4
    assert abs(sec["detj_min"] + 0.5) < 1e-4
    assert abs(sec["detj_max"] + 0.5) < 1e-4
    assert max(sec["nullity"].values()) < 1e-4


def test_crossval_section(full_run):
    sec = full_run.report["stages"]["crossval"]
    comp = sec["comparison"]
    assert set(comp) == {"sup_diff", "l1_diff", "orders", "phase_shift",
                         "degeneracy"}
    assert max(comp["sup_diff"].values()) < 1e-3
    assert comp["phase_shift"] is not None
    assert comp["degeneracy"]["ok"] is True
    assert sec["n_compared"] > 100
    assert sec["flux_residual"] < 1e-2


def test_timings_are_separate(full_run):
    assert "timings" not in full_run.report
    assert set(full_run.timings) >= {
        "data_gauge", "march", "picard", "geometry", "crossval", "total"}
    assert all(v >= 0.0 for v in full_run.timings.values())


def test_report_is_deterministic():
    a = run_pipeline(scenario()).report
    b = run_pipeline(scenario()).report
    assert a == b


def test_stages_switch_off():
    res = run_pipeline(scenario(solver={"picard": False, "crossval": False}))
    rep = res.report
    assert rep["ok"] is True
    assert set(rep["stages"]) == {"data_gauge", "march", "geometry"}


def test_background_scenario_is_quiet():
    res = run_pipeline(scenario(perturbation=None, seed=0))
    rep = res.report
    assert rep["ok"] is True
    dg = rep["stages"]["data_gauge"]
    assert dg["eps_bar"] == 0.0
    assert dg["delta"] == MIN_PICARD_DELTA
    assert dg["data_sup"] == {"psi": 0.0, "psib": 0.0, "xi": 0.0}
    # marched perturbation fields stay at rounding level
    assert all(v < 1e-12 for v in rep["stages"]["march"]["field_sup"].values())
    geo = rep["stages"]["geometry"]
    assert abs(geo["detj_min"] + 0.5) < 1e-10
    assert abs(geo["detj_max"] + 0.5) < 1e-10
    assert rep["stages"]["picard"]["converged"] is True


def test_linear_scenario_matches_flat_coordinates():
    res = run_pipeline(scenario(
        model="linear", profile="zero",
        perturbation={"eps": 1e-2, "width": 2.0, "center": 0.0,
                      "direction": "standing"}))
    rep = res.report
    assert rep["ok"] is True
    comp = rep["stages"]["crossval"]["comparison"]
    assert max(comp["sup_diff"].values()) < 2e-3
    assert abs(comp["phase_shift"]) < 1e-10
    # u = t + x exactly: the reconstructed map is flat
    assert abs(rep["stages"]["geometry"]["detj_min"] + 0.5) < 1e-12


def test_hard_failure_still_emits_partial_report():
    # strong pulse on a quadratic coupling: the data slice is no longer
    # spacelike, and the rectangular evolution loses hyperbolicity
    res = run_pipeline(scenario(
        model={"polynomial": [0.25]},
        perturbation={"eps": 2.0, "width": 1.0, "center": 0.0},
        solver={"contraction_seeds": 0}))
    rep = res.report
    assert rep["ok"] is False
    errors = {e["stage"]: e for e in rep["errors"]}
    assert errors["data_gauge"]["type"] == "SliceNotSpacelike"
    assert errors["crossval"]["type"] == "HyperbolicityLoss"
    for err in rep["errors"]:
        assert err["type"] and err["message"]
    # the dependent stages are skipped, not failed, and the report
    # still carries the scenario echo for post-mortems
    for stage in ("march", "picard", "geometry"):
        assert stage not in rep["stages"] and stage not in errors
    assert rep["scenario"]["perturbation"]["eps"] == 2.0


def test_phase_shift_insufficient_domain_is_note_not_error():
    res = run_pipeline(scenario(
        grid={"radius": 1.0, "h": 0.5},
        solver={"contraction_seeds": 0, "rect_t_max": 0.4}))
    rep = res.report
    assert rep["ok"] is True
    sec = rep["stages"]["crossval"]
    assert sec["comparison"]["phase_shift"] is None
    assert "phase_shift_problem" in sec


def test_refinement_table_orders():
    res = run_pipeline(scenario(
        grid={"radius": 3.0, "h": 0.2},
        solver={"refine": True, "contraction_seeds": 0, "picard": False},
    ))
    rep = res.report
    assert rep["ok"] is True
    table = rep["refinement"]
    assert table["h"] == [0.2, 0.1]
    for label in ("sigma_wave_residual_sup", "curl_sup", "comparison_sup"):
        coarse, fine = table["measurements"][label]
        assert fine < coarse
        assert 1.2 < table["orders"][label] < 3.0
