"""Scenario parsing, validation, normalization and materialization."""

import json

import numpy as np
import pytest

from nullwave.background import WaveProfile
from nullwave.data_gauge import RectInitialData, background_data
from nullwave.errors import ScenarioError
from nullwave.grid import DNGrid
from nullwave.nonlinearity import Nonlinearity
from nullwave.scenario import (PERTURBATION_DEFAULTS, SOLVER_DEFAULTS,
                               Scenario, load_scenario, materialize,
                               rect_extent, save_scenario, scenario_from_dict,
                               scenario_to_dict, validate_scenario)


def full_dict():
    return {
        "schema_version": 1,
        "name": "example",
        "model": "membrane",
        "profile": {"bump": {"A": 0.3, "width": 6.0}},
        "perturbation": {"kind": "bump", "eps": 1e-3, "center": 0.5,
                         "width": 1.2, "direction": "left", "gamma": 1.0},
        "grid": {"radius": 3.0, "h": 0.1},
        "solver": dict(SOLVER_DEFAULTS),
        "seed": 7,
    }


def minimal_dict():
    return {
        "name": "minimal",
        "model": "linear",
        "profile": "zero",
        "grid": {"radius": 2.0, "h": 0.25},
    }


def test_round_trip_full():
    s = scenario_from_dict(full_dict())
    assert scenario_from_dict(scenario_to_dict(s)) == s
    assert scenario_to_dict(s) == scenario_to_dict(scenario_from_dict(
        scenario_to_dict(s)))


def test_minimal_fills_defaults():
    s = scenario_from_dict(minimal_dict())
    assert s.perturbation is None
    assert s.solver == SOLVER_DEFAULTS
    assert s.seed == 0
    assert scenario_from_dict(scenario_to_dict(s)) == s


def test_partial_sections_merge_defaults():
    raw = minimal_dict()
    raw["perturbation"] = {"eps": 0.01}
    raw["solver"] = {"picard": False}
    s = scenario_from_dict(raw)
    assert s.perturbation["eps"] == 0.01
    assert s.perturbation["kind"] == PERTURBATION_DEFAULTS["kind"]
    assert s.solver["picard"] is False
    assert s.solver["crossval"] is SOLVER_DEFAULTS["crossval"]


@pytest.mark.parametrize("mutate,fragment", [
    (lambda d: d.update(extra=1), "unknown key"),
    (lambda d: d.pop("name"), "missing required"),
    (lambda d: d.pop("grid"), "missing required"),
    (lambda d: d.update(name=""), "name"),
    (lambda d: d.update(schema_version=99), "schema_version"),
    (lambda d: d.update(grid={"radius": 3.0}), "grid"),
    (lambda d: d.update(grid={"radius": 3.0, "h": "x"}), "grid"),
    (lambda d: d.update(perturbation={"epsilon": 1e-3}), "unknown perturbation"),
    (lambda d: d.update(solver={"piccard": True}), "unknown solver"),
    (lambda d: d.update(seed=1.5), "seed"),
    (lambda d: d.update(seed=True), "seed"),
])
def test_parse_errors(mutate, fragment):
    raw = minimal_dict()
    mutate(raw)
    with pytest.raises(ScenarioError, match=fragment):
        scenario_from_dict(raw)


def test_parse_rejects_non_mapping():
    with pytest.raises(ScenarioError):
        scenario_from_dict(["not", "a", "dict"])


def test_validate_ok():
    assert validate_scenario(scenario_from_dict(full_dict())) == []
    assert validate_scenario(scenario_from_dict(minimal_dict())) == []


def _with(section, **kw):
    raw = full_dict()
    raw[section] = dict(raw[section], **kw) if isinstance(raw[section], dict) \
        else kw["_value"]
    return scenario_from_dict(raw)


@pytest.mark.parametrize("section,override,fragment", [
    ("grid", {"radius": -1.0}, "radius"),
    ("grid", {"h": 0.0}, "h must be positive"),
    ("grid", {"h": 0.7}, "divide"),
    ("perturbation", {"kind": "sawtooth"}, "kind"),
    ("perturbation", {"direction": "up"}, "direction"),
    ("perturbation", {"eps": -1e-3}, "eps"),
    ("perturbation", {"width": 0.0}, "width"),
    ("perturbation", {"gamma": 0.0}, "gamma"),
    ("solver", {"backend": "fortran"}, "backend"),
    ("solver", {"tol": 0.0}, "tol"),
    ("solver", {"max_iter": 0}, "max_iter"),
    ("solver", {"contraction_seeds": 1}, "contraction_seeds"),
    ("solver", {"dissipation": -0.1}, "dissipation"),
    ("solver", {"cfl": 1.5}, "cfl"),
    ("solver", {"rect_halfwidth": -2.0}, "rect_halfwidth"),
    ("solver", {"picard": 1}, "picard"),
])
def test_validate_flags_bad_values(section, override, fragment):
    problems = validate_scenario(_with(section, **override))
    assert any(fragment in p for p in problems)


def test_validate_bad_model_and_profile_gamma():
    raw = full_dict()
    raw["model"] = "cubic"
    raw["profile"] = {"bump": {"A": 0.3, "width": 6.0, "gamma": -1.0}}
    problems = validate_scenario(scenario_from_dict(raw))
    assert any(p.startswith("model:") for p in problems)
    assert any("gamma_bar" in p for p in problems)


def test_validate_collects_every_problem():
    raw = full_dict()
    raw["model"] = "cubic"
    raw["grid"] = {"radius": -1.0, "h": 0.1}
    raw["solver"] = dict(raw["solver"], tol=0.0)
    problems = validate_scenario(scenario_from_dict(raw))
    assert len(problems) >= 3


def test_validate_missing_table_file(tmp_path):
    raw = minimal_dict()
    raw["profile"] = {"table": str(tmp_path / "does_not_exist.csv")}
    problems = validate_scenario(scenario_from_dict(raw))
    assert any("table" in p and "not found" in p for p in problems)


def test_validate_existing_table_file(tmp_path):
    x = np.linspace(-20.0, 20.0, 2001)
    zeta = 0.1 * np.exp(-x**2)
    dz = -2.0 * x * zeta
    d2z = (-2.0 + 4.0 * x**2) * 0.1 * np.exp(-x**2)
    path = tmp_path / "prof.csv"
    header = "x,zeta,dzeta,d2zeta"
    np.savetxt(path, np.column_stack([x, zeta, dz, d2z]),
               delimiter=",", header=header, comments="")
    raw = minimal_dict()
    raw["profile"] = {"table": str(path)}
    assert validate_scenario(scenario_from_dict(raw)) == []


def test_materialize_builds_runtime_objects():
    model, profile, grid, rect = materialize(scenario_from_dict(full_dict()))
    assert isinstance(model, Nonlinearity)
    assert isinstance(profile, WaveProfile)
    assert isinstance(grid, DNGrid) and grid.u_min == -3.0 and grid.u_max == 3.0
    assert isinstance(rect, RectInitialData)
    bg = background_data(profile)
    assert abs(rect.phi0p(1.0) - bg.phi0p(1.0)) > 0.0  # pulse present


def test_materialize_background_when_no_perturbation():
    raw = minimal_dict()
    _, profile, _, rect = materialize(scenario_from_dict(raw))
    x = np.linspace(-2, 2, 41)
    assert np.array_equal(rect.phi0(x), profile.zeta(-x))


def test_materialize_rejects_invalid():
    raw = minimal_dict()
    raw["grid"] = {"radius": -2.0, "h": 0.25}
    with pytest.raises(ScenarioError, match="radius"):
        materialize(scenario_from_dict(raw))


def test_rect_extent_defaults_and_overrides():
    s = scenario_from_dict(minimal_dict())
    half, t_max, dx = rect_extent(s)
    assert half == s.grid["radius"] + 2.0
    assert t_max == pytest.approx(0.4 * s.grid["radius"])
    assert dx == s.grid["h"]

    raw = minimal_dict()
    raw["solver"] = {"rect_halfwidth": 9.0, "rect_t_max": 1.25, "rect_dx": 0.05}
    half, t_max, dx = rect_extent(scenario_from_dict(raw))
    assert (half, t_max, dx) == (9.0, 1.25, 0.05)


def test_load_and_save(tmp_path):
    s = scenario_from_dict(full_dict())
    path = tmp_path / "sc.json"
    save_scenario(s, path)
    assert load_scenario(path) == s

    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="JSON"):
        load_scenario(bad)


def test_scenario_is_insulated_from_caller_mutation():
    raw = full_dict()
    s = scenario_from_dict(raw)
    raw["grid"]["h"] = 0.5
    raw["solver"]["picard"] = False
    assert s.grid["h"] == 0.1
    assert s.solver["picard"] is True


def test_json_file_round_trip_is_stable(tmp_path):
    s = scenario_from_dict(full_dict())
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_scenario(s, p1)
    save_scenario(load_scenario(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_dataclass_direct_construction_normalizes():
    s = Scenario(name="direct", model="linear", profile="zero",
                 perturbation=None, grid={"radius": 2.0, "h": 0.25})
    assert json.loads(json.dumps(scenario_to_dict(s))) == scenario_to_dict(s)
