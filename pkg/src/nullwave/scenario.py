"""Scenario configuration: a JSON-able description of one experiment.

A scenario bundles everything a run needs -- coefficient family, travelling
background, data perturbation, null grid and solver options -- in a single
file, so a run is reproducible from one artifact plus a seed.  Parsing is
strict: an unknown key is an error, not a warning, because a silently
ignored option is the classic source of sweeps that change nothing.

The normalized form fills every default, so

    scenario_from_dict(scenario_to_dict(s)) == s

holds exactly and the JSON written back is the complete record of what ran.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .background import profile_from_config
from .data_gauge import background_data, perturbed_data
from .errors import DomainError, GridMismatch, ScenarioError
from .grid import DNGrid
from .nonlinearity import model_from_config

SCHEMA_VERSION = 1

PERTURBATION_DEFAULTS = {
    "kind": "bump",
    "eps": 1e-3,
    "center": 0.0,
    "width": 1.0,
    "direction": "left",
    "gamma": 1.0,
}

SOLVER_DEFAULTS = {
    "backend": None,          # None / "numba" / "numpy"
    "picard": True,           # run the fixed-point route next to the march
    "crossval": True,         # run the rectangular solver comparison
    "tol": 1e-12,             # fixed-point stopping tolerance
    "max_iter": 40,           # fixed-point step budget
    "contraction_seeds": 0,   # 0 disables the empirical contraction check
    "dissipation": 0.02,      # rect solver high-order dissipation strength
    "cfl": 0.45,              # rect solver Courant number
    "rect_halfwidth": None,   # None: grid radius + 2 (keeps pulses off ghosts)
    "rect_t_max": None,       # None: 0.4 * grid radius
    "rect_dx": None,          # None: same spacing as the null grid
    "refine": False,          # rerun key diagnostics at h/2 for orders
}

_TOP_KEYS = frozenset(
    ("schema_version", "name", "model", "profile", "perturbation",
     "grid", "solver", "seed")
)
_GRID_KEYS = frozenset(("radius", "h"))
_BACKENDS = (None, "numba", "numpy")


@dataclass(frozen=True)
class Scenario:
    """Normalized experiment description (all defaults filled)."""

    name: str
    model: object          # str or dict, as accepted by model_from_config
    profile: object        # str or dict, as accepted by profile_from_config
    perturbation: dict | None
    grid: dict             # {"radius": R, "h": h} for the square [-R, R]^2
    solver: dict = field(default_factory=lambda: dict(SOLVER_DEFAULTS))
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "perturbation",
                           None if self.perturbation is None
                           else dict(self.perturbation))
        object.__setattr__(self, "grid", dict(self.grid))
        object.__setattr__(self, "solver", dict(self.solver))

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return scenario_to_dict(self) == scenario_to_dict(other)


def _merge_defaults(section: str, given: dict, defaults: dict) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ScenarioError(
            f"unknown {section} key(s): {', '.join(sorted(unknown))}")
    out = dict(defaults)
    out.update(given)
    return out


def scenario_from_dict(raw: dict) -> Scenario:
    """Parse and normalize a scenario description.

    Raises ScenarioError on unknown keys, missing required keys or values
    of the wrong shape; range checks live in validate_scenario so that the
    CLI can report every problem at once instead of the first.
    """
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown key(s): {', '.join(sorted(unknown))}")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    missing = [k for k in ("name", "model", "profile", "grid") if k not in raw]
    if missing:
        raise ScenarioError(f"missing required key(s): {', '.join(missing)}")

    name = raw["name"]
    if not isinstance(name, str) or not name:
        raise ScenarioError("name must be a non-empty string")

    grid = raw["grid"]
    if not isinstance(grid, dict) or set(grid) != _GRID_KEYS:
        raise ScenarioError('grid must be {"radius": R, "h": h}')
    if not all(isinstance(grid[k], (int, float)) for k in _GRID_KEYS):
        raise ScenarioError("grid radius and h must be numbers")

    pert = raw.get("perturbation")
    if pert is not None:
        if not isinstance(pert, dict):
            raise ScenarioError("perturbation must be a mapping or null")
        pert = _merge_defaults("perturbation", pert, PERTURBATION_DEFAULTS)

    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ScenarioError("solver must be a mapping")
    solver = _merge_defaults("solver", solver, SOLVER_DEFAULTS)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed must be an integer")

    return Scenario(
        name=name,
        model=raw["model"],
        profile=raw["profile"],
        perturbation=pert,
        grid={"radius": float(grid["radius"]), "h": float(grid["h"])},
        solver=solver,
        seed=seed,
    )


def scenario_to_dict(s: Scenario) -> dict:
    """Normalized JSON-able form; inverse of scenario_from_dict."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "model": s.model,
        "profile": s.profile,
        "perturbation": None if s.perturbation is None else dict(s.perturbation),
        "grid": dict(s.grid),
        "solver": dict(s.solver),
        "seed": s.seed,
    }


def load_scenario(path) -> Scenario:
    """Read and parse a scenario JSON file."""
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(raw)


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario_to_dict(s), f, indent=2, sort_keys=True)
        f.write("\n")


def validate_scenario(s: Scenario) -> list:
    """Range/consistency checks; returns a list of problems (empty = valid).

    Collects every problem instead of stopping at the first so the CLI
    validate subcommand can print a complete diagnosis.
    """
    problems = []

    try:
        model_from_config(s.model)
    except DomainError as exc:
        problems.append(f"model: {exc}")

    if isinstance(s.profile, dict) and "table" in s.profile:
        table = s.profile["table"]
        if not (isinstance(table, str) and os.path.exists(table)):
            problems.append(f"profile: table file not found: {table!r}")
    if not any(p.startswith("profile:") for p in problems):
        try:
            prof = profile_from_config(s.profile)
        except (DomainError, OSError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"profile: {exc}")
        else:
            if not prof.gamma_bar > 0.0:
                problems.append(
                    f"profile: decay rate gamma_bar must be positive, "
                    f"got {prof.gamma_bar}")

    radius, h = s.grid["radius"], s.grid["h"]
    if not radius > 0.0:
        problems.append(f"grid: radius must be positive, got {radius}")
    if not h > 0.0:
        problems.append(f"grid: h must be positive, got {h}")
    if radius > 0.0 and h > 0.0:
        try:
            DNGrid(-radius, radius, h)
        except GridMismatch as exc:
            problems.append(f"grid: {exc}")

    p = s.perturbation
    if p is not None:
        if p["kind"] not in ("bump", "algebraic"):
            problems.append(f"perturbation: unknown kind {p['kind']!r}")
        if p["direction"] not in ("left", "right", "standing"):
            problems.append(
                f"perturbation: unknown direction {p['direction']!r}")
        if not p["eps"] >= 0.0:
            problems.append(f"perturbation: eps must be >= 0, got {p['eps']}")
        if not p["width"] > 0.0:
            problems.append(f"perturbation: width must be positive, got {p['width']}")
        if not p["gamma"] > 0.0:
            problems.append(f"perturbation: gamma must be positive, got {p['gamma']}")

    sv = s.solver
    if sv["backend"] not in _BACKENDS:
        problems.append(f"solver: backend must be one of {_BACKENDS}, "
                        f"got {sv['backend']!r}")
    if not sv["tol"] > 0.0:
        problems.append(f"solver: tol must be positive, got {sv['tol']}")
    if not (isinstance(sv["max_iter"], int) and sv["max_iter"] >= 1):
        problems.append(f"solver: max_iter must be a positive integer, "
                        f"got {sv['max_iter']!r}")
    ns = sv["contraction_seeds"]
    if not (isinstance(ns, int) and (ns == 0 or ns >= 2)):
        problems.append("solver: contraction_seeds must be 0 (off) or >= 2, "
                        f"got {ns!r}")
    if not sv["dissipation"] >= 0.0:
        problems.append(f"solver: dissipation must be >= 0, got {sv['dissipation']}")
    if not 0.0 < sv["cfl"] < 1.0:
        problems.append(f"solver: cfl must be in (0, 1), got {sv['cfl']}")
    for key in ("rect_halfwidth", "rect_t_max", "rect_dx"):
        v = sv[key]
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            problems.append(f"solver: {key} must be null or positive, got {v!r}")
    for key in ("picard", "crossval", "refine"):
        if not isinstance(sv[key], bool):
            problems.append(f"solver: {key} must be true or false, "
                            f"got {sv[key]!r}")

    return problems


def materialize(s: Scenario):
    """Build the runtime objects: (model, profile, grid, rect_data).

    Raises ScenarioError listing every validation problem if the scenario
    is invalid, so pipelines never start from half-checked input.
    """
    problems = validate_scenario(s)
    if problems:
        raise ScenarioError("; ".join(problems))
    model = model_from_config(s.model)
    profile = profile_from_config(s.profile)
    grid = DNGrid(-s.grid["radius"], s.grid["radius"], s.grid["h"])
    if s.perturbation is None:
        rect = background_data(profile)
    else:
        rect = perturbed_data(profile, **s.perturbation)
    return model, profile, grid, rect


def rect_extent(s: Scenario):
    """Rect-solver domain implied by the scenario: (halfwidth, t_max, dx).

    The default half-width exceeds the null-grid radius so the pulse stays
    causally insulated from the exact-background ghost cells over [0, t_max].
    """
    radius = s.grid["radius"]
    sv = s.solver
    half = sv["rect_halfwidth"] if sv["rect_halfwidth"] is not None \
        else radius + 2.0
    t_max = sv["rect_t_max"] if sv["rect_t_max"] is not None \
        else 0.4 * radius
    dx = sv["rect_dx"] if sv["rect_dx"] is not None else s.grid["h"]
    return float(half), float(t_max), float(dx)
