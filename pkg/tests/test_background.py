import numpy as np
import pytest

from nullwave.background import (
    WaveProfile,
    adaptive_simpson,
    algebraic_profile,
    background_frame,
    bump_profile,
    envelope_integral,
    hyperbolicity_check,
    phase_function,
    phase_relabel,
    phase_relabel_velocity,
    profile_from_config,
    table_profile,
    zero_profile,
)
from nullwave.errors import DomainError, QuadratureFailure
from nullwave.nonlinearity import membrane_model, polynomial_model
from nullwave.oracles import (
    background_frame_exact,
    envelope_integral_exact,
    gaussian_phase_values,
)

GAUSS_PHASE = {
    "from_zero": -0.6266570686577501,
    "full_line": -1.2533141373155001,
}


def gaussian_slope_profile():
    """Hand-built profile with zeta'(x) = exp(-x^2) for the phase oracle."""
    return WaveProfile(
        name="gauss-slope",
        zeta=lambda x: np.zeros_like(np.asarray(x, dtype=float)),  # unused here
        dzeta=lambda x: np.exp(-np.asarray(x, dtype=float) ** 2),
        d2zeta=lambda x: -2.0 * np.asarray(x, dtype=float) * np.exp(-np.asarray(x, dtype=float) ** 2),
        M_zeta=1.0,
        gamma_bar=1.0,
    )


def test_adaptive_simpson_polynomial():
    val = adaptive_simpson(lambda x: x * x, 0.0, 1.0, 1e-12)
    assert val == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_adaptive_simpson_needs_refinement():
    val = adaptive_simpson(lambda x: np.sin(10.0 * x), 0.0, 2.0, 1e-11)
    assert val == pytest.approx((1.0 - np.cos(20.0)) / 10.0, abs=1e-9)


def test_adaptive_simpson_eval_budget():
    with pytest.raises(QuadratureFailure):
        adaptive_simpson(lambda x: np.sin(1000.0 * x) / (1e-3 + x * x),
                         0.0, 3.0, 1e-14, max_evals=60)


def test_envelope_integral_closed_form():
    for eps, gamma in [(0.3, 1.2), (1e-3, 0.5), (2.0, 2.0)]:
        assert envelope_integral(eps, gamma) == pytest.approx(
            envelope_integral_exact(eps, gamma), rel=1e-8
        )


def test_gaussian_phase_frozen_values():
    vals = gaussian_phase_values()
    assert vals["from_zero"] == pytest.approx(GAUSS_PHASE["from_zero"], rel=1e-15)
    assert vals["full_line"] == pytest.approx(GAUSS_PHASE["full_line"], rel=1e-15)


def test_phase_function_matches_gaussian_oracle():
    prof = gaussian_slope_profile()
    model = membrane_model()  # H(0) = 1
    z_far = phase_function(prof, model, 40.0)
    assert z_far == pytest.approx(GAUSS_PHASE["from_zero"], abs=1e-9)
    total = z_far - phase_function(prof, model, -40.0)
    assert total == pytest.approx(GAUSS_PHASE["full_line"], abs=1e-9)


def test_phase_function_zero_for_linear_profile():
    prof = zero_profile()
    model = membrane_model()
    assert phase_function(prof, model, 17.0) == 0.0
    ub = np.linspace(-5, 5, 11)
    assert np.all(phase_function(gaussian_slope_profile(),
                                 polynomial_model(0.0), ub) == 0.0)


@pytest.mark.parametrize("make,where", [
    (lambda: bump_profile(0.4, center=1.0, width=3.0), np.linspace(-2.5, 4.5, 41)),
    (lambda: algebraic_profile(0.25, gamma_bar=0.8), np.linspace(-6.0, 6.0, 41)),
])
def test_profile_derivatives_consistent(make, where):
    prof = make()
    h = 1e-6
    fd1 = (prof.zeta(where + h) - prof.zeta(where - h)) / (2 * h)
    fd2 = (prof.dzeta(where + h) - prof.dzeta(where - h)) / (2 * h)
    assert np.max(np.abs(fd1 - prof.dzeta(where))) < 5e-9
    assert np.max(np.abs(fd2 - prof.d2zeta(where))) < 5e-8


def test_bump_compact_support():
    prof = bump_profile(0.7, center=0.5, width=2.0)
    outside = np.array([-1.6, 2.6, 10.0, -30.0])
    assert np.all(prof.zeta(outside) == 0.0)
    assert np.all(prof.dzeta(outside) == 0.0)
    assert np.all(prof.d2zeta(outside) == 0.0)
    assert prof.zeta(0.5) == pytest.approx(0.7)
    assert prof.verify()


def test_bump_rejects_bad_width():
    with pytest.raises(DomainError):
        bump_profile(0.1, width=0.0)


def test_algebraic_profile_envelope():
    prof = algebraic_profile(0.25, gamma_bar=0.8)
    assert prof.verify()
    # decays like (1+x^2)^(-0.9)
    assert abs(prof.zeta(100.0)) < 0.25 * (1e4) ** -0.89
    assert prof.envelope_fit() >= 0.25  # the x=0 value already forces this


def test_table_profile_interpolates():
    src = algebraic_profile(0.3, gamma_bar=1.0)
    xs = np.linspace(-8.0, 8.0, 321)
    prof = table_profile(xs, src.zeta(xs), src.dzeta(xs), src.d2zeta(xs))
    mid = xs[:-1] + 0.5 * np.diff(xs)
    assert np.max(np.abs(prof.zeta(mid) - src.zeta(mid))) < 1e-6
    assert np.max(np.abs(prof.dzeta(mid) - src.dzeta(mid))) < 1e-5
    # d2zeta is linearly interpolated: error ~ h^2/8 |zeta''''| ~ 2e-3 here
    assert np.max(np.abs(prof.d2zeta(mid) - src.d2zeta(mid))) < 5e-3
    assert prof.zeta(9.5) == 0.0 and prof.dzeta(-9.5) == 0.0


def test_profile_from_config(tmp_path):
    assert profile_from_config("zero").name == "zero"
    p = profile_from_config({"bump": {"A": 0.2, "width": 4.0}})
    assert p.zeta(0.0) == pytest.approx(0.2)
    p = profile_from_config({"algebraic": {"A": 0.1, "gamma": 0.7}})
    assert p.gamma_bar == 0.7
    src = algebraic_profile(0.3)
    xs = np.linspace(-5, 5, 201)
    path = tmp_path / "profile.csv"
    rows = np.column_stack([xs, src.zeta(xs), src.dzeta(xs), src.d2zeta(xs)])
    header = "x,zeta,dzeta,d2zeta"
    np.savetxt(path, rows, delimiter=",", header=header, comments="")
    p = profile_from_config({"table": str(path)})
    assert p.zeta(0.33) == pytest.approx(src.zeta(0.33), abs=1e-6)
    with pytest.raises(DomainError):
        profile_from_config("sine")


def test_hyperbolicity_check_pass_and_fail():
    # membrane has H(0) = 1 > 0: margin 1 regardless of the profile
    ok = hyperbolicity_check(bump_profile(0.5, width=2.0), membrane_model())
    assert ok["H0"] == pytest.approx(1.0)
    assert ok["margin"] == 1.0 and ok["ok"]

    # frozen failing example: H(0) = -0.4 and sup zeta'^2 = 4 -> margin -0.6
    steep = WaveProfile(
        name="steep",
        zeta=lambda x: np.sqrt(np.pi) * 0.5 * (1 + np.asarray(x, dtype=float) * 0),
        dzeta=lambda x: 2.0 * np.exp(-np.asarray(x, dtype=float) ** 2),
        d2zeta=lambda x: -4.0 * np.asarray(x, dtype=float) * np.exp(-np.asarray(x, dtype=float) ** 2),
        M_zeta=2.0,
        gamma_bar=1.0,
    )
    bad = hyperbolicity_check(steep, polynomial_model(0.2), X_max=30.0)
    assert bad["H0"] == pytest.approx(-0.4, rel=1e-12)
    assert bad["sup_dzeta_sq"] == pytest.approx(4.0, rel=1e-6)
    assert bad["margin"] == pytest.approx(-0.6, rel=1e-6)
    assert not bad["ok"]


def test_background_frame_matches_exact():
    prof = gaussian_slope_profile()
    model = membrane_model()
    ub = 0.83255461115769775  # point where zeta'(ub) = 0.5 for exp(-x^2)
    zp = float(prof.dzeta(ub))
    ref = background_frame_exact(1.0, zp)
    fr = background_frame(prof, model, ub)
    assert fr.L0 == pytest.approx(ref["L"][0], rel=1e-12)
    assert fr.L1 == pytest.approx(ref["L"][1], rel=1e-12)
    assert (fr.Lb0, fr.Lb1) == ref["Lb"]
    assert fr.Omega == ref["Omega"]
    # frozen spot value at zp = 0.5 exactly
    ref_half = background_frame_exact(1.0, 0.5)
    assert ref_half["L"] == (-1.25, 0.75)


def test_background_frame_product_identity():
    # Omega^2 (Lb^0 L^1 - L^0 Lb^1) = -1/2 pointwise, no integration involved
    prof = gaussian_slope_profile()
    ub = np.linspace(-3, 3, 13)
    fr = background_frame(prof, membrane_model(), ub)
    det = fr.Omega**2 * (fr.Lb0 * fr.L1 - fr.L0 * fr.Lb1)
    assert np.max(np.abs(det + 0.5)) < 1e-15


def test_phase_relabel_velocity_formula():
    prof = gaussian_slope_profile()
    model = membrane_model()
    u = np.linspace(-4, 4, 17)
    vp = phase_relabel_velocity(prof, model, u)
    assert np.max(np.abs(vp - (1.0 + np.exp(-u**2) ** 2))) < 1e-14
    # V' is the derivative of V (tolerance limited by the quadrature tol
    # of each V evaluation divided by the step)
    h = 1e-4
    fd = (phase_relabel(prof, model, u + h) - phase_relabel(prof, model, u - h)) / (2 * h)
    assert np.max(np.abs(fd - vp)) < 1e-5


def test_phase_relabel_positive_under_hyperbolicity():
    prof = bump_profile(0.4, width=3.0)
    vp = phase_relabel_velocity(prof, membrane_model(), np.linspace(-5, 5, 101))
    assert np.all(vp > 0)
