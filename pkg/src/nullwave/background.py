"""Simple-wave backgrounds, decay envelopes, and background geometry.

A background is a right-moving simple wave phi(t,x) = zeta(t-x) whose
profile derivative decays algebraically:

    |zeta(s)|, |zeta'(s)|, |zeta''(s)| <= M / (1+|s|)^(1+gamma).

On such a background the perturbation-adapted null coordinate u differs
from t+x by the phase function

    Z(ubar) = - integral_0^ubar H(0) zeta'(s)^2 ds,      ubar = t - x,

and the normalized background null frame is

    L  = (-1 - H(0) zeta'(ubar)^2,  1 - H(0) zeta'(ubar)^2)
    Lb = (-1, -1),        Omega = -1/2.

Hyperbolicity of the full operator on the background requires
1 + H(0) zeta'(s)^2 > 0 for every s, which can only fail when H(0) < 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError, QuadratureFailure
from .nonlinearity import Nonlinearity, eval_coeffs

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_evals: int = 500000,
) -> float:
    """Adaptive Simpson quadrature of f over [a, b].

    Classic interval-halving with the |S_fine - S_coarse|/15 error gauge.
    Raises QuadratureFailure if the evaluation budget runs out before the
    tolerance is met.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0

    def simpson(x0, f0, x2, f2):
        x1 = 0.5 * (x0 + x2)
        f1 = f(x1)
        return x1, f1, (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    fa, fb = f(a), f(b)
    m, fm, whole = simpson(a, fa, b, fb)
    # stack entries: (x0, f0, x2, f2, mid, fmid, S, tol)
    stack = [(a, fa, b, fb, m, fm, whole, tol)]
    total = 0.0
    evals = 3
    while stack:
        x0, f0, x2, f2, x1, f1, S, t = stack.pop()
        lm, flm, Sl = simpson(x0, f0, x1, f1)
        rm, frm, Sr = simpson(x1, f1, x2, f2)
        evals += 2
        if evals > max_evals:
            raise QuadratureFailure(
                f"adaptive Simpson exceeded {max_evals} evaluations on "
                f"[{a:.6g}, {b:.6g}]"
            )
        err = Sl + Sr - S
        if abs(err) <= 15.0 * t or (x2 - x0) < 1e-14 * (1.0 + abs(x0)):
            total += Sl + Sr + err / 15.0
        else:
            stack.append((x0, f0, x1, f1, lm, flm, Sl, 0.5 * t))
            stack.append((x1, f1, x2, f2, rm, frm, Sr, 0.5 * t))
    return sign * total


def _cumulative_quadrature(f, points, tol):
    """Integral of f from 0 to each of the given points (1d array)."""
    pts = np.asarray(points, dtype=float).ravel()
    nodes = np.unique(np.concatenate([pts, [0.0]]))
    vals = np.zeros(nodes.size)
    i0 = int(np.searchsorted(nodes, 0.0))
    seg_tol = max(tol / max(nodes.size, 1), 1e-15)
    acc = 0.0
    for k in range(i0 + 1, nodes.size):
        acc += adaptive_simpson(f, nodes[k - 1], nodes[k], seg_tol)
        vals[k] = acc
    acc = 0.0
    for k in range(i0 - 1, -1, -1):
        acc -= adaptive_simpson(f, nodes[k], nodes[k + 1], seg_tol)
        vals[k] = acc
    lookup = {x: v for x, v in zip(nodes, vals)}
    return np.array([lookup[x] for x in pts])


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """Algebraic decay envelope eps / (1+|x|)^(1+gamma)."""

    eps: float
    gamma: float

    def eval(self, x: ArrayLike) -> ArrayLike:
        return self.eps / (1.0 + np.abs(x)) ** (1.0 + self.gamma)

    def weight(self, x: ArrayLike) -> ArrayLike:
        """Inverse envelope at unit eps: (1+|x|)^(1+gamma)."""
        return (1.0 + np.abs(x)) ** (1.0 + self.gamma)


def envelope_integral(eps: float, gamma: float, tol: float = 1e-10) -> float:
    """Numerical integral of the envelope over the whole line.

    The window [-X, X] is integrated adaptively and the two tails are added
    in closed form (eps (1+X)^(-gamma) / gamma each).  The result is always
    bounded by 2 eps (1 + 1/gamma).
    """
    if eps < 0 or gamma <= 0:
        raise DomainError("envelope needs eps >= 0 and gamma > 0")
    if eps == 0.0:
        return 0.0
    X = 50.0
    env = Envelope(eps, gamma)
    window = adaptive_simpson(lambda x: env.eval(x), -X, X, tol)
    tail = eps / (gamma * (1.0 + X) ** gamma)
    return window + 2.0 * tail


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveProfile:
    """Profile zeta of a right-moving simple wave, with two derivatives.

    The callables must be numpy-vectorized.  M_zeta and gamma_bar describe
    the decay envelope the profile is claimed to satisfy; envelope_fit
    measures the smallest constant that actually works on a sample.
    """

    name: str
    zeta: Callable[[ArrayLike], ArrayLike]
    dzeta: Callable[[ArrayLike], ArrayLike]
    d2zeta: Callable[[ArrayLike], ArrayLike]
    M_zeta: float
    gamma_bar: float

    def envelope_fit(self, X_max: float = 100.0, n: int = 20001) -> float:
        """Measured minimal M for the three envelope bounds on [-X_max, X_max]."""
        x = np.linspace(-X_max, X_max, n)
        w = (1.0 + np.abs(x)) ** (1.0 + self.gamma_bar)
        fits = [
            float(np.max(np.abs(self.zeta(x)) * w)),
            float(np.max(np.abs(self.dzeta(x)) * w)),
            float(np.max(np.abs(self.d2zeta(x)) * w)),
        ]
        return max(fits)

    def verify(self, X_max: float = 100.0) -> bool:
        return self.envelope_fit(X_max) <= self.M_zeta * (1.0 + 1e-9)


def zero_profile(gamma_bar: float = 1.0) -> WaveProfile:
    """The trivial background phi == 0."""
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return WaveProfile("zero", z, z, z, M_zeta=0.0, gamma_bar=gamma_bar)


def bump_profile(
    amplitude: float,
    center: float = 0.0,
    width: float = 1.0,
    gamma_bar: float = 1.0,
) -> WaveProfile:
    """Compactly supported C^3 bump zeta = A (1 - y^2)^4 on |y| < 1."""
    A, c, w = float(amplitude), float(center), float(width)
    if w <= 0:
        raise DomainError("bump width must be positive")

    def zeta(x):
        y = (np.asarray(x, dtype=float) - c) / w
        inside = np.abs(y) < 1.0
        val = np.where(inside, A * (1.0 - y**2) ** 4, 0.0)
        return val if np.ndim(x) else float(val)

    def dzeta(x):
        y = (np.asarray(x, dtype=float) - c) / w
        inside = np.abs(y) < 1.0
        val = np.where(inside, -8.0 * A * y * (1.0 - y**2) ** 3 / w, 0.0)
        return val if np.ndim(x) else float(val)

    def d2zeta(x):
        y = (np.asarray(x, dtype=float) - c) / w
        inside = np.abs(y) < 1.0
        val = np.where(
            inside, A * (1.0 - y**2) ** 2 * (56.0 * y**2 - 8.0) / w**2, 0.0
        )
        return val if np.ndim(x) else float(val)

    prof = WaveProfile("bump", zeta, dzeta, d2zeta, M_zeta=1.0, gamma_bar=gamma_bar)
    fit = prof.envelope_fit(X_max=abs(c) + w + 10.0)
    return WaveProfile("bump", zeta, dzeta, d2zeta, M_zeta=fit, gamma_bar=gamma_bar)


def algebraic_profile(amplitude: float, gamma_bar: float = 1.0) -> WaveProfile:
    """Globally supported profile zeta = A (1+x^2)^(-(1+gamma)/2)."""
    A, g = float(amplitude), float(gamma_bar)
    if g <= 0:
        raise DomainError("gamma_bar must be positive")
    p = -(1.0 + g) / 2.0

    def zeta(x):
        x = np.asarray(x, dtype=float)
        return A * (1.0 + x**2) ** p

    def dzeta(x):
        x = np.asarray(x, dtype=float)
        return -A * (1.0 + g) * x * (1.0 + x**2) ** (p - 1.0)

    def d2zeta(x):
        x = np.asarray(x, dtype=float)
        return -A * (1.0 + g) * (1.0 - (2.0 + g) * x**2) * (1.0 + x**2) ** (p - 2.0)

    prof = WaveProfile("algebraic", zeta, dzeta, d2zeta, M_zeta=1.0, gamma_bar=g)
    fit = prof.envelope_fit()
    return WaveProfile("algebraic", zeta, dzeta, d2zeta, M_zeta=fit, gamma_bar=g)


def table_profile(x_nodes, zeta_vals, dzeta_vals, d2zeta_vals, gamma_bar: float = 1.0) -> WaveProfile:
    """Profile interpolated from tabulated (x, zeta, zeta', zeta'') samples.

    zeta and zeta' are cubic-Hermite interpolated (using the tabulated
    derivative columns), zeta'' linearly.  Outside the table the profile is
    extended by zero, so tables should decay to ~0 at both ends.
    """
    xs = np.asarray(x_nodes, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise DomainError("table x nodes must be strictly increasing, >= 2 points")
    zv = np.asarray(zeta_vals, dtype=float)
    dv = np.asarray(dzeta_vals, dtype=float)
    d2v = np.asarray(d2zeta_vals, dtype=float)
    if not (zv.shape == dv.shape == d2v.shape == xs.shape):
        raise DomainError("table columns must share the x shape")

    def hermite(vals, ders):
        def interp(x):
            x = np.asarray(x, dtype=float)
            idx = np.clip(np.searchsorted(xs, x) - 1, 0, xs.size - 2)
            h = xs[idx + 1] - xs[idx]
            t = (x - xs[idx]) / h
            h00 = (1 + 2 * t) * (1 - t) ** 2
            h10 = t * (1 - t) ** 2
            h01 = t**2 * (3 - 2 * t)
            h11 = t**2 * (t - 1)
            out = (
                h00 * vals[idx] + h10 * h * ders[idx]
                + h01 * vals[idx + 1] + h11 * h * ders[idx + 1]
            )
            out = np.where((x < xs[0]) | (x > xs[-1]), 0.0, out)
            return out if np.ndim(x) else float(out)
        return interp

    def linear(vals):
        def interp(x):
            x = np.asarray(x, dtype=float)
            out = np.interp(x, xs, vals, left=0.0, right=0.0)
            return out if np.ndim(x) else float(out)
        return interp

    prof = WaveProfile(
        "table", hermite(zv, dv), hermite(dv, d2v), linear(d2v),
        M_zeta=1.0, gamma_bar=gamma_bar,
    )
    fit = prof.envelope_fit(X_max=max(abs(xs[0]), abs(xs[-1])) + 1.0)
    return WaveProfile(
        "table", prof.zeta, prof.dzeta, prof.d2zeta, M_zeta=fit, gamma_bar=gamma_bar
    )


def profile_from_config(cfg) -> WaveProfile:
    """Build a profile from its JSON-able description."""
    if isinstance(cfg, str):
        if cfg == "zero":
            return zero_profile()
        raise DomainError(f"unknown profile name {cfg!r}")
    if isinstance(cfg, dict):
        if "bump" in cfg:
            p = cfg["bump"]
            return bump_profile(
                p["A"], p.get("center", 0.0), p.get("width", 1.0),
                p.get("gamma", 1.0),
            )
        if "algebraic" in cfg:
            p = cfg["algebraic"]
            return algebraic_profile(p["A"], p.get("gamma", 1.0))
        if "table" in cfg:
            cols = np.genfromtxt(cfg["table"], delimiter=",", names=True)
            return table_profile(
                cols["x"], cols["zeta"], cols["dzeta"], cols["d2zeta"],
                gamma_bar=cfg.get("gamma", 1.0),
            )
    raise DomainError(f"unrecognized profile config {cfg!r}")


# ---------------------------------------------------------------------------
# background geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackgroundFrame:
    """Background null frame, conformal factor and phase function at ubar."""

    L0: ArrayLike
    L1: ArrayLike
    Lb0: ArrayLike
    Lb1: ArrayLike
    Omega: ArrayLike
    Z: ArrayLike


def hyperbolicity_check(
    profile: WaveProfile,
    model: Nonlinearity,
    X_max: float = 100.0,
    h_s: float = 0.01,
) -> dict:
    """Global hyperbolicity margin 1 + inf_x H(0) zeta'(x)^2 of the background.

    For H(0) >= 0 the infimum is attained in the decaying tail and the
    margin is 1.  For H(0) < 0 the margin is 1 + H(0) sup zeta'^2, with the
    sup taken over a sample of spacing h_s on [-X_max, X_max] plus the
    envelope bound for the tail.
    """
    H0 = eval_coeffs(model, 0.0).H
    x = np.arange(-X_max, X_max + 0.5 * h_s, h_s)
    zp2 = np.asarray(profile.dzeta(x)) ** 2
    tail = (profile.M_zeta / (1.0 + X_max) ** (1.0 + profile.gamma_bar)) ** 2
    sup_zp2 = max(float(np.max(zp2)), tail)
    if H0 >= 0.0:
        margin = 1.0
    else:
        margin = 1.0 + H0 * sup_zp2
    return {
        "H0": float(H0),
        "sup_dzeta_sq": sup_zp2,
        "margin": float(margin),
        "ok": bool(margin > 0.0),
    }


def phase_function(
    profile: WaveProfile,
    model: Nonlinearity,
    ubar: ArrayLike,
    tol: float = 1e-10,
) -> ArrayLike:
    """Z(ubar) = -H(0) * integral_0^ubar zeta'(s)^2 ds by adaptive Simpson."""
    H0 = eval_coeffs(model, 0.0).H
    if H0 == 0.0:
        return np.zeros_like(np.asarray(ubar, dtype=float)) if np.ndim(ubar) else 0.0
    f = lambda s: float(profile.dzeta(s)) ** 2
    vals = -H0 * _cumulative_quadrature(f, np.atleast_1d(ubar), tol)
    if np.ndim(ubar) == 0:
        return float(vals[0])
    return vals.reshape(np.shape(ubar))


def background_frame(profile: WaveProfile, model: Nonlinearity, ubar: ArrayLike) -> BackgroundFrame:
    """Normalized background frame, Omega = -1/2 and Z at the given ubar."""
    H0 = eval_coeffs(model, 0.0).H
    zp2 = np.asarray(profile.dzeta(ubar), dtype=float) ** 2
    L0 = -1.0 - H0 * zp2
    L1 = 1.0 - H0 * zp2
    ones = np.ones_like(L0)
    Z = phase_function(profile, model, ubar)
    if np.ndim(ubar) == 0:
        return BackgroundFrame(float(L0), float(L1), -1.0, -1.0, -0.5, float(Z))
    return BackgroundFrame(L0, L1, -ones, -ones, -0.5 * ones, Z)


def phase_relabel_velocity(profile: WaveProfile, model: Nonlinearity, u: ArrayLike) -> ArrayLike:
    """V'(u) = 1 + H(0) zeta'(-u)^2, the derivative of V(u) = u + Z(-u).

    V relates the t=0-anchored null coordinate (the grid coordinate, in
    which the data diagonal is exactly {t=0}) to the background-matched
    one (in which Omega -> -1/2 far out).  V' > 0 whenever the background
    is hyperbolic.
    """
    H0 = eval_coeffs(model, 0.0).H
    vp = 1.0 + H0 * np.asarray(profile.dzeta(-np.asarray(u, dtype=float))) ** 2
    if np.ndim(u) == 0:
        return float(vp)
    return vp


def phase_relabel(profile: WaveProfile, model: Nonlinearity, u: ArrayLike, tol: float = 1e-10) -> ArrayLike:
    """V(u) = u + Z(-u), the background-matched relabeling of the grid u."""
    u_arr = np.asarray(u, dtype=float)
    Z = phase_function(profile, model, -u_arr, tol)
    out = u_arr + Z
    if np.ndim(u) == 0:
        return float(out)
    return out
