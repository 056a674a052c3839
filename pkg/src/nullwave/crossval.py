"""Rectangular-coordinate reference solver and comparison diagnostics.

Everything the double-null pipeline produces can be checked against an
independently discretized evolution in the original (t, x) coordinates.
The second-order equation is equivalent to the first-order system

  d_t phi  = Phi0
  d_t Phi1 = d_x Phi0
  d_t Phi0 = -(2 g01 d_x Phi0 + g11 d_x Phi1) / g00

with g = inverse acoustic metric at (Phi0, Phi1).  rect_solve integrates
it with Heun's method in time and fourth-order centered differences plus
sixth-order Kreiss-Oliger dissipation in space -- a different
discretization family from the characteristic march, so agreement between
the two routes is evidence rather than tautology.  Boundary values come
from the exact travelling background phi(t, x) = zeta(t - x), which stays
exact as long as the compactly supported perturbation has not reached the
three ghost cells.

pullback_compare closes the loop: it inverts the reconstructed coordinate
map (t, x)(u, ub) by Newton refinement of a bilinear interpolant, pulls
the double-null solution back onto the rectangular nodes, and reports sup
and L1 differences.  flux_residual applies the divergence-form equation
d_t(-e^f Phi0) + d_x(e^f Phi1) = 0 to any rectangular state by centered
differences.  phase_shift extracts the asymptotic offset between the
reconstructed u-level sets and the background relation u = V^{-1}(t + x +
Z(t - x)) across the wave zone.

Spatial work per step is vectorized over the grid; time stepping is
inherently sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .background import WaveProfile, phase_function, phase_relabel
from .errors import (
    CFLViolation,
    HyperbolicityLoss,
    InsufficientDomain,
    InversionFailure,
    OutOfImage,
)
from .geometry import CoordMap, full_field_jet
from .nonlinearity import Nonlinearity, acoustic_metric
from .state import DNState

__all__ = [
    "RectGrid",
    "RectState",
    "ComparisonReport",
    "rect_solve",
    "background_rect_state",
    "flux_residual",
    "pullback_compare",
    "phase_shift",
]

N_GHOST = 3  # fourth-order stencil needs 2, the dissipation operator 3


@dataclass(frozen=True)
class RectGrid:
    """Uniform (t, x) grid request: spatial extent, spacing, final time."""

    x_min: float
    x_max: float
    dx: float
    t_max: float
    cfl: float = 0.45

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")
        if not self.dx > 0.0:
            raise ValueError("dx must be positive")
        if self.t_max < 0.0:
            raise ValueError("t_max must be nonnegative")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must sit in (0, 1)")
        n = (self.x_max - self.x_min) / self.dx
        if abs(n - round(n)) > 1e-9 * (1.0 + n):
            raise ValueError("dx must evenly divide the x extent")

    @property
    def n_x(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx)) + 1

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)


@dataclass(frozen=True)
class RectState:
    """Solution history on the physical nodes: row k is time t[k]."""

    t: np.ndarray
    x: np.ndarray
    phi: np.ndarray
    Phi0: np.ndarray
    Phi1: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def _dx4(F: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order first derivative of a ghosted row, interior values."""
    return (8.0 * (F[4:-2] - F[2:-4]) - (F[5:-1] - F[1:-5])) / (12.0 * dx)


def _ko6(F: np.ndarray, dx: float, nu: float) -> np.ndarray:
    """Sixth-order Kreiss-Oliger dissipation on the interior nodes."""
    stencil = (
        F[:-6] - 6.0 * F[1:-5] + 15.0 * F[2:-4] - 20.0 * F[3:-3]
        + 15.0 * F[4:-2] - 6.0 * F[5:-1] + F[6:]
    )
    return (nu / (64.0 * dx)) * stencil


def _background_rows(profile: WaveProfile, t: float, x: np.ndarray):
    arg = t - x
    zp = np.asarray(profile.dzeta(arg), dtype=float)
    return np.asarray(profile.zeta(arg), dtype=float), zp, -zp


def _char_speed(model: Nonlinearity, Phi0, Phi1):
    met = acoustic_metric(model, Phi0, Phi1)
    if np.any(met.inv00 >= 0.0):
        raise HyperbolicityLoss("g00 >= 0 on the slice: no longer spacelike")
    root = np.sqrt(met.kappa)
    lam_p = (-met.inv01 + root) / met.inv00
    lam_m = (-met.inv01 - root) / met.inv00
    return met, float(np.max(np.maximum(np.abs(lam_p), np.abs(lam_m))))


def rect_solve(
    data,
    model: Nonlinearity,
    grid: RectGrid,
    profile: WaveProfile,
    dissipation: float = 0.02,
    speed_margin: float = 0.1,
) -> RectState:
    """Evolve the first-order reduction on a rectangular grid.

    data supplies the t=0 fields; profile supplies the exact travelling
    background used for the ghost nodes, so the x extent must keep the
    perturbation causally away from the boundary for the whole run.
    dissipation is the Kreiss-Oliger coefficient (0 disables it; keep it
    off when comparing against closed-form linear solutions).

    The step is chosen as dt = cfl dx / (c0 (1 + speed_margin)) from the
    initial characteristic speed c0, and the bound dt <= cfl dx / c_max
    is re-checked against the evolving state every step.  Raises
    HyperbolicityLoss if g00 >= 0 anywhere, CFLViolation if the speed
    outgrows the reserved margin.
    """
    dx = grid.dx
    x_phys = grid.x
    x_full = grid.x_min + dx * np.arange(-N_GHOST, grid.n_x + N_GHOST)

    phi0, phi0p, _, phi1, _ = data.sample(x_full)
    phi = np.asarray(phi0, dtype=float).copy()
    P0 = np.asarray(phi1, dtype=float).copy()
    P1 = np.asarray(phi0p, dtype=float).copy()

    _, c0 = _char_speed(model, P0[N_GHOST:-N_GHOST], P1[N_GHOST:-N_GHOST])
    if grid.t_max == 0.0:
        t_axis = np.zeros(1)
        return RectState(
            t_axis, x_phys,
            phi[None, N_GHOST:-N_GHOST].copy(),
            P0[None, N_GHOST:-N_GHOST].copy(),
            P1[None, N_GHOST:-N_GHOST].copy(),
        )
    n_t = max(1, math.ceil(grid.t_max / (grid.cfl * dx / (c0 * (1.0 + speed_margin)))))
    dt = grid.t_max / n_t

    inner = slice(N_GHOST, -N_GHOST)
    hist = tuple(np.empty((n_t + 1, grid.n_x)) for _ in range(3))
    for rows, full in zip(hist, (phi, P0, P1)):
        rows[0] = full[inner]

    def fill_ghosts(t, arrs):
        gphi, gP0, gP1 = _background_rows(profile, t, x_full)
        for src, dst in zip((gphi, gP0, gP1), arrs):
            dst[:N_GHOST] = src[:N_GHOST]
            dst[-N_GHOST:] = src[-N_GHOST:]

    def rhs(t, arrs):
        phi_f, P0_f, P1_f = arrs
        met, c_max = _char_speed(model, P0_f[inner], P1_f[inner])
        if dt * c_max > grid.cfl * dx * (1.0 + 1e-9):
            raise CFLViolation(
                f"characteristic speed {c_max:.4g} at t={t:.4g} exceeds the "
                f"step budget dt={dt:.4g}, dx={dx:.4g}, cfl={grid.cfl}"
            )
        dxP0 = _dx4(P0_f, dx)
        dxP1 = _dx4(P1_f, dx)
        dP0 = -(2.0 * met.inv01 * dxP0 + met.inv11 * dxP1) / met.inv00
        dP1 = dxP0.copy()
        if dissipation:
            dP0 += _ko6(P0_f, dx, dissipation)
            dP1 += _ko6(P1_f, dx, dissipation)
        return P0_f[inner].copy(), dP0, dP1

    cur = [phi, P0, P1]
    pred = [np.empty_like(phi) for _ in range(3)]
    for k in range(n_t):
        t0 = k * dt
        fill_ghosts(t0, cur)
        k1 = rhs(t0, cur)
        for c, p, r in zip(cur, pred, k1):
            p[inner] = c[inner] + dt * r
        fill_ghosts(t0 + dt, pred)
        k2 = rhs(t0 + dt, pred)
        for c, r1, r2 in zip(cur, k1, k2):
            c[inner] += 0.5 * dt * (r1 + r2)
        for rows, c in zip(hist, cur):
            rows[k + 1] = c[inner]

    t_axis = dt * np.arange(n_t + 1)
    return RectState(t_axis, x_phys, *hist)


def background_rect_state(profile: WaveProfile, grid: RectGrid, n_t: int = 32) -> RectState:
    """The exact travelling background sampled on a rectangular history."""
    if n_t < 2:
        raise ValueError("need at least two time levels")
    if grid.t_max <= 0.0:
        raise ValueError("need a positive time extent to build a history")
    t_axis = np.linspace(0.0, grid.t_max, n_t + 1)
    x = grid.x
    rows = [_background_rows(profile, t, x) for t in t_axis]
    phi = np.stack([r[0] for r in rows])
    P0 = np.stack([r[1] for r in rows])
    P1 = np.stack([r[2] for r in rows])
    return RectState(t_axis, x, phi, P0, P1)


def flux_residual(rect: RectState, model: Nonlinearity) -> float:
    """Sup of the divergence-form residual d_t(-e^f Phi0) + d_x(e^f Phi1).

    Centered differences in both directions, so O(dt^2 + dx^2) on smooth
    states and exactly zero on the zero state.
    """
    if rect.phi.shape[0] < 3 or rect.phi.shape[1] < 3:
        raise InsufficientDomain("need at least a 3x3 history for centered differences")
    sig = -rect.Phi0**2 + rect.Phi1**2
    w = np.exp(np.asarray(model.f(sig), dtype=float))
    At = -w * rect.Phi0
    Ax = w * rect.Phi1
    dt_A = (At[2:, 1:-1] - At[:-2, 1:-1]) / (2.0 * rect.dt)
    dx_A = (Ax[1:-1, 2:] - Ax[1:-1, :-2]) / (2.0 * rect.dx)
    return float(np.max(np.abs(dt_A + dx_A)))


@dataclass(frozen=True)
class ComparisonReport:
    """Pullback-vs-rectangular differences plus assembled diagnostics.

    sup_diff / l1_diff are per-field dictionaries over phi, Phi0, Phi1 on
    the compared nodes; interp_error estimates the bilinear sampling
    floor; orders, phase_shift and degeneracy are filled by refinement
    studies and the reporting layer.  as_dict() emits exactly the
    exported JSON shape.
    """

    sup_diff: dict
    l1_diff: dict
    interp_error: float
    n_compared: int
    n_skipped: int
    orders: list | None = None
    phase_shift: float | None = None
    degeneracy: dict | None = field(default=None)

    def as_dict(self) -> dict:
        return {
            "sup_diff": dict(self.sup_diff),
            "l1_diff": dict(self.l1_diff),
            "orders": list(self.orders) if self.orders is not None else None,
            "phase_shift": self.phase_shift,
            "degeneracy": dict(self.degeneracy) if self.degeneracy is not None else None,
        }


def _bilinear(F: np.ndarray, iu, jb, su, rb):
    f00 = F[iu, jb]
    f10 = F[iu + 1, jb]
    f01 = F[iu, jb + 1]
    f11 = F[iu + 1, jb + 1]
    return (
        f00 * (1 - su) * (1 - rb)
        + f10 * su * (1 - rb)
        + f01 * (1 - su) * rb
        + f11 * su * rb
    )


def _second_difference_sup(F: np.ndarray) -> float:
    du = np.max(np.abs(F[2:, :] - 2.0 * F[1:-1, :] + F[:-2, :])) if F.shape[0] > 2 else 0.0
    db = np.max(np.abs(F[:, 2:] - 2.0 * F[:, 1:-1] + F[:, :-2])) if F.shape[1] > 2 else 0.0
    return float(du + db)


def pullback_compare(
    dn: DNState,
    cmap: CoordMap,
    rect: RectState,
    model: Nonlinearity,
    profile: WaveProfile,
    newton_tol: float = 1e-11,
    max_newton: int = 40,
) -> ComparisonReport:
    """Pull the double-null solution back to rectangular nodes and diff it.

    Every rectangular node is located in the (u, ub) square by Newton
    iteration on the bilinear interpolant of the reconstructed map,
    seeded with the background relation u = V^{-1}(t + x + Z(t - x)),
    ub = t - x.  Nodes whose preimage leaves the square are skipped and
    counted; OutOfImage fires only when nothing overlaps.  Unconverged
    interior nodes raise InversionFailure, the near-degeneracy signal.
    """
    grid = cmap.grid
    n = grid.n_nodes
    h = grid.h

    jet = full_field_jet(dn, model, profile)
    fields_dn = {"phi": dn.xi, "Phi0": jet["Phi0"], "Phi1": jet["Phi1"]}

    T = np.repeat(rect.t, rect.x.size)
    X = np.tile(rect.x, rect.t.size)

    ub0 = T - X
    Vg = np.asarray(phase_relabel(profile, model, grid.u), dtype=float)
    Zg = np.asarray(phase_function(profile, model, np.clip(ub0, grid.ub_min, grid.ub_max)), dtype=float)
    u0 = np.interp(T + X + Zg, Vg, grid.u)
    u = np.clip(u0, grid.u_min, grid.u_max)
    ub = np.clip(ub0, grid.ub_min, grid.ub_max)

    scale = 1.0 + np.abs(T) + np.abs(X)
    active = np.ones(T.shape, dtype=bool)
    for _ in range(max_newton):
        iu = np.clip(((u - grid.u_min) / h).astype(int), 0, n - 2)
        jb = np.clip(((ub - grid.ub_min) / h).astype(int), 0, n - 2)
        su = (u - grid.u_min) / h - iu
        rb = (ub - grid.ub_min) / h - jb
        rt = _bilinear(cmap.t, iu, jb, su, rb) - T
        rx = _bilinear(cmap.x, iu, jb, su, rb) - X
        res = np.maximum(np.abs(rt), np.abs(rx))
        active = res > newton_tol * scale
        if not np.any(active):
            break
        a = active
        jut = _bilinear(cmap.jac_u_t, iu[a], jb[a], su[a], rb[a])
        jbt = _bilinear(cmap.jac_ub_t, iu[a], jb[a], su[a], rb[a])
        jux = _bilinear(cmap.jac_u_x, iu[a], jb[a], su[a], rb[a])
        jbx = _bilinear(cmap.jac_ub_x, iu[a], jb[a], su[a], rb[a])
        det = jut * jbx - jbt * jux
        det = np.where(np.abs(det) < 1e-300, np.nan, det)
        du = (jbx * rt[a] - jbt * rx[a]) / det
        db = (-jux * rt[a] + jut * rx[a]) / det
        u[a] -= du
        ub[a] -= db
        # confine walkers to a one-cell collar: points leaving the square
        # are heading out of the image and will be skipped by containment
        u = np.clip(np.where(np.isfinite(u), u, grid.u_min - 2 * h),
                    grid.u_min - 2 * h, grid.u_max + 2 * h)
        ub = np.clip(np.where(np.isfinite(ub), ub, grid.ub_min - 2 * h),
                     grid.ub_min - 2 * h, grid.ub_max + 2 * h)

    slack = 1e-9 * (1.0 + abs(grid.u_max))
    inside = (
        (u >= grid.u_min - slack) & (u <= grid.u_max + slack)
        & (ub >= grid.ub_min - slack) & (ub <= grid.ub_max + slack)
    )
    converged = ~active
    stuck = inside & ~converged
    if np.any(stuck):
        k = int(np.argmax(stuck))
        raise InversionFailure(
            f"map inversion stalled at (t, x) = ({T[k]:.4g}, {X[k]:.4g}); "
            "the reconstructed map is close to degenerate there"
        )
    covered = inside & converged
    n_compared = int(np.count_nonzero(covered))
    n_skipped = int(covered.size - n_compared)
    if n_compared == 0:
        raise OutOfImage("no rectangular node lies in the image of the map")

    uc = np.clip(u[covered], grid.u_min, grid.u_max)
    bc = np.clip(ub[covered], grid.ub_min, grid.ub_max)
    iu = np.clip(((uc - grid.u_min) / h).astype(int), 0, n - 2)
    jb = np.clip(((bc - grid.ub_min) / h).astype(int), 0, n - 2)
    su = (uc - grid.u_min) / h - iu
    rb = (bc - grid.ub_min) / h - jb

    zeta_b = np.asarray(profile.zeta(bc), dtype=float)
    zp_b = np.asarray(profile.dzeta(bc), dtype=float)
    psi_s = _bilinear(dn.psi, iu, jb, su, rb)
    psib_s = _bilinear(dn.psib, iu, jb, su, rb)
    samples = {
        "phi": zeta_b + _bilinear(dn.xi, iu, jb, su, rb),
        "Phi0": 0.5 * (psi_s + psib_s) + zp_b,
        "Phi1": 0.5 * (psi_s - psib_s) - zp_b,
    }
    targets = {
        "phi": rect.phi.ravel()[covered],
        "Phi0": rect.Phi0.ravel()[covered],
        "Phi1": rect.Phi1.ravel()[covered],
    }
    cell = rect.dt * rect.dx if rect.dt > 0 else rect.dx
    sup_diff, l1_diff = {}, {}
    for name in ("phi", "Phi0", "Phi1"):
        d = np.abs(samples[name] - targets[name])
        sup_diff[name] = float(np.max(d))
        l1_diff[name] = float(cell * np.sum(d))

    interp = 0.125 * max(_second_difference_sup(F) for F in fields_dn.values())
    return ComparisonReport(
        sup_diff=sup_diff,
        l1_diff=l1_diff,
        interp_error=float(interp),
        n_compared=n_compared,
        n_skipped=n_skipped,
    )


def phase_shift(
    cmap: CoordMap,
    profile: WaveProfile,
    model: Nonlinearity,
    window: float = 0.15,
    atol: float = 1e-8,
    rtol: float = 0.05,
) -> float:
    """Asymptotic offset of the u-level sets across the wave zone.

    On the background the reconstructed map satisfies t + x + Z(ub) =
    V(u) identically, so D = [t + x + Z(ub)] - V(u) vanishes.  After a
    perturbation crosses the background wave, D settles to different
    constants on the two ub-edges of the domain; the difference is the
    phase shift.  It is averaged over the top `window` fraction of
    u-rows and must have settled there (spread within atol + rtol*|mean|),
    otherwise InsufficientDomain is raised.
    """
    grid = cmap.grid
    Z = np.asarray(phase_function(profile, model, grid.ub), dtype=float)
    V = np.asarray(phase_relabel(profile, model, grid.u), dtype=float)
    D = cmap.t + cmap.x + Z[None, :] - V[:, None]
    per_row = D[:, -1] - D[:, 0]

    rows = grid.u >= grid.u_max - window * (grid.u_max - grid.u_min)
    if np.count_nonzero(rows) < 3:
        raise InsufficientDomain("u-range too short to average the late-u window")
    vals = per_row[rows]
    mean = float(np.mean(vals))
    spread = float(np.max(vals) - np.min(vals))
    if spread > atol + rtol * abs(mean):
        raise InsufficientDomain(
            f"phase shift has not settled: spread {spread:.3e} against mean {mean:.3e}; "
            "enlarge the double-null domain"
        )
    return mean
