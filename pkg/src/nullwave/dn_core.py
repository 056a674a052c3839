"""Double-null evolution of the perturbation system from t=0 data.

The unknowns are the perturbation fields (psi, psib, xi) and their null
derivatives on the square grid.  Writing s = sigma, zp = zeta'(ubar),
zpp = zeta''(ubar), the semilinear system integrated here is

    d_u d_ub psi  = -G/2 (d_u s d_ub psi + d_u psi d_ub s)
    d_u d_ub psib = -G d_u s zpp - G/2 (d_u s d_ub psib + d_u psib d_ub s)
    d_u d_ub xi   = -(s kappa H'/4) (d_u s d_ub xi + d_u xi d_ub s + zp d_u s)

with sigma slaved algebraically, never integrated:

    s = -psi (2 zp + psib).

Data lives on the anti-diagonal i + j = N (the t=0 slice, where u = s and
ubar = -s); march() fills the future and past triangles of the square with
the trapezoid/four-corner scheme in _kernels and returns a frozen DNState.

Both backends (numba scalar sweep, vectorized numpy) produce bit-identical
arrays; the default is picked by the NULLWAVE_NUMBA environment flag.
Models with callable coefficient functions always run on the numpy path.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from ._backend import use_numba
from .background import WaveProfile
from .errors import GridMismatch, HyperbolicityLoss, InnerFixedPointDivergence
from .grid import DNGrid
from .nonlinearity import KERNEL_CUSTOM, Nonlinearity, eval_coeffs
from .state import FIELD_NAMES, DiagonalData, DNState


def pick_backend(model: Nonlinearity, backend=None) -> str:
    """Resolve the requested backend name to "numba" or "numpy"."""
    if backend not in (None, "numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if model.kernel_code == KERNEL_CUSTOM:
        return "numpy"
    if backend is None:
        return "numba" if use_numba() else "numpy"
    return backend


def _kernel_params(model):
    pars = tuple(float(p) for p in (model.kernel_params or ()))
    return (pars + (0.0, 0.0, 0.0))[:3]


def _raise_for_status(status, i, j, grid):
    if status == _kernels.STATUS_OK:
        return
    where = f"node (u={grid.u[i]:.6g}, ubar={grid.ub[j]:.6g})"
    if status == _kernels.STATUS_BAD_SIGMA:
        raise HyperbolicityLoss(
            f"sigma left the admissible range (domain wall or kappa <= 0) at {where}"
        )
    raise InnerFixedPointDivergence(
        f"cell fixed point did not converge at {where}; "
        "reduce h or the data amplitude"
    )


def march(data: DiagonalData, grid: DNGrid, model: Nonlinearity,
          profile: WaveProfile, backend=None) -> DNState:
    """Solve the double-null system on the full square from diagonal data.

    Parameters
    ----------
    data : DiagonalData
        Perturbation fields sampled at s = grid.u on the t=0 diagonal.
    grid : DNGrid
        Square grid; data.s must coincide with grid.u.
    model : Nonlinearity
        Coefficient family of the equation.
    profile : WaveProfile
        Background travelling profile zeta entering through zeta'(ubar),
        zeta''(ubar).
    backend : {None, "numba", "numpy"}
        None picks numba when available and enabled (NULLWAVE_NUMBA).

    Returns
    -------
    DNState with read-only arrays; state.sigma holds the slaved null form
    at every node.
    """
    if data.s.shape != grid.u.shape:
        raise GridMismatch(
            f"diagonal data has {data.s.shape[0]} nodes, grid wants {grid.n_nodes}"
        )
    tol = 1e-9 * (1.0 + float(np.max(np.abs(grid.u))))
    if float(np.max(np.abs(data.s - grid.u))) > tol:
        raise GridMismatch("diagonal data nodes do not coincide with grid.u")

    state = DNState.zeros(grid)
    ii = np.arange(grid.N + 1)
    jj = grid.N - ii
    for name in FIELD_NAMES + ("sigma",):
        getattr(state, name)[ii, jj] = getattr(data, name)

    zp = np.ascontiguousarray(profile.dzeta(grid.ub), dtype=float)
    zpp = np.ascontiguousarray(profile.d2zeta(grid.ub), dtype=float)
    f_psi = np.zeros((grid.n_nodes, grid.n_nodes))
    f_psib = np.zeros_like(f_psi)
    f_xi = np.zeros_like(f_psi)

    field_args = (
        state.psi, state.psib, state.xi, state.sigma,
        state.dpsi_u, state.dpsi_ub, state.dpsib_u, state.dpsib_ub,
        state.dxi_u, state.dxi_ub, f_psi, f_psib, f_xi,
    )
    which = pick_backend(model, backend)
    for direction in (1, -1):
        if which == "numba":
            pa, pb, pc = _kernel_params(model)
            status, bi, bj = _kernels._march_numba(
                grid.h, grid.N, direction, False,
                model.kernel_code, pa, pb, pc, zp, zpp, *field_args,
            )
        else:
            status, bi, bj = _kernels._march_numpy(
                grid.h, grid.N, direction, False,
                model, zp, zpp, *field_args,
            )
        _raise_for_status(status, bi, bj, grid)
    return state.freeze()


def rhs_wave(model: Nonlinearity, zp, zpp, psi, psib,
             dpsi_u, dpsi_ub, dpsib_u, dpsib_ub, dxi_u, dxi_ub):
    """Right side of the system at given field values.

    zp, zpp are zeta'(ubar), zeta''(ubar) at the same points as the fields
    (scalars or broadcastable arrays).  Returns (sigma, F_psi, F_psib, F_xi);
    raises HyperbolicityLoss where the slaved sigma leaves the admissible
    range.
    """
    okm, sig, f1, f2, f3 = _kernels._rhs_arrays(
        model, np.asarray(zp, dtype=float), np.asarray(zpp, dtype=float),
        psi, psib, dpsi_u, dpsi_ub, dpsib_u, dpsib_ub, dxi_u, dxi_ub,
    )
    if not np.all(okm):
        bad = np.asarray(sig)[~okm]
        raise HyperbolicityLoss(
            f"sigma outside admissible range in rhs_wave (first bad value {bad.flat[0]:.6g})"
        )
    return sig, f1, f2, f3


def verify_envelopes(state: DNState, gamma_bar: float) -> dict:
    """Fitted amplitude of each perturbation field on the solved square.

    For each of psi, psib, xi the fit is the largest of three sups: the
    plain field, the u-derivative weighted by (1+|u|)^(1+gamma_bar) and the
    ubar-derivative weighted by (1+|ubar|)^(1+gamma_bar).  The fits are
    linear in the field amplitudes (doubling the solution doubles them).
    """
    wu = (1.0 + np.abs(state.grid.u)) ** (1.0 + gamma_bar)
    wub = (1.0 + np.abs(state.grid.ub)) ** (1.0 + gamma_bar)
    out = {"gamma_bar": float(gamma_bar)}
    for name, du, dub in (
        ("psi", "dpsi_u", "dpsi_ub"),
        ("psib", "dpsib_u", "dpsib_ub"),
        ("xi", "dxi_u", "dxi_ub"),
    ):
        plain = float(np.max(np.abs(getattr(state, name))))
        wgt_u = float(np.max(np.abs(getattr(state, du)) * wu[:, None]))
        wgt_ub = float(np.max(np.abs(getattr(state, dub)) * wub[None, :]))
        out[name] = max(plain, wgt_u, wgt_ub)
    out["delta"] = max(out["psi"], out["psib"], out["xi"])
    return out


def sigma_wave_residual(state: DNState, model: Nonlinearity,
                        profile: WaveProfile) -> np.ndarray:
    """Residual of the null-form wave identity satisfied by sigma.

    The slaved sigma of an exact solution obeys

        d_u d_ub s + G d_u s d_ub s
                   + d_u Psi d_ub Psib + d_ub Psi d_u Psib = 0

    with Psi = psi and Psib = psib + 2 zeta'(ubar) the full characteristic
    derivatives.  Here d_u s, d_ub s are composed from the stored fields and
    d_u d_ub s is a centered difference of d_ub s in u, so the residual of
    the marched solution shrinks at the scheme's second order.  Returns an
    (N-1, N+1) array over the interior u-range.
    """
    g = state.grid
    zp = np.asarray(profile.dzeta(g.ub), dtype=float)[None, :]
    zpp = np.asarray(profile.d2zeta(g.ub), dtype=float)[None, :]
    hold = 2.0 * zp + state.psib
    s_u = -state.dpsi_u * hold - state.psi * state.dpsib_u
    s_ub = -state.dpsi_ub * hold - state.psi * (2.0 * zpp + state.dpsib_ub)
    d_u_d_ub = (s_ub[2:, :] - s_ub[:-2, :]) / (2.0 * g.h)
    G = eval_coeffs(model, state.sigma).G
    null_form = (G * s_u * s_ub
                 + state.dpsi_u * (state.dpsib_ub + 2.0 * zpp)
                 + state.dpsi_ub * state.dpsib_u)
    return d_u_d_ub + null_form[1:-1, :]
