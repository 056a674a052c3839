"""State containers for the double-null solvers.

All fields are perturbations off the simple-wave background: psi is the
outgoing combination d_t phi + d_x phi, psib the incoming combination minus
its background value 2 zeta'(ubar), and xi = phi - zeta(ubar).  The null
form is slaved algebraically to them:

    sigma = -psi (2 zeta'(ubar) + psib),

and its coordinate derivatives follow by the product rule, never by
integration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .errors import GridMismatch
from .grid import DNGrid

FIELD_NAMES = (
    "psi", "psib", "xi",
    "dpsi_u", "dpsi_ub", "dpsib_u", "dpsib_ub", "dxi_u", "dxi_ub",
)

CSV_COLUMNS = (
    "u", "ubar", "psi", "psib", "sigma", "xi",
    "dpsi_u", "dpsi_ub", "dpsib_u", "dpsib_ub", "dxi_u", "dxi_ub",
)


def sigma_of(psi, psib, zp_ub):
    """Null form from the perturbation fields; zp_ub = zeta'(ubar)."""
    return -psi * (2.0 * zp_ub + psib)


def dsigma_u_of(psi, psib, dpsi_u, dpsib_u, zp_ub):
    return -dpsi_u * (2.0 * zp_ub + psib) - psi * dpsib_u


def dsigma_ub_of(psi, psib, dpsi_ub, dpsib_ub, zp_ub, zpp_ub):
    return -dpsi_ub * (2.0 * zp_ub + psib) - psi * (2.0 * zpp_ub + dpsib_ub)


@dataclass
class DNState:
    """Perturbation fields and their null derivatives on a DNGrid.

    Arrays are (N+1, N+1), indexed [i, j] ~ (u_i, ubar_j).  sigma is stored
    for convenience but always equals sigma_of(psi, psib, zeta'(ubar_j)).
    """

    grid: DNGrid
    psi: np.ndarray
    psib: np.ndarray
    xi: np.ndarray
    sigma: np.ndarray
    dpsi_u: np.ndarray
    dpsi_ub: np.ndarray
    dpsib_u: np.ndarray
    dpsib_ub: np.ndarray
    dxi_u: np.ndarray
    dxi_ub: np.ndarray

    @classmethod
    def zeros(cls, grid: DNGrid) -> "DNState":
        n = grid.n_nodes
        return cls(grid, *[np.zeros((n, n)) for _ in range(10)])

    def arrays(self):
        return {f.name: getattr(self, f.name) for f in dc_fields(self) if f.name != "grid"}

    def check_shapes(self):
        n = self.grid.n_nodes
        for name, a in self.arrays().items():
            if a.shape != (n, n):
                raise GridMismatch(f"field {name} has shape {a.shape}, grid wants {(n, n)}")

    def freeze(self) -> "DNState":
        """Mark every array read-only; solver outputs stay immutable."""
        for a in self.arrays().values():
            a.flags.writeable = False
        return self

    def copy(self) -> "DNState":
        return DNState(self.grid, *[a.copy() for a in self.arrays().values()])


@dataclass
class DiagonalData:
    """Perturbation data on the t=0 diagonal, sampled at s = u_i.

    Carries the same ten fields as DNState restricted to the diagonal, the
    slaved sigma, and the measured smallness eps0: the largest value of
    |field(s)| (1+|s|)^(1+gamma_bar) over all ten fields.
    """

    s: np.ndarray
    psi: np.ndarray
    psib: np.ndarray
    xi: np.ndarray
    sigma: np.ndarray
    dpsi_u: np.ndarray
    dpsi_ub: np.ndarray
    dpsib_u: np.ndarray
    dpsib_ub: np.ndarray
    dxi_u: np.ndarray
    dxi_ub: np.ndarray
    gamma_bar: float
    eps0: float = 0.0

    def __post_init__(self):
        if self.eps0 == 0.0:
            self.eps0 = self.measure_eps0()

    def measure_eps0(self) -> float:
        w = (1.0 + np.abs(self.s)) ** (1.0 + self.gamma_bar)
        worst = 0.0
        for name in FIELD_NAMES + ("sigma",):
            worst = max(worst, float(np.max(np.abs(getattr(self, name)) * w)))
        return worst


def write_state_csv(state: DNState, path) -> None:
    """Dump a state row-major in u then ubar, with the pinned column set."""
    g = state.grid
    n = g.n_nodes
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_COLUMNS)
        for i in range(n):
            for j in range(n):
                wr.writerow(
                    [repr(float(v)) for v in (
                        g.u[i], g.ub[j],
                        state.psi[i, j], state.psib[i, j],
                        state.sigma[i, j], state.xi[i, j],
                        state.dpsi_u[i, j], state.dpsi_ub[i, j],
                        state.dpsib_u[i, j], state.dpsib_ub[i, j],
                        state.dxi_u[i, j], state.dxi_ub[i, j],
                    )]
                )
