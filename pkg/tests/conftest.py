import numpy as np
import pytest

from nullwave.background import bump_profile, zero_profile
from nullwave.grid import DNGrid
from nullwave.nonlinearity import linear_model, membrane_model
from nullwave.state import DiagonalData, sigma_of


@pytest.fixture(scope="session")
def membrane():
    return membrane_model()


@pytest.fixture(scope="session")
def linear():
    return linear_model()


@pytest.fixture(scope="session")
def bump03():
    return bump_profile(0.3, width=6.0)


@pytest.fixture(scope="session")
def zero_prof():
    return zero_profile()


def make_compatible_data(grid, profile, amp=0.05, gamma_bar=0.5):
    """Smooth diagonal data satisfying the chain rule d/ds F = d_u F - d_ub F.

    The free choices are the three fields, their d_u components, and the
    slice position s = grid.u; the d_ub components follow from the chain
    rule along the diagonal (u = s, ubar = -s).
    """
    s = grid.u
    env = np.exp(-0.5 * s * s)
    denv = -s * env
    psi = amp * env * np.cos(2 * s)
    dpsi = amp * (denv * np.cos(2 * s) - 2 * env * np.sin(2 * s))
    psib = amp * env * np.sin(3 * s)
    dpsib = amp * (denv * np.sin(3 * s) + 3 * env * np.cos(3 * s))
    xi = amp * env
    dxi = amp * denv
    dpsi_u = amp * env * np.cos(s)
    dpsib_u = amp * env * np.cos(4 * s)
    dxi_u = 0.5 * amp * env
    return DiagonalData(
        s=s, psi=psi, psib=psib, xi=xi,
        sigma=sigma_of(psi, psib, profile.dzeta(-s)),
        dpsi_u=dpsi_u, dpsi_ub=dpsi_u - dpsi,
        dpsib_u=dpsib_u, dpsib_ub=dpsib_u - dpsib,
        dxi_u=dxi_u, dxi_ub=dxi_u - dxi,
        gamma_bar=gamma_bar,
    )


def make_zero_data(grid, gamma_bar=0.5):
    n = grid.n_nodes
    z = [np.zeros(n) for _ in range(10)]
    return DiagonalData(grid.u.copy(), *z, gamma_bar=gamma_bar)
