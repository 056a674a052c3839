"""Scalar nonlinearity of the variational wave model and derived coefficients.

The model is the Euler-Lagrange equation of a Lagrangian e^{f(sigma)} built
from the null form

    sigma = -(d_t phi)^2 + (d_x phi)^2,

so every coefficient of the quasilinear system is a function of sigma alone:

    kappa(s)  = 1 + 2 f'(s) s                 (hyperbolicity factor, > 0)
    G(s)      = (f''(s) s + f'(s)) / kappa(s) + f'(s)
    H(s)      = -2 f'(s) / kappa(s)
    H'(s)     = -2 (f''(s) - 2 f'(s)^2) / kappa(s)^2

The inverse acoustic metric on top of the Minkowski background is

    g^{mn} = eta^{mn} + 2 f'(sigma) (eta Phi)^m (eta Phi)^n,

with Phi = (d_t phi, d_x phi), and its covariant form is

    g_{mn} = eta_{mn} + H(sigma) Phi_m Phi_n,

with determinants det g^{-1} = -kappa and det g = -1/kappa.  The contraction
of dphi with itself against g^{-1} collapses to sigma + 2 f'(sigma) sigma^2.

Three families are built in: "linear" (f = 0), "membrane"
(f = -1/2 log(1+sigma), defined for sigma > -1, for which H == 1), and
"polynomial" (f = a s + b s^2 + c s^3).  Custom models supply their own
derivative callables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, HyperbolicityLoss

ArrayLike = Union[float, np.ndarray]

# kernel codes understood by the jitted march/transport kernels
KERNEL_LINEAR = 0
KERNEL_MEMBRANE = 1
KERNEL_POLYNOMIAL = 2
KERNEL_CUSTOM = -1


@dataclass(frozen=True)
class Nonlinearity:
    """A concrete choice of f together with its first three derivatives.

    Attributes
    ----------
    name : str
        Human-readable family name.
    f, fp, fpp, fppp : callables
        f and its derivatives, vectorized over numpy arrays.
    sigma_min, sigma_max : float
        Open admissible interval for sigma (inf allowed).
    kernel_code : int
        Integer tag used by the jitted kernels; -1 means numpy-only.
    kernel_params : tuple of float
        Up to three parameters consumed by the jitted kernels.
    """

    name: str
    f: Callable[[ArrayLike], ArrayLike]
    fp: Callable[[ArrayLike], ArrayLike]
    fpp: Callable[[ArrayLike], ArrayLike]
    fppp: Callable[[ArrayLike], ArrayLike]
    sigma_min: float = -np.inf
    sigma_max: float = np.inf
    kernel_code: int = KERNEL_CUSTOM
    kernel_params: tuple = (0.0, 0.0, 0.0)

    def check_domain(self, sigma: ArrayLike) -> None:
        """Raise DomainError if any sigma leaves the admissible interval."""
        s = np.asarray(sigma)
        if np.any(~np.isfinite(s)):
            raise DomainError(f"{self.name}: non-finite sigma")
        if np.any(s <= self.sigma_min) or np.any(s >= self.sigma_max):
            bad = s[(s <= self.sigma_min) | (s >= self.sigma_max)]
            raise DomainError(
                f"{self.name}: sigma={float(np.ravel(bad)[0]):.6g} outside "
                f"({self.sigma_min:.6g}, {self.sigma_max:.6g})"
            )


@dataclass(frozen=True)
class CoefficientBundle:
    """Values of every sigma-dependent coefficient at one (array of) sigma."""

    sigma: ArrayLike
    f: ArrayLike
    fp: ArrayLike
    fpp: ArrayLike
    kappa: ArrayLike
    G: ArrayLike
    H: ArrayLike
    Hp: ArrayLike


@dataclass(frozen=True)
class MetricComponents:
    """Acoustic metric at one state (arrays allowed), both index positions."""

    sigma: ArrayLike
    kappa: ArrayLike
    g00: ArrayLike
    g01: ArrayLike
    g11: ArrayLike
    inv00: ArrayLike
    inv01: ArrayLike
    inv11: ArrayLike

    @property
    def det(self) -> ArrayLike:
        return self.g00 * self.g11 - self.g01 * self.g01

    @property
    def det_inv(self) -> ArrayLike:
        return self.inv00 * self.inv11 - self.inv01 * self.inv01


def _zero(s: ArrayLike) -> ArrayLike:
    return np.zeros_like(np.asarray(s, dtype=float))


def linear_model() -> Nonlinearity:
    """f == 0: the flat wave equation, useful as an exactly solvable check."""
    return Nonlinearity(
        name="linear",
        f=_zero,
        fp=_zero,
        fpp=_zero,
        fppp=_zero,
        kernel_code=KERNEL_LINEAR,
    )


def membrane_model() -> Nonlinearity:
    """f = -1/2 log(1+sigma) on sigma > -1; H(sigma) == 1 identically."""
    return Nonlinearity(
        name="membrane",
        f=lambda s: -0.5 * np.log1p(np.asarray(s, dtype=float)),
        fp=lambda s: -0.5 / (1.0 + np.asarray(s, dtype=float)),
        fpp=lambda s: 0.5 / (1.0 + np.asarray(s, dtype=float)) ** 2,
        fppp=lambda s: -1.0 / (1.0 + np.asarray(s, dtype=float)) ** 3,
        sigma_min=-1.0,
        kernel_code=KERNEL_MEMBRANE,
    )


def polynomial_model(a: float, b: float = 0.0, c: float = 0.0) -> Nonlinearity:
    """f = a s + b s^2 + c s^3 with exact derivatives."""
    a, b, c = float(a), float(b), float(c)
    return Nonlinearity(
        name=f"polynomial[{a:g},{b:g},{c:g}]",
        f=lambda s: a * s + b * np.asarray(s, dtype=float) ** 2 + c * np.asarray(s, dtype=float) ** 3,
        fp=lambda s: a + 2.0 * b * np.asarray(s, dtype=float) + 3.0 * c * np.asarray(s, dtype=float) ** 2,
        fpp=lambda s: 2.0 * b + 6.0 * c * np.asarray(s, dtype=float),
        fppp=lambda s: 6.0 * c * np.ones_like(np.asarray(s, dtype=float)),
        kernel_code=KERNEL_POLYNOMIAL,
        kernel_params=(a, b, c),
    )


def custom_model(
    f: Callable,
    fp: Callable,
    fpp: Callable,
    fppp: Callable,
    name: str = "custom",
    sigma_min: float = -np.inf,
    sigma_max: float = np.inf,
) -> Nonlinearity:
    """Wrap user-supplied derivative callables (numpy-vectorized)."""
    return Nonlinearity(
        name=name,
        f=f,
        fp=fp,
        fpp=fpp,
        fppp=fppp,
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        kernel_code=KERNEL_CUSTOM,
    )


def eval_coeffs(model: Nonlinearity, sigma: ArrayLike) -> CoefficientBundle:
    """Evaluate every sigma-coefficient of the system at sigma.

    Parameters
    ----------
    model : Nonlinearity
    sigma : float or ndarray

    Returns
    -------
    CoefficientBundle
        f, f', f'', kappa, G, H, H' at sigma (same shape as the input).

    Raises
    ------
    DomainError
        If sigma leaves the admissible interval of the model.
    HyperbolicityLoss
        If kappa = 1 + 2 f'(sigma) sigma is not strictly positive.
    """
    model.check_domain(sigma)
    s = np.asarray(sigma, dtype=float)
    fv = model.f(s)
    fp = model.fp(s)
    fpp = model.fpp(s)
    kappa = 1.0 + 2.0 * fp * s
    if np.any(kappa <= 0.0):
        kmin = float(np.min(kappa))
        raise HyperbolicityLoss(f"{model.name}: kappa={kmin:.6g} <= 0")
    G = (fpp * s + fp) / kappa + fp
    H = -2.0 * fp / kappa
    Hp = -2.0 * (fpp - 2.0 * fp * fp) / kappa**2
    if np.ndim(sigma) == 0:
        return CoefficientBundle(
            float(s), float(fv), float(fp), float(fpp),
            float(kappa), float(G), float(H), float(Hp),
        )
    return CoefficientBundle(s, fv, fp, fpp, kappa, G, H, Hp)


def acoustic_metric(model: Nonlinearity, Phi0: ArrayLike, Phi1: ArrayLike) -> MetricComponents:
    """Acoustic metric components at the state Phi = (d_t phi, d_x phi).

    Both the covariant components g_{mn} = eta_{mn} + H Phi_m Phi_n and the
    contravariant ones g^{mn} = eta^{mn} + 2 f' (eta Phi)^m (eta Phi)^n are
    returned; (eta Phi) = (-Phi0, Phi1).
    """
    P0 = np.asarray(Phi0, dtype=float)
    P1 = np.asarray(Phi1, dtype=float)
    sigma = -P0 * P0 + P1 * P1
    co = eval_coeffs(model, sigma)
    fp, H = co.fp, co.H
    inv00 = -1.0 + 2.0 * fp * P0 * P0
    inv01 = -2.0 * fp * P0 * P1
    inv11 = 1.0 + 2.0 * fp * P1 * P1
    g00 = -1.0 + H * P0 * P0
    g01 = H * P0 * P1
    g11 = 1.0 + H * P1 * P1
    if np.ndim(Phi0) == 0 and np.ndim(Phi1) == 0:
        return MetricComponents(
            float(sigma), float(co.kappa),
            float(g00), float(g01), float(g11),
            float(inv00), float(inv01), float(inv11),
        )
    return MetricComponents(sigma, co.kappa, g00, g01, g11, inv00, inv01, inv11)


def contraction_identity_check(model: Nonlinearity, Phi0: ArrayLike, Phi1: ArrayLike):
    """Residual of the closed-form self-contraction of dphi.

    g^{-1}(dphi, dphi) computed from components must equal
    sigma + 2 f'(sigma) sigma^2.  Returns (lhs, rhs, residual).
    """
    m = acoustic_metric(model, Phi0, Phi1)
    P0 = np.asarray(Phi0, dtype=float)
    P1 = np.asarray(Phi1, dtype=float)
    lhs = m.inv00 * P0 * P0 + 2.0 * m.inv01 * P0 * P1 + m.inv11 * P1 * P1
    fp = model.fp(m.sigma)
    rhs = m.sigma + 2.0 * fp * m.sigma**2
    return lhs, rhs, np.max(np.abs(np.asarray(lhs - rhs)))


def range_certificate(model: Nonlinearity, m0: float, h_s: float = 1e-3) -> dict:
    """Sup of each structural coefficient over sigma in [-m0, m0].

    The certificate samples |G|, |H|, |f'|, |G'|, |H'|, |kappa|, |1/kappa|,
    |f''| and |H''| on a uniform grid of spacing <= h_s and reports each sup
    together with their max M0.  The two derived derivatives G' and H'' are
    taken by centered differences of the composed quantities.

    Raises DomainError if [-m0, m0] leaves the admissible interval.
    """
    m0 = float(m0)
    if m0 <= 0:
        raise DomainError("m0 must be positive")
    n = max(8, int(np.ceil(2.0 * m0 / float(h_s))))
    s = np.linspace(-m0, m0, n + 1)
    # domain check up front for a clean error message
    model.check_domain(np.array([-m0, m0]))
    co = eval_coeffs(model, s)

    step = 0.5 * min(h_s, 1e-4 * max(1.0, m0))
    def _fd(values_at):
        return (values_at(s + step) - values_at(s - step)) / (2.0 * step)

    # widen the domain check marginally for the finite differences
    model.check_domain(np.array([-m0 - step, m0 + step]))
    Gp = _fd(lambda q: eval_coeffs(model, q).G)
    Hpp = _fd(lambda q: eval_coeffs(model, q).Hp)

    sups = {
        "G": float(np.max(np.abs(co.G))),
        "H": float(np.max(np.abs(co.H))),
        "fp": float(np.max(np.abs(co.fp))),
        "Gp": float(np.max(np.abs(Gp))),
        "Hp": float(np.max(np.abs(co.Hp))),
        "kappa": float(np.max(np.abs(co.kappa))),
        "kappa_inv": float(np.max(np.abs(1.0 / co.kappa))),
        "fpp": float(np.max(np.abs(co.fpp))),
        "Hpp": float(np.max(np.abs(Hpp))),
    }
    sups["M0"] = max(sups.values())
    sups["m0"] = m0
    return sups


def model_from_config(cfg) -> Nonlinearity:
    """Build a model from its JSON-able description.

    Accepts "linear", "membrane", or {"polynomial": [a, b, c]}.
    """
    if isinstance(cfg, str):
        if cfg == "linear":
            return linear_model()
        if cfg == "membrane":
            return membrane_model()
        raise DomainError(f"unknown model name {cfg!r}")
    if isinstance(cfg, dict) and "polynomial" in cfg:
        coeffs = list(cfg["polynomial"])
        if not 1 <= len(coeffs) <= 3 or not all(
            isinstance(v, (int, float)) for v in coeffs
        ):
            raise DomainError("polynomial model needs 1-3 numeric coefficients")
        coeffs += [0.0] * (3 - len(coeffs))
        return polynomial_model(*coeffs)
    raise DomainError(f"unrecognized model config {cfg!r}")
