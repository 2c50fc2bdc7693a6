"""
Model parameters of the doubly nonlinear diffusion equation and the exact mapping between its
non-divergence form

    tau0 u_t + u^gamma |u_x|^beta drift u_x - (sigma2 / 2) u^gamma |u_x|^beta u_xx = 0

and its divergence (conservative) form

    v_t = c (v^gamma0 |v_x|^m v_x)_x,    u = v^(alpha + 1).
"""
from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import DomainError

ArrayLike = Union[float, np.ndarray]

MAPPING_HYPOTHESIS = "mapping theorem hypothesis violated"


@dataclass(frozen=True)
class NonDivParams:
    """
    Exponents and coefficients of the non-divergence equation.

    :param gamma: Exponent of u in the diffusivity.
    :param beta: Exponent of |u_x| in the diffusivity.
    :param sigma2: Spatial variance scale sigma^2 > 0.
    :param tau0: Time scale tau0 > 0.
    :param drift: Drift length Delta^e. Kept for completeness; every numerical operation requires it to be 0.
    """
    gamma: float
    beta: float
    sigma2: float = 2.0
    tau0: float = 1.0
    drift: float = 0.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.tau0 > 0:
            raise DomainError(f"tau0 must be positive, got {self.tau0}")

    def require_no_drift(self) -> "NonDivParams":
        if self.drift != 0:
            raise DomainError(f"numerical operations require drift = 0, got {self.drift}")
        return self


@dataclass(frozen=True)
class DivParams:
    """
    Exponents and coefficients of the divergence-form equation.

    :param gamma0: Exponent of v in the flux, gamma0 >= 0.
    :param m: Gradient exponent, m > -1. Values in (-1, 0) are experimental in the solver.
    :param q0: Coefficient produced by the mapping, q0 > 0.
    :param alpha: Mapping exponent alpha >= 0 (u = v^(alpha+1)).
    """
    gamma0: float
    m: float
    q0: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not self.gamma0 >= 0:
            raise DomainError(f"gamma0 must be non-negative, got {self.gamma0}")
        if not self.m > -1:
            raise DomainError(f"m must be greater than -1, got {self.m}")
        if not self.q0 > 0:
            raise DomainError(f"q0 must be positive, got {self.q0}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def flux_coefficient(self) -> float:
        """Prefactor of the flux in the mapped equation, q0 / (m + 1)."""
        return self.q0 / (self.m + 1.0)

    @property
    def experimental(self) -> bool:
        return self.m < 0


def alpha_from_gamma(gamma: float) -> float:
    """
    Exponent alpha = gamma / (1 - gamma) of the u-v mapping.

    :param gamma: Non-divergence exponent, 0 <= gamma < 1.
    :return: alpha >= 0.
    """
    if not 0 <= gamma < 1:
        raise DomainError(f"{MAPPING_HYPOTHESIS}: gamma must satisfy 0 <= gamma < 1, got {gamma}")
    return gamma / (1.0 - gamma)


def gamma_from_alpha(alpha: float) -> float:
    if not alpha >= 0:
        raise DomainError(f"{MAPPING_HYPOTHESIS}: alpha must be non-negative, got {alpha}")
    return alpha / (1.0 + alpha)


def to_divergence(p: NonDivParams) -> DivParams:
    """
    Map non-divergence parameters onto the divergence form.

    :param p: Non-divergence parameters with drift = 0 and 0 <= gamma < 1.
    :return: DivParams with alpha = gamma/(1-gamma), gamma0 = alpha (beta+1), q0 = (sigma2/2)(alpha+1)^beta, m = beta.
    """
    p.require_no_drift()
    alpha = alpha_from_gamma(p.gamma)
    return DivParams(
        gamma0=alpha * (p.beta + 1.0),
        m=p.beta,
        q0=0.5 * p.sigma2 * (alpha + 1.0) ** p.beta,
        alpha=alpha,
    )


def to_nondivergence(div: DivParams, sigma2: float = 2.0, tau0: float = 1.0) -> NonDivParams:
    """
    Inverse parameter mapping: beta = m, alpha = gamma0 / (m + 1), gamma = alpha / (1 + alpha).

    The divergence coefficient is not inverted; sigma2 and tau0 are taken as given.
    """
    alpha = div.gamma0 / (div.m + 1.0)
    return NonDivParams(gamma=gamma_from_alpha(alpha), beta=div.m, sigma2=sigma2, tau0=tau0)


def divergence_time_factor(p: NonDivParams) -> float:
    """
    Factor c such that, with t' = c t, the v-equation mapped from `p` reads v_t' = (v^gamma0 |v_x|^m v_x)_x.

    It equals q0 / ((1 + beta) tau0); the (1 + beta) comes from (|u_x|^beta u_x)_x = (1 + beta)|u_x|^beta u_xx.
    """
    div = to_divergence(p)
    return div.flux_coefficient / p.tau0


def map_v_to_u(v: ArrayLike, alpha: float) -> ArrayLike:
    """
    Pointwise u = v^(alpha + 1). Zeros are preserved, so u and v share their support.

    :param v: Non-negative field values.
    :param alpha: Mapping exponent, alpha >= 0.
    """
    if not alpha >= 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    values = np.asarray(v, dtype=float)
    if np.any(values < 0):
        raise DomainError(
            f"negative concentration {values.min():.3e} cannot be mapped (solver undershoot)"
        )
    u = values ** (alpha + 1.0)
    return float(u) if np.ndim(v) == 0 else u


def map_u_to_v(u: ArrayLike, alpha: float) -> ArrayLike:
    if not alpha >= 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    values = np.asarray(u, dtype=float)
    if np.any(values < 0):
        raise DomainError(f"negative value {values.min():.3e} cannot be mapped")
    v = values ** (1.0 / (alpha + 1.0))
    return float(v) if np.ndim(u) == 0 else v


def rescale_time(t: float, q0: float) -> float:
    """Time t' = q0 t in which the divergence equation is coefficient-free."""
    if not q0 > 0:
        raise DomainError(f"q0 must be positive, got {q0}")
    return q0 * t
