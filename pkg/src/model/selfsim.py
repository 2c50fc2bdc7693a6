"""
Closed-form point-source (Kompaneets-Zel'dovich-Barenblatt) solution of v_t = (v^gamma0 |v_x|^m v_x)_x:

    v(x, t) = V t^-nu f(x t^-nu / eta_f),    nu = 1 / (gamma0 + 2m + 2),    V = eta_f^((m+2)/(gamma0+m)),

with the compact even profile

    f(xi) = [ (gamma0+m)/(m+2) nu^(1/(m+1)) (1 - |xi|^((m+2)/(m+1))) ]^((m+1)/(gamma0+m)),    |xi| <= 1,

and eta_f fixed by unit total mass.
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
import scipy.integrate
import scipy.special

from project_config.logger import get_logger
from src.errors import DomainError, NumericalError
from src.model.params import ArrayLike, DivParams

logger = get_logger(__name__, log_file="model.log")


class FrontBehaviour(str, Enum):
    """Behaviour of f' as xi -> 1-."""
    REGULAR_ZERO = "regular-zero"
    FINITE_NEGATIVE = "finite-negative"
    SINGULAR = "singular"


class FrontSlope(NamedTuple):
    behaviour: FrontBehaviour
    value: float


def _scalar_or_array(template, values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(template) == 0 else values


def exponent_nu(gamma0: float, m: float) -> float:
    """Spreading exponent nu = 1 / (gamma0 + 2m + 2)."""
    denominator = gamma0 + 2.0 * m + 2.0
    if not denominator > 0:
        raise DomainError(f"gamma0 + 2m + 2 must be positive, got {denominator}")
    return 1.0 / denominator


def _check_profile_params(gamma0: float, m: float) -> None:
    if not m > -1:
        raise DomainError(f"the self-similar profile needs m > -1, got m={m}")
    if not gamma0 + m > 0:
        raise DomainError(f"the self-similar profile needs gamma0 + m > 0, got gamma0={gamma0}, m={m}")


def _profile_base(a: np.ndarray, gamma0: float, m: float) -> np.ndarray:
    """The bracket (gamma0+m)/(m+2) nu^(1/(m+1)) (1 - a^((m+2)/(m+1))) for 0 <= a <= 1."""
    nu = exponent_nu(gamma0, m)
    amplitude = (gamma0 + m) / (m + 2.0) * nu ** (1.0 / (m + 1.0))
    return amplitude * (1.0 - a ** ((m + 2.0) / (m + 1.0)))


def profile_f(xi: ArrayLike, gamma0: float, m: float) -> ArrayLike:
    """
    Even profile f(xi); exactly 0 for |xi| >= 1 and positive inside.

    :param xi: Normalized similarity variable (scalar or array).
    """
    _check_profile_params(gamma0, m)
    a = np.abs(np.asarray(xi, dtype=float))
    inside = a < 1.0
    base = _profile_base(np.where(inside, a, 0.0), gamma0, m)
    f = np.where(inside, base ** ((m + 1.0) / (gamma0 + m)), 0.0)
    return _scalar_or_array(xi, f)


def front_slope(gamma0: float, m: float) -> FrontSlope:
    """
    Tagged limit of f'(xi) as xi -> 1-.

    Regular with f'(1) = 0 when (1 - gamma0)/(gamma0 + m) > 0, finite and negative
    (-nu^(1/(m+1)) = -(2m+3)^(-1/(m+1))) when gamma0 = 1, singular (-inf) otherwise.
    """
    _check_profile_params(gamma0, m)
    exponent = (1.0 - gamma0) / (gamma0 + m)
    if gamma0 == 1.0:
        nu = exponent_nu(gamma0, m)
        return FrontSlope(FrontBehaviour.FINITE_NEGATIVE, -nu ** (1.0 / (m + 1.0)))
    if exponent > 0:
        return FrontSlope(FrontBehaviour.REGULAR_ZERO, 0.0)
    return FrontSlope(FrontBehaviour.SINGULAR, -math.inf)


def profile_fprime(xi: ArrayLike, gamma0: float, m: float) -> ArrayLike:
    """
    Derivative f'(xi), odd in xi.

    Uses |f'| = -f' on [0, 1] and the first integral, f' = -(nu xi)^(1/(m+1)) f^((1-gamma0)/(m+1)).
    At |xi| = 1 the value is the signed `front_slope` limit (-inf on the singular branch),
    outside the support it is 0.
    """
    _check_profile_params(gamma0, m)
    nu = exponent_nu(gamma0, m)
    x = np.asarray(xi, dtype=float)
    a = np.abs(x)
    inside = a < 1.0
    safe = np.where(inside, a, 0.0)
    base = _profile_base(safe, gamma0, m)
    magnitude = (nu * safe) ** (1.0 / (m + 1.0)) * base ** ((1.0 - gamma0) / (gamma0 + m))
    slope = np.where(inside, -np.sign(x) * magnitude, 0.0)
    at_front = a == 1.0
    if np.any(at_front):
        slope[at_front] = np.sign(x[at_front]) * front_slope(gamma0, m).value
    return _scalar_or_array(xi, slope)


def front_constant_gamma(gamma0: float, m: float) -> float:
    """
    Front constant eta_f from its Gamma-function closed form.

    :raises DomainError: if a Gamma argument is not positive.
    """
    _check_profile_params(gamma0, m)
    total = gamma0 + 2.0 * m + 2.0
    a1 = (m + 1.0) / (m + 2.0)
    a2 = (m + 1.0) / (m + gamma0) + 1.0
    a3 = a1 + a2
    if min(a1, a2, a3) <= 0:
        raise DomainError(f"non-positive Gamma argument for gamma0={gamma0}, m={m}")
    ratio = math.exp(math.lgamma(a3) - math.lgamma(a1) - math.lgamma(a2))
    bracket = 0.5 * (m + 2.0) / (m + 1.0) * ratio
    return (
        ((m + 2.0) / (gamma0 + m)) ** ((m + 1.0) / total)
        * total ** (1.0 / total)
        * bracket ** ((gamma0 + m) / total)
    )


def profile_integral(gamma0: float, m: float) -> float:
    """Adaptive quadrature of f over [-1, 1]."""
    _check_profile_params(gamma0, m)
    result = scipy.integrate.quad(
        lambda s: profile_f(s, gamma0, m), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=500, full_output=1
    )
    if len(result) > 3:
        value, error, info, message = result[:4]
        raise NumericalError(
            f"quadrature of the profile did not converge for gamma0={gamma0}, m={m}: {message} "
            f"(estimate {value}, error {error:.3e}, {info['neval']} evaluations)"
        )
    value, error, info = result
    logger.debug(f"profile integral gamma0={gamma0}, m={m}: {2 * value} +- {2 * error:.1e}")
    return 2.0 * value


def front_constant_quadrature(gamma0: float, m: float) -> float:
    """eta_f = [int f]^(-(gamma0+m)/(gamma0+2m+2)), the quadrature oracle for `front_constant_gamma`."""
    integral = profile_integral(gamma0, m)
    return integral ** (-(gamma0 + m) / (gamma0 + 2.0 * m + 2.0))


def first_integral_residual(xi: ArrayLike, gamma0: float, m: float) -> ArrayLike:
    """nu xi f + f^gamma0 |f'|^m f', which vanishes identically for the closed-form profile."""
    nu = exponent_nu(gamma0, m)
    f = np.asarray(profile_f(xi, gamma0, m))
    fp = np.asarray(profile_fprime(xi, gamma0, m))
    residual = nu * np.asarray(xi, dtype=float) * f + f ** gamma0 * np.abs(fp) ** m * fp
    return _scalar_or_array(xi, residual)


@dataclass(frozen=True)
class SelfSimilarSolution:
    """
    Unit-mass point-source solution of the coefficient-free divergence equation.

    Build it with `SelfSimilarSolution.build(gamma0, m)`.
    """
    params: DivParams
    nu: float
    eta_f: float
    V: float
    mass: float = 1.0

    @classmethod
    def build(cls, gamma0: float, m: float) -> "SelfSimilarSolution":
        return cls.from_params(DivParams(gamma0=gamma0, m=m))

    @classmethod
    def from_params(cls, params: DivParams) -> "SelfSimilarSolution":
        gamma0, m = params.gamma0, params.m
        _check_profile_params(gamma0, m)
        eta_f = front_constant_gamma(gamma0, m)
        return cls(
            params=replace(params, q0=1.0),
            nu=exponent_nu(gamma0, m),
            eta_f=eta_f,
            V=eta_f ** ((m + 2.0) / (gamma0 + m)),
        )

    def profile(self, xi: ArrayLike) -> ArrayLike:
        return profile_f(xi, self.params.gamma0, self.params.m)

    def profile_prime(self, xi: ArrayLike) -> ArrayLike:
        return profile_fprime(xi, self.params.gamma0, self.params.m)

    def to_dict(self) -> dict:
        slope = front_slope(self.params.gamma0, self.params.m)
        return {
            "gamma0": self.params.gamma0,
            "m": self.params.m,
            "nu": self.nu,
            "eta_f": self.eta_f,
            "V": self.V,
            "mass": self.mass,
            "front_behaviour": slope.behaviour.value,
            "front_slope": slope.value if math.isfinite(slope.value) else None,
        }


def evaluate(x: ArrayLike, t: float, s: SelfSimilarSolution) -> ArrayLike:
    """v(x, t) = V t^-nu f(x t^-nu / eta_f); zero for |x| >= eta_f t^nu."""
    if not t > 0:
        raise DomainError(f"the point-source solution is only defined for t > 0, got t={t}")
    scale = t ** (-s.nu)
    xi = np.asarray(x, dtype=float) * scale / s.eta_f
    values = s.V * scale * np.asarray(s.profile(xi))
    return _scalar_or_array(x, values)


def front_position(t: float, s: SelfSimilarSolution) -> float:
    """x_f(t) = eta_f t^nu."""
    if not t > 0:
        raise DomainError(f"front position needs t > 0, got t={t}")
    return s.eta_f * t ** s.nu


def profile_table(s: SelfSimilarSolution, n_points: int) -> np.ndarray:
    """Rows (xi, f, f') on `n_points` equally spaced xi in [-1, 1]."""
    xi = np.linspace(-1.0, 1.0, n_points)
    # make the midpoint exactly zero for odd n
    xi[np.isclose(xi, 0.0, atol=1e-15)] = 0.0
    return np.column_stack([xi, s.profile(xi), s.profile_prime(xi)])


def heat_kernel_mound(x: ArrayLike, t: float, x0: float = 1.0) -> ArrayLike:
    """
    Exact solution of v_t = v_xx on the whole line starting from the unit-mass mound of half-width x0.

    Convolves the parabola with the Gaussian kernel of variance 2t using its first three truncated moments.
    """
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got t={t}")
    template = x
    x = np.asarray(x, dtype=float)
    sigma = math.sqrt(2.0 * t)
    z_lo = (-x0 - x) / sigma
    z_hi = (x0 - x) / sigma
    phi_lo = np.exp(-0.5 * z_lo ** 2) / math.sqrt(2.0 * math.pi)
    phi_hi = np.exp(-0.5 * z_hi ** 2) / math.sqrt(2.0 * math.pi)
    m0 = scipy.special.ndtr(z_hi) - scipy.special.ndtr(z_lo)
    m1 = phi_lo - phi_hi
    m2 = m0 + z_lo * phi_lo - z_hi * phi_hi
    # 1 - (y/x0)^2 with y = x + sigma z
    values = 0.75 / x0 * (
        (1.0 - (x / x0) ** 2) * m0 - 2.0 * x * sigma / x0 ** 2 * m1 - (sigma / x0) ** 2 * m2
    )
    return _scalar_or_array(template, np.maximum(values, 0.0))


def sample_trajectory(s: SelfSimilarSolution, grid, times: Sequence[float], t_shift: float = 0.0):
    """
    Trajectory whose snapshots are the closed form, evaluated at t + t_shift, sampled at the cell centres.

    A leading t = 0 is added when missing; it holds zeros unless t_shift > 0.
    """
    from src.solver.grid import Snapshot, Trajectory

    times = [float(t) for t in times]
    if times[0] != 0.0:
        times = [0.0] + times
    snapshots = []
    for t in times:
        if t + t_shift > 0:
            values = evaluate(grid.cell_centers, t + t_shift, s)
        else:
            values = np.zeros(grid.n_cells)
        snapshots.append(Snapshot(t=t, values=values))
    return Trajectory(params=s.params, grid=grid, snapshots=snapshots)
