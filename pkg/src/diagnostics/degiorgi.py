"""
Annulus energies of the localization argument.

With w = u^((theta+gamma+beta+1)/(beta+2)) and the shrinking exteriors U_n = {|x| > r_n}, r_n = 2r(1 - 2^-(n+1)),

    I_n(T) = sup_{0<tau<=T} int_{U_{n+1}} w^q dx + int_0^T int_{U_{n+1}} |w_x|^(beta+2) dx dtau,

    q = (theta+1)(beta+2) / (theta+gamma+beta+1).

A solution that stays inside B_{r_1} has I_n = 0 for every n.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.integrate

from project_config.logger import get_logger
from src.errors import DomainError, InsufficientDataError
from src.model.params import NonDivParams, map_v_to_u, to_divergence
from src.solver.grid import Trajectory

logger = get_logger(__name__, log_file="diagnostics.log")

SPATIAL_DIMENSION = 1


@dataclass(frozen=True)
class DeGiorgiConfig:
    """
    :param theta: Energy exponent, theta >= 1.
    :param r: Base radius, r > 2 support_radius.
    :param n_max: Index of the last energy computed.
    :param nondiv: Non-divergence exponents (gamma, beta) entering w and q.
    :param support_radius: Radius R0 of a ball holding the initial support.
    """
    theta: float
    r: float
    n_max: int
    nondiv: NonDivParams
    support_radius: float = 1.0

    def __post_init__(self):
        if not self.theta >= 1:
            raise DomainError(f"theta must be >= 1, got {self.theta}")
        if not self.support_radius > 0:
            raise DomainError(f"support radius must be positive, got {self.support_radius}")
        if not self.r > 2.0 * self.support_radius:
            raise DomainError(f"r={self.r} must exceed twice the initial support radius {self.support_radius}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise DomainError(f"n_max must be a non-negative integer, got {self.n_max}")

    def radius(self, n: int) -> float:
        return 2.0 * self.r * (1.0 - 0.5 ** (n + 1))

    @property
    def radii(self) -> List[float]:
        """r_0 .. r_{n_max+1}."""
        return [self.radius(n) for n in range(self.n_max + 2)]

    @property
    def w_exponent(self) -> float:
        p = self.nondiv
        return (self.theta + p.gamma + p.beta + 1.0) / (p.beta + 2.0)

    @property
    def q(self) -> float:
        p = self.nondiv
        return (self.theta + 1.0) * (p.beta + 2.0) / (self.theta + p.gamma + p.beta + 1.0)

    @property
    def zeta(self) -> float:
        p = self.nondiv
        return (p.gamma + p.beta) / (p.gamma + p.beta + SPATIAL_DIMENSION * (p.beta + 2.0) * (self.theta + 1.0))

    @property
    def epsilon0(self) -> float:
        return (1.0 - self.zeta) * ((self.nondiv.beta + 2.0) / self.q - 1.0)


@dataclass(frozen=True)
class DeGiorgiReport:
    q: float
    zeta: float
    epsilon0: float
    I: List[float]
    radii: List[float]
    T: float

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "zeta": self.zeta,
            "epsilon0": self.epsilon0,
            "I": list(self.I),
            "radii": list(self.radii),
            "T": self.T,
        }


def degiorgi_energies(traj: Trajectory, cfg: DeGiorgiConfig, T: Optional[float] = None) -> DeGiorgiReport:
    """
    Energies I_0(T) .. I_{n_max}(T) over the recorded snapshots with t <= T.

    The sup runs over recorded times in (0, T]; the time integral is a trapezoid over the recorded times in [0, T].
    Sums over each exterior are masked, so every I_{n+1} <= I_n holds in floating point as well.

    :param traj: Trajectory of the divergence-form equation.
    :param cfg: Energy configuration; its exponents must map onto the trajectory's.
    :param T: Final time, defaults to the last recorded time.
    :raises DomainError: when r_{n_max+1} leaves the domain or the exponents do not match.
    """
    div = to_divergence(cfg.nondiv)
    if not (np.isclose(div.gamma0, traj.params.gamma0) and np.isclose(div.m, traj.params.m)):
        raise DomainError(
            f"gamma={cfg.nondiv.gamma}, beta={cfg.nondiv.beta} do not map onto "
            f"gamma0={traj.params.gamma0}, m={traj.params.m}"
        )
    radii = cfg.radii
    if radii[-1] >= traj.grid.x_max:
        raise DomainError(f"annulus radius r_{cfg.n_max + 1}={radii[-1]:.6g} leaves the domain x_max={traj.grid.x_max}")

    times = traj.times
    T = float(times[-1]) if T is None else float(T)
    upto = times <= T * (1.0 + 1e-12)
    if upto.sum() < 2:
        raise InsufficientDataError(f"need at least one recorded time in (0, {T}]")
    times = times[upto]

    beta = cfg.nondiv.beta
    dx = traj.grid.dx
    x = np.abs(traj.grid.cell_centers)
    u = map_v_to_u(np.maximum(traj.values[upto], 0.0), div.alpha)
    w = u ** cfg.w_exponent
    w_x = np.gradient(w, dx, axis=1)
    potential = w ** cfg.q
    dissipation = np.abs(w_x) ** (beta + 2.0)

    energies = []
    for n in range(cfg.n_max + 1):
        outside = x > radii[n + 1]
        level = np.where(outside, potential, 0.0).sum(axis=1) * dx
        rate = np.where(outside, dissipation, 0.0).sum(axis=1) * dx
        sup_level = float(level[1:].max())
        integral = float(scipy.integrate.trapezoid(rate, times))
        energies.append(sup_level + integral)

    logger.info(f"De Giorgi energies up to T={T:.6g}: " + ", ".join(f"{value:.3e}" for value in energies))
    return DeGiorgiReport(q=cfg.q, zeta=cfg.zeta, epsilon0=cfg.epsilon0, I=energies, radii=radii, T=T)
