import numpy as np
import pytest

from src.diagnostics.degiorgi import DeGiorgiConfig, degiorgi_energies
from src.errors import DomainError
from src.model.params import NonDivParams
from src.model.selfsim import SelfSimilarSolution, sample_trajectory
from src.solver.grid import Grid

POROUS_NONDIV = NonDivParams(gamma=0.5, beta=0.0)


def _config(**overrides):
    options = dict(theta=1.0, r=2.2, n_max=2, nondiv=POROUS_NONDIV)
    options.update(overrides)
    return DeGiorgiConfig(**options)


@pytest.mark.parametrize(
    "overrides",
    [{"theta": 0.5}, {"r": 2.0}, {"n_max": -1}, {"n_max": 1.5}, {"support_radius": 0.0}],
)
def test_config_validation(overrides):
    with pytest.raises(DomainError):
        _config(**overrides)


def test_exponents():
    cfg = _config()
    assert cfg.q == pytest.approx(1.6)
    assert cfg.zeta == pytest.approx(1.0 / 9.0)
    assert cfg.epsilon0 == pytest.approx(2.0 / 9.0)
    assert cfg.w_exponent == pytest.approx(1.25)


def test_radii():
    cfg = _config()
    np.testing.assert_allclose(cfg.radii, [2.2, 3.3, 3.85, 4.125])
    assert cfg.radius(0) == pytest.approx(cfg.r)


def test_energies_vanish_while_support_is_inside():
    grid = Grid(x_max=6.0, n_cells=600)
    traj = sample_trajectory(SelfSimilarSolution.build(1.0, 0.0), grid, [0.1, 0.5, 1.0])
    report = degiorgi_energies(traj, _config())
    assert report.I == [0.0, 0.0, 0.0]
    assert report.T == 1.0
    assert report.to_dict()["q"] == pytest.approx(1.6)


def test_energies_of_solver_run(porous_trajectory):
    report = degiorgi_energies(porous_trajectory, _config(n_max=4))
    assert len(report.I) == 5
    assert all(later <= earlier for earlier, later in zip(report.I, report.I[1:]))
    assert report.I[0] <= 1e-10


def test_energies_are_positive_once_mass_reaches_the_annulus():
    grid = Grid(x_max=8.0, n_cells=400)
    traj = sample_trajectory(SelfSimilarSolution.build(1.0, 0.0), grid, [1.0, 8.0, 27.0])
    report = degiorgi_energies(traj, _config())
    assert report.I[0] > 0
    assert report.I[0] >= report.I[1] >= report.I[2]


def test_energies_up_to_intermediate_time(porous_trajectory):
    report = degiorgi_energies(porous_trajectory, _config(), T=1.0)
    assert report.T == 1.0


def test_radius_beyond_domain_is_rejected():
    grid = Grid(x_max=4.0, n_cells=200)
    traj = sample_trajectory(SelfSimilarSolution.build(1.0, 0.0), grid, [0.5, 1.0])
    with pytest.raises(DomainError, match="leaves the domain"):
        degiorgi_energies(traj, _config(n_max=6))


def test_mismatched_exponents_are_rejected(porous_trajectory):
    with pytest.raises(DomainError):
        degiorgi_energies(porous_trajectory, _config(nondiv=NonDivParams(gamma=0.0, beta=0.0)))
