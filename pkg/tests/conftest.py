import pytest

from src.model.params import DivParams
from src.solver.grid import Grid, Schedule
from src.solver.solver1d import mound_ic, run


@pytest.fixture
def small_grid():
    return Grid(x_max=6.0, n_cells=240)


@pytest.fixture(scope="session")
def porous_trajectory():
    """Porous-medium run (gamma0=1, m=0) from the mound, recorded on [0, 2] including t = 0.5, 1 and 2."""
    grid = Grid(x_max=6.0, n_cells=300)
    schedule = Schedule.log_spaced(
        t_end=2.0, n_snapshots=20, first_snapshot=0.01, extra_times=(0.5, 1.0), dt_max=0.02
    )
    return run(mound_ic(grid), DivParams(gamma0=1.0, m=0.0), grid, schedule)


@pytest.fixture
def write_config(tmp_path):
    """Write YAML text to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "config.yaml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
