import pytest

from src.errors import ConfigError, DomainError
from src.experiments.config import apply_overrides, load_config, parse_config
from src.model.params import DivParams

MINIMAL = "mode: selfsim\ngamma0: 1.0\nm: 0.0\n"


def test_minimal_config_fills_defaults():
    config = parse_config(MINIMAL)
    assert config.mode == "selfsim"
    assert config.grid.x_max == 12.0 and config.grid.n_cells == 2400
    assert config.schedule.t_end == 10.0
    assert config.schedule.dt_max == 0.005
    assert config.ic.kind == "mound" and config.ic.x0 == 1.0
    assert config.fit_window == (1.0, 10.0)
    assert config.div_params() == DivParams(gamma0=1.0, m=0.0)
    assert config.time_factor() == 1.0
    assert not config.has_nondivergence_input


def test_nondivergence_input_is_mapped():
    config = parse_config("mode: simulate\ngamma: 0.5\nbeta: 1\ntau0: 2.0\n")
    div = config.div_params()
    assert (div.gamma0, div.m, div.q0, div.alpha) == pytest.approx((2.0, 1.0, 2.0, 1.0))
    # q0 / ((1 + beta) tau0)
    assert config.time_factor() == pytest.approx(0.5)
    assert config.nondiv_params().gamma == 0.5


def test_divergence_input_recovers_nondivergence_exponents():
    nondiv = parse_config("mode: simulate\ngamma0: 2.0\nm: 1.0\n").nondiv_params()
    assert nondiv.gamma == pytest.approx(0.5)
    assert nondiv.beta == 1.0


def test_duplicate_key_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("mode: simulate\ngamma0: 1.0\ngamma0: 2.0\nm: 0.0\n")
    assert info.value.line == 3
    assert "duplicate" in str(info.value)


def test_unknown_key_reports_key_and_line():
    text = "mode: simulate\ngamma0: 1.0\nm: 0.0\ngrid:\n  n_cels: 100\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "grid.n_cels"
    assert info.value.line == 5
    assert info.value.to_dict()["code"] == "config_error"


def test_malformed_yaml():
    with pytest.raises(ConfigError) as info:
        parse_config("mode: simulate\ngamma0: [1.0\n")
    assert info.value.line is not None


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError):
        parse_config("- simulate\n")


def test_gamma_one_violates_mapping_hypothesis():
    with pytest.raises(DomainError, match="mapping theorem hypothesis violated"):
        parse_config("mode: simulate\ngamma: 1.0\nbeta: 0.0\n")


@pytest.mark.parametrize(
    "text",
    [
        "mode: simulate\ngamma0: 1.0\nm: 0.0\ngamma: 0.5\n",
        "mode: simulate\ngamma0: 1.0\n",
        "mode: simulate\n",
        "mode: simulate\ngamma0: 1.0\nm: 0.0\nfit_window: [10.0, 1.0]\n",
        "mode: simulate\ngamma0: 1.0\nm: 0.0\nic: {kind: point_source}\n",
        "mode: simulate\ngamma0: 1.0\nm: 0.0\nworkers: 0\n",
        "mode: rerun\ngamma0: 1.0\nm: 0.0\n",
        "mode: verify-mapping\ngamma: 0.5\nbeta: 1.0\nmapping: {dt_power: 0}\n",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_invalid_domain_values_surface_as_domain_errors():
    with pytest.raises(DomainError):
        parse_config(MINIMAL + "grid: {n_cells: 4}\n")
    with pytest.raises(DomainError):
        parse_config("mode: simulate\ngamma0: 1.0\nm: -2.0\n")


def test_acceptance_needs_no_exponents():
    config = parse_config("mode: acceptance\n")
    assert config.mode == "acceptance"
    assert config.gamma0 is None and config.gamma is None


def test_overrides_and_output_dir():
    config = parse_config(MINIMAL, overrides=["grid.n_cells=1200", "schedule.t_end=2.5", "mode=simulate"],
                          output_dir="out/run")
    assert config.grid.n_cells == 1200
    assert config.schedule.t_end == 2.5
    assert config.mode == "simulate"
    assert config.output_dir == "out/run"


@pytest.mark.parametrize("override", ["grid", "=3", "mode.x=1"])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        apply_overrides({"mode": "simulate"}, [override])


def test_override_creates_missing_sections():
    payload = apply_overrides({}, ["degiorgi.theta=2"])
    assert payload == {"degiorgi": {"theta": 2}}


def test_load_config_reads_file(write_config):
    path = write_config(MINIMAL + "schedule: {snapshot_times: [0.5, 1.0], t_end: 1.0}\n")
    config = load_config(path)
    assert config.schedule.build().snapshot_times == (0.5, 1.0)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.yaml")


def test_to_dict_round_trips():
    config = parse_config(MINIMAL)
    assert parse_config(MINIMAL).to_dict() == config.to_dict()
    assert config.to_dict()["fit_window"] == [1.0, 10.0]
