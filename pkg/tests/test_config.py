from pathlib import Path

import pytest

from wiretap.channel import FiniteMass, RayleighFading
from wiretap.config import config_hash, dump_distribution, load_config, load_distribution, parse_config
from wiretap.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_shipped_configs_load():
    cfg = load_config(CONFIGS / "rayleigh_sweep.toml")
    assert cfg.snr_db == tuple(float(x) for x in range(0, 21, 2))
    assert cfg.distribution == RayleighFading(1.0, 1.0)
    assert cfg.output == CONFIGS / "out" / "rayleigh_sweep.csv"
    assert cfg.surface.budget == pytest.approx(10.0)
    assert len(cfg.surface.g1) == 51
    mass = load_config(CONFIGS / "mass_points_sweep.toml")
    assert isinstance(mass.distribution, FiniteMass)
    assert len(mass.distribution.states) == 100


def test_points_and_noise_scaling():
    cfg = parse_config(
        """
        [distribution]
        kind = "finite-mass"
        mu2 = 2.0
        nu2 = 0.5
        points = [[2.0, 1.0, 0.25], [4.0, 0.0, 0.75]]
        [experiment]
        snr_db = [0, 10]
        """
    )
    assert [(s.g1, s.g2) for s in cfg.distribution.states] == [(1.0, 2.0), (2.0, 0.0)]
    assert cfg.distribution.probs == (0.25, 0.75)


def test_hash_ignores_output_and_workers():
    text = '[distribution]\nkind = "rayleigh-unit"\n[experiment]\nsnr_db = [0, 5]\n'
    a = parse_config(text)
    b = a.with_overrides(workers=4, output=Path("x.csv"))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(a.with_overrides(seed=2))


@pytest.mark.parametrize(
    "text, where",
    [
        ('[distribution]\nkind = "nope"\n', "distribution.kind"),
        ('[experiment]\nsnr_db = [0]\n', "missing [distribution]"),
        ('[distribution]\nkind = "rayleigh-unit"\n[experiment]\nsnr_db = [5, 0]\n', "experiment.snr_db"),
        ('[distribution]\nkind = "rayleigh-unit"\n[experiment]\nsamples = 10\n', "experiment.samples"),
        ('[distribution]\nkind = "rayleigh-unit"\n[experiment]\nseed = -1\n', "experiment.seed"),
        ('[distribution]\nkind = "rayleigh-unit"\n[experiment]\npolicies = ["best"]\n', "experiment.policies"),
        ('[distribution]\nkind = "rayleigh"\nmean_h1 = -1\n', "distribution.mean_h1"),
        (
            '[distribution]\nkind = "finite-mass"\npoints = [[1, 0, 0.5], [2, 0, 0.4]]\n',
            "distribution.points",
        ),
        ('[distribution]\nkind = "rayleigh-unit"\n[bogus]\n', "unknown table"),
        ('[distribution\nkind = "x"\n', "line 1"),
    ],
)
def test_config_errors_name_the_field(text, where):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.toml")
    assert where in str(info.value)


def test_finite_mass_sampled_count_not_checked():
    # exact laws ignore the Monte Carlo sample floor
    cfg = parse_config('[distribution]\nkind = "finite-mass"\nlevels = [1, 2]\n[experiment]\nsamples = 1\n')
    assert cfg.mc_samples == 1


def test_external_sampler_by_path():
    dist = load_distribution('[distribution]\nkind = "external"\nsampler = "numpy.random:default_rng"\n')
    assert dist.name == "numpy.random:default_rng"
    with pytest.raises(ConfigError, match="distribution.sampler"):
        load_distribution('[distribution]\nkind = "external"\nsampler = "no_such_mod:f"\n')


def test_dump_is_stable():
    d = FiniteMass(((0.1, 0.2), (0.3, 0.0)), (0.3, 0.7))
    assert dump_distribution(d) == dump_distribution(load_distribution(dump_distribution(d)))
