"""Shared fixtures: the expensive simulations and surfaces, built once."""

import pytest

import tailgauge as tg

ALPHA999 = tg.ConfidenceLevel(0.999)
FIG1_SEED = 20240811


@pytest.fixture(scope="session")
def fig1_spec():
    return tg.DensitySpec(n=100, alpha=ALPHA999, sigma=1.0, xi=0.25)


@pytest.fixture(scope="session")
def fig1_stats(fig1_spec):
    return tg.stats(fig1_spec)


@pytest.fixture(scope="session")
def fig1_report():
    """10^4 replications of the n=100 estimation experiment, fixed seed."""
    cfg = tg.SimConfig(n=100, replications=10_000,
                       params=tg.GpdParams(1.0, 0.25), alpha=ALPHA999,
                       seed=FIG1_SEED)
    return tg.run(cfg)


@pytest.fixture(scope="session")
def mle_cov_n1000():
    """Empirical vs theoretical estimator covariance at n=1000, R=5000."""
    cfg = tg.SimConfig(n=1000, replications=5000,
                       params=tg.GpdParams(1.0, 0.25), alpha=ALPHA999, seed=71)
    return tg.check_mle_asymptotics(cfg)


@pytest.fixture(scope="session")
def default_grid_stats():
    """QuantileStats over the default 20 x 6 published-table grid."""
    out = {}
    for n in tg.DEFAULT_N_GRID:
        for xi in tg.DEFAULT_XI_GRID:
            out[(n, xi)] = tg.stats(
                tg.DensitySpec(n=n, alpha=ALPHA999, sigma=1.0, xi=xi))
    return out


@pytest.fixture(scope="session")
def regression_surface():
    """The 20 x 11 surface the bias-law constants are recovered from."""
    xis = [round(0.05 * k, 2) for k in range(11)]
    return tg.bias_variance_surface(tg.DEFAULT_N_GRID, xis, ALPHA999, 1.0)
