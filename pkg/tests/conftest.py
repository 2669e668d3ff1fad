"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own fast paths: scalar
loops for intensities, piecewise adaptive quadrature for compensators.
Comparing the two routes is the point, so keep them separate.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

import lobhawkes as lh
from lobhawkes.pattern import STREAMS_PER_ASSET, build_pattern


def make_params_1a(
    mu_up=0.4,
    mu_down=0.3,
    nu_self=0.25,
    nu_within=0.15,
    decay=1.5,
    impact_exponent=1.0,
    mark_rate=2.0,
):
    return lh.symmetric_params(
        n_assets=1,
        mu_up=mu_up,
        mu_down=mu_down,
        nu_self=nu_self,
        nu_within=nu_within,
        nu_cross=0.0,
        decay=decay,
        impact_exponent=impact_exponent,
        mark_rate=mark_rate,
    )


def poisson_params_1a(mu_up=0.4, mu_down=0.3, mark_rate=2.0):
    """No excitation: four independent Poisson streams with exp marks."""
    return make_params_1a(
        mu_up=mu_up, mu_down=mu_down, nu_self=0.0, nu_within=0.0, mark_rate=mark_rate
    )


def self_only_params_1a(mu=0.5, nu=0.3, decay=1.0, impact_exponent=1.0, mark_rate=2.0):
    """Diagonal branching: each stream is a marginally independent
    marked Hawkes process (the closest legal analogue of one stream,
    since baselines are tied across sides)."""
    return make_params_1a(
        mu_up=mu, mu_down=mu, nu_self=nu, nu_within=0.0,
        decay=decay, impact_exponent=impact_exponent, mark_rate=mark_rate,
    )


def random_params(rng, n_assets=1, max_radius=0.9):
    """Random stationary ParameterSet respecting the interaction pattern."""
    pattern = build_pattern(n_assets)
    m = STREAMS_PER_ASSET * n_assets
    mu = np.empty(m)
    for a in range(n_assets):
        up, down = rng.uniform(0.1, 1.0, size=2)
        base = STREAMS_PER_ASSET * a
        mu[base + 0] = mu[base + 2] = up
        mu[base + 1] = mu[base + 3] = down
    nu = np.zeros((m, m))
    cells = pattern.cells()
    nu[tuple(np.array(cells).T)] = rng.uniform(0.05, 0.5, size=len(cells))
    radius = lh.spectral_radius(nu)
    if radius >= max_radius:
        nu *= max_radius / (radius + 1e-12)
    return lh.ParameterSet(
        mu=mu,
        branching=nu,
        decay=rng.uniform(0.5, 3.0, size=m),
        impact_exponent=rng.uniform(0.0, 2.0, size=m),
        mark_rate=rng.uniform(0.5, 4.0, size=m),
        pattern=pattern,
    )


def random_history(rng, params, n_events, t_start=0.0, t_end=100.0):
    """Arbitrary (non-model) history: uniform times, random streams,
    exponential volumes.  Useful for exercising evaluators on inputs
    the simulator would never produce."""
    times = np.sort(rng.uniform(t_start, t_end, size=n_events))
    streams = rng.integers(0, params.n_streams, size=n_events)
    volumes = rng.exponential(1.0 / params.mark_rate[streams])
    return lh.EventStream.from_events(
        times, streams, volumes, t_start, t_end, n_assets=params.n_assets
    )


def brute_intensity(params, history, stream, t):
    """Scalar-loop left-limit intensity, the slow oracle."""
    lam = float(params.mu[stream])
    a = float(params.decay[stream])
    for tk, sk, vk in zip(history.times, history.streams, history.volumes):
        if tk >= t:
            break
        g = float(params.impact_scale[sk]) * vk ** float(params.impact_exponent[sk])
        lam += float(params.branching[stream, sk]) * a * math.exp(-a * (t - tk)) * g
    return lam


def quad_compensator(params, history, stream, t, tol=1e-11):
    """Piecewise adaptive quadrature of the brute intensity on
    [t_start, t]; the segments between events are smooth."""
    cuts = [history.t_start]
    for tk in history.times:
        if history.t_start < tk < t:
            cuts.append(float(tk))
    cuts.append(t)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        val, _ = quad(
            lambda u: brute_intensity(params, history, stream, u),
            lo,
            hi,
            epsabs=tol,
            epsrel=tol,
            limit=200,
        )
        total += val
    return total


@pytest.fixture
def basic_params():
    return make_params_1a()


@pytest.fixture
def two_asset_params():
    return lh.symmetric_params(
        n_assets=2,
        mu_up=0.3,
        mu_down=0.25,
        nu_self=0.2,
        nu_within=0.1,
        nu_cross=0.15,
        decay=2.0,
        impact_exponent=0.8,
        mark_rate=1.5,
    )


@pytest.fixture(scope="session")
def sim_history():
    """One medium simulated history shared by read-only tests."""
    params = make_params_1a()
    result = lh.simulate(params, lh.SimConfig(horizon_end=800.0, seed=42))
    return params, result.events
