"""Shared fixtures: the benchmark oscillator, its reference, and solved runs."""

import time

import numpy as np
import pytest

import bqode as bq

BENCH_H = 0.01
BENCH_SEED = 0


@pytest.fixture(scope="session")
def vdp():
    return bq.vdp_problem(5.0)


@pytest.fixture(scope="session")
def vdp_model():
    # benchmark defaults: q=3, sigma2=0.1, damping (1, 2)
    return bq.IWPModel(q=3, sigma2=0.1)


@pytest.fixture(scope="session")
def vdp_reference(vdp):
    return bq.reference_solve(vdp, h_ref=5e-4)


@pytest.fixture(scope="session")
def vdp_runs(vdp, vdp_model):
    """Full benchmark-configuration runs per measurement variant, with wall times."""
    generators = {
        "ml": bq.MaxLikelihood(),
        "taylor": bq.TaylorLinearization(vdp.jacobian),
        "mc-filter": bq.MonteCarloIntegration(draws=5, seed=BENCH_SEED),
        "bq5": bq.BayesianQuadrature(5),
        "bq2": bq.BayesianQuadrature(2),
    }
    runs = {}
    for name, gen in generators.items():
        start = time.perf_counter()
        traj = bq.solve(vdp, vdp_model, gen, h=BENCH_H)
        runs[name] = (traj, time.perf_counter() - start)
    return runs


@pytest.fixture(scope="session")
def vdp_sampler(vdp, vdp_model):
    """One empirical measure at the benchmark configuration (S=5), with wall time."""
    config = bq.PerturbedSolverConfig(model=vdp_model, samples=5, seed=BENCH_SEED)
    start = time.perf_counter()
    measure = bq.empirical_measure(config, vdp, BENCH_H)
    return measure, time.perf_counter() - start


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)
