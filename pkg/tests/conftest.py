"""Shared builders for the test suite."""

import numpy as np
import pytest

from rcakit.model import Case, CausalGraph, TimeSeries
from rcakit.simulation import WeightedDag


def make_case(values_by_metric, detect_time, sli=None, start_time=None,
              t_ref=120, t_delay=5, t_test=10):
    """Build a Case from plain value sequences sharing one clock."""
    metrics = sorted(values_by_metric)
    if sli is None:
        sli = metrics[0]
    if start_time is None:
        start_time = detect_time - t_ref
    series = {
        m: TimeSeries(metric=m, start_time=start_time, values=np.asarray(v, dtype=float))
        for m, v in values_by_metric.items()
    }
    return Case(series=series, detect_time=detect_time, sli=sli,
                t_ref=t_ref, t_delay=t_delay, t_test=t_test)


def chain_dag(weights=(1.2, -0.8), sigma=(0.7, 1.1, 0.9), beta=0.1):
    """Three-node chain m2 -> m1 -> m0 (node 0 is the SLI sink)."""
    A = np.zeros((3, 3))
    A[1, 2] = weights[0]
    A[0, 1] = weights[1]
    return WeightedDag(A=A, sigma=np.asarray(sigma, dtype=float), beta=beta)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dagscores(rng, n_nodes=8, edge_prob=0.35, score_scale=6.0):
    """A random DAG plus random non-negative scores, for property tests."""
    names = [f"n{i}" for i in range(n_nodes)]
    edges = [
        (names[j], names[i])
        for i in range(n_nodes)
        for j in range(i)
        if rng.random() < edge_prob
    ]
    graph = CausalGraph(nodes=names, edges=edges)
    scores = {m: float(rng.random() * score_scale) for m in names}
    return graph, scores
