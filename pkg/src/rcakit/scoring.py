"""Per-metric anomaly scoring and ranking.

Two detectors are provided.  The regression detector (``rht_score``)
fits each metric on its causal parents over the reference window and
scores the test window by the largest standardized residual; a metric
that deviates *given its parents* is a root-cause candidate, while a
metric that merely follows its parents is not.  The plain z-score
detector (``nsigma_score``) ignores the graph.  ``descendant_adjust``
boosts abnormal metrics by the strongest effect observed among their
descendants, and ``dfs_score`` reimplements the classic traversal
baseline that walks the abnormal subgraph upward from the SLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .errors import MissingSeries
from .model import Case, CausalGraph, GroundTruth, MetricId, Ranking, case_matrix, window_index_ranges
from .regression import get_backend, predict_rows, sigma_floor

#: Scores at or above this many sigmas count as abnormal (the three-sigma
#: rule of thumb).  Configurable wherever it is consumed.
ABNORMAL_THRESHOLD = 3.0

#: Registered scorer names accepted by run_scorer and the CLI.
SCORER_NAMES = ("rht", "rht-pg", "circa", "nsigma", "dfs", "ideal")


@dataclass(frozen=True)
class ScoreTable:
    """Raw per-metric scores, plus adjusted scores when computed."""

    raw: dict[MetricId, float]
    adjusted: Optional[dict[MetricId, float]] = None

    def __post_init__(self):
        for metric, score in self.raw.items():
            if not np.isfinite(score) or score < 0:
                raise ValueError(f"raw score for {metric!r} must be finite and >= 0")

    def best(self) -> dict[MetricId, float]:
        """The scores rankings should use: adjusted when present."""
        return self.adjusted if self.adjusted is not None else self.raw

    def to_json(self, ranking: Optional[Ranking] = None) -> dict:
        if ranking is None:
            ranking = rank(self.best())
        return {
            "raw": {m: float(s) for m, s in sorted(self.raw.items())},
            "adjusted": None if self.adjusted is None
            else {m: float(s) for m, s in sorted(self.adjusted.items())},
            "ranking": [[m, float(s)] for m, s in ranking],
        }


def save_scores(path, table: ScoreTable, ranking: Optional[Ranking] = None) -> None:
    Path(path).write_text(json.dumps(table.to_json(ranking), indent=2, sort_keys=True) + "\n")


def _require_series(case: Case, metrics) -> None:
    missing = sorted(set(metrics) - set(case.series))
    if missing:
        raise MissingSeries(f"case has no series for: {', '.join(missing)}")


def rht_score(
    case: Case,
    graph: CausalGraph,
    use_lagged_self: bool = False,
    backend: str = "linear",
) -> dict[MetricId, float]:
    """Score each graph node by its largest standardized test residual.

    For each metric, a regression of the metric on its parents (plus its
    own one-step-lagged value when ``use_lagged_self``) is fitted on the
    reference window.  Every test sample is scored as
    ``|(value - prediction - residual_mean)| / residual_std`` and the
    metric's score is the maximum over the test window.
    """
    _require_series(case, graph.nodes)
    metrics = case.metrics()
    col = {m: j for j, m in enumerate(metrics)}
    full = case_matrix(case, metrics)
    ref_idx, test_idx = window_index_ranges(case)
    ref = full[ref_idx.start:ref_idx.stop]
    test = full[test_idx.start:test_idx.stop]
    test_rows = np.arange(test_idx.start, test_idx.stop)
    fit = get_backend(backend)

    scores: dict[MetricId, float] = {}
    for node in sorted(graph.nodes):
        parents = graph.parents(node)
        pcols = [col[p] for p in parents]
        y = ref[:, col[node]]
        X = ref[:, pcols]
        names = parents
        if use_lagged_self:
            # The lagged value of the first reference sample is unknown, so
            # that row drops out of training.
            X = np.column_stack([X[1:], ref[:-1, col[node]]])
            y = y[1:]
            names = parents + (node,)
        model = fit(y, X, target=node, features=names)
        X_test = test[:, pcols]
        if use_lagged_self:
            X_test = np.column_stack([X_test, full[test_rows - 1, col[node]]])
        deviation = test[:, col[node]] - predict_rows(model, X_test)
        a = np.abs((deviation - model.residual_mean) / model.residual_std)
        scores[node] = float(a.max())
    return scores


def nsigma_score(case: Case) -> dict[MetricId, float]:
    """Score each series by its largest test z-score against the reference."""
    ref_idx, test_idx = window_index_ranges(case)
    scores: dict[MetricId, float] = {}
    for metric, ts in case.series.items():
        ref = ts.values[ref_idx.start:ref_idx.stop]
        test = ts.values[test_idx.start:test_idx.stop]
        mu = float(ref.mean())
        sigma = float(ref.std())  # population std
        sigma = max(sigma, sigma_floor(sigma))
        scores[metric] = float(np.abs(test - mu).max() / sigma)
    return scores


def descendant_adjust(
    scores: Mapping[MetricId, float],
    graph: CausalGraph,
    threshold: float = ABNORMAL_THRESHOLD,
) -> dict[MetricId, float]:
    """Boost abnormal metrics by the largest score among their effects.

    Walking children before parents, each node collects its children's
    scores; children below the threshold pass their own collected set
    upward as well.  A node at or above the threshold gains the maximum
    of its collected set (zero when it has none); others keep their
    score unchanged.
    """
    collected: dict[MetricId, set[float]] = {}
    for node in reversed(graph.topological_order()):
        bag: set[float] = set()
        for child in graph.children(node):
            bag.add(scores[child])
            if scores[child] < threshold:
                bag |= collected[child]
        collected[node] = bag
    adjusted: dict[MetricId, float] = {}
    for node in graph.topological_order():
        score = scores[node]
        if score >= threshold:
            score = score + (max(collected[node]) if collected[node] else 0.0)
        adjusted[node] = score
    return adjusted


def rank(scores: Mapping[MetricId, float]) -> Ranking:
    """Full ranking, descending by score, ties broken by metric name."""
    return [(m, float(s)) for m, s in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def dfs_score(
    case: Case,
    graph: CausalGraph,
    detector_scores: Mapping[MetricId, float],
    threshold: float = ABNORMAL_THRESHOLD,
) -> Ranking:
    """Rank roots of the abnormal subgraph reachable from the SLI.

    Starting at the case's SLI and walking against edge direction through
    abnormal nodes only, the nodes with no abnormal parent become root
    candidates, ordered by detector score.  All remaining metrics follow,
    again by score.  Candidate status dominates the emitted order, so the
    returned list is not globally score-sorted.
    """
    if case.sli not in graph.nodes:
        raise MissingSeries(f"sli {case.sli!r} is not a node of the graph")
    missing = sorted(graph.nodes - set(detector_scores))
    if missing:
        raise MissingSeries(f"no detector score for: {', '.join(missing)}")

    def abnormal(node: MetricId) -> bool:
        return detector_scores[node] >= threshold

    seen = {case.sli}
    stack = [case.sli]
    while stack:
        node = stack.pop()
        for parent in graph.parents(node):
            if parent not in seen and abnormal(parent):
                seen.add(parent)
                stack.append(parent)
    candidates = {
        node for node in seen
        if abnormal(node) and not any(abnormal(p) for p in graph.parents(node))
    }
    ordering = sorted(candidates, key=lambda m: (-detector_scores[m], m))
    rest = sorted(graph.nodes - candidates, key=lambda m: (-detector_scores[m], m))
    return [(m, float(detector_scores[m])) for m in ordering + rest]


def ideal_score(case: Case, truth: GroundTruth) -> dict[MetricId, float]:
    """Oracle scores: 1 for true root causes, 0 elsewhere."""
    return {m: (1.0 if m in truth.root_causes else 0.0) for m in case.series}


def run_scorer(
    name: str,
    case: Case,
    graph: Optional[CausalGraph] = None,
    truth: Optional[GroundTruth] = None,
    threshold: float = ABNORMAL_THRESHOLD,
    lagged: Optional[bool] = None,
    adjust: Optional[bool] = None,
    backend: str = "linear",
) -> tuple[ScoreTable, Ranking]:
    """Run a registered scorer on one case and return scores plus ranking.

    ``lagged`` and ``adjust`` override each scorer's defaults: rht uses
    neither, rht-pg adds the lagged self feature, circa is rht plus
    descendant adjustment, nsigma and ideal ignore the graph, and dfs
    ranks via the traversal baseline fed by nsigma detections.
    """
    if name not in SCORER_NAMES:
        raise ValueError(f"unknown scorer {name!r}; registered: {', '.join(SCORER_NAMES)}")
    if name in ("rht", "rht-pg", "circa", "dfs") and graph is None:
        raise ValueError(f"scorer {name!r} needs a causal graph")

    if name == "nsigma":
        table = ScoreTable(raw=nsigma_score(case))
        return table, rank(table.raw)
    if name == "ideal":
        if truth is None:
            raise ValueError("the ideal scorer needs ground truth labels")
        table = ScoreTable(raw=ideal_score(case, truth))
        return table, rank(table.raw)
    if name == "dfs":
        detector = nsigma_score(case)
        ranking = dfs_score(case, graph, detector, threshold=threshold)
        return ScoreTable(raw=detector), ranking

    use_lagged = {"rht": False, "rht-pg": True, "circa": False}[name] if lagged is None else lagged
    do_adjust = (name == "circa") if adjust is None else adjust
    raw = rht_score(case, graph, use_lagged_self=use_lagged, backend=backend)
    adjusted = descendant_adjust(raw, graph, threshold=threshold) if do_adjust else None
    table = ScoreTable(raw=raw, adjusted=adjusted)
    return table, rank(table.best())
