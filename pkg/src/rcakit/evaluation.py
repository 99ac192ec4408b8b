"""Batch evaluation: top-k recall, timing, and report tables.

A case's recall at k is the fraction of its true root causes appearing
in the top k of the ranking; AC@k averages that over a case set and is
non-decreasing in k.  Scores aggregate per graph first, then mean and
standard deviation across graphs.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyCaseSet, RcakitError
from .model import GroundTruth, Ranking
from .scoring import ABNORMAL_THRESHOLD, run_scorer
from .simulation import SimulatedDataset

DEFAULT_K = 5


def case_recall_at_k(ranking: Ranking, truth: GroundTruth, k: int) -> float:
    """|roots among the top k| / |roots| for one case."""
    if k < 1:
        raise ValueError("k must be at least 1")
    top = {metric for metric, _ in ranking[:k]}
    return len(truth.root_causes & top) / len(truth.root_causes)


def ac_at_k(rankings: Sequence[Ranking], truths: Sequence[GroundTruth], k: int) -> float:
    """Mean top-k recall over an aligned set of cases."""
    if len(rankings) != len(truths):
        raise ValueError("rankings and truths must align one to one")
    if not rankings:
        raise EmptyCaseSet("cannot evaluate zero cases")
    return float(np.mean([case_recall_at_k(r, t, k) for r, t in zip(rankings, truths)]))


@dataclass(frozen=True)
class MethodResult:
    """Aggregated evaluation of one scoring method."""

    method: str
    ac_mean: tuple[float, ...]          # index k-1, k = 1..K
    ac_std: tuple[float, ...]           # std across graphs
    avg_at_k: float
    mean_time_s: float
    per_graph: dict[str, tuple[float, ...]]
    by_fault_type: dict[str, dict]
    n_cases: int
    failures: tuple[tuple[str, str, str], ...] = ()
    note: Optional[str] = None


#: Methods whose published definition is a prose sketch; reports mark them.
METHOD_NOTES = {"dfs": "baseline reimplemented from a prose description"}


@dataclass(frozen=True)
class EvalReport:
    k_max: int
    methods: dict[str, MethodResult]
    n_graphs: int
    n_cases: int
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "k_max": self.k_max,
            "n_graphs": self.n_graphs,
            "n_cases": self.n_cases,
            "params": self.params,
            "methods": {
                name: {
                    "ac_mean": list(res.ac_mean),
                    "ac_std": list(res.ac_std),
                    "avg_at_k": res.avg_at_k,
                    "mean_time_s": res.mean_time_s,
                    "per_graph": {g: list(v) for g, v in sorted(res.per_graph.items())},
                    "by_fault_type": res.by_fault_type,
                    "n_cases": res.n_cases,
                    "failures": [list(f) for f in res.failures],
                    "note": res.note,
                }
                for name, res in self.methods.items()
            },
        }


def _score_one(task) -> tuple[str, str, Optional[list], float, Optional[str]]:
    method, graph_id, case_id, case, graph, truth, threshold = task
    start = time.perf_counter()
    try:
        _, ranking = run_scorer(method, case, graph, truth, threshold=threshold)
        elapsed = time.perf_counter() - start
        return graph_id, case_id, ranking, elapsed, None
    except (RcakitError, ValueError) as exc:
        return graph_id, case_id, None, 0.0, f"{type(exc).__name__}: {exc}"


def evaluate(
    dataset: SimulatedDataset,
    methods: Sequence[str],
    k_max: int = DEFAULT_K,
    threshold: float = ABNORMAL_THRESHOLD,
    jobs: int = 1,
) -> EvalReport:
    """Run each method over every case and aggregate AC@k per graph.

    Per-case failures are recorded and excluded from the averages rather
    than aborting the batch.  ``jobs`` > 1 scores cases on a process
    pool; per-case timing is taken on the worker that runs the case.
    """
    if not dataset.graphs:
        raise EmptyCaseSet("dataset has no graphs")
    ks = range(1, k_max + 1)
    results: dict[str, MethodResult] = {}
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for method in methods:
            tasks = [
                (method, g.graph_id, c.case_id, c.case, g.graph, c.truth, threshold)
                for g in dataset.graphs
                for c in g.cases
            ]
            if pool is not None:
                outcomes = list(pool.map(_score_one, tasks, chunksize=8))
            else:
                outcomes = [_score_one(t) for t in tasks]
            # canonical order, so aggregation is invariant to case order
            outcomes.sort(key=lambda o: (o[0], o[1]))

            truth_of = {
                (g.graph_id, c.case_id): c for g in dataset.graphs for c in g.cases
            }
            per_graph_recalls: dict[str, list[np.ndarray]] = {g.graph_id: [] for g in dataset.graphs}
            per_type: dict[str, list[np.ndarray]] = {}
            times: list[float] = []
            failures: list[tuple[str, str, str]] = []
            for graph_id, case_id, ranking, elapsed, error in outcomes:
                record = truth_of[(graph_id, case_id)]
                if error is not None:
                    failures.append((graph_id, case_id, error))
                    continue
                recalls = np.array([case_recall_at_k(ranking, record.truth, k) for k in ks])
                per_graph_recalls[graph_id].append(recalls)
                if record.fault_type:
                    per_type.setdefault(record.fault_type, []).append(recalls)
                times.append(elapsed)

            graph_ac = {
                gid: tuple(np.mean(rows, axis=0)) if rows else tuple([float("nan")] * k_max)
                for gid, rows in per_graph_recalls.items()
            }
            stacked = np.array([v for v in graph_ac.values() if not np.isnan(v).any()])
            if stacked.size == 0:
                raise EmptyCaseSet(f"method {method!r} produced no successful cases")
            ac_mean = stacked.mean(axis=0)
            ac_std = stacked.std(axis=0)
            results[method] = MethodResult(
                method=method,
                ac_mean=tuple(float(v) for v in ac_mean),
                ac_std=tuple(float(v) for v in ac_std),
                avg_at_k=float(ac_mean.mean()),
                mean_time_s=float(np.mean(times)) if times else float("nan"),
                per_graph={g: tuple(float(x) for x in v) for g, v in graph_ac.items()},
                by_fault_type={
                    ft: {
                        "n": len(rows),
                        "ac": [float(v) for v in np.mean(rows, axis=0)],
                    }
                    for ft, rows in sorted(per_type.items())
                },
                n_cases=len(times),
                failures=tuple(failures),
                note=METHOD_NOTES.get(method),
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return EvalReport(
        k_max=k_max,
        methods=results,
        n_graphs=len(dataset.graphs),
        n_cases=dataset.n_cases(),
        params=dict(dataset.params),
    )


def format_table(report: EvalReport) -> str:
    """Plain-text table: method, AC@1, AC@K, Avg@K, mean seconds per case."""
    k = report.k_max

    def cell(mean: float, std: float) -> str:
        return f"{mean:.3f}({std:.2f})"

    header = ["Method", "AC@1", f"AC@{k}", f"Avg@{k}", "T (s)"]
    rows = [header]
    for name, res in report.methods.items():
        rows.append([
            name,
            cell(res.ac_mean[0], res.ac_std[0]),
            cell(res.ac_mean[k - 1], res.ac_std[k - 1]),
            f"{res.avg_at_k:.3f}",
            f"{res.mean_time_s:.3f}",
        ])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(value.ljust(width) for value, width in zip(row, widths)).rstrip())
    for name, res in report.methods.items():
        if res.note:
            lines.append(f"note: {name} is a {res.note}")
    return "\n".join(lines)


def save_report(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
