"""Core data types shared across the package.

Metrics are identified by non-empty strings, ordered lexicographically
wherever a deterministic tie-break is needed.  Timestamps are integer
epoch minutes.  All types are immutable after construction and safe to
share between workers.
"""

from __future__ import annotations

import csv
import heapq
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import WindowOutOfRange

MetricId = str

#: A ranked recommendation list: (metric, score) pairs, best first.
Ranking = list[tuple[MetricId, float]]

DEFAULT_T_REF = 120
DEFAULT_T_DELAY = 5
DEFAULT_T_TEST = 10


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One metric's values sampled at a fixed interval.

    Values must be finite; series with missing or non-finite points are
    rejected rather than imputed.
    """

    metric: MetricId
    start_time: int
    values: np.ndarray
    interval: int = 1

    def __post_init__(self):
        if not self.metric:
            raise ValueError("metric id must be a non-empty string")
        if self.interval < 1:
            raise ValueError("interval must be a positive number of minutes")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"series {self.metric!r} must be a non-empty 1-d sequence")
        if not np.isfinite(values).all():
            raise ValueError(f"series {self.metric!r} contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_time(self) -> int:
        """Timestamp of the last sample (inclusive)."""
        return self.start_time + (len(self) - 1) * self.interval

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.metric == other.metric
            and self.start_time == other.start_time
            and self.interval == other.interval
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class Case:
    """A window of multivariate series around one fault detection time.

    The covered span is expected to include [detect_time - t_ref,
    detect_time + t_delay].  The reference range [t_d - t_ref, t_d - t_test]
    is closed on both ends; the test range (t_d + t_delay - t_test,
    t_d + t_delay] is open on the left.  Samples between the two ranges
    belong to neither.
    """

    series: Mapping[MetricId, TimeSeries]
    detect_time: int
    sli: MetricId
    t_ref: int = DEFAULT_T_REF
    t_delay: int = DEFAULT_T_DELAY
    t_test: int = DEFAULT_T_TEST

    def __post_init__(self):
        if not self.series:
            raise ValueError("a case needs at least one series")
        object.__setattr__(self, "series", dict(self.series))
        for name, ts in self.series.items():
            if name != ts.metric:
                raise ValueError(f"series key {name!r} does not match metric {ts.metric!r}")
        first = next(iter(self.series.values()))
        for ts in self.series.values():
            if (ts.start_time, ts.interval, len(ts)) != (first.start_time, first.interval, len(first)):
                raise ValueError("all series in a case must share start_time, interval and length")
        if self.sli not in self.series:
            raise ValueError(f"sli {self.sli!r} has no series in the case")
        if self.t_delay < 0:
            raise ValueError("t_delay must be non-negative")
        if self.t_test <= self.t_delay:
            raise ValueError("t_test must exceed t_delay")
        if self.t_test > self.t_ref:
            raise ValueError("t_test must not exceed t_ref")

    @property
    def start_time(self) -> int:
        return next(iter(self.series.values())).start_time

    @property
    def interval(self) -> int:
        return next(iter(self.series.values())).interval

    @property
    def length(self) -> int:
        return len(next(iter(self.series.values())))

    def metrics(self) -> list[MetricId]:
        """Metric names in lexicographic order."""
        return sorted(self.series)


@dataclass(frozen=True)
class GroundTruth:
    """The labeled root-cause metrics of one case."""

    root_causes: frozenset[MetricId]

    def __post_init__(self):
        object.__setattr__(self, "root_causes", frozenset(self.root_causes))
        if not self.root_causes:
            raise ValueError("ground truth must name at least one root cause")


class CausalGraph:
    """A directed acyclic graph over metric identifiers.

    Edges point from cause (parent) to effect (child).  Construction
    validates acyclicity; parent/children lookups and the topological
    order are precomputed and deterministic.
    """

    __slots__ = ("nodes", "edges", "_parents", "_children", "_order")

    def __init__(self, nodes: Iterable[MetricId], edges: Iterable[tuple[MetricId, MetricId]]):
        self.nodes = frozenset(nodes)
        self.edges = frozenset((str(p), str(c)) for p, c in edges)
        for parent, child in self.edges:
            if parent not in self.nodes or child not in self.nodes:
                raise ValueError(f"edge ({parent!r}, {child!r}) references a missing node")
            if parent == child:
                raise ValueError(f"self-loop on {parent!r}")
        parents: dict[MetricId, list[MetricId]] = {v: [] for v in self.nodes}
        children: dict[MetricId, list[MetricId]] = {v: [] for v in self.nodes}
        for parent, child in self.edges:
            parents[child].append(parent)
            children[parent].append(child)
        self._parents = {v: tuple(sorted(ps)) for v, ps in parents.items()}
        self._children = {v: tuple(sorted(cs)) for v, cs in children.items()}
        self._order = self._topological_order()

    def _topological_order(self) -> tuple[MetricId, ...]:
        # Kahn's algorithm with a heap for lexicographic tie-breaking.
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.nodes):
            raise ValueError("graph contains a cycle")
        return tuple(order)

    def parents(self, node: MetricId) -> tuple[MetricId, ...]:
        return self._parents[node]

    def children(self, node: MetricId) -> tuple[MetricId, ...]:
        return self._children[node]

    def topological_order(self) -> tuple[MetricId, ...]:
        """All nodes, parents before children, lexicographic tie-break."""
        return self._order

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: MetricId) -> bool:
        return node in self.nodes

    def __eq__(self, other) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges))

    def __repr__(self) -> str:
        return f"CausalGraph(nodes={len(self.nodes)}, edges={len(self.edges)})"

    def to_json(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "CausalGraph":
        return cls(payload["nodes"], [tuple(e) for e in payload["edges"]])


def save_graph(graph: CausalGraph, path) -> None:
    Path(path).write_text(json.dumps(graph.to_json(), indent=2, sort_keys=True) + "\n")


def load_graph(path) -> CausalGraph:
    return CausalGraph.from_json(json.loads(Path(path).read_text()))


def window_index_ranges(case: Case) -> tuple[range, range]:
    """Row index ranges of the reference and test windows.

    Raises WindowOutOfRange when the case's series do not cover the span
    [detect_time - t_ref, detect_time + t_delay].
    """
    start, interval, n = case.start_time, case.interval, case.length

    def index_of(ts: int) -> int:
        offset = ts - start
        if offset % interval:
            raise WindowOutOfRange(
                f"timestamp {ts} is not aligned to interval {interval} from {start}"
            )
        return offset // interval

    ref_lo = index_of(case.detect_time - case.t_ref)
    ref_hi = index_of(case.detect_time - case.t_test)
    test_lo = index_of(case.detect_time + case.t_delay - case.t_test) + 1
    test_hi = index_of(case.detect_time + case.t_delay)
    if ref_lo < 0 or test_hi >= n:
        raise WindowOutOfRange(
            f"case covers [{start}, {start + (n - 1) * interval}] but needs "
            f"[{case.detect_time - case.t_ref}, {case.detect_time + case.t_delay}]"
        )
    return range(ref_lo, ref_hi + 1), range(test_lo, test_hi + 1)


def split_case(case: Case) -> tuple[dict[MetricId, np.ndarray], dict[MetricId, np.ndarray]]:
    """Split each series into its reference and test value sequences."""
    ref_idx, test_idx = window_index_ranges(case)
    ref_slice = slice(ref_idx.start, ref_idx.stop)
    test_slice = slice(test_idx.start, test_idx.stop)
    reference = {m: ts.values[ref_slice] for m, ts in case.series.items()}
    test = {m: ts.values[test_slice] for m, ts in case.series.items()}
    return reference, test


def case_matrix(case: Case, metrics: Optional[list[MetricId]] = None) -> np.ndarray:
    """Stack the case's series as a (time, metric) matrix."""
    if metrics is None:
        metrics = case.metrics()
    return np.column_stack([case.series[m].values for m in metrics])


@dataclass(frozen=True)
class LoadedCase:
    """A case read from disk, plus its optional labels."""

    case: Case
    truth: Optional[GroundTruth] = None
    fault_type: Optional[str] = None


def save_case(directory, case: Case, truth: Optional[GroundTruth] = None,
              fault_type: Optional[str] = None) -> None:
    """Write a case directory: data.csv plus case.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    metrics = case.metrics()
    start, interval, n = case.start_time, case.interval, case.length
    columns = [case.series[m].values for m in metrics]
    with open(directory / "data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", *metrics])
        for i in range(n):
            writer.writerow([start + i * interval, *(repr(float(col[i])) for col in columns)])
    meta = {
        "detect_time": case.detect_time,
        "t_ref": case.t_ref,
        "t_delay": case.t_delay,
        "t_test": case.t_test,
        "sli": case.sli,
    }
    if truth is not None:
        meta["root_causes"] = sorted(truth.root_causes)
    if fault_type is not None:
        meta["fault_type"] = fault_type
    with open(directory / "case.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_case(directory) -> LoadedCase:
    """Read a case directory written by save_case."""
    directory = Path(directory)
    meta = json.loads((directory / "case.json").read_text())
    with open(directory / "data.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "timestamp":
            raise ValueError(f"{directory}/data.csv: first column must be 'timestamp'")
        metrics = header[1:]
        rows = list(reader)
    if not rows:
        raise ValueError(f"{directory}/data.csv has no samples")
    try:
        timestamps = [int(row[0]) for row in rows]
        data = np.array([[float(v) for v in row[1:]] for row in rows])
    except ValueError as exc:
        raise ValueError(f"{directory}/data.csv: malformed value ({exc})") from exc
    if data.shape[1] != len(metrics):
        raise ValueError(f"{directory}/data.csv: ragged rows")
    steps = np.diff(timestamps)
    if len(steps) and (steps != steps[0]).any():
        raise ValueError(f"{directory}/data.csv: timestamps are not evenly spaced")
    interval = int(steps[0]) if len(steps) else 1
    series = {
        m: TimeSeries(metric=m, start_time=timestamps[0], interval=interval, values=data[:, j])
        for j, m in enumerate(metrics)
    }
    case = Case(
        series=series,
        detect_time=int(meta["detect_time"]),
        sli=meta["sli"],
        t_ref=int(meta.get("t_ref", DEFAULT_T_REF)),
        t_delay=int(meta.get("t_delay", DEFAULT_T_DELAY)),
        t_test=int(meta.get("t_test", DEFAULT_T_TEST)),
    )
    truth = None
    if meta.get("root_causes"):
        truth = GroundTruth(frozenset(meta["root_causes"]))
    return LoadedCase(case=case, truth=truth, fault_type=meta.get("fault_type"))
