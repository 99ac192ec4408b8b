"""Compile architecture knowledge into a causal graph over metrics.

The compiler runs in two stages.  First the service call graph expands
into a *skeleton*: a DAG over (service, dimension) pairs, where each
service carries the four golden-signal dimensions (traffic, saturation,
latency, errors) with fixed intra-service causal directions, and each
call edge wires the callee's dimensions into the caller as if they were
part of the caller's saturation.  Second, monitoring metrics are plugged
into the skeleton: each metric receives edges from the metrics of its
dimension's skeleton parents, dimensions without any metric of their own
forward their parents' metrics to their children, error dimensions
additionally pass their parents' error metrics downstream, and a metric
measuring several dimensions at once is attached at the last of them in
topological order so no cycle can arise.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .errors import CyclicCallGraph, ResultNotDag, UnknownMetaMetric
from .model import CausalGraph, MetricId


class MetaMetricDim(str, Enum):
    """The four per-service measurement dimensions."""

    TRAFFIC = "traffic"
    SATURATION = "saturation"
    LATENCY = "latency"
    ERRORS = "errors"


@dataclass(frozen=True)
class ServiceNode:
    """One service and the services it calls."""

    service: str
    callees: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.service:
            raise ValueError("service name must be non-empty")
        object.__setattr__(self, "callees", tuple(self.callees))


@dataclass(frozen=True, order=True)
class MetaMetric:
    """A (service, dimension) node of the skeleton."""

    service: str
    dim: MetaMetricDim

    def __str__(self) -> str:
        return f"{self.service}.{self.dim.value}"


@dataclass(frozen=True)
class ArchitectureSpec:
    """Call graph plus the metric -> meta-metric mapping.

    The mapping is stored in the direction operators label metrics
    (metric to the dimensions it measures); the compiler inverts it.
    """

    services: tuple[ServiceNode, ...]
    metric_map: Mapping[MetricId, frozenset[MetaMetric]]

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        normalized = {}
        for metric, metas in dict(self.metric_map).items():
            metas = frozenset(metas)
            if not metric:
                raise ValueError("metric name must be non-empty")
            if not metas:
                raise ValueError(f"metric {metric!r} maps to no meta metric")
            normalized[metric] = metas
        object.__setattr__(self, "metric_map", normalized)


class Skeleton:
    """DAG over meta metrics, with deterministic topological order."""

    __slots__ = ("nodes", "edges", "_parents", "_children", "_order")

    def __init__(self, nodes: Iterable[MetaMetric], edges: Iterable[tuple[MetaMetric, MetaMetric]]):
        self.nodes = frozenset(nodes)
        self.edges = frozenset(edges)
        parents: dict[MetaMetric, list[MetaMetric]] = {v: [] for v in self.nodes}
        children: dict[MetaMetric, list[MetaMetric]] = {v: [] for v in self.nodes}
        for parent, child in self.edges:
            parents[child].append(parent)
            children[parent].append(child)
        self._parents = {v: tuple(sorted(ps)) for v, ps in parents.items()}
        self._children = {v: tuple(sorted(cs)) for v, cs in children.items()}
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
            raise ResultNotDag("skeleton contains a cycle")
        self._order = tuple(order)

    def parents(self, node: MetaMetric) -> tuple[MetaMetric, ...]:
        return self._parents[node]

    def children(self, node: MetaMetric) -> tuple[MetaMetric, ...]:
        return self._children[node]

    def topological_order(self) -> tuple[MetaMetric, ...]:
        return self._order


#: Intra-service causal directions: traffic drives everything, saturation
#: drives latency and errors, latency drives errors.
_WITHIN_SERVICE_EDGES = (
    (MetaMetricDim.TRAFFIC, MetaMetricDim.SATURATION),
    (MetaMetricDim.TRAFFIC, MetaMetricDim.LATENCY),
    (MetaMetricDim.TRAFFIC, MetaMetricDim.ERRORS),
    (MetaMetricDim.SATURATION, MetaMetricDim.LATENCY),
    (MetaMetricDim.SATURATION, MetaMetricDim.ERRORS),
    (MetaMetricDim.LATENCY, MetaMetricDim.ERRORS),
)


def _check_call_graph(services: Sequence[ServiceNode]) -> dict[str, tuple[str, ...]]:
    """Validate the call graph and return name -> callees, including
    implicitly declared leaf services."""
    callees_of: dict[str, tuple[str, ...]] = {}
    for svc in services:
        if svc.service in callees_of:
            raise ValueError(f"service {svc.service!r} declared twice")
        callees_of[svc.service] = svc.callees
    for svc in services:
        for callee in svc.callees:
            callees_of.setdefault(callee, ())
    # Cycle check by depth-first search with a path marker.
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in callees_of}
    for root in sorted(callees_of):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(callees_of[root]))]
        color[root] = GREY
        while stack:
            name, it = stack[-1]
            advanced = False
            for callee in it:
                if color[callee] == GREY:
                    raise CyclicCallGraph(f"call cycle through {callee!r}")
                if color[callee] == WHITE:
                    color[callee] = GREY
                    stack.append((callee, iter(callees_of[callee])))
                    advanced = True
                    break
            if not advanced:
                color[name] = BLACK
                stack.pop()
    return callees_of


def build_skeleton(services: Sequence[ServiceNode]) -> Skeleton:
    """Expand a service call graph into the meta-metric skeleton.

    Callees that appear only on the right-hand side of a call are treated
    as leaf services.
    """
    callees_of = _check_call_graph(services)
    T, S, L, E = (MetaMetricDim.TRAFFIC, MetaMetricDim.SATURATION,
                  MetaMetricDim.LATENCY, MetaMetricDim.ERRORS)
    nodes = {MetaMetric(name, dim) for name in callees_of for dim in MetaMetricDim}
    edges = set()
    for name in callees_of:
        for src, dst in _WITHIN_SERVICE_EDGES:
            edges.add((MetaMetric(name, src), MetaMetric(name, dst)))
    for caller, callees in callees_of.items():
        for callee in callees:
            # The caller's traffic drives the callee's traffic; every callee
            # dimension stands in for the caller's saturation, feeding the
            # caller's latency and errors.
            edges.add((MetaMetric(caller, T), MetaMetric(callee, T)))
            for dim in MetaMetricDim:
                edges.add((MetaMetric(callee, dim), MetaMetric(caller, L)))
                edges.add((MetaMetric(callee, dim), MetaMetric(caller, E)))
    return Skeleton(nodes, edges)


def build_structural_graph(spec: ArchitectureSpec) -> CausalGraph:
    """Plug monitoring metrics into the skeleton to get the metric DAG."""
    skeleton = build_skeleton(spec.services)
    hosts: dict[MetricId, frozenset[MetaMetric]] = dict(spec.metric_map)
    for metric, metas in hosts.items():
        for meta in metas:
            if meta not in skeleton.nodes:
                raise UnknownMetaMetric(f"metric {metric!r} maps to unknown {meta}")

    # Invert the operator-facing mapping: meta metric -> its monitoring metrics.
    assigned: dict[MetaMetric, set[MetricId]] = {v: set() for v in skeleton.nodes}
    for metric, metas in hosts.items():
        for meta in metas:
            assigned[meta].add(metric)

    order = skeleton.topological_order()
    order_index = {meta: i for i, meta in enumerate(order)}
    last_host = {
        metric: max(metas, key=order_index.__getitem__)
        for metric, metas in hosts.items()
        if len(metas) > 1
    }

    edges: set[tuple[MetricId, MetricId]] = set()
    current: dict[MetaMetric, set[MetricId]] = {}

    def add_edges(sources: Iterable[MetricId], targets: Iterable[MetricId]) -> None:
        for tgt in targets:
            for src in sources:
                if src != tgt:
                    edges.add((src, tgt))

    for meta in order:
        incoming: set[MetricId] = set()
        for parent in skeleton.parents(meta):
            incoming |= current[parent]
        own = set(assigned[meta])
        for metric in sorted(assigned[meta]):
            if metric in last_host:
                own.discard(metric)  # a multi-dimension metric cannot feed itself
                if last_host[metric] == meta:
                    # Attach the metric below its other dimensions and let it
                    # stand in for them toward this dimension's metrics.
                    for other in hosts[metric]:
                        if other != meta:
                            add_edges(current[other], [metric])
                    incoming.add(metric)
        add_edges(incoming, own)
        if meta.dim is MetaMetricDim.ERRORS:
            # Error metrics propagate to downstream consumers unvalidated,
            # so parents' error metrics ride along with this dimension's own.
            for parent in skeleton.parents(meta):
                if parent.dim is MetaMetricDim.ERRORS:
                    own |= current[parent]
        current[meta] = own if own else incoming

    try:
        return CausalGraph(nodes=hosts.keys(), edges=edges)
    except ValueError as exc:
        raise ResultNotDag(str(exc)) from exc


def load_architecture(path) -> ArchitectureSpec:
    """Parse an arch.yaml file into an ArchitectureSpec."""
    payload = yaml.safe_load(Path(path).read_text())
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: expected a mapping with 'services' and 'metrics'")
    services = []
    for i, entry in enumerate(payload.get("services") or []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise ValueError(f"{path}: services[{i}] needs a 'name'")
        services.append(ServiceNode(service=str(entry["name"]),
                                    callees=tuple(entry.get("callees") or ())))
    metric_map: dict[MetricId, frozenset[MetaMetric]] = {}
    for i, entry in enumerate(payload.get("metrics") or []):
        if not isinstance(entry, dict) or "name" not in entry or not entry.get("maps_to"):
            raise ValueError(f"{path}: metrics[{i}] needs 'name' and a non-empty 'maps_to'")
        name = str(entry["name"])
        if name in metric_map:
            raise ValueError(f"{path}: metric {name!r} declared twice")
        metas = set()
        for j, target in enumerate(entry["maps_to"]):
            try:
                dim = MetaMetricDim(str(target["dim"]).lower())
            except (KeyError, TypeError, ValueError):
                raise ValueError(
                    f"{path}: metrics[{i}].maps_to[{j}] needs service and "
                    f"dim in {{traffic, saturation, latency, errors}}"
                ) from None
            metas.add(MetaMetric(service=str(target["service"]), dim=dim))
        metric_map[name] = frozenset(metas)
    return ArchitectureSpec(services=tuple(services), metric_map=metric_map)
