"""Synthetic benchmark generation.

Systems are drawn as random connected DAGs whose weighted adjacency
matrix drives a first-order vector autoregression: each sample solves
``x = A x + beta * x_prev + noise``, i.e. ``x = W (beta * x_prev + noise)``
with ``W = (I - A)^-1``.  Node 0 is the SLI sink; every other node has a
directed path into it.  Faults shift the noise of a sampled root set for
two consecutive samples, scaled so the expected SLI deviation clears
three reference standard deviations, and are classified by how strongly
each root propagates into the SLI.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EdgeBudgetInfeasible, NoEffectiveFault
from .model import (
    DEFAULT_T_DELAY,
    DEFAULT_T_REF,
    DEFAULT_T_TEST,
    Case,
    CausalGraph,
    GroundTruth,
    LoadedCase,
    MetricId,
    TimeSeries,
    load_case,
    save_case,
)

DEFAULT_BETA = 0.1
DEFAULT_POISSON_RATE = 1.0
#: Noise standard deviations below this are clipped to keep metrics alive.
MIN_NOISE_STD = 0.01
WEIGHT_LOW, WEIGHT_HIGH = 0.5, 2.0
FAULT_DURATION = 2
#: Scale of the per-root noise-shift magnitude drawn at injection time,
#: before the vector is scaled up to guarantee a three-sigma SLI effect.
ALPHA_SCALE = 3.0


class FaultType(str, Enum):
    WEAK = "Weak"
    MIXED = "Mixed"
    STRONG = "Strong"


def metric_name(index: int, n_node: int) -> MetricId:
    """Zero-padded node name so lexicographic order matches node order."""
    return f"m{index:0{len(str(n_node - 1))}d}"


@dataclass(frozen=True)
class WeightedDag:
    """Weighted adjacency matrix of the simulated system.

    ``A[i, j] != 0`` means node j causes node i with that weight.  The
    nonzero pattern must be acyclic, node 0 must have no children, and
    weight magnitudes must lie in (0.5, 2.0).
    """

    A: np.ndarray
    sigma: np.ndarray
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        n = A.shape[0]
        if sigma.shape != (n,):
            raise ValueError("sigma must have one entry per node")
        if (sigma <= 0).any():
            raise ValueError("noise standard deviations must be positive")
        if np.diagonal(A).any():
            raise ValueError("A must have a zero diagonal")
        if A[:, 0].any():
            raise ValueError("node 0 is the SLI sink and may cause nothing")
        nz = np.abs(A[A != 0])
        if nz.size and ((nz <= WEIGHT_LOW) | (nz >= WEIGHT_HIGH)).any():
            raise ValueError(f"edge weight magnitudes must lie in ({WEIGHT_LOW}, {WEIGHT_HIGH})")
        A.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", sigma)
        # Building the graph validates acyclicity of the edge pattern.
        self.to_causal_graph()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def node_names(self) -> list[MetricId]:
        return [metric_name(i, self.n) for i in range(self.n)]

    def to_causal_graph(self) -> CausalGraph:
        names = self.node_names()
        effects, causes = np.nonzero(self.A)
        edges = [(names[j], names[i]) for i, j in zip(effects, causes)]
        return CausalGraph(nodes=names, edges=edges)


def propagation_matrix(dag: WeightedDag) -> np.ndarray:
    """W = (I - A)^-1; W[i, j] is how much node i moves per unit of node j."""
    eye = np.eye(dag.n)
    return np.linalg.solve(eye - dag.A, eye)


def _as_rng(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def generate_dag(n_node: int, n_edge: int, rng_seed) -> WeightedDag:
    """Draw a connected DAG with the requested node and edge counts.

    A random tree pointing every node at a lower-indexed one guarantees
    connectivity and a path from every node into the SLI; the remaining
    edges are sampled uniformly over unused (higher -> lower) pairs.
    Weight magnitudes are uniform in (0.5, 2.0) with random sign; noise
    standard deviations are exponential with scale 1, floored at 0.01.
    """
    if n_node < 1:
        raise ValueError("need at least one node")
    max_edges = n_node * (n_node - 1) // 2
    if n_edge < n_node - 1 or n_edge > max_edges:
        raise EdgeBudgetInfeasible(
            f"{n_edge} edges infeasible for {n_node} nodes "
            f"(valid range: [{n_node - 1}, {max_edges}])"
        )
    rng = _as_rng(rng_seed)
    edges: list[tuple[int, int]] = []
    used = set()
    for i in range(1, n_node):
        j = int(rng.integers(0, i))
        edges.append((i, j))
        used.add((i, j))
    for _ in range(n_edge - (n_node - 1)):
        pair = None
        for _ in range(200):
            a, b = rng.integers(0, n_node, size=2)
            if a == b:
                continue
            i, j = (int(a), int(b)) if a > b else (int(b), int(a))
            if (i, j) not in used:
                pair = (i, j)
                break
        if pair is None:
            # Rejection stalled (dense graph); fall back to an explicit draw
            # over the remaining pairs.
            free = sorted(
                (i, j) for i in range(1, n_node) for j in range(i) if (i, j) not in used
            )
            pair = free[int(rng.integers(0, len(free)))]
        edges.append(pair)
        used.add(pair)

    magnitudes = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=len(edges))
    signs = rng.integers(0, 2, size=len(edges)) * 2 - 1
    sigma = np.maximum(rng.exponential(1.0, size=n_node), MIN_NOISE_STD)
    A = np.zeros((n_node, n_node))
    for (i, j), mag, sign in zip(edges, magnitudes, signs):
        A[j, i] = sign * mag  # i causes j
    return WeightedDag(A=A, sigma=sigma)


def simulate_matrix(dag: WeightedDag, length: int, rng_seed) -> np.ndarray:
    """Simulate the autoregression; returns a (length, n) matrix."""
    if length < 2:
        raise ValueError("length must be at least 2 samples")
    rng = _as_rng(rng_seed)
    W = propagation_matrix(dag)
    noise = rng.standard_normal((length, dag.n)) * dag.sigma
    X = np.empty((length, dag.n))
    X[0] = W @ noise[0]
    for t in range(1, length):
        X[t] = W @ (dag.beta * X[t - 1] + noise[t])
    return X


def _matrix_to_series(X: np.ndarray, n_node: int, start_time: int) -> dict[MetricId, TimeSeries]:
    return {
        metric_name(i, n_node): TimeSeries(
            metric=metric_name(i, n_node), start_time=start_time, values=X[:, i]
        )
        for i in range(n_node)
    }


def simulate_series(dag: WeightedDag, length: int, rng_seed,
                    start_time: int = 0) -> dict[MetricId, TimeSeries]:
    """Simulate and wrap each node as a TimeSeries at 1-minute spacing."""
    X = simulate_matrix(dag, length, rng_seed)
    return _matrix_to_series(X, dag.n, start_time)


@dataclass(frozen=True)
class InjectedFault:
    """Ground truth of one injected fault."""

    root_causes: frozenset[int]
    alpha: dict[int, float]
    start: int
    fault_type: FaultType
    duration: int = FAULT_DURATION

    def __post_init__(self):
        object.__setattr__(self, "root_causes", frozenset(self.root_causes))
        if not self.root_causes:
            raise ValueError("a fault needs at least one root cause")
        if set(self.alpha) != set(self.root_causes):
            raise ValueError("alpha must cover exactly the root causes")


def classify_fault(dag: WeightedDag, sigma_hat: Sequence[float],
                   fault: InjectedFault | Sequence[int]) -> FaultType:
    """Classify a fault by each root's signed propagation ratio onto the SLI.

    The ratio for root i is ``W[0, i] * sigma_hat[i] / sigma_hat[0]``: all
    below 1 is Weak, all above 1 is Strong, anything else (straddling
    roots or a ratio of exactly 1) is Mixed.
    """
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if (sigma_hat <= 0).any():
        raise ValueError("sigma_hat must be positive elementwise")
    roots = sorted(fault.root_causes if isinstance(fault, InjectedFault) else fault)
    W = propagation_matrix(dag)
    ratios = np.array([W[0, i] * sigma_hat[i] / sigma_hat[0] for i in roots])
    if (ratios < 1.0).all():
        return FaultType.WEAK
    if (ratios > 1.0).all():
        return FaultType.STRONG
    return FaultType.MIXED


def draw_root_count(rng: np.random.Generator, n_node: int,
                    poisson_rate: float = DEFAULT_POISSON_RATE) -> int:
    """Number of root causes: 1 + Poisson, capped at the non-SLI node count."""
    return min(1 + int(rng.poisson(poisson_rate)), n_node - 1)


def apply_noise_shift(dag: WeightedDag, X: np.ndarray, at_index: int,
                      alpha: Mapping[int, float]) -> np.ndarray:
    """Shift the noise of the alpha-keyed nodes by alpha*sigma for two samples.

    The autoregression is linear, so the shift adds a deterministic
    response on top of the original trajectory: rows before ``at_index``
    are returned unchanged (bit for bit), later rows gain the propagated
    deviation.
    """
    T = X.shape[0]
    if not 0 <= at_index <= T - FAULT_DURATION:
        raise ValueError(f"fault at row {at_index} does not fit in {T} samples")
    shift = np.zeros(dag.n)
    for i, a in alpha.items():
        shift[int(i)] = a * dag.sigma[int(i)]
    W = propagation_matrix(dag)
    out = X.copy()
    delta = W @ shift
    out[at_index] += delta
    for t in range(at_index + 1, T):
        pulse = shift if t - at_index < FAULT_DURATION else 0.0
        delta = W @ (dag.beta * delta + pulse)
        out[t] += delta
    return out


def _reference_std(X: np.ndarray, at_index: int, t_ref: int, t_test: int) -> np.ndarray:
    lo, hi = at_index - t_ref, at_index - t_test
    if lo < 0 or hi < lo:
        raise ValueError("series too short for the reference window before the fault")
    sigma_hat = X[lo:hi + 1].std(axis=0)
    return np.maximum(sigma_hat, 1e-12)


def _draw_alpha_magnitudes(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.exponential(ALPHA_SCALE, size=size)


def _sample_fault(dag: WeightedDag, W: np.ndarray, sigma_hat: np.ndarray,
                  rng: np.random.Generator, poisson_rate: float,
                  max_retries: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Draw a root set and alphas whose expected SLI shift clears 3 sigma."""
    if dag.n < 2:
        raise NoEffectiveFault("need at least one non-SLI node to intervene on")
    need = 3.0 * sigma_hat[0]
    for _ in range(max_retries):
        size = draw_root_count(rng, dag.n, poisson_rate)
        roots = np.sort(rng.choice(np.arange(1, dag.n), size=size, replace=False))
        magnitudes = _draw_alpha_magnitudes(rng, size)
        signs = rng.integers(0, 2, size=size) * 2 - 1
        alpha = magnitudes * signs
        effect = float(W[0, roots] @ (alpha * dag.sigma[roots]))
        if abs(effect) <= 1e-12 * max(need, 1.0):
            continue  # no usable propagation onto the SLI; redraw
        alpha *= max(1.0, need / abs(effect))
        return roots, alpha
    raise NoEffectiveFault(
        f"no sampled root set moved the SLI after {max_retries} attempts"
    )


def inject_fault(
    dag: WeightedDag,
    series: Mapping[MetricId, TimeSeries],
    at: int,
    rng_seed,
    t_ref: int = DEFAULT_T_REF,
    t_test: int = DEFAULT_T_TEST,
    poisson_rate: float = DEFAULT_POISSON_RATE,
) -> tuple[dict[MetricId, TimeSeries], InjectedFault]:
    """Inject a random fault at timestamp ``at`` (and the next sample).

    The root set excludes the SLI; alphas draw an exponential magnitude
    with random sign and the whole vector is scaled up just enough that
    the expected SLI deviation reaches three reference standard
    deviations.
    """
    rng = _as_rng(rng_seed)
    names = [metric_name(i, dag.n) for i in range(dag.n)]
    if set(names) != set(series):
        raise ValueError("series keys do not match the dag's node names")
    first = series[names[0]]
    X = np.column_stack([series[m].values for m in names])
    at_index = (at - first.start_time) // first.interval
    if (at - first.start_time) % first.interval:
        raise ValueError(f"fault time {at} is not aligned to the sampling grid")

    sigma_hat = _reference_std(X, at_index, t_ref, t_test)
    W = propagation_matrix(dag)
    roots, alpha = _sample_fault(dag, W, sigma_hat, rng, poisson_rate)
    alpha_map = {int(i): float(a) for i, a in zip(roots, alpha)}
    faulty = apply_noise_shift(dag, X, at_index, alpha_map)
    fault = InjectedFault(
        root_causes=frozenset(alpha_map),
        alpha=alpha_map,
        start=at,
        fault_type=classify_fault(dag, sigma_hat, sorted(alpha_map)),
    )
    return _matrix_to_series(faulty, dag.n, first.start_time), fault


@dataclass(frozen=True)
class CaseRecord:
    """One labeled case of a simulated dataset."""

    case_id: str
    case: Case
    truth: GroundTruth
    fault_type: Optional[str] = None


@dataclass(frozen=True)
class GraphRecord:
    """One simulated system and its cases."""

    graph_id: str
    graph: CausalGraph
    cases: tuple[CaseRecord, ...]
    dag: Optional[WeightedDag] = None

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple(self.cases))


@dataclass(frozen=True)
class SimulatedDataset:
    """Generated graphs and labeled cases, plus the generation recipe."""

    graphs: tuple[GraphRecord, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))

    def n_cases(self) -> int:
        return sum(len(g.cases) for g in self.graphs)


def _case_from_matrix(X: np.ndarray, n_node: int, detect_time: int,
                      t_ref: int, t_delay: int, t_test: int) -> Case:
    return Case(
        series=_matrix_to_series(X, n_node, start_time=detect_time - t_ref),
        detect_time=detect_time,
        sli=metric_name(0, n_node),
        t_ref=t_ref,
        t_delay=t_delay,
        t_test=t_test,
    )


def generate_case(dag: WeightedDag, rng_seed,
                  t_ref: int = DEFAULT_T_REF,
                  t_delay: int = DEFAULT_T_DELAY,
                  t_test: int = DEFAULT_T_TEST,
                  poisson_rate: float = DEFAULT_POISSON_RATE) -> tuple[Case, InjectedFault]:
    """Simulate one faulty case: fresh series with a fault at detect time."""
    rng = _as_rng(rng_seed)
    length = t_ref + t_delay + 1
    X = simulate_matrix(dag, length, rng)
    at_index = t_ref  # detection coincides with fault start
    sigma_hat = _reference_std(X, at_index, t_ref, t_test)
    W = propagation_matrix(dag)
    roots, alpha = _sample_fault(dag, W, sigma_hat, rng, poisson_rate)
    alpha_map = {int(i): float(a) for i, a in zip(roots, alpha)}
    faulty = apply_noise_shift(dag, X, at_index, alpha_map)
    case = _case_from_matrix(faulty, dag.n, detect_time=t_ref,
                             t_ref=t_ref, t_delay=t_delay, t_test=t_test)
    fault = InjectedFault(
        root_causes=frozenset(alpha_map),
        alpha=alpha_map,
        start=t_ref,
        fault_type=classify_fault(dag, sigma_hat, sorted(alpha_map)),
    )
    return case, fault


def _case_record(task) -> CaseRecord:
    dag, stream, case_id, t_ref, t_delay, t_test, poisson_rate = task
    case, fault = generate_case(
        dag, np.random.default_rng(stream),
        t_ref=t_ref, t_delay=t_delay, t_test=t_test, poisson_rate=poisson_rate,
    )
    truth = GroundTruth(frozenset(metric_name(i, dag.n) for i in fault.root_causes))
    return CaseRecord(
        case_id=case_id,
        case=case,
        truth=truth,
        fault_type=fault.fault_type.value,
    )


def generate_dataset(
    n_node: int,
    n_edge: int,
    n_graphs: int = 10,
    cases_per_graph: int = 100,
    rng_seed: int = 0,
    t_ref: int = DEFAULT_T_REF,
    t_delay: int = DEFAULT_T_DELAY,
    t_test: int = DEFAULT_T_TEST,
    poisson_rate: float = DEFAULT_POISSON_RATE,
    jobs: Optional[int] = None,
) -> SimulatedDataset:
    """Generate ``n_graphs`` systems with ``cases_per_graph`` faulty cases each.

    Graphs are shared across their cases; every case gets freshly
    simulated series.  Sub-streams are split off the master seed per
    graph and per case, so any case is reproducible in isolation and the
    output is independent of worker scheduling when ``jobs`` > 1.
    """
    root_seq = np.random.SeedSequence(rng_seed)
    graph_width = len(str(max(n_graphs - 1, 0)))
    case_width = len(str(max(cases_per_graph - 1, 0)))
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs and jobs > 1 else None
    graphs = []
    try:
        for g, graph_seq in enumerate(root_seq.spawn(n_graphs)):
            streams = graph_seq.spawn(cases_per_graph + 1)
            dag = generate_dag(n_node, n_edge, np.random.default_rng(streams[0]))
            tasks = [
                (dag, streams[c + 1], f"c{c:0{case_width}d}",
                 t_ref, t_delay, t_test, poisson_rate)
                for c in range(cases_per_graph)
            ]
            if pool is not None:
                records = list(pool.map(_case_record, tasks, chunksize=8))
            else:
                records = [_case_record(t) for t in tasks]
            graphs.append(GraphRecord(
                graph_id=f"g{g:0{graph_width}d}",
                graph=dag.to_causal_graph(),
                cases=tuple(records),
                dag=dag,
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    params = {
        "n_node": n_node, "n_edge": n_edge, "n_graphs": n_graphs,
        "cases_per_graph": cases_per_graph, "seed": rng_seed,
        "t_ref": t_ref, "t_delay": t_delay, "t_test": t_test,
        "poisson_rate": poisson_rate, "beta": DEFAULT_BETA,
    }
    return SimulatedDataset(graphs=tuple(graphs), params=params)


def save_dataset(dataset: SimulatedDataset, out_dir) -> None:
    """Write the on-disk layout: manifest.json, per-graph graph.json, cases."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(dataset.params, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for record in dataset.graphs:
        graph_dir = out_dir / record.graph_id
        graph_dir.mkdir(exist_ok=True)
        payload = record.graph.to_json()
        if record.dag is not None:
            payload["A"] = [[float(v) for v in row] for row in record.dag.A]
            payload["sigma"] = [float(v) for v in record.dag.sigma]
            payload["beta"] = float(record.dag.beta)
        with open(graph_dir / "graph.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for entry in record.cases:
            save_case(graph_dir / entry.case_id, entry.case, entry.truth, entry.fault_type)


def load_dataset(directory) -> SimulatedDataset:
    """Read a dataset directory written by save_dataset."""
    directory = Path(directory)
    params = {}
    manifest = directory / "manifest.json"
    if manifest.exists():
        params = json.loads(manifest.read_text())
    graphs = []
    for graph_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
        graph_file = graph_dir / "graph.json"
        if not graph_file.exists():
            continue
        payload = json.loads(graph_file.read_text())
        graph = CausalGraph.from_json(payload)
        dag = None
        if "A" in payload:
            dag = WeightedDag(
                A=np.array(payload["A"], dtype=float),
                sigma=np.array(payload["sigma"], dtype=float),
                beta=float(payload.get("beta", DEFAULT_BETA)),
            )
        records = []
        for case_dir in sorted(p for p in graph_dir.iterdir() if p.is_dir()):
            loaded: LoadedCase = load_case(case_dir)
            if loaded.truth is None:
                raise ValueError(f"{case_dir}: dataset cases must carry root_causes")
            records.append(CaseRecord(
                case_id=case_dir.name,
                case=loaded.case,
                truth=loaded.truth,
                fault_type=loaded.fault_type,
            ))
        graphs.append(GraphRecord(
            graph_id=graph_dir.name, graph=graph, cases=tuple(records), dag=dag,
        ))
    return SimulatedDataset(graphs=tuple(graphs), params=params)
