import numpy as np
import pytest

from rcakit.errors import WindowOutOfRange
from rcakit.model import (
    Case,
    CausalGraph,
    GroundTruth,
    TimeSeries,
    load_case,
    load_graph,
    save_case,
    save_graph,
    split_case,
    window_index_ranges,
)

from conftest import make_case


def test_split_windows_default_example():
    # t_d=1000 with defaults: reference covers minutes [880, 990],
    # test covers (995, 1005], i.e. 111 and 10 samples.
    n = 126  # minutes 880..1005
    case = make_case({"a": np.arange(n), "b": np.zeros(n)}, detect_time=1000)
    reference, test = split_case(case)
    assert len(reference["a"]) == 111
    assert len(test["a"]) == 10
    # column "a" holds its own offset, so values identify the minutes
    assert reference["a"][0] == 0 and reference["a"][-1] == 110      # 880..990
    assert test["a"][0] == 116 and test["a"][-1] == 125              # 996..1005


def test_split_span_too_short():
    # covering only [t_d-50, t_d+5] cannot satisfy t_ref=120
    values = np.zeros(56)
    case = make_case({"a": values}, detect_time=1000, start_time=950)
    with pytest.raises(WindowOutOfRange):
        split_case(case)


def test_split_boundary_inclusion():
    # t_d=0 with series starting exactly at -120: reference starts at sample 0
    case = make_case({"a": np.arange(126)}, detect_time=0, start_time=-120)
    ref_idx, test_idx = window_index_ranges(case)
    assert ref_idx.start == 0
    assert test_idx.stop == 126


def test_window_lengths_and_disjointness_property():
    rng = np.random.default_rng(7)
    for _ in range(50):
        t_delay = int(rng.integers(0, 8))
        t_test = int(rng.integers(t_delay + 1, t_delay + 20))
        t_ref = int(rng.integers(t_test, t_test + 60))
        t_d = int(rng.integers(-50, 500))
        n = t_ref + t_delay + 1
        case = make_case({"x": rng.normal(size=n)}, detect_time=t_d,
                         start_time=t_d - t_ref,
                         t_ref=t_ref, t_delay=t_delay, t_test=t_test)
        ref_idx, test_idx = window_index_ranges(case)
        assert len(ref_idx) == t_ref - t_test + 1
        assert len(test_idx) == t_test
        assert len(ref_idx) > 0 and len(test_idx) > 0
        assert set(ref_idx).isdisjoint(test_idx)


def test_case_parameter_validation():
    values = np.zeros(126)
    with pytest.raises(ValueError):
        make_case({"a": values}, detect_time=0, t_test=5, t_delay=5)  # t_test <= t_delay
    with pytest.raises(ValueError):
        make_case({"a": values}, detect_time=0, t_ref=5, t_test=10)   # t_test > t_ref
    with pytest.raises(ValueError):
        make_case({"a": values}, detect_time=0, t_delay=-1)
    with pytest.raises(ValueError):
        make_case({"a": values}, detect_time=0, sli="nope")


def test_series_alignment_required():
    a = TimeSeries(metric="a", start_time=0, values=np.zeros(10))
    b = TimeSeries(metric="b", start_time=1, values=np.zeros(10))
    with pytest.raises(ValueError):
        Case(series={"a": a, "b": b}, detect_time=5, sli="a", t_ref=2, t_delay=0, t_test=1)


def test_non_finite_values_rejected():
    with pytest.raises(ValueError):
        TimeSeries(metric="a", start_time=0, values=np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        TimeSeries(metric="a", start_time=0, values=np.array([1.0, np.inf]))


def test_case_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    case = make_case(
        {"a": rng.normal(size=126), "b": rng.normal(size=126) * 1e-7, "c": rng.normal(size=126) * 1e9},
        detect_time=500,
        sli="b",
    )
    truth = GroundTruth(frozenset({"a", "c"}))
    save_case(tmp_path / "case0", case, truth, fault_type="Weak")
    loaded = load_case(tmp_path / "case0")
    assert loaded.case == case
    assert loaded.truth == truth
    assert loaded.fault_type == "Weak"


def test_case_roundtrip_unlabeled(tmp_path):
    case = make_case({"a": np.arange(126.0)}, detect_time=0)
    save_case(tmp_path / "c", case)
    loaded = load_case(tmp_path / "c")
    assert loaded.case == case
    assert loaded.truth is None
    assert loaded.fault_type is None


def test_load_rejects_missing_values(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    (d / "case.json").write_text('{"detect_time": 2, "t_ref": 2, "t_delay": 0, "t_test": 1, "sli": "a"}')
    (d / "data.csv").write_text("timestamp,a\n0,1.0\n1,\n2,3.0\n")
    with pytest.raises(ValueError):
        load_case(d)


def test_graph_rejects_cycles_and_bad_edges():
    with pytest.raises(ValueError):
        CausalGraph(nodes=["a", "b"], edges=[("a", "b"), ("b", "a")])
    with pytest.raises(ValueError):
        CausalGraph(nodes=["a"], edges=[("a", "z")])
    with pytest.raises(ValueError):
        CausalGraph(nodes=["a"], edges=[("a", "a")])


def test_graph_lookups_consistent():
    g = CausalGraph(nodes=["a", "b", "c"], edges=[("a", "b"), ("a", "c"), ("b", "c")])
    assert g.parents("c") == ("a", "b")
    assert g.children("a") == ("b", "c")
    assert g.parents("a") == ()
    order = g.topological_order()
    assert order.index("a") < order.index("b") < order.index("c")


def test_graph_topological_order_deterministic():
    # no edges: pure lexicographic
    g = CausalGraph(nodes=["b", "a", "d", "c"], edges=[])
    assert g.topological_order() == ("a", "b", "c", "d")


def test_graph_json_roundtrip(tmp_path):
    g = CausalGraph(nodes=["a", "b", "c"], edges=[("a", "b"), ("b", "c")])
    save_graph(g, tmp_path / "graph.json")
    assert load_graph(tmp_path / "graph.json") == g


def test_ground_truth_non_empty():
    with pytest.raises(ValueError):
        GroundTruth(frozenset())
