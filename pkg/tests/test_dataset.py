import numpy as np
import pytest

from gflowcomb.dataset import (
    graph_to_record,
    load_dataset,
    record_to_graph,
    save_dataset,
)
from gflowcomb.graphs import Graph

from conftest import random_graph


def test_record_round_trip():
    g = Graph(4, [(0, 1), (2, 3)], graph_id="toy-0")
    rec = graph_to_record(g)
    assert rec == {"id": "toy-0", "n": 4, "edges": [[0, 1], [2, 3]]}
    h = record_to_graph(rec)
    assert h.graph_id == "toy-0"
    assert h.num_vertices == 4
    assert np.array_equal(h.edges, g.edges)


def test_file_round_trip(tmp_path, rng):
    graphs = [random_graph(6, 0.5, rng) for _ in range(5)]
    for i, g in enumerate(graphs):
        g.graph_id = f"g{i}"
    path = tmp_path / "set.jsonl"
    save_dataset(path, graphs)
    loaded = load_dataset(path)
    assert len(loaded) == 5
    for a, b in zip(graphs, loaded):
        assert a.graph_id == b.graph_id
        assert a.num_vertices == b.num_vertices
        assert np.array_equal(a.edges, b.edges)


def test_blank_lines_skipped(tmp_path):
    path = tmp_path / "set.jsonl"
    path.write_text('{"id": "a", "n": 2, "edges": [[0, 1]]}\n\n\n')
    assert len(load_dataset(path)) == 1


def test_bad_json_reports_line(tmp_path):
    path = tmp_path / "set.jsonl"
    path.write_text('{"id": "a", "n": 1, "edges": []}\n{oops\n')
    with pytest.raises(ValueError, match=":2:"):
        load_dataset(path)


def test_missing_key_rejected(tmp_path):
    path = tmp_path / "set.jsonl"
    path.write_text('{"id": "a", "edges": []}\n')
    with pytest.raises(ValueError, match="missing key"):
        load_dataset(path)
