import json

import numpy as np
import pytest

from mixlab.network import NetworkBuilder, NetworkError, WeightedNetwork, load_network, save_network

from conftest import edge_net


def test_rejects_bad_weights_naming_the_edge():
    b = NetworkBuilder()
    for w in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(NetworkError, match="'a', 'b'"):
            b.add_edge("a", "b", w)


def test_parallel_edges_merge():
    b = NetworkBuilder()
    b.add_edge("a", "b", 1.0, {"x"})
    b.add_edge("b", "a", 2.5, {"y"})
    net = b.build()
    assert net.n_edges == 1
    assert net.edge_weight("a", "b") == 3.5
    assert net.edge_labels[0] == {"x", "y"}


def test_loop_counts_once_in_vertex_weight():
    net = edge_net([("a", "a", 2.0), ("a", "b", 1.0)])
    np.testing.assert_allclose(net.vertex_weights, [3.0, 1.0])
    assert net.adjacency[0, 0] == 2.0
    assert list(net.degrees) == [1, 1]


def test_components_and_labels():
    b = NetworkBuilder()
    b.add_vertex("a", {"root"})
    b.add_edge("a", "b", 1.0)
    b.add_vertex("c")
    net = b.build()
    assert sorted(map(sorted, net.components())) == [["a", "b"], ["c"]]
    assert net.vertices_with_label("root") == ["a"]
    assert net.neighbors("a") == ["b"]
    with pytest.raises(NetworkError, match="unknown vertex"):
        net.index_of("zz")


def test_json_roundtrip(tmp_path):
    net = edge_net([("a", "b", 0.25), ("b", "c", 3.0), ("c", "c", 1.0)])
    p = tmp_path / "n.json"
    save_network(net, p)
    back = load_network(p)
    assert back.ids == net.ids
    assert list(back.edges()) == list(net.edges())
    first = p.read_text()
    save_network(back, p)
    assert p.read_text() == first


def test_malformed_document(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vertices": [{"id": "a"}], "edges": [{"u": "a"}]}))
    with pytest.raises(NetworkError, match="malformed"):
        load_network(p)
    p.write_text("{not json")
    with pytest.raises(NetworkError, match="invalid JSON"):
        load_network(p)
