import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsgraph import graphs
from obsgraph.errors import InvalidSetError, InvalidSpecError
from obsgraph.graphs import ObservationSet, build_graph, laplacian, parse_set


def test_path_laplacian():
    L = laplacian(graphs.path(3))
    np.testing.assert_array_equal(L, [[-1, 1, 0], [1, -2, 1], [0, 1, -1]])


def test_cycle_two_is_single_edge():
    assert graphs.cycle(2).edges == ((0, 1),)


@pytest.mark.parametrize("N", [3, 4, 7])
def test_torus_dimension_one_is_cycle(N):
    assert graphs.torus(N, 1).edges == graphs.cycle(N).edges


def test_torus_row_major_neighbours():
    g = graphs.torus(4, 2)
    A = graphs.adjacency(g)
    # (1, 2) -> index 6; neighbours (0,2)=2, (2,2)=10, (1,1)=5, (1,3)=7
    assert set(np.flatnonzero(A[6])) == {2, 10, 5, 7}
    assert (A.sum(axis=1) == 4).all()


@pytest.mark.parametrize(
    "desc", ["path:5", "cycle:8", "torus:4,2", "complete:4", "star:6", '{"n": 3, "edges": [[0, 1], [1, 2]]}']
)
def test_zero_row_sums_and_symmetry(desc):
    L = laplacian(build_graph(desc))
    assert not L.sum(axis=1).any()
    np.testing.assert_array_equal(L, L.T)


def test_json_round_trip(tmp_path):
    g = graphs.star(5)
    p = tmp_path / "g.json"
    p.write_text(g.to_json())
    assert build_graph(str(p)) == g
    assert json.loads(g.to_json())["n"] == 5


@pytest.mark.parametrize(
    "bad",
    ['{"n": 3, "edges": [[0, 0]]}', '{"n": 3, "edges": [[0, 1], [1, 0]]}', '{"n": 3, "edges": [[0, 3]]}',
     "path:0", "torus:1,2", "hexagon:3"],
)
def test_invalid_graphs(bad):
    with pytest.raises(InvalidSpecError):
        build_graph(bad)


@given(st.sampled_from(["path:6", "cycle:7", "torus:3,2", "star:5", "complete:5"]), st.integers(0, 2**32 - 1))
def test_quadratic_form_is_edge_energy(desc, seed):
    g = build_graph(desc)
    f = np.random.default_rng(seed).standard_normal(g.n)
    energy = sum((f[i] - f[j]) ** 2 for i, j in g.edges)
    assert np.isclose(-f @ laplacian(g) @ f, energy, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize(
    "graph, desc, expected",
    [
        ("cycle:8", "0 mod 2", [0, 2, 4, 6]),
        ("path:5", "complement({0})", [1, 2, 3, 4]),
        ("cycle:8", "{0,1} mod 4", [0, 1, 4, 5]),
        ("path:6", "{0,2..4}", [0, 2, 3, 4]),
        ("path:3", "all", [0, 1, 2]),
        ("path:3", "empty", []),
    ],
)
def test_parse_set(graph, desc, expected):
    assert parse_set(desc, build_graph(graph)).indices.tolist() == expected


def test_residue_rule_on_torus_takes_union_of_hyperplanes():
    E = parse_set("0 mod 2", build_graph("torus:8,2"))
    assert len(E) == 64 - 16


@pytest.mark.parametrize("desc", ["{5}", "{0,", "3 mod 0", "nonsense"])
def test_invalid_sets(desc):
    with pytest.raises(InvalidSetError):
        parse_set(desc, build_graph("path:4"))


def test_observation_set_algebra():
    E = ObservationSet.from_indices(5, [1, 3])
    assert E.complement().indices.tolist() == [0, 2, 4]
    assert E.issubset(ObservationSet.from_indices(5, [1, 2, 3]))
    assert 3 in E and 2 not in E
    assert E == ObservationSet.from_indices(5, [3, 1])
    assert len({E, ObservationSet.from_indices(5, [1, 3])}) == 1
