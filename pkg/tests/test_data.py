import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zinhpp.data import (
    DatasetError,
    Individual,
    RecurrentDataset,
    SpatialGraph,
    read_adjacency,
    read_dataset,
    validate_dataset,
    write_adjacency,
    write_dataset,
)

from conftest import make_toy


def _one(times, y=7.0, **kw):
    return RecurrentDataset([Individual("a", y, times, **kw)])


class TestValidation:
    def test_sorts_event_times(self):
        out = validate_dataset(_one([0.5, 0.2]))
        np.testing.assert_array_equal(out.individuals[0].event_times, [0.2, 0.5])

    def test_event_beyond_follow_up(self):
        with pytest.raises(DatasetError, match="event beyond follow-up"):
            validate_dataset(_one([7.1], y=7.0))

    def test_event_at_zero_rejected(self):
        with pytest.raises(DatasetError, match="time 0"):
            validate_dataset(_one([0.0, 1.0]))

    def test_ties_rejected(self):
        with pytest.raises(DatasetError, match="tied"):
            validate_dataset(_one([1.0, 1.0]))

    def test_collects_every_violation(self):
        raw = RecurrentDataset([
            Individual("a", -1.0, []),
            Individual("a", 2.0, [3.0]),
        ], n_strata=1)
        with pytest.raises(DatasetError) as info:
            validate_dataset(raw)
        assert len(info.value.violations) == 3

    def test_covariate_length_and_stratum(self):
        raw = RecurrentDataset([Individual("a", 1.0, [], [1.0], [], 3)], ("x1", "x2"), (), 2)
        with pytest.raises(DatasetError) as info:
            validate_dataset(raw)
        msgs = " ".join(info.value.violations)
        assert "stratum" in msgs and "covariate length" in msgs

    def test_empty(self):
        with pytest.raises(DatasetError):
            validate_dataset(RecurrentDataset([]))

    def test_idempotent_and_horizon(self):
        raw = RecurrentDataset([
            Individual("a", 3.0, [1.0]),
            Individual("b", 5.5, []),
            Individual("c", 4.0, [0.5, 2.0]),
        ])
        once = validate_dataset(raw)
        twice = validate_dataset(once)
        assert once.time_horizon == 5.5
        for a, b in zip(once.individuals, twice.individuals):
            assert a.id == b.id
            np.testing.assert_array_equal(a.event_times, b.event_times)

    @given(st.lists(st.floats(0.01, 10.0), max_size=8, unique=True))
    def test_validation_property(self, times):
        out = validate_dataset(_one(times, y=10.0))
        t = out.individuals[0].event_times
        assert np.all(np.diff(t) > 0)
        assert len(t) == len(times)


class TestSpatialGraph:
    def test_lattice_counts(self):
        g = SpatialGraph.lattice(12, 11)
        assert g.n_areas == 132
        assert len(g.edges) == 12 * 10 + 11 * 11
        deg = g.adjacency().sum(axis=1)
        np.testing.assert_array_equal(np.diag(g.laplacian()), deg)
        assert g.n_components == 1

    def test_neighbor_counts_match_edges(self):
        g = SpatialGraph.path(5)
        np.testing.assert_array_equal(g.adjacency().sum(axis=1), [1, 2, 2, 2, 1])

    def test_self_loop_and_duplicates(self):
        with pytest.raises(ValueError):
            SpatialGraph(3, [(0, 0)])
        with pytest.raises(ValueError):
            SpatialGraph(3, [(0, 1), (1, 0)])

    def test_components(self):
        g = SpatialGraph(5, [(0, 1), (2, 3)])
        assert g.n_components == 3
        comp = g.components()
        assert comp[0] == comp[1] and comp[2] == comp[3] and len(set(comp)) == 3

    def test_label_pairs_sorted(self):
        g = SpatialGraph.from_label_pairs([("10", "2"), ("2", "3")])
        assert list(g.labels) == ["2", "3", "10"]

    def test_adjacency_round_trip(self, tmp_path):
        g = SpatialGraph.lattice(3, 4)
        write_adjacency(g, tmp_path / "adj.csv")
        assert read_adjacency(tmp_path / "adj.csv") == g


class TestCsv:
    def test_dataset_round_trip(self, tmp_path):
        data, graph = make_toy(seed=3)
        write_dataset(data, tmp_path / "e.csv", tmp_path / "c.csv", graph.labels)
        back = read_dataset(tmp_path / "e.csv", tmp_path / "c.csv", data.x_names, data.z_names,
                            graph.labels)
        assert back.m == data.m
        for a, b in zip(data.individuals, back.individuals):
            assert a.id == b.id and a.stratum == b.stratum
            assert a.follow_up_end == b.follow_up_end
            np.testing.assert_array_equal(a.event_times, b.event_times)
            np.testing.assert_array_equal(a.intensity_covariates, b.intensity_covariates)
            np.testing.assert_array_equal(a.zero_covariates, b.zero_covariates)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,area,end,t\n")
        with pytest.raises(DatasetError, match="header"):
            read_dataset(p)

    def test_unknown_area_label(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,stratum,follow_up_end,event_time\na,9,2.0,1.0\n")
        with pytest.raises(DatasetError, match="unknown area"):
            read_dataset(p, area_labels=["1", "2"])

    def test_event_beyond_follow_up_from_file(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,stratum,follow_up_end,event_time\na,1,7.0,7.1\n")
        with pytest.raises(DatasetError, match="beyond follow-up"):
            read_dataset(p)
