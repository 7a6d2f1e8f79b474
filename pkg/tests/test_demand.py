"""Population density sources and request probability derivation."""

import numpy as np
import pytest

from cdcsim.demand import (
    SyntheticDensitySpec,
    assign_density,
    hotspot_nodes,
    load_density,
    request_probabilities,
    save_density,
    synth_density,
)
from cdcsim.errors import ValidationError
from cdcsim.topology import NodeSet, synthetic_nodes


def test_probabilities_normalize():
    r = request_probabilities(np.array([10.0, 30.0, 60.0]))
    assert r.sum() == pytest.approx(1.0, abs=1e-12)
    assert r[2] == pytest.approx(0.6)


def test_probabilities_scale_invariant():
    d = np.array([3.0, 1.0, 6.0, 2.0])
    a = request_probabilities(d)
    b = request_probabilities(1234.5 * d)
    assert np.allclose(a, b, atol=1e-12)


def test_probabilities_preserve_order():
    d = np.array([5.0, 50.0, 0.5])
    r = request_probabilities(d)
    assert r[1] > r[0] > r[2]


def test_probabilities_reject_bad_density():
    with pytest.raises(ValidationError):
        request_probabilities(np.array([1.0, -2.0]))
    with pytest.raises(ValidationError):
        request_probabilities(np.zeros(4))


# ---------------------------------------------------------------- synthetic


def test_hotspot_nodes_deterministic_and_distinct():
    spec = SyntheticDensitySpec(hotspots=4, seed=11)
    a = hotspot_nodes(100, spec)
    assert len(a) == 4
    assert len(set(a.tolist())) == 4
    assert np.array_equal(a, hotspot_nodes(100, spec))


def test_synth_density_floor_and_peaks():
    nodes = synthetic_nodes(120, seed=3)
    spec = SyntheticDensitySpec(hotspots=2, amplitude=800.0, spread_m=1500.0,
                                floor=25.0, seed=7)
    density = synth_density(nodes, spec)
    assert density.shape == (120,)
    assert np.all(density >= 25.0)
    # the density maximum sits on one of the drawn hotspot nodes, where the
    # corresponding Gaussian contributes its full amplitude
    centers = set(hotspot_nodes(120, spec).tolist())
    assert int(np.argmax(density)) in centers
    assert density.max() >= 25.0 + 800.0


def test_synth_density_deterministic():
    nodes = synthetic_nodes(60, seed=0)
    spec = SyntheticDensitySpec(seed=9)
    assert np.array_equal(synth_density(nodes, spec), synth_density(nodes, spec))


# ---------------------------------------------------------------- files


def make_nodes(n=5):
    lat = np.linspace(40.60, 40.68, n)
    lon = np.linspace(-74.0, -73.9, n)
    return NodeSet(lat=lat, lon=lon, original_ids=tuple(range(n)))


def test_density_round_trip(tmp_path):
    nodes = make_nodes()
    density = np.array([10.0, 20.5, 3.25, 40.0, 5.0])
    path = tmp_path / "density.csv"
    save_density(density, nodes, path)
    assert np.array_equal(load_density(path, nodes), density)


def test_load_density_requires_full_coverage(tmp_path):
    nodes = make_nodes(3)
    path = tmp_path / "density.csv"
    path.write_text("id,density\n0,10\n1,20\n")  # node 2 missing
    with pytest.raises(ValidationError):
        load_density(path, nodes)


def test_load_density_rejects_unknown_and_duplicate_ids(tmp_path):
    nodes = make_nodes(2)
    unknown = tmp_path / "a.csv"
    unknown.write_text("id,density\n0,10\n1,20\n9,30\n")
    with pytest.raises(ValidationError):
        load_density(unknown, nodes)
    dup = tmp_path / "b.csv"
    dup.write_text("id,density\n0,10\n0,20\n1,5\n")
    with pytest.raises(ValidationError):
        load_density(dup, nodes)


def test_load_density_maps_original_ids(tmp_path):
    # node file ids need not be dense; density rows join on the original id
    nodes = NodeSet(lat=np.array([40.6, 40.7]), lon=np.array([-74.0, -73.9]),
                    original_ids=(7, 3))
    path = tmp_path / "density.csv"
    path.write_text("id,density\n3,111\n7,222\n")
    assert np.array_equal(load_density(path, nodes), np.array([222.0, 111.0]))


# ---------------------------------------------------------------- resolution


def test_assign_density_source_priority(tmp_path):
    nodes = NodeSet(lat=np.array([40.6, 40.7]), lon=np.array([-74.0, -73.9]),
                    original_ids=(0, 1), density=np.array([1.0, 2.0]))
    path = tmp_path / "density.csv"
    path.write_text("id,density\n0,50\n1,60\n")

    assert np.array_equal(assign_density(nodes, density_path=path),
                          np.array([50.0, 60.0]))
    # without an explicit source the node file column applies
    assert np.array_equal(assign_density(nodes), np.array([1.0, 2.0]))
    with pytest.raises(ValidationError):
        assign_density(nodes, density_path=path, synthetic=SyntheticDensitySpec())


def test_assign_density_requires_some_source():
    nodes = make_nodes(4)
    with pytest.raises(ValidationError):
        assign_density(nodes)
