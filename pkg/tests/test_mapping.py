import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from camcim.array import Plane, PlaneGeometry, run_gemv
from camcim.encoding import CodeSpace
from camcim.errors import CapacityExceeded, ContractViolation
from camcim.mapping import place, program, thermometer_efficiency, utilization
from camcim.workload import MoESpec


def test_contiguous_four_experts():
    lay = place(MoESpec(4, 1, 8, 16), PlaneGeometry(4, 4, 32, 64, 0), "contiguous")
    assert [(t.bitline_start, t.bitline_stop) for t in lay.tiles] == [(0, 16), (16, 32), (32, 48), (48, 64)]
    assert not lay.cam_entries


def test_interleaved_entries_cycle():
    lay = place(MoESpec(4, 1, 8, 16), PlaneGeometry(4, 4, 32, 16, 1), "interleaved", 1)
    assert [lay.cam_entries[p].bits() for p in range(8)] == ["00", "01", "10", "11"] * 2


def test_eight_experts_use_two_cam_layers():
    lay = place(MoESpec(8, 2, 4, 4), PlaneGeometry(4, 4, 32, 4, 2), "interleaved", 2)
    assert lay.cam_plan == (1, 2)


def test_granularity_must_divide_pairs():
    with pytest.raises(ContractViolation):
        place(MoESpec(2, 1, 4, 4), PlaneGeometry(4, 4, 32, 4, 1), "interleaved", 3)


def test_capacity_errors():
    with pytest.raises(CapacityExceeded):
        place(MoESpec(4, 1, 100, 4), PlaneGeometry(4, 4, 32, 4, 1), "interleaved", 1)
    with pytest.raises(CapacityExceeded):
        place(MoESpec(4, 1, 4, 4), PlaneGeometry(4, 4, 32, 15, 0), "contiguous")
    with pytest.raises(CapacityExceeded):
        place(MoESpec(8, 1, 4, 4), PlaneGeometry(4, 4, 32, 4, 1), "interleaved", 1)


@given(n=st.integers(1, 8), g=st.sampled_from([1, 2, 4]), d=st.integers(1, 40))
def test_layout_invariants(n, g, d):
    geom = PlaneGeometry(8, 4, 128, 4, 2)
    lay = place(MoESpec(n, 1, d, 4), geom, "interleaved", g)
    cells = Counter()
    for e in range(n):
        rows = sorted(r for t in lay.tiles_for(e) for r in range(t.row_start, t.row_stop))
        assert rows == list(range(d))
    for t in lay.tiles:
        for p in range(t.pair_start, t.pair_stop):
            cells[(p, t.cim_layer)] += 1
            if lay.gated:
                assert lay.cam_entries[p].to_id() == t.expert
    assert max(cells.values()) == 1
    units = Counter(lay.cam_entries[p].to_id() for p in range(0, geom.num_pairs, g)) if lay.gated else None
    if units:
        assert max(units.values()) - min(units.values()) <= 1


def test_layout_json_export():
    lay = place(MoESpec(2, 1, 3, 2), PlaneGeometry(4, 4, 8, 2, 1), "interleaved", 1)
    data = json.loads(lay.to_json())
    assert data["cam_entries"] == {"0": "0", "1": "1", "2": "0", "3": "1"}
    assert len(data["assignments"]) == len(lay.tiles)


def test_query_selects_only_owner():
    space = CodeSpace(4, 3, 2)
    geom = PlaneGeometry(6, 4, 64, 5, 1)
    spec = MoESpec(4, 1, 12, 5)
    lay = place(spec, geom, "interleaved", 2)
    plane = Plane(geom, space)
    W = np.zeros((4, 5, 12), dtype=int)
    W[2] = np.random.default_rng(0).integers(-4, 5, size=(5, 12))
    program(plane, lay, W)
    x = np.ones(12, dtype=int)
    for e in range(4):
        y = run_gemv(plane, lay, e, x).y
        assert (y == W[e] @ x).all()


def test_utilization_examples():
    space = CodeSpace(4, 2, 2)
    assert thermometer_efficiency(space) == pytest.approx(math.log2(5) / 8)
    spec = MoESpec(4, 1, 8, 4)
    gated = utilization(place(spec, PlaneGeometry(64, 4, 32, 4, 2), "interleaved"), PlaneGeometry(64, 4, 32, 4, 2), space)
    assert gated.cam_loss == 2 / 64 and gated.redundancy_ratio == 0.0
    naive_geom = PlaneGeometry(64, 4, 32, 4, 0)
    naive = utilization(place(spec, naive_geom, "interleaved", use_cam=False), naive_geom, space)
    assert naive.storage_utilization <= 0.25 * gated.storage_utilization / (1 - 2 / 64) + 1e-12
    base = utilization(place(spec, PlaneGeometry(64, 4, 32, 16, 0), "contiguous"), naive_geom, space)
    assert base.redundancy_ratio == 0.75


def test_utilization_monotonicity():
    spec = MoESpec(4, 1, 8, 4)
    prev = None
    for cam in (1, 2, 3):
        geom = PlaneGeometry(64, 4, 32, 4, cam)
        u = utilization(place(spec, geom, "interleaved"), geom, CodeSpace(4, 2, 2)).storage_utilization
        assert prev is None or u < prev
        prev = u
    geom = PlaneGeometry(64, 4, 32, 4, 1)
    lay = place(spec, geom, "interleaved")
    us = [utilization(lay, geom, CodeSpace(4, m, 2)).storage_utilization for m in (2, 3, 4, 5)]
    assert us == sorted(us) and len(set(us)) == 4
