import pytest

from crosswidth import fixtures, geometry, pipeline
from crosswidth.geometry import (
    InternalInconsistency,
    PathSeq,
    Piece,
    Tail,
    paths_bounded,
    paths_one_switch,
    primitive_cycles,
)


def test_single_pair_topology(single_engine):
    _, g, _ = single_engine
    assert len(g.vertices) == 2
    assert len(g.edges) == 3
    assert len(g.tails) == 2
    assert sum(1 for t in g.tails if t.kind == "outgoing") == 1
    assert sum(1 for e in g.edges if e.channel == 1) == 2
    # channel-1 edges close up into the classical cycle with two turning points
    assert sum(e.nu for e in g.gamma1_edges()) == 2


def test_two_pair_topology(f0_engine):
    rep, g, _ = f0_engine
    assert len(g.vertices) == 4
    assert len(g.edges) == 6
    assert len(g.tails) == 4
    assert sum(1 for t in g.tails if t.kind == "outgoing") == 2
    assert sum(e.nu for e in g.gamma1_edges()) == 2


def test_degree_invariant(f0_engine, f1_engine, f1arc_engine):
    for engine_fixture in (f0_engine, f1_engine, f1arc_engine):
        _, g, _ = engine_fixture
        for v in g.vertices:
            hops = g.out_of(v)
            assert len(hops) == 2
            assert sorted(h.channel for h in hops) == [1, 2]


def test_flow_orientation(f1_engine):
    _, g, _ = f1_engine
    for e in g.edges:
        for pc in e.pieces:
            assert pc.x_lo <= pc.x_hi
            assert pc.xi_sign in (-1, 1)


def test_primitive_cycles_single_pair(single_engine, f1arc_engine):
    for engine_fixture in (single_engine, f1arc_engine):
        _, g, _ = engine_fixture
        cycles = primitive_cycles(g)
        assert len(cycles) == 2
        gamma1 = {e.eid for e in g.gamma1_edges()}
        assert any({e.eid for e in cyc} == gamma1 for cyc in cycles)


def test_primitive_cycles_two_pair(f0_engine):
    _, g, _ = f0_engine
    cycles = primitive_cycles(g)
    assert len(cycles) == 4
    gamma1 = {e.eid for e in g.gamma1_edges()}
    assert any({e.eid for e in cyc} == gamma1 for cyc in cycles)


def test_paths_one_switch_simple_model(f1arc_engine):
    _, g, _ = f1arc_engine
    tail = g.outgoing_tails()[0]
    paths = paths_one_switch(g, tail)
    assert len(paths) == 2
    lengths = sorted(len(p.edges) for p in paths)
    assert lengths == [1, 3]
    for p in paths:
        assert p.switch_count == 1
        assert p.recount_switches() == 1


def test_paths_two_pair_counts(f0_engine):
    _, g, _ = f0_engine
    for tail in g.outgoing_tails():
        paths = paths_one_switch(g, tail)
        assert len(paths) == 2
        assert all(p.recount_switches() == 1 for p in paths)


def test_paths_bounded_budgets(f1arc_engine):
    _, g, _ = f1arc_engine
    tail = g.outgoing_tails()[0]
    assert paths_bounded(g, tail, 0) == []
    one = paths_bounded(g, tail, 1)
    assert one == paths_one_switch(g, tail)
    three = paths_bounded(g, tail, 3)
    assert len(three) > len(one)
    assert all(p.switch_count <= 3 for p in three)
    assert all(p.recount_switches() == p.switch_count for p in three)
    # every one-switch path reappears untouched in the bigger budget
    sigs = {tuple(e.eid for e in p.edges) for p in three}
    assert all(tuple(e.eid for e in p.edges) in sigs for p in one)


def test_unattached_tail_unreachable(f1arc_engine):
    _, g, _ = f1arc_engine
    loose = Tail(tid=99, direction=-1, xi_sign=-1, kind="outgoing", attach=None)
    assert paths_bounded(g, loose, 1) == []
    with pytest.raises(ValueError):
        paths_bounded(g, g.tails[0] if g.tails[0].kind == "incoming" else g.tails[1], 1)


def test_path_edges_independent_of_base_placement():
    import dataclasses

    rep, g, eng = pipeline.build_engine(fixtures.f1_arc(), h_max=0.06)
    tail = g.outgoing_tails()[0]
    before = [tuple(e.eid for e in p.edges) for p in paths_one_switch(g, tail)]
    g2 = dataclasses.replace(g)
    g2.e0 = dataclasses.replace(g.e0, base_frac=0.25)
    after = [tuple(e.eid for e in p.edges) for p in paths_one_switch(g2, tail)]
    assert before == after


def test_sub_pieces_turning_count_split():
    pieces = (
        Piece(-1.5, -1.0, -1, True, False),
        Piece(-1.5, -1.0, +1, True, False),
    )
    e = geometry.Edge(0, 1, None, None, pieces, base_frac=0.3)
    first, nu1 = e.sub_pieces(0.0, 0.3)
    second, nu2 = e.sub_pieces(0.3, 1.0)
    assert nu1 + nu2 == e.nu == 1
    assert nu1 == 0 and nu2 == 1
    total = sum(pc.width for pc in first) + sum(pc.width for pc in second)
    assert abs(total - e.arc_length) < 1e-14
    # a fraction range that brackets the junction counts it
    _, nu_mid = e.sub_pieces(0.25, 0.75)
    assert nu_mid == 1


def test_base_point_positions(f1arc_engine):
    _, g, _ = f1arc_engine
    for e in g.edges:
        x = e.base_x
        lo = min(pc.x_lo for pc in e.pieces)
        hi = max(pc.x_hi for pc in e.pieces)
        assert lo <= x <= hi


def test_pathseq_validates_consecutiveness(f1arc_engine):
    _, g, _ = f1arc_engine
    e = g.gamma1_edges()[0]
    bad = [e2 for e2 in g.edges if e2.source.key != e.target.key and e2.eid != e.eid]
    if bad:
        with pytest.raises(InternalInconsistency):
            PathSeq(edges=(e, bad[0]))


def test_graph_json_roundtrip(f0_engine):
    import json

    _, g, _ = f0_engine
    d = geometry.graph_to_dict(g)
    blob = json.dumps(d)
    back = json.loads(blob)
    assert back["e0"] == g.e0.eid
    assert len(back["vertices"]) == len(g.vertices)
    assert len(back["primitive_cycles"]) == len(primitive_cycles(g))


def test_open_channel_topology(f1_engine):
    # tangency with channel 2 open both sides: no bounded channel-2 edge,
    # four tails, and the classical cycle is the only primitive cycle
    _, g, _ = f1_engine
    assert len(g.vertices) == 2
    assert len(g.edges) == 2
    assert all(e.channel == 1 for e in g.edges)
    assert len(g.tails) == 4
    assert len(primitive_cycles(g)) == 1
    for tail in g.outgoing_tails():
        assert len(paths_one_switch(g, tail)) == 1
