import random

import networkx as nx
import pytest

from jsjforge.annulus import (annulus_decompose, component_count_stability,
                              horseshoe_decompose)


def _nx_components(space, vertex_set):
    g = nx.Graph()
    g.add_nodes_from(vertex_set)
    for v in vertex_set:
        for u in space.neighbors(v):
            if u in vertex_set:
                g.add_edge(v, u)
    return list(nx.connected_components(g))


def _tid(space, x):
    word = (1,) * x if x >= 0 else (-1,) * (-x)
    return space.ball.vertex_id(word)


def test_annulus_components_match_networkx(line_space):
    space = line_space
    rng = random.Random(7)
    for _ in range(25):
        x = rng.randint(-6, 6)
        gamma = space.vertical_ray(_tid(space, x), 0)
        r = rng.randint(1, 3)
        K = rng.randint(r, r + 2)
        R = rng.randint(K, K + 3)
        dec = annulus_decompose(space, gamma, r, K, R)
        want = _nx_components(space, dec.N)
        assert sorted(map(len, dec.components.values())) == \
            sorted(map(len, want))
        assert set().union(*dec.components.values()) == dec.N if dec.N \
            else not dec.components


def test_annulus_two_sided_for_r_at_least_two(line_space):
    space = line_space
    from jsjforge.annulus import _components
    ray = space.vertical_ray(0, 0)
    dec = annulus_decompose(space, ray, 2, 2, 3)
    for k in range(0, 4):
        up = {v for v in dec.a_vertices if space.height(v) >= k}
        assert len(_components(space, up)) == 2, k


def test_annulus_connected_for_r_one(line_space):
    # at r=1 the two sides of a vertical ray meet through the adjacent
    # horoball vertices, so the annulus is a single component
    space = line_space
    from jsjforge.annulus import _components
    ray = space.vertical_ray(0, 0)
    dec = annulus_decompose(space, ray, 1, 1, 2)
    assert len(_components(space, dec.a_vertices)) == 1


def test_annulus_empty_path_rejected(line_space):
    with pytest.raises(ValueError):
        annulus_decompose(line_space, [], 1, 1, 2)


def test_component_count_stability(line_space):
    ray = line_space.vertical_ray(0, 0)
    assert component_count_stability(line_space, ray, 2, 2, 3, 4)


def test_marker_hits_tag_hot_components(line_space):
    space = line_space
    seg = [_tid(space, x) for x in range(-4, 5)]
    dec = annulus_decompose(space, seg, 1, 1, 2, T=2)
    for root in dec.a_roots:
        assert isinstance(dec.marker_hits[root], tuple)
    # some component is hot somewhere along the path
    assert any(dec.marker_hits[root] for root in dec.a_roots)


def _horoball_pair(space, x0, x1, k):
    ray0 = space.vertical_ray(_tid(space, x0), 0)
    ray1 = space.vertical_ray(_tid(space, x1), 0)
    return ray0[k], ray1[k]


def test_horseshoe_depth_two_connected(line_space):
    a, b = _horoball_pair(line_space, 0, 4, 2)
    assert b in line_space.neighbors(a)   # width 4 at height 2
    dec = horseshoe_decompose(line_space, [a, b], 1, 1, 2)
    assert dec.depth == 2
    assert dec.connected


def test_horseshoe_larger_r_empties(line_space):
    a, b = _horoball_pair(line_space, 0, 4, 2)
    dec = horseshoe_decompose(line_space, [a, b], 2, 2, 2)
    assert dec.empty or not dec.connected


def test_horseshoe_connectivity_needs_depth(line_space):
    # at r=2 a shallow horseshoe stays split by its tails, a deeper one
    # reconnects below the excluded region
    a1, b1 = _horoball_pair(line_space, 0, 2, 1)
    dec1 = horseshoe_decompose(line_space, [a1, b1], 2, 2, 3)
    assert not dec1.connected
    a2, b2 = _horoball_pair(line_space, 0, 2, 2)
    dec2 = horseshoe_decompose(line_space, [a2, b2], 2, 2, 3)
    assert dec2.connected


def test_horseshoe_rejects_bad_segments(line_space):
    a, _ = _horoball_pair(line_space, 0, 2, 1)
    _, b2 = _horoball_pair(line_space, 0, 2, 2)
    with pytest.raises(ValueError):
        horseshoe_decompose(line_space, [a], 1, 1, 2)
    with pytest.raises(ValueError):
        horseshoe_decompose(line_space, [a, b2], 1, 1, 2)
    with pytest.raises(ValueError):
        horseshoe_decompose(line_space, [_tid(line_space, 0),
                                         _tid(line_space, 1)], 1, 1, 2)
