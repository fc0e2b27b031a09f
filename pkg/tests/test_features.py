import pytest

from jsjforge import features as F
from jsjforge.hyperbolicity import derive_constants


def _table(**ov):
    return derive_constants(0, 0, n=4, B=3, V=4, overrides=ov)


F2_OV = dict(r=1, K=1, R=2, T=2, k=0, rho=1, eta=1,
             N_min=2, N_max=4, N1=2, N2=2, N3=2)
LINE_OV = dict(r=2, K=2, R=3, T=2, k=2, rho=1, eta=1,
               N_min=2, N_max=6, N1=2, N2=2, N3=6)


def test_degenerate_parameters_rejected(free2_space):
    with pytest.raises(ValueError):
        F.search_cut_pair(free2_space, _table(K=0), budget=10)
    with pytest.raises(ValueError):
        F.search_cut_pair(free2_space, _table(r=0), budget=10)


def test_detect_cut_point_line(line_space):
    out = F.detect_cut_point(line_space, _table(**LINE_OV))
    assert out.verdict == "found"
    assert out.feature["components"] >= 2


def test_search_cut_pair_free_group_found_and_verified(free2_space):
    tab = _table(**F2_OV)
    out = F.search_cut_pair(free2_space, tab, budget=5000)
    assert out.verdict == "found"
    ok, report = F.verify_cut_pair_feature(free2_space, out.feature, tab)
    assert ok, [d for c, o, d in report if not o]
    assert all(o for c, o, d in report)


def test_cut_pair_serialization_round_trip(free2_space):
    tab = _table(**F2_OV)
    f = F.search_cut_pair(free2_space, tab, budget=5000).feature
    f2 = F.parse_feature(F.serialize_feature(f))
    ok, _ = F.verify_cut_pair_feature(free2_space, f2, tab)
    assert ok


def test_cut_pair_periodic_path(free2):
    # m = -3..3 translates of the core need a window deep enough to hold
    # seven copies of the period
    from jsjforge.geometry import build_cusped_space
    p, be = free2
    space = build_cusped_space(p, be, R_max=10, h_max=0)
    tab = _table(**F2_OV)
    f = F.search_cut_pair(space, tab, budget=5000).feature
    path = F.build_periodic_path(space, f, range(-3, 4))
    assert path is not None
    # consecutive vertices adjacent
    for u, v in zip(path, path[1:]):
        assert v in space.neighbors(u)


def test_cut_pair_corruption_rejected(free2_space):
    tab = _table(**F2_OV)
    f = F.search_cut_pair(free2_space, tab, budget=5000).feature
    P1, P2 = f.partition
    # move a vertex that has a same-side neighbour: creates crossing edges
    v = next(v for v in sorted(P1)
             if any(u in P1 for u in free2_space.neighbors(v)))
    bad = F.CutPairFeature(f.kind, f.path, f.eta, f.g,
                           (frozenset(P1 - {v}), frozenset(P2 | {v})),
                           f.c_index)
    ok, report = F.verify_cut_pair_feature(free2_space, bad, tab)
    assert not ok
    # drop a vertex entirely: partition no longer covers the ground set
    w = sorted(P1)[0]
    bad2 = F.CutPairFeature(f.kind, f.path, f.eta, f.g,
                            (frozenset(P1 - {w}), P2), f.c_index)
    assert not F.verify_cut_pair_feature(free2_space, bad2, tab)[0]


def test_noncut_horseshoe_found_on_line(line_space):
    tab = _table(r=1, K=1, R=2, T=2, k=2, rho=1, eta=1,
                 N_min=2, N_max=6, N1=0, N2=0, N3=8)
    out = F.search_noncut_pair(line_space, tab, budget=500000)
    assert out.verdict == "found"
    assert out.feature.kind == "horseshoe"
    ok, report = F.verify_noncut_feature(line_space, out.feature, tab)
    assert ok, [d for c, o, d in report if not o]


def test_noncut_search_window_guard(free2_space):
    # bounds exceed the window and no feature exists inside it
    tab = _table(r=1, K=1, R=2, T=2, k=0, rho=1, eta=1,
                 N_min=2, N_max=4, N1=20, N2=20, N3=2)
    out = F.search_noncut_pair(free2_space, tab, budget=10**7)
    assert out.verdict == "window-insufficient"


def test_noncut_none_at_full_bound_in_tree(free2_space):
    tab = _table(**F2_OV)
    out = F.search_noncut_pair(free2_space, tab, budget=500000)
    assert out.verdict == "none-at-full-bound"


def test_cut_pair_window_guard(line_space):
    tab = _table(r=1, K=1, R=2, T=2, k=1, rho=1, eta=1,
                 N_min=40, N_max=41)
    out = F.search_cut_pair(line_space, tab, budget=100)
    assert out.verdict == "window-insufficient"


def test_decide_circle_tree_says_no(free2_space):
    tab = _table(kd=0, Kd=1, **{k: v for k, v in F2_OV.items()})
    verdict = F.decide_circle(free2_space, tab, budget=200, n_cap=6)
    assert verdict.answer in ("no", "exhausted")
    assert verdict.trace
