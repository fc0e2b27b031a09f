import math
import sys
from fractions import Fraction

import pytest

from jsjforge.hyperbolicity import (ceil_frac, certify_delta, check_ddag,
                                    ddag_search, derive_constants, floor_frac,
                                    parse_const_file, star_pairs)

sys.set_int_max_str_digits(400000)


@pytest.mark.parametrize("x", [Fraction(7, 2), Fraction(-7, 2), Fraction(4),
                               Fraction(0), Fraction(1, 3), Fraction(-1, 3)])
def test_floor_ceil_frac_oracle(x):
    assert floor_frac(x) == math.floor(x)
    assert ceil_frac(x) == math.ceil(x)


def test_certify_delta_tree_is_zero(free2_space):
    cert = certify_delta(free2_space, 3)
    assert cert.delta == 0
    assert cert.triangles > 0


def test_certify_delta_line_with_horoball(line_pair):
    from jsjforge.geometry import build_cusped_space
    p, be = line_pair
    space = build_cusped_space(p, be, R_max=6, h_max=2)
    cert = certify_delta(space, 3)
    assert cert.delta <= 2


def test_constant_chain_relations():
    for delta in (0, 1, 2):
        t = derive_constants(delta, 0, B=3, V=5)
        assert t["C"] == 3 * delta
        assert t["M"] == 290 * delta + 3
        assert t["lam"] == Fraction(12 * delta + 1, 5 * delta + 1)
        assert t["eps"] == 2 * delta
        assert t["kd"] == 2 * t["M"]
        assert t["Kd"] == 3 * 2 ** (2 * t["M"] + 3) + t["M"] + 3
        assert t["K"] >= t["r"] + t["D"] + delta + t["C"]
        assert t["k"] >= 8 * delta + 1
        assert t["N_min"] <= t["N_max"]
        assert t["rho"] >= t["R"]


def test_constant_overrides_and_provenance():
    t = derive_constants(1, 0, B=3, V=5, overrides={"r": 2, "K": 7})
    assert t["r"] == 2 and t.provenance["r"] == "override"
    assert t.provenance["M"] == "formula"
    assert t.provenance["delta"] == "input"


def test_constant_table_fingerprint_deterministic():
    a = derive_constants(1, 0, B=3, V=5)
    b = derive_constants(1, 0, B=3, V=5)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != derive_constants(2, 0, B=3, V=5).fingerprint()


def test_parse_const_file():
    out = parse_const_file("# c\ndelta = 1\nlam = 13/6\n\nK = 7\n")
    assert out == {"delta": 1, "lam": Fraction(13, 6), "K": 7}
    with pytest.raises(ValueError):
        parse_const_file("delta 1\n")


def test_as_text_handles_huge_values_quickly():
    t = derive_constants(1, 0, B=3, V=5)
    text = t.as_text()
    assert "~10^" in text
    assert "override" not in text


def test_star_pairs_symmetric_distance_window(line_space):
    t = derive_constants(0, 0, n=4, B=3, V=4)
    pairs = star_pairs(line_space, 0, eps=0, M=1, radius=6, height_bound=0)
    from jsjforge.geometry import bfs_distances
    dist0 = bfs_distances(line_space, [0])
    for x, y, m in pairs:
        assert abs(dist0[x] - dist0[y]) <= 0
        assert m == min(dist0[x], dist0[y]) >= 0


def test_check_ddag_line_pair_blocked(line_space):
    # opposite points on the line at distance m from the base: any path
    # avoiding the ball around the base must climb the horoball
    t = derive_constants(0, 0, n=4, B=3, V=4)
    x = line_space.ball.vertex_id((1,) * 4)
    y = line_space.ball.vertex_id((-1,) * 4)
    ans = check_ddag(line_space, 0, 0, 40, (x, y), t)
    assert ans.ok
    assert all(v not in (0,) for v in ans.path[1:-1])


def test_ddag_search_free_group_refutes(free2_space):
    # trees have cut points everywhere: every n is refuted
    t = derive_constants(0, 0, n=4, B=3, V=4, overrides={"kd": 0, "Kd": 1})
    rep = ddag_search(free2_space, 0, t, n_cap=8)
    assert rep.status == "exhausted"
    assert rep.failures
    assert rep.pairs_checked > 0


def test_ddag_search_window_insufficient_at_full_constants(line_space):
    t = derive_constants(1, 0, B=3, V=5)
    rep = ddag_search(line_space, 0, t, n_cap=int(t["Kd"]))
    assert rep.status == "window-insufficient"
    assert rep.required_radius > line_space.R_max
