"""Boundary feature searches: cut points, cut pairs, non-cut pairs.

Cut points of the boundary are detected by disconnection of the annulus
around peripheral vertical rays.  Cut pairs and non-cut pairs are
detected through two kinds of finite features: periodic ones (a short
translation-periodic geodesic segment at shallow depth whose annulus
splits into two translation-compatible sides) and horseshoe ones (a
segment dipping through a horoball whose primed annulus is disconnected
or connected, respectively).  Every search returns an honest verdict:
found (with a feature that passes the verifier), none-in-budget,
none-at-full-bound, or window-insufficient.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .annulus import UnionFind, _components, annulus_decompose, \
    horseshoe_decompose
from .geometry import bfs_distances, distance, is_local_geodesic
from .hyperbolicity import ceil_frac, floor_frac
from .words import concat, inverse_word


@dataclass(frozen=True)
class CutPairFeature:
    kind: str                 # periodic | horseshoe
    path: tuple               # vertex ids, domain [a-eta, b+eta] (periodic)
    eta: int = 0              # integer margin
    g: tuple = None           # translation, a group element word
    partition: tuple = None   # (frozenset, frozenset) for periodic
    c_index: int = None       # thick parameter, index into path

    @property
    def a_index(self):
        return self.eta

    @property
    def b_index(self):
        return len(self.path) - 1 - self.eta


@dataclass(frozen=True)
class NonCutFeature:
    kind: str                 # triple | horseshoe
    segments: tuple = ()      # three overlapping paths for the triple kind
    etas: tuple = ()          # margins per segment
    g1: tuple = None
    g3: tuple = None
    c_index: int = None       # index into the middle segment
    path: tuple = ()          # horseshoe segment


@dataclass
class SearchOutcome:
    verdict: str              # found | none-in-budget | none-at-full-bound
                              # | window-insufficient
    feature: object = None
    stats: dict = field(default_factory=dict)


def _params(table):
    r = table["r"]
    K = table["K"]
    R = table["R"]
    if Fraction(r) < 1 or Fraction(K) < 1:
        raise ValueError("degenerate annulus parameters: need r >= 1, K >= 1")
    return r, K, R


# ---------------------------------------------------------------------------
# cut points


def detect_cut_point(space, table):
    """Test, for each peripheral subgroup, whether the annulus around the
    vertical ray over the identity is disconnected within the thick part
    of depth k.  A disconnection witnesses a cut point candidate."""
    if not space.presentation.peripherals:
        return SearchOutcome("none-at-full-bound",
                             stats={"reason": "no peripherals"})
    r, K, R = _params(table)
    k = ceil_frac(table["k"])
    caveat_seen = False
    for pi in range(len(space.presentation.peripherals)):
        ray = space.vertical_ray(0, pi)
        dec = annulus_decompose(space, ray, r, K, R)
        caveat_seen = caveat_seen or dec.caveat
        shallow = {v for v in dec.a_vertices if space.height(v) <= k}
        comps = _components(space, shallow)
        if len(comps) >= 2:
            name = space.presentation.peripherals[pi][0]
            return SearchOutcome("found", feature={
                "peripheral": name, "components": len(comps),
                "caveat": dec.caveat})
    if caveat_seen:
        return SearchOutcome("window-insufficient",
                             stats={"reason": "annuli touch window boundary"})
    return SearchOutcome("none-at-full-bound")


# ---------------------------------------------------------------------------
# cut pair verifier


def verify_cut_pair_feature(space, f, table):
    """Condition-by-condition check; returns (ok, report) where report is
    a list of (condition, ok, detail) triples."""
    if f.kind == "horseshoe":
        return _verify_cutpair_horseshoe(space, f, table)
    report = []
    r, K, R = _params(table)
    a, b = f.a_index, f.b_index
    span = b - a
    depth_bound = ceil_frac(Fraction(table["k"]) + Fraction(R))
    ok_dom = all(space.height(v) <= depth_bound for v in f.path)
    dans = distance(space, f.path[0], f.path[-1])
    ok_dom = ok_dom and dans.dist == len(f.path) - 1
    report.append(("domain", ok_dom,
                   "segment geodesic in X_(k+R), margins %d" % f.eta))
    ok_a = Fraction(table["N_min"]) <= span <= Fraction(table["N_max"])
    report.append(("a", ok_a, "N_min <= b-a <= N_max, b-a=%d" % span))
    ga = space.translate(f.g, f.path[a])
    ok_b = (space.height(f.path[a]) == space.height(f.path[b])
            and ga == f.path[b])
    report.append(("b", ok_b, "equal heights and g.gamma(a) = gamma(b)"))
    ok_c = all(space.translate(f.g, f.path[a + t]) == f.path[b + t]
               for t in range(-f.eta, f.eta + 1))
    report.append(("c", ok_c, "g-overlap of the eta-margins"))
    X, dist_g, CK = _cutpair_ground_set(space, f.path, a, b, r, K, R)
    ok_d, detail_d = _check_partition(space, f, table, X, CK)
    report.append(("d", ok_d, detail_d))
    ok_e, detail_e = _check_translate_compat(space, f, table, X)
    report.append(("e", ok_e, detail_e))
    return all(ok for _, ok, _ in report), report


def _cutpair_ground_set(space, path, a, b, r, K, R):
    """X = N_{r,R}(gamma) /\\ N_R(gamma[a,b]) and C_K(gamma)."""
    cutoff = int(max(Fraction(R), Fraction(K)))
    dist_g = bfs_distances(space, sorted(set(path)), cutoff=cutoff)
    dist_mid = bfs_distances(space, sorted(set(path[a:b + 1])),
                             cutoff=int(Fraction(R)))
    X = {v for v, d in dist_g.items()
         if Fraction(r) <= d <= Fraction(R)
         and Fraction(dist_mid.get(v, cutoff + 1)) <= Fraction(R)}
    CK = {v for v, d in dist_g.items() if d == Fraction(K)}
    return X, dist_g, CK


def _check_partition(space, f, table, X, CK):
    if f.partition is None or f.c_index is None:
        return False, "partition or thick parameter missing"
    P1, P2 = f.partition
    if set(P1) | set(P2) != X or (set(P1) & set(P2)) or not P1 or not P2:
        return False, "not a partition of N_(r,R) /\\ N_R(mid)"
    for v in X:
        side = v in P1
        for u in space.neighbors(v):
            if u in X and (u in P1) != side:
                return False, "crossing edge %d -- %d" % (v, u)
    c = f.path[f.c_index]
    if space.height(c) != 0:
        return False, "thick parameter not at height 0"
    hot = CK & set(bfs_distances(space, [c],
                                 cutoff=int(Fraction(table["T"]))))
    if not (hot & set(P1)) or not (hot & set(P2)):
        return False, "a side misses C_K /\\ B_T(gamma(c))"
    return True, "valid two-sided partition"


def _check_translate_compat(space, f, table, X):
    rho = floor_frac(table["rho"])
    a, b = f.a_index, f.b_index
    za = set(bfs_distances(space, [f.path[a]], cutoff=rho)) & X
    zb = set(bfs_distances(space, [f.path[b]], cutoff=rho)) & X
    P1 = set(f.partition[0]) if f.partition else set()
    image = {}
    for v in sorted(za):
        w = space.translate(f.g, v)
        if w is None or w not in zb:
            return False, "g does not carry B_rho(gamma(a)) zone into the " \
                          "gamma(b) zone (vertex %d)" % v
        image[v] = w
        if ((v in P1) != (w in P1)):
            return False, "g moves vertex %d across the partition" % v
    if set(image.values()) != zb:
        return False, "g-image does not cover the gamma(b) zone"
    return True, "partition g-compatible on the rho-zones"


def _verify_cutpair_horseshoe(space, f, table):
    report = []
    r, K, R = _params(table)
    k = ceil_frac(table["k"])
    span = len(f.path) - 1
    bound = Fraction(table["N_max"]) - 2 * Fraction(R) + 2 * Fraction(table["eta"])
    report.append(("a", Fraction(span) <= bound,
                   "b-a <= N_max - 2R + 2eta"))
    ha = space.height(f.path[0])
    hb = space.height(f.path[-1])
    report.append(("b", ha == hb >= k, "endpoint heights equal and >= k"))
    mono = (len(f.path) >= 2
            and space.height(f.path[1]) == ha - 1
            and space.height(f.path[-2]) == hb - 1)
    report.append(("c", mono, "descending at a, ascending at b"))
    try:
        dec = horseshoe_decompose(space, f.path, r, K, R)
        disc = (not dec.empty) and not dec.connected
        report.append(("d", disc, "A' disconnected (%d components)"
                       % len(dec.components)))
    except ValueError as e:
        report.append(("d", False, str(e)))
    return all(ok for _, ok, _ in report), report


# ---------------------------------------------------------------------------
# periodic path construction


def build_periodic_path(space, f, m_range):
    """gamma'((b-a)m + t) = g^m gamma(a+t) over the given m values
    (a consecutive integer range).  Verified (8*delta+1)-local-geodesic
    is the caller's job via is_local_geodesic; translates leaving the
    window raise."""
    ms = sorted(m_range)
    if ms != list(range(ms[0], ms[-1] + 1)):
        raise ValueError("m_range must be consecutive")
    a, b = f.a_index, f.b_index
    core = f.path[a:b + 1]
    out = []
    for m in ms:
        gp = ()
        w = f.g if m >= 0 else inverse_word(f.g)
        for _ in range(abs(m)):
            gp = concat(gp, w)
        block = [space.translate(gp, v) for v in core]
        if any(v is None for v in block):
            raise ValueError("translate g^%d exits the window" % m)
        if out and out[-1] == block[0]:
            block = block[1:]
        elif out and out[-1] != block[0]:
            raise ValueError("translates do not concatenate")
        out.extend(block)
    return out


# ---------------------------------------------------------------------------
# cut pair search


def search_cut_pair(space, table, budget=2000, base=0):
    """Enumerate candidate periodic features (geodesic segments from the
    base, by length then discovery order) and horseshoe features; verify
    each; return the first verified one."""
    r, K, R = _params(table)
    eta = ceil_frac(table["eta"])
    n_lo = ceil_frac(table["N_min"])
    n_hi_full = floor_frac(table["N_max"])
    stats = {"periodic_candidates": 0, "horseshoe_candidates": 0}
    need = n_lo + 2 * eta
    if need > space.R_max:
        return SearchOutcome("window-insufficient", stats={
            "required_radius": need, "window": space.R_max})
    depth_bound = ceil_frac(Fraction(table["k"]) + Fraction(R))
    budget_left = [budget]
    exhausted_fully = [True]

    for total in range(n_lo + 2 * eta, n_hi_full + 2 * eta + 1):
        if total > space.R_max:
            exhausted_fully[0] = False
            break
        for path in _geodesic_paths(space, base, total, depth_bound,
                                    budget_left, exhausted_fully):
            stats["periodic_candidates"] += 1
            f = _periodic_candidate(space, path, eta, table, r, K, R)
            if f is not None:
                ok, report = verify_cut_pair_feature(space, f, table)
                if ok:
                    stats["verified"] = True
                    return SearchOutcome("found", f, stats)
        if budget_left[0] <= 0:
            break

    hs = _horseshoe_scan(space, table, r, K, R, budget_left,
                         exhausted_fully, want_disconnected=True)
    stats["horseshoe_candidates"] = hs[1]
    if hs[0] is not None:
        return SearchOutcome("found", hs[0], stats)
    if budget_left[0] <= 0 or not exhausted_fully[0]:
        verdict = "none-in-budget" if budget_left[0] <= 0 \
            else "window-insufficient"
        return SearchOutcome(verdict, stats=stats)
    return SearchOutcome("none-at-full-bound", stats=stats)


def _geodesic_paths(space, base, length, depth_bound, budget_left,
                    exhausted_fully):
    """All geodesic paths from the base of the exact length inside the
    depth-bounded part, in deterministic order (extensions by sorted
    neighbor id, which follows the shortlex vertex layout)."""
    dist_base = bfs_distances(space, [base], cutoff=length)
    stack = [(base,)]
    while stack:
        path = stack.pop()
        if budget_left[0] <= 0:
            exhausted_fully[0] = False
            return
        if len(path) == length + 1:
            budget_left[0] -= 1
            yield path
            continue
        for u in sorted(space.neighbors(path[-1]), reverse=True):
            if space.height(u) > depth_bound:
                continue
            if dist_base.get(u, -1) != len(path):
                continue
            stack.append(path + (u,))


def _periodic_candidate(space, path, eta, table, r, K, R):
    """Assemble a candidate feature on a segment: heights must agree at a
    and b, the translation g is read off the endpoints, the margins must
    be g-compatible, and a valid two-sided component partition must
    exist.  Returns a CutPairFeature or None."""
    a = eta
    b = len(path) - 1 - eta
    va, vb = path[a], path[b]
    if space.height(va) != space.height(vb):
        return None
    g = concat(space.group_word(vb), inverse_word(space.group_word(va)))
    if space.translate(g, va) != vb:
        return None
    for t in range(-eta, eta + 1):
        if space.translate(g, path[a + t]) != path[b + t]:
            return None
    X, dist_g, CK = _cutpair_ground_set(space, path, a, b, r, K, R)
    if not X:
        return None
    comps = _components(space, X)
    labels = {}
    for root, comp in comps.items():
        for v in comp:
            labels[v] = root
    # merge components forced together by translate-compatibility on the
    # rho-zones; the zones themselves must correspond under g
    rho = floor_frac(table["rho"])
    za = set(bfs_distances(space, [va], cutoff=rho)) & X
    zb = set(bfs_distances(space, [vb], cutoff=rho)) & X
    uf = UnionFind(list(comps))
    mapped = set()
    for v in sorted(za):
        w = space.translate(g, v)
        if w is None or w not in zb:
            return None
        mapped.add(w)
        uf.union(labels[v], labels[w])
    if mapped != zb:
        return None
    groups = {}
    for root in comps:
        groups.setdefault(uf.find(root), set()).update(comps[root])
    # both sides must meet C_K /\ B_T(gamma(c)) for some thick c in [a,b]
    for c in range(a, b + 1):
        if space.height(path[c]) != 0:
            continue
        hot = CK & set(bfs_distances(space, [path[c]],
                                     cutoff=int(Fraction(table["T"]))))
        hot_groups = sorted(gr for gr, vs in groups.items() if vs & hot)
        if len(hot_groups) < 2:
            continue
        p2 = frozenset(groups[hot_groups[1]])
        p1 = frozenset(X - p2)
        return CutPairFeature("periodic", tuple(path), eta, g, (p1, p2), c)
    return None


def _horseshoe_scan(space, table, r, K, R, budget_left, exhausted_fully,
                    want_disconnected, length_bound=None):
    """Enumerate horseshoe segments (down through a horoball and back up
    to the same height) and return the first with disconnected (cut pair)
    or connected (non-cut pair) primed annulus."""
    k = ceil_frac(table["k"])
    if length_bound is None:
        length_bound = floor_frac(Fraction(table["N_max"]) - 2 * Fraction(R)
                                  + 2 * Fraction(table["eta"]))
    count = 0
    if k > space.h_max:
        exhausted_fully[0] = False
        return None, count
    starts = sorted(v for v in space.vertices()
                    if space.height(v) >= max(1, k))
    for v in starts:
        stack = [(v,)]
        while stack:
            path = stack.pop()
            if budget_left[0] <= 0:
                exhausted_fully[0] = False
                return None, count
            last = path[-1]
            if (len(path) >= 3 and space.height(last) == space.height(v)
                    and space.height(path[-2]) == space.height(last) - 1):
                count += 1
                budget_left[0] -= 1
                try:
                    dec = horseshoe_decompose(space, path, r, K, R)
                except ValueError:
                    dec = None
                if dec is not None and not dec.empty and \
                        dec.connected != want_disconnected:
                    f = CutPairFeature("horseshoe", tuple(path)) \
                        if want_disconnected else \
                        NonCutFeature("horseshoe", path=tuple(path))
                    return f, count
            if len(path) - 1 >= length_bound:
                continue
            for u in sorted(space.neighbors(last), reverse=True):
                if u in path:
                    continue
                if space.height(u) > space.height(v):
                    continue
                if len(path) == 1 and space.height(u) != space.height(v) - 1:
                    continue  # must descend at a
                stack.append(path + (u,))
    return None, count


# ---------------------------------------------------------------------------
# non-cut pairs


def verify_noncut_feature(space, f, table):
    if f.kind == "horseshoe":
        return _verify_noncut_horseshoe(space, f, table)
    report = []
    r, K, R = _params(table)
    segs = f.segments
    etas = f.etas
    if len(segs) != 3 or len(etas) != 3:
        return False, [("structure", False, "need three segments")]
    spans = [len(s) - 1 - 2 * e for s, e in zip(segs, etas)]
    ok = 1 <= spans[0] <= Fraction(table["N1"]) and \
        1 <= spans[2] <= Fraction(table["N1"])
    report.append(("a", ok, "outer spans within N1: %r" % (spans,)))
    report.append(("b", 1 <= spans[1] <= Fraction(table["N2"]),
                   "middle span within N2"))
    # (c) overlap agreement: end margin of segment i equals the start
    # margin of segment i+1
    ok_c = True
    for i in (0, 1):
        e_i, e_j = etas[i], etas[i + 1]
        tail = segs[i][len(segs[i]) - 1 - 2 * e_i:]
        head = segs[i + 1][:2 * e_j + 1]
        if tuple(tail) != tuple(head):
            ok_c = False
    report.append(("c", ok_c, "2eta-overlaps agree"))
    ok_d = True
    for i, g in ((0, f.g1), (2, f.g3)):
        s, e = segs[i], etas[i]
        a, b = e, len(s) - 1 - e
        if g is None:
            ok_d = False
            continue
        for t in range(-e, e + 1):
            if space.translate(g, s[a + t]) != s[b + t]:
                ok_d = False
    report.append(("d", ok_d, "g-periodicity of outer segments"))
    ok_e = all(space.height(s[e]) == space.height(s[len(s) - 1 - e])
               for s, e in zip(segs, etas))
    report.append(("e", ok_e, "equal endpoint heights"))
    depth_bound = ceil_frac(Fraction(table["k"]))
    ok_dom = all(space.height(v) <= depth_bound for s in segs for v in s)
    report.append(("domain", ok_dom, "segments in the k-thick part"))
    ok_f, detail = _noncut_condition_f(space, f, table, r, K, R)
    report.append(("f", ok_f, detail))
    return all(okc for _, okc, _ in report), report


def _noncut_condition_f(space, f, table, r, K, R):
    s2, e2 = f.segments[1], f.etas[1]
    a2, b2 = e2, len(s2) - 1 - e2
    if f.c_index is None or space.height(s2[f.c_index]) != 0:
        return False, "thick parameter missing or not at height 0"
    X, dist_g, CK = _cutpair_ground_set(space, s2, a2, b2, r, K, R)
    hot = CK & set(bfs_distances(space, [s2[f.c_index]],
                                 cutoff=int(Fraction(table["T"]))))
    if not hot:
        return False, "C_K /\\ B_T(gamma2(c)) empty"
    comps = _components(space, X)
    roots = {root for root, comp in comps.items() if comp & hot}
    if len(roots) == 1:
        return True, "all hot C_K vertices in one component"
    return False, "hot C_K vertices split across %d components" % len(roots)


def _verify_noncut_horseshoe(space, f, table):
    report = []
    r, K, R = _params(table)
    k = ceil_frac(table["k"])
    span = len(f.path) - 1
    report.append(("a", Fraction(span) <= Fraction(table["N3"]),
                   "b-a <= N3"))
    ha = space.height(f.path[0])
    hb = space.height(f.path[-1])
    shape = (ha == hb == k and len(f.path) >= 3
             and space.height(f.path[1]) == ha - 1
             and space.height(f.path[-2]) == hb - 1
             and all(space.height(v) <= k for v in f.path))
    report.append(("b", shape,
                   "endpoints at height k, descending/ascending, image in "
                   "h^-1[0,k]"))
    try:
        dec = horseshoe_decompose(space, f.path, r, K, R)
        okc = (not dec.empty) and dec.connected
        report.append(("c", okc, "A' connected (%d components)"
                       % len(dec.components)))
    except ValueError as e:
        report.append(("c", False, str(e)))
    return all(ok for _, ok, _ in report), report


def search_noncut_pair(space, table, budget=2000, base=0):
    """Mirror of search_cut_pair: triples of overlapping periodic
    segments (type 1) and connected-A' horseshoes (type 2)."""
    r, K, R = _params(table)
    eta = ceil_frac(table["eta"])
    stats = {"triple_candidates": 0, "horseshoe_candidates": 0}
    budget_left = [budget]
    exhausted_fully = [True]
    n1 = min(floor_frac(table["N1"]), space.R_max)
    n2 = min(floor_frac(table["N2"]), space.R_max)
    if floor_frac(table["N1"]) + floor_frac(table["N2"]) + 2 * eta \
            > space.R_max:
        exhausted_fully[0] = False
    depth_bound = ceil_frac(Fraction(table["k"]))
    for l1 in range(1, n1 + 1):
        for l2 in range(1, n2 + 1):
            for l3 in range(1, n1 + 1):
                total = l1 + l2 + l3 + 2 * eta
                if total > space.R_max:
                    exhausted_fully[0] = False
                    continue
                for path in _geodesic_paths(space, base, total, depth_bound,
                                            budget_left, exhausted_fully):
                    stats["triple_candidates"] += 1
                    f = _triple_candidate(space, path, (l1, l2, l3), eta,
                                          table)
                    if f is not None:
                        ok, report = verify_noncut_feature(space, f, table)
                        if ok:
                            return SearchOutcome("found", f, stats)
                if budget_left[0] <= 0:
                    break
            if budget_left[0] <= 0:
                break
        if budget_left[0] <= 0:
            break
    hs = _horseshoe_scan(space, table, r, K, R, budget_left,
                         exhausted_fully, want_disconnected=False,
                         length_bound=min(floor_frac(table["N3"]),
                                          4 * space.R_max))
    stats["horseshoe_candidates"] = hs[1]
    if hs[0] is not None:
        ok, _ = verify_noncut_feature(space, hs[0], table)
        if ok:
            return SearchOutcome("found", hs[0], stats)
    if budget_left[0] <= 0:
        return SearchOutcome("none-in-budget", stats=stats)
    if not exhausted_fully[0]:
        return SearchOutcome("window-insufficient", stats=stats)
    return SearchOutcome("none-at-full-bound", stats=stats)


def _triple_candidate(space, path, lengths, eta, table):
    """Slice an enumerated path into three overlapping segments."""
    l1, l2, l3 = lengths
    a1 = eta
    b1 = a1 + l1
    b2 = b1 + l2
    b3 = b2 + l3
    if b3 + eta != len(path) - 1:
        return None
    segs = (tuple(path[a1 - eta:b1 + eta + 1]),
            tuple(path[b1 - eta:b2 + eta + 1]),
            tuple(path[b2 - eta:b3 + eta + 1]))
    g1 = _segment_translation(space, segs[0], eta)
    g3 = _segment_translation(space, segs[2], eta)
    if g1 is None or g3 is None:
        return None
    c = next((i for i, v in enumerate(segs[1])
              if eta <= i <= len(segs[1]) - 1 - eta
              and space.height(v) == 0), None)
    if c is None:
        return None
    return NonCutFeature("triple", segs, (eta, eta, eta), g1, g3, c)


def _segment_translation(space, seg, eta):
    a, b = eta, len(seg) - 1 - eta
    va, vb = seg[a], seg[b]
    if space.height(va) != space.height(vb):
        return None
    g = concat(space.group_word(vb), inverse_word(space.group_word(va)))
    for t in range(-eta, eta + 1):
        if space.translate(g, seg[a + t]) != seg[b + t]:
            return None
    return g


# ---------------------------------------------------------------------------
# circle boundary decision


@dataclass
class CircleVerdict:
    answer: str               # yes | no | exhausted | window-insufficient
    witness: object = None
    trace: list = field(default_factory=list)


def decide_circle(space, table, budget=2000, n_cap=None, vc_report=None):
    """Is the boundary a circle?  yes needs the double-dagger condition
    plus no cut point plus non-cut-pair search empty at the full bound;
    no comes with a witness; anything less is honest exhaustion.
    vc_report (from algebra.vc_analyze on the whole group) is consulted
    first: virtually cyclic groups have at most two boundary points."""
    from .hyperbolicity import ddag_search
    trace = []
    if vc_report is not None and vc_report.verdict == "vc":
        return CircleVerdict("no", witness="virtually cyclic",
                             trace=["vc-screen"])
    trace.append("vc-screen passed")
    if n_cap is None:
        n_cap = int(table["Kd"]) + budget
    ddag = ddag_search(space, 0, table, n_cap)
    trace.append("ddag: %s" % ddag.status)
    if ddag.status == "window-insufficient":
        return CircleVerdict("window-insufficient", trace=trace)
    if ddag.status != "found":
        return CircleVerdict("exhausted", trace=trace)
    cp = detect_cut_point(space, table)
    trace.append("cut-point: %s" % cp.verdict)
    if cp.verdict == "found":
        return CircleVerdict("no", witness=cp.feature, trace=trace)
    if cp.verdict == "window-insufficient":
        return CircleVerdict("window-insufficient", trace=trace)
    nc = search_noncut_pair(space, table, budget)
    trace.append("non-cut-pair: %s" % nc.verdict)
    if nc.verdict == "found":
        return CircleVerdict("no", witness=nc.feature, trace=trace)
    if nc.verdict == "none-at-full-bound":
        return CircleVerdict("yes", trace=trace)
    if nc.verdict == "window-insufficient":
        return CircleVerdict("window-insufficient", trace=trace)
    return CircleVerdict("exhausted", trace=trace)


# ---------------------------------------------------------------------------
# witness serialization (replayable structured text)


def serialize_feature(f):
    if isinstance(f, CutPairFeature):
        doc = {"type": "cut-pair", "kind": f.kind, "path": list(f.path),
               "eta": f.eta, "g": list(f.g) if f.g else None,
               "partition": [sorted(p) for p in f.partition]
               if f.partition else None,
               "c_index": f.c_index}
    elif isinstance(f, NonCutFeature):
        doc = {"type": "non-cut", "kind": f.kind,
               "segments": [list(s) for s in f.segments],
               "etas": list(f.etas),
               "g1": list(f.g1) if f.g1 else None,
               "g3": list(f.g3) if f.g3 else None,
               "c_index": f.c_index, "path": list(f.path)}
    else:
        raise TypeError("not a feature: %r" % (f,))
    return json.dumps(doc, indent=1)


def parse_feature(text):
    doc = json.loads(text)
    if doc["type"] == "cut-pair":
        return CutPairFeature(
            doc["kind"], tuple(doc["path"]), doc["eta"],
            tuple(doc["g"]) if doc["g"] else None,
            tuple(frozenset(p) for p in doc["partition"])
            if doc["partition"] else None,
            doc["c_index"])
    return NonCutFeature(
        doc["kind"], tuple(tuple(s) for s in doc["segments"]),
        tuple(doc["etas"]),
        tuple(doc["g1"]) if doc["g1"] else None,
        tuple(doc["g3"]) if doc["g3"] else None,
        doc["c_index"], tuple(doc["path"]))
