import pytest

from jsjforge import algebra as A
from jsjforge.words import (Presentation, RewritingBackend, conjugate,
                            default_backend, parse_presentation)


def _z2xz():
    p = Presentation(("a", "b"), ((1, 1), (1, 2, -1, -2)), ())
    rules = [((-1,), (1,)), ((1, 1), ()), ((2, 1), (1, 2)),
             ((-2, 1), (1, -2))]
    be = RewritingBackend(p, rules)
    be.validate()
    return p, be


def test_order_of():
    p = parse_presentation("gen a\nrel aaaaa\n")
    be = default_backend(p)
    assert A.order_of(be, (1,), 10) == 5
    assert A.order_of(be, (), 10) == 1
    pf = parse_presentation("gen a b\n")
    bef = default_backend(pf)
    assert A.order_of(bef, (1, 2), 20) is None


def test_subgroup_elements_deterministic(free2):
    p, be = free2
    els = A.subgroup_elements(be, [(1, 1)], 3)
    assert () in set(els)
    assert (1, 1) in set(els)
    assert (1,) not in set(els)
    assert list(els) == list(A.subgroup_elements(be, [(1, 1)], 3))


def test_cyclic_subgroup_contains(free2):
    p, be = free2
    assert A.cyclic_subgroup_contains(be, (1,), (1, 1, 1))
    assert A.cyclic_subgroup_contains(be, (1, 2), (1, 2, 1, 2))
    assert not A.cyclic_subgroup_contains(be, (1,), (2,))


def test_finite_normal_subgroups_z2xz():
    p, be = _z2xz()
    subs, maximal = A.finite_normal_subgroups(p, be, 0)
    assert set(maximal) == {(), be.normalize((1,))}
    assert any(len(s) == 1 for s in subs)       # trivial subgroup listed


def test_effective_kernel_quotient_idempotent():
    p, be = _z2xz()
    q, pers = A.effective_kernel_quotient(p, [], be, 0)
    assert (1,) in q.relators or be.normalize((1,)) in q.relators
    be_q = RewritingBackend(q, [((-1,), (1,)), ((1, 1), ()),
                                ((2, 1), (1, 2)), ((-2, 1), (1, -2)),
                                ((1,), ())])
    q2, _ = A.effective_kernel_quotient(q, [], be, 0)
    assert set(q2.relators) == set(q.relators)


def test_vc_analyze_exact_verdicts(free2):
    # free group of rank two: not virtually cyclic, witnessed
    p, be = free2
    rep = A.vc_analyze(p, be, 0, [(1,), (2,)])
    assert rep.verdict == "not-vc"
    assert rep.witness is not None

    # infinite cyclic
    pz = parse_presentation("gen a\n")
    bez = default_backend(pz)
    repz = A.vc_analyze(pz, bez, 0, [(1,)])
    assert repz.verdict == "vc" and repz.vc_type == "Z"

    # infinite dihedral
    pd = parse_presentation("gen a b\nrel aa\nrel bb\n")
    bed = default_backend(pd)
    repd = A.vc_analyze(pd, bed, 0, [(1,), (2,)], budget=8)
    assert repd.verdict == "vc" and repd.vc_type == "Dinf"

    # Z x Z/2: type Z with nontrivial finite normal part
    pm, bem = _z2xz()
    repm = A.vc_analyze(pm, bem, 0, [(1,), (2,)], budget=8)
    assert repm.verdict == "vc" and repm.vc_type == "Z"
    assert repm.E and set(repm.E) != {()}


def test_vc_analyze_conjugation_invariance(free2):
    p, be = free2
    S = [(1, 2)]
    S_conj = [conjugate((2,), w) for w in S]
    r1 = A.vc_analyze(p, be, 0, S)
    r2 = A.vc_analyze(p, be, 0, S_conj)
    assert r1.verdict == r2.verdict == "vc"
    assert r1.vc_type == r2.vc_type


def test_orbifold_model_catalogue_items():
    m1 = A.orbifold_model(1, (2, 3, 7))
    assert len(m1.presentation.relators) == 3
    m3 = A.orbifold_model(3, (3, 5))
    assert m3.presentation.relators == ((1,) * 3, (2,) * 5)
    assert len(m3.presentation.peripherals) == 1
    m5 = A.orbifold_model(5)
    assert m5.presentation.relators == ()
    assert len(m5.presentation.peripherals) == 3
    m10 = A.orbifold_model(10)
    assert len(m10.presentation.peripherals) == 3


def test_orbifold_model_strict_constraints():
    # (2,3,5) is spherical: excluded by the hyperbolic-area bound
    assert A.orbifold_model(1, (2, 3, 5)) is None
    assert A.orbifold_model(1, (2, 3, 7)) is not None


def test_catalogue_models_sorted_and_bounded():
    models = A.catalogue_models(3)
    assert models
    keys = [(sum(m.params), m.item, m.params) for m in models]
    assert keys == sorted(keys)
    assert all(all(x <= 3 for x in m.params) for m in models)


def test_small_orbifold_match_pants():
    p = parse_presentation("gen a b\nper P = a\nper Q = b\nper R = ab\n")
    be = default_backend(p)
    out = A.small_orbifold_match(p, list(p.peripherals), be, budget=2)
    assert out.verdict == "found"
    assert out.feature.model.item == 5
    replay = A.verify_hom_pair(out.feature.model,
                               default_backend(out.feature.model.presentation),
                               p, be, out.feature.phi, out.feature.psi,
                               list(p.peripherals))
    assert replay is not None


def test_small_orbifold_match_disc_3_5():
    p = parse_presentation("gen a b\nrel aaa\nrel bbbbb\nper P = ab\n")
    be = default_backend(p)
    out = A.small_orbifold_match(p, list(p.peripherals), be, budget=2)
    assert out.verdict == "found"
    assert out.feature.model.item == 3
    assert tuple(sorted(out.feature.model.params)) == (3, 5)


def test_small_orbifold_match_negative():
    p = parse_presentation("gen a b\nper P = a\n")
    be = default_backend(p)
    out = A.small_orbifold_match(p, list(p.peripherals), be, budget=2)
    assert out.verdict == "none-in-budget"


def test_mirrors_splitting_hexagon():
    p = parse_presentation("gen a b c\nrel aa\nrel bb\nrel cc\n")
    be = default_backend(p)
    out = A.mirrors_splitting(p, [], be, budget=3)
    assert out.verdict == "found"
    g = out.feature
    # star: leaves carry the order-two generators
    assert len(g.edges) >= 1
    assert len(g.vertices) == len(g.edges) + 1


def test_mirrors_splitting_trivial_without_two_torsion(free2):
    p, be = free2
    out = A.mirrors_splitting(p, [], be, budget=3)
    assert out.verdict == "found"
    assert out.feature["kind"] == "trivial"
