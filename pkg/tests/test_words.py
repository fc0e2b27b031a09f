import itertools

import pytest

from jsjforge.words import (BackendError, DehnBackend, FreeBackend,
                            ParseError, Presentation, RewritingBackend,
                            concat, conjugate, cyclic_reduce, default_backend,
                            enumerate_tietze, free_reduce, inverse_word,
                            parse_presentation, parse_word, substitute,
                            word_to_str, words_shortlex)


def test_free_reduce_basics():
    assert free_reduce((1, -1)) == ()
    assert free_reduce((1, 2, -2, -1)) == ()
    assert free_reduce((1, 2, -2, 3)) == (1, 3)
    assert free_reduce(()) == ()


def test_free_reduce_involution_properties():
    words = list(words_shortlex(2, 4))[:200]
    for w in words:
        assert free_reduce(w) == w            # already reduced
        assert free_reduce(concat(w, inverse_word(w))) == ()
        assert inverse_word(inverse_word(w)) == w


def test_conjugate_and_cyclic_reduce():
    assert conjugate((1,), (2,)) == (1, 2, -1)
    assert cyclic_reduce((1, 2, -1)) == (2,)


def test_words_shortlex_counts_free_group():
    # reduced words over F2 of length <= 2: 1 + 4 + 12
    ws = list(words_shortlex(2, 2))
    assert len(ws) == 17
    assert ws[0] == ()
    assert len(set(ws)) == 17
    # deterministic
    assert ws == list(words_shortlex(2, 2))


def test_parse_word_and_round_trip():
    gens = ("a", "b")
    assert parse_word("abA", gens) == (1, 2, -1)
    assert parse_word("1", gens) == ()
    with pytest.raises(ParseError):
        parse_word("axb", gens)


def test_parse_presentation_grp_format():
    text = "# genus two\ngen a b c d\nrel abABcdCD\n"
    p = parse_presentation(text)
    assert p.generators == ("a", "b", "c", "d")
    assert p.relators == ((1, 2, -1, -2, 3, 4, -3, -4),)
    p2 = parse_presentation(p.to_grp())
    assert p2 == p


def test_parse_presentation_peripherals():
    p = parse_presentation("gen a b\nper P = a b\n")
    assert p.peripherals == (("P", ((1,), (2,))),)


def test_parse_presentation_rejects_bad_input():
    with pytest.raises(ParseError):
        parse_presentation("gen ab\n")
    with pytest.raises(ParseError):
        parse_presentation("rel a\n")
    with pytest.raises(ParseError):
        parse_presentation("gen a\nfoo a\n")


def test_free_backend_word_problem():
    p = Presentation(("a", "b"), (), ())
    be = FreeBackend(p)
    be.validate()
    assert be.normalize((1, -1)) == ()
    assert be.equal((1, 2), (1, 2, -2, 2))
    assert not be.is_identity((1,))


def test_dehn_backend_genus2():
    p = parse_presentation("gen a b c d\nrel abABcdCD\n")
    be = default_backend(p)
    assert isinstance(be, DehnBackend)
    rel = p.relators[0]
    assert be.is_identity(rel)
    assert be.is_identity(conjugate((2, -3), rel))
    assert be.is_identity(concat(rel, rel))
    assert not be.is_identity((1,))
    assert not be.equal((1, 2), (2, 1))


def test_dehn_backend_rejects_non_small_cancellation():
    # abAB has long pieces relative to its length
    p = Presentation(("a", "b"), ((1, 2, -1, -2),), ())
    with pytest.raises(BackendError):
        DehnBackend(p).validate()


def test_torsion_rewriting_via_default_backend():
    p = parse_presentation("gen a\nrel aaaaa\n")
    be = default_backend(p)
    assert be.is_identity((1,) * 5)
    assert be.equal((1,) * 4, (-1,))
    assert len({be.normalize((1,) * i) for i in range(5)}) == 5


def test_rewriting_backend_z2_x_z():
    # <a,b | a^2, abAB>: hand-built confluent shortlex rules
    p = Presentation(("a", "b"), ((1, 1), (1, 2, -1, -2)), ())
    rules = [((-1,), (1,)), ((1, 1), ()), ((2, 1), (1, 2)), ((-2, 1), (1, -2))]
    be = RewritingBackend(p, rules)
    be.validate()
    assert be.is_identity((1, 1))
    assert be.equal((2, 1), (1, 2))
    assert be.normalize((1, 2, 1, 2)) == be.normalize((2, 2))
    assert not be.is_identity((1,))


def test_substitute_is_homomorphism():
    images = ((1, 2), (-1,))
    w1, w2 = (1, 2, -1), (2, 2)
    assert free_reduce(substitute(concat(w1, w2), images)) == \
        free_reduce(concat(substitute(w1, images), substitute(w2, images)))


def test_word_to_str():
    assert word_to_str((1, -2), ("a", "b")) == "aB"
    assert word_to_str(()) == "1"


def test_enumerate_tietze_identity_first_and_consistent(free2):
    p, be = free2
    items = list(itertools.islice(enumerate_tietze(p, be), 12))
    first = items[0]
    assert first.presentation == p
    assert first.forward == ((1,), (2,))
    for item in items:
        # fwd o bwd is the identity on the original generators
        for i in range(len(p.generators)):
            w = substitute(item.forward[i], item.backward)
            assert be.equal(w, (i + 1,))


def test_enumerate_tietze_deterministic(free2):
    p, be = free2
    a = [i.presentation for i in itertools.islice(enumerate_tietze(p, be), 20)]
    b = [i.presentation for i in itertools.islice(enumerate_tietze(p, be), 20)]
    assert a == b
