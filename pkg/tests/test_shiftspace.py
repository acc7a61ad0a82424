import itertools
import random

import pytest
from hypothesis import assume, given, settings, strategies as st

from castlekit import (ClopenSet, EventuallyPeriodicPoint, Sft, maximal_invariant,
                       periodic_orbits, point_through, sft_from_forbidden)
from castlekit.errors import InvalidSymbol, SpaceMismatch

from conftest import (admissible_words, brute_words, build, expr_window, random_expr,
                      random_sft, sfts, words_on)


def test_golden_mean_word_counts_are_fibonacci(golden):
    fib = [2, 3, 5, 8, 13, 21, 34]
    assert [len(list(golden.words(n))) for n in range(1, 8)] == fib


def test_words_match_brute_force(golden):
    for n in range(1, 7):
        assert list(golden.words(n)) == admissible_words(golden, n)


def test_from_edges_prunes_sources_and_sinks():
    sp = Sft.from_edges("abc", [("a", "b"), ("b", "a"), ("b", "c")])
    assert sp.alphabet == ("a", "b")
    assert sp.removed == ("c",)


def test_empty_shift():
    sp = sft_from_forbidden("01", ["0", "1"])
    assert sp.is_empty
    assert periodic_orbits(sp, 5) == []


def test_unknown_symbol_raises(golden):
    with pytest.raises(InvalidSymbol):
        golden.encode("012")
    with pytest.raises(InvalidSymbol):
        sft_from_forbidden("01", ["2"])


def test_block_recoding_counts_match_base_words():
    forbidden = ["aaa", "bb"]
    sp = sft_from_forbidden("ab", forbidden)
    assert sp.block == 2
    for n in range(1, 7):
        base = [w for w in itertools.product("ab", repeat=n + 1)
                if not any(f in "".join(w) for f in forbidden)]
        # every base word extends both ways in this shift, so counts agree
        assert len(list(sp.words(n))) == len(base)


def test_shift_convention(golden):
    c = ClopenSet.cylinder(golden, (0, 1), 2)
    assert c.shift(3).equals(ClopenSet.cylinder(golden, (0, 1), -1))
    x = EventuallyPeriodicPoint.periodic(golden, "001")
    for n in range(-4, 5):
        # x in T^n S  <=>  T^{-n} x in S
        assert c.shift(n).contains_point(x) == c.contains_point(x.shift(-n))


def test_point_shift_reads_forward(golden):
    x = point_through(golden, "0100", -1)
    assert x.window(-1, 2) == golden.encode("0100")
    assert x.shift(1).symbol(0) == x.symbol(1)
    with pytest.raises(ValueError):
        point_through(golden, "11")


def test_space_mismatch(golden, full2):
    with pytest.raises(SpaceMismatch):
        ClopenSet.full(golden) | ClopenSet.full(full2)


def test_minimized_and_project(golden):
    s = ClopenSet.from_words(golden, -2, 2, ["00100", "00101", "10100", "10101"])
    m = s.minimized()
    assert m.equals(s)
    # x_{-1} = x_1 = 0 is forced once x_0 = 1
    assert m.window == (0, 0)
    assert m.word_strings() == ["1"]
    assert set(s.project(0, 0).word_strings()) == {"1"}


def test_extension_preserves_measure_of_words(golden):
    s = ClopenSet.cylinder(golden, (1,), 0)
    assert s.extended(-1, 1).count() == 1
    assert s.extended(-2, 2).count() == 4


@given(sfts(), st.integers(0, 2**32 - 1), st.integers(0, 5))
@settings(max_examples=60, deadline=None)
def test_boolean_algebra_matches_brute_force(sp, seed, ops):
    e = random_expr(random.Random(seed), sp, ops)
    a, b = expr_window(e)
    assume(b - a + 1 <= 10)
    assert words_on(build(sp, e), a, b) == brute_words(sp, e, a, b)


@given(sfts(), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_de_morgan_and_involution(sp, seed):
    rng = random.Random(seed)
    s, t = build(sp, random_expr(rng, sp, 2)), build(sp, random_expr(rng, sp, 2))
    assert (~(s | t)).equals(~s & ~t)
    assert (~~s).equals(s)
    assert (s - t).equals(s & ~t)
    assert s.shift(3).shift(-3).equals(s)


def _brute_orbits(sp, n):
    seen = set()
    for ell in range(1, n):
        for w in itertools.product(range(sp.q), repeat=ell):
            if not sp.is_admissible(w + w[:1]):
                continue
            rots = {w[i:] + w[:i] for i in range(ell)}
            if len(rots) == ell:
                seen.add(min(rots))
    return sorted(seen, key=lambda w: (len(w), w))


@given(sfts(max_symbols=4))
@settings(max_examples=40, deadline=None)
def test_periodic_orbits_match_brute_force(sp):
    n = 6 if sp.q <= 4 else 4
    assert [o.word for o in periodic_orbits(sp, n)] == _brute_orbits(sp, n)


def test_golden_orbit_census(golden):
    labels = [o.label for o in periodic_orbits(golden, 4)]
    assert labels == ["0", "01", "001"]


def test_maximal_invariant_of_golden():
    g = sft_from_forbidden("01", ["11"])
    sub = maximal_invariant(~ClopenSet.cylinder(g, (1,), 0))
    orbits = periodic_orbits(sub.child, 6)
    assert [sub.decode_word(o.word) for o in orbits] == [(0,)]
    assert sub.contains(EventuallyPeriodicPoint.periodic(g, "0"))
    assert not sub.contains(EventuallyPeriodicPoint.periodic(g, "01"))


@pytest.mark.parametrize("seed", range(8))
def test_maximal_invariant_periodic_points(seed):
    rng = random.Random(seed)
    sp = random_sft(rng, 3, 2)
    s = ~build(sp, random_expr(rng, sp, 1, span=1))
    sub = maximal_invariant(s)
    for o in periodic_orbits(sp, 6):
        inside = all(s.contains_point(p) for p in o.points())
        assert sub.contains(o.point()) == inside
    lifted = sub.lift_full(2)
    # the lift contains M, so every periodic orbit of M lies in it
    for o in periodic_orbits(sp, 6):
        if sub.contains(o.point()):
            assert all(lifted.contains_point(p) for p in o.points())
