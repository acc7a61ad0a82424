import random

import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from castlekit import ClopenSet, periodic_orbits
from castlekit import castles as ck
from castlekit.errors import BudgetExceeded, HasShortPeriod, NotFeedback

from conftest import (admissible_words, build, random_expr, sfts,
                      sft_without_short_periods)


def member(s: ClopenSet, word, a):
    """Brute membership of the point carrying ``word`` from coordinate ``a``."""
    return tuple(word[s.a - a:s.b - a + 1]) in set(s.words())


def brute_capturing(e: ClopenSet, n: int) -> bool:
    words = set(e.words())
    lo, hi = e.a - 1, e.b + n - 1
    for w in admissible_words(e.space, hi - lo + 1):
        def inside(k):  # T^k x in E reads x on [a + k, b + k]
            return tuple(w[e.a + k - lo:e.b + k - lo + 1]) in words
        if inside(0) and not inside(-1) and not all(inside(k) for k in range(n)):
            return False
    return True


def brute_partition(castle) -> bool:
    floors = [fl for _, _, fl in castle.floors()]
    lo = min(f.a for f in floors)
    hi = max(f.b for f in floors)
    assert hi - lo < 14, "castle too wide for brute force"
    for w in admissible_words(castle.space, hi - lo + 1):
        if sum(member(f, w, lo) for f in floors) != 1:
            return False
    return True


def test_kakutani_rokhlin_golden_example(golden):
    e = ClopenSet.cylinder(golden, (0,), 0)
    c = ck.kakutani_rokhlin(e)
    assert c.heights == [1, 2]
    assert c.towers[0].base.equals(ClopenSet.cylinder(golden, (0, 0), 0))
    assert c.towers[1].base.equals(ClopenSet.cylinder(golden, (0, 1), 0))
    assert c.is_partition()
    assert brute_partition(c)


def test_kakutani_rokhlin_rejects_non_feedback(golden):
    with pytest.raises(NotFeedback):
        ck.kakutani_rokhlin(ClopenSet.cylinder(golden, (1,), 0))
    fb = ck.is_feedback(ClopenSet.cylinder(golden, (1,), 0))
    assert not fb and fb.witness is not None
    assert fb.witness.window(-3, 3) == (0,) * 7


@given(sfts(), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
def test_kakutani_rokhlin_random_feedback_sets(sp, seed):
    e = build(sp, random_expr(random.Random(seed), sp, 2, span=1))
    assume(not e.is_empty())
    fb = ck.is_feedback(e)
    if not fb:
        # a witness orbit never meets e
        x = fb.witness
        assert not any(e.contains_point(x.shift(k)) for k in range(-8, 9))
        return
    c = ck.kakutani_rokhlin(e)
    assert c.is_partition()
    floors = [fl for _, _, fl in c.floors()]
    if max(f.b for f in floors) - min(f.a for f in floors) < 10:
        assert brute_partition(c)
    assert c.base().equals(e)
    assert max(c.heights) <= fb.n0
    # n0 is the least n with the first n preimages covering X
    cover = ClopenSet.empty(sp)
    for k in range(fb.n0):
        assert not cover.equals(ClopenSet.full(sp))
        cover = cover | e.shift(-k)
    assert cover.equals(ClopenSet.full(sp))


@given(sfts(), st.integers(0, 2**32 - 1), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_is_capturing_matches_brute_force(sp, seed, n):
    e = build(sp, random_expr(random.Random(seed), sp, 2, span=1))
    assume(not e.is_empty() and e.length + n <= 9)
    assert bool(ck.is_capturing(e, n)) == brute_capturing(e, n)


def test_capture_report_names_a_witness(golden):
    rep = ck.is_capturing(ClopenSet.cylinder(golden, (0,), 0), 2)
    assert not rep
    assert rep.shift == 1 and rep.witness is not None


def test_high_castle_refuses_short_periods(golden):
    with pytest.raises(HasShortPeriod):
        ck.high_castle(golden, 2)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n", [2, 3])
def test_high_castle_heights_and_partition(seed, n):
    sp = sft_without_short_periods(random.Random(seed), n)
    c = ck.high_castle(sp, n)
    assert min(c.heights) >= n
    assert c.is_partition()
    checks = ck.verify_castle(c, N=n)
    assert checks["partition"] and checks["floors_disjoint"]


@pytest.mark.parametrize("n", [2, 4])
def test_capturing_towers_on_golden(golden, n):
    for orbit in periodic_orbits(golden, 4):
        u = ClopenSet.full(golden)
        t = ck.capturing_tower_periodic(golden, orbit, n, u)
        k = t.as_set()
        assert t.is_tower() and t.reenters_at_base()
        assert ck.is_capturing(k, n) and ck.is_capturing(~k, n)
        assert all(k.contains_point(p) for p in orbit.points())


def test_capturing_tower_respects_neighborhood(golden):
    orbit = periodic_orbits(golden, 3)[1]  # "01"
    u = ClopenSet.cylinder(golden, (0, 1, 0, 1), -2)
    t = ck.capturing_tower_periodic(golden, orbit, 3, u)
    spread = ClopenSet.empty(golden)
    for i in range(orbit.period):
        spread = spread | u.shift(i)
    assert t.as_set().issubset(spread)


@pytest.mark.parametrize("seed", range(4))
def test_split_tall_keeps_partition(seed):
    sp = sft_without_short_periods(random.Random(seed), 2)
    c = ck.high_castle(sp, 2)
    cut = ck.split_tall(ck.Castle(sp, c.towers), 2)
    assert all(2 <= h < 4 for h in cut.heights)
    assert cut.is_partition()


def test_refine_floors_puts_floors_in_cylinders(golden):
    c = ck.kakutani_rokhlin(ClopenSet.cylinder(golden, (0,), 0))
    fine = ck.refine_floors(c, 1)
    assert fine.is_partition()
    for t in fine.towers:
        for fl in t.floors():
            # exactly one symbol pattern on [-1, 1]
            assert fl.extended(min(fl.a, -1), max(fl.b, 1)).project(-1, 1).count() == 1
    assert ck.verify_castle(fine, depth=1)["floor_depth"]


def test_dungeon_small(golden):
    c = ck.dungeon_castle(golden, 2, 0)
    checks = ck.verify_castle(c, N=2, depth=0)
    assert all(checks.values()), checks
    assert sorted(c.towers[i].orbit for i in c.short()) == ["0"]


def test_verify_castle_catches_a_missing_tower(golden):
    c = ck.kakutani_rokhlin(ClopenSet.cylinder(golden, (0,), 0))
    broken = ck.Castle(golden, c.towers[:1])
    checks = ck.verify_castle(broken)
    assert checks["floors_disjoint"] and not checks["partition"]


def test_deadline_raises_budget_exceeded(golden):
    with pytest.raises(BudgetExceeded):
        ck.dungeon_castle(golden, 4, 0, deadline=ck.make_deadline(0.0))
