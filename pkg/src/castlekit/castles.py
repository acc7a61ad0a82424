"""Towers, castles, feedback and capturing sets, and the castle constructions.

All predicates here are exact: they reduce to emptiness of clopen sets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import (BudgetExceeded, ConstructionError, DepthExhausted, HasShortPeriod,
                     NotFeedback)
from .shiftspace import (ClopenSet, EventuallyPeriodicPoint, PeriodicOrbit, Sft,
                         cycle_point, intersect_all, maximal_invariant, periodic_orbits,
                         union_all)


def _tick(deadline: float | None, what: str = "construction"):
    if deadline is not None and time.monotonic() > deadline[0]:
        raise BudgetExceeded(deadline[1], what)


def make_deadline(seconds: float | None):
    """Deadline token accepted by the constructions (``None`` = unlimited)."""
    return None if seconds is None else (time.monotonic() + seconds, seconds)


def disjoint_union(sets: Sequence[ClopenSet], space: Sft) -> tuple[ClopenSet, bool]:
    """Union of ``sets`` and whether they are pairwise disjoint.

    On a common window every set is a set of admissible words, and in an
    essential shift distinct words give disjoint cylinders, so the family is
    disjoint exactly when the word counts add up to the count of the union.
    """
    live = [x for x in sets if not x.is_empty()]
    if not live:
        return ClopenSet.empty(space), True
    a = min(x.a for x in live)
    b = max(x.b for x in live)
    # similar neighbours keep the intermediate unions small
    live.sort(key=lambda x: (x.a, x.b))
    level = [x.extended(a, b) for x in live]
    total = sum(x.count() for x in level)
    while len(level) > 1:
        level = [level[i] | level[i + 1] if i + 1 < len(level) else level[i]
                 for i in range(0, len(level), 2)]
    union = level[0]
    return union, union.count() == total


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class Tower:
    base: ClopenSet
    height: int
    role: str = "tower"
    orbit: str | None = None

    def floor(self, j: int) -> ClopenSet:
        return self.base.shift(j)

    def floors(self) -> list[ClopenSet]:
        return [self.base.shift(j) for j in range(self.height)]

    def as_set(self) -> ClopenSet:
        return union_all(self.floors(), self.base.space)

    def is_tower(self) -> bool:
        """``B ∩ T^{-i} B = ∅`` for ``i`` in ``[1, height-1]``."""
        return all(self.base.isdisjoint(self.base.shift(-i)) for i in range(1, self.height))

    def reenters_at_base(self) -> bool:
        """``T(top floor) ∩ tower ⊆ base``."""
        back = self.base.shift(self.height)
        return (back & self.as_set()).issubset(self.base)


@dataclass
class Castle:
    space: Sft
    towers: list[Tower]
    N: int | None = None
    depth: int | None = None

    @property
    def heights(self) -> list[int]:
        return [t.height for t in self.towers]

    def short(self) -> list[int]:
        if self.N is None:
            return []
        return [i for i, t in enumerate(self.towers) if t.height < self.N]

    def floors(self) -> list[tuple[int, int, ClopenSet]]:
        return [(i, j, f) for i, t in enumerate(self.towers) for j, f in enumerate(t.floors())]

    def base(self) -> ClopenSet:
        return union_all((t.base for t in self.towers), self.space)

    def union(self) -> ClopenSet:
        return union_all((f for _, _, f in self.floors()), self.space)

    def floors_disjoint(self) -> bool:
        return castle_structure(self)[0]

    def is_partition(self) -> bool:
        return castle_structure(self)[1]


@dataclass
class CaptureReport:
    N: int
    passed: bool
    shift: int | None = None
    window: tuple[int, int] | None = None
    witness: str | None = None

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {"N": self.N, "pass": self.passed, "shift": self.shift,
                "window": list(self.window) if self.window else None, "witness": self.witness}


@dataclass
class FeedbackReport:
    is_feedback: bool
    n0: int | None = None
    witness: EventuallyPeriodicPoint | None = None

    def __bool__(self):
        return self.is_feedback


# ---------------------------------------------------------------------------
# predicates


def is_capturing(e: ClopenSet, n: int) -> CaptureReport:
    """Exact check of ``E \\ TE ⊆ ⋂_{k<n} T^{-k} E``."""
    if n < 1:
        raise ValueError("N must be positive")
    entry = e - e.shift(1)
    outside = ~e
    for k in range(n):
        bad = entry & outside.shift(-k)
        if not bad.is_empty():
            return CaptureReport(n, False, k, bad.window, e.space.decode(bad.first_word()))
    return CaptureReport(n, True)


def is_feedback(e: ClopenSet) -> FeedbackReport:
    """Whether every orbit hits ``e``; if so, the least ``n0`` with
    ``⋃_{n<n0} T^{-n} e = X``."""
    sub = maximal_invariant(~e)
    if not sub.is_empty:
        return FeedbackReport(False, witness=cycle_point(sub))
    return FeedbackReport(True, n0=sub.longest_free_run + 1)


# ---------------------------------------------------------------------------
# constructions


def kakutani_rokhlin(e: ClopenSet, *, check: bool = True, max_height: int | None = None,
                     deadline=None) -> Castle:
    """First-return castle partition with base ``e``.

    The tower of height ``l`` has base ``E ∩ T^{-l}E \\ ⋃_{0<i<l} T^{-i}E``.
    """
    space = e.space
    if check:
        fb = is_feedback(e)
        if not fb:
            raise NotFeedback(fb.witness)
        max_height = fb.n0 if max_height is None else min(max_height, fb.n0)
    towers = []
    remaining = e
    ell = 0
    while not remaining.is_empty():
        ell += 1
        if max_height is not None and ell > max_height:
            raise DepthExhausted(max_height, "first-return time")
        _tick(deadline, "Kakutani-Rokhlin castle")
        hit = e.shift(-ell)
        base = remaining & hit
        remaining = (remaining - hit).minimized()
        if not base.is_empty():
            towers.append(Tower(base.minimized(), ell, role="return"))
    return Castle(space, towers)


def _cover_cylinders(space: Sft, n: int, max_depth: int):
    """Centered cylinders ``V`` with ``V ∩ T^i V = ∅`` for ``0 < i < n``,
    refined until they cover the space; lexicographic within each depth."""
    out: list[ClopenSet] = []
    pending = [ClopenSet.cylinder(space, (s,), 0) for s in range(space.q)]
    k = 0
    while pending:
        nxt = []
        for v in pending:
            if all(v.isdisjoint(v.shift(i)) for i in range(1, n)):
                out.append(v)
            else:
                nxt.append(v)
        if not nxt:
            break
        k += 1
        if k > max_depth:
            raise DepthExhausted(max_depth, "high-castle cover search")
        pending = []
        for v in nxt:
            ext = v.extended(-k, k)
            pending.extend(ClopenSet.from_words(space, -k, k, [w]) for w in ext.words())
    return out


def _batch(cover: Sequence[ClopenSet], n: int, space: Sft) -> list[ClopenSet]:
    """First-fit grouping of cover sets into larger sets with the same
    self-avoidance property; order of consumption is preserved."""
    groups: list[ClopenSet] = []
    for v in cover:
        for gi, g in enumerate(groups):
            cand = g | v
            if all(cand.isdisjoint(cand.shift(i)) for i in range(1, n)):
                groups[gi] = cand.minimized()
                break
        else:
            groups.append(v)
    return groups


def high_castle(space: Sft, n: int, *, max_depth: int = 32, batch: bool = True,
                deadline=None) -> Castle:
    """Castle partition into clopen towers of height at least ``n``.

    Requires that ``space`` has no periodic point of period below ``n``.
    """
    short = periodic_orbits(space, n)
    if short:
        raise HasShortPeriod(short[0], n)
    if space.is_empty:
        return Castle(space, [], N=n)
    cover = _cover_cylinders(space, n, max_depth)
    vs = _batch(cover, n, space) if batch else cover
    b = ClopenSet.empty(space)
    for v in vs:
        _tick(deadline, "high castle")
        near = union_all((b.shift(k) for k in range(-n + 1, n)), space)
        b = (b | (v - near)).minimized()
    # every point is within distance n-1 of b, so returns take at most 2n-1 steps
    castle = kakutani_rokhlin(b, check=False, max_height=2 * n - 1, deadline=deadline)
    castle.N = n
    for t in castle.towers:
        if t.height < n:
            raise ConstructionError(f"high castle produced a tower of height {t.height} < {n}")
    castle.towers = [replace(t, role="tall") for t in castle.towers]
    return castle


def orbit_cylinder(x: EventuallyPeriodicPoint, lo: int, hi: int) -> ClopenSet:
    return ClopenSet.cylinder(x.space, x.window(lo, hi), lo)


def _bicapturing_base(p: EventuallyPeriodicPoint, step: int, n: int, u: ClopenSet,
                      max_depth: int) -> ClopenSet:
    """Clopen ``B`` with ``p ∈ B ⊆ u`` such that ``B`` and its complement are
    ``n``-capturing for ``T^step`` (``p`` must be fixed by ``T^step``)."""
    space = p.space
    for k in range(max_depth + 1):
        v = orbit_cylinder(p, -k, k)
        v_plus = intersect_all((v.shift(-step * i) for i in range(n)), space)
        v_minus = intersect_all((v.shift(step * i) for i in range(n)), space)
        c = union_all((v_plus.shift(step * j) for j in range(n)), space)
        d = union_all((v_plus.shift(-step * i) & v_minus.shift(step * j)
                       for i in range(1, n + 1) for j in range(1, n + 1) if i + j <= n), space)
        b = (c | d).minimized()
        if b.issubset(u):
            return b
    raise DepthExhausted(max_depth, "capturing neighborhood")


def capturing_tower_fixed(space: Sft, orbit: PeriodicOrbit, n: int, u: ClopenSet, *,
                          max_depth: int = 64) -> ClopenSet:
    """Clopen ``B`` around a fixed point with ``B`` and ``B^c`` ``n``-capturing."""
    if orbit.period != 1:
        raise ValueError("capturing_tower_fixed needs a fixed point")
    p = orbit.point()
    if not u.contains_point(p):
        raise ValueError(f"fixed point {orbit} is not in the neighborhood")
    b = _bicapturing_base(p, 1, n, u, max_depth)
    if not (b.issubset(u) and b.contains_point(p) and is_capturing(b, n)
            and is_capturing(~b, n)):
        raise ConstructionError(f"capturing neighborhood of {orbit} failed verification")
    return b


def capturing_tower_periodic(space: Sft, orbit: PeriodicOrbit, n: int, u: ClopenSet, *,
                             max_depth: int = 64) -> Tower:
    """Tower of height ``period`` around ``orbit``; the tower and its
    complement are both ``n``-capturing and the tower lies in ``⋃ T^i u``."""
    ell = orbit.period
    if ell == 1:
        return Tower(capturing_tower_fixed(space, orbit, n, u, max_depth=max_depth), 1,
                     role="capture", orbit=orbit.label)
    p = next((x for x in orbit.points() if u.contains_point(x)), None)
    if p is None:
        raise ValueError(f"no point of orbit {orbit} lies in the neighborhood")
    for k in range(max_depth + 1):
        small = u & orbit_cylinder(p, -k, k)
        if all(small.isdisjoint(small.shift(i)) for i in range(1, ell)):
            break
    else:
        raise DepthExhausted(max_depth, "separating neighborhood")
    m = math.ceil(n / ell)
    around = union_all((u.shift(i) for i in range(ell)), space)
    # the plain neighborhood usually works; the m-step one is the safe fallback
    stay = intersect_all((small.shift(-ell * j) for j in range(m + 1)), space)
    for v in (small, stay):
        b = _bicapturing_base(p, ell, m, v, max_depth)
        tower = Tower(b, ell, role="capture", orbit=orbit.label)
        k_set = tower.as_set()
        if (tower.is_tower() and is_capturing(k_set, n) and is_capturing(~k_set, n)
                and k_set.issubset(around)):
            return tower
    raise ConstructionError(f"capturing tower around {orbit} failed verification")


def refine_floors(castle: Castle, r: int, deadline=None) -> Castle:
    """Slice towers so every floor lies in one cylinder on ``[-r, r]``."""
    out = []
    for t in castle.towers:
        _tick(deadline, "refining floors")
        lo, hi = -r, t.height - 1 + r
        proj = t.base.project(lo, hi)
        cells = list(proj.words())
        if len(cells) == 1:
            out.append(t)
            continue
        for w in cells:
            cell = t.base & ClopenSet.cylinder(t.base.space, w, lo)
            out.append(replace(t, base=cell.minimized()))
    return Castle(castle.space, out, N=castle.N, depth=r)


def split_tall(castle: Castle, n: int) -> Castle:
    """Cut every tower of height ``>= 2n`` into stacked towers of heights in
    ``[n, 2n)``; the floors, and hence the partition, are unchanged."""
    out = []
    for t in castle.towers:
        if t.height < 2 * n:
            out.append(t)
            continue
        starts = [j * n for j in range(t.height // n)]
        ends = starts[1:] + [t.height]
        for lo, hi in zip(starts, ends):
            out.append(replace(t, base=t.base.shift(lo).minimized(), height=hi - lo))
    return Castle(castle.space, out, N=castle.N, depth=castle.depth)


def _orbit_seed(orbit: PeriodicOrbit, k: int) -> ClopenSet:
    p = orbit.point()
    return orbit_cylinder(p, -k, orbit.period - 1 + k)


@dataclass
class DungeonTrace:
    """Intermediate objects of the capturing-castle construction."""

    orbits: list[PeriodicOrbit] = field(default_factory=list)
    capture_depth: int | None = None
    K: list[Tower] = field(default_factory=list)
    invariant_states: int = 0
    inner: Castle | None = None
    lift_depth: int | None = None
    L: list[Tower] = field(default_factory=list)
    E: ClopenSet | None = None


def dungeon_castle(space: Sft, n: int, r: int = 0, *, refine: bool = True, max_depth: int = 48,
                   deadline=None, trace: DungeonTrace | None = None) -> Castle:
    """Castle partition into ``n``-capturing clopen towers.

    Short towers (height below ``n``) are capturing towers around the
    periodic orbits of period below ``n``; their floors already lie in single
    ``[-r, r]`` cylinders.  With ``refine`` the remaining towers are sliced to
    depth ``r`` as well.
    """
    if r < 0:
        raise ValueError("depth must be nonnegative")
    trace = trace if trace is not None else DungeonTrace()
    orbits = periodic_orbits(space, n)
    trace.orbits = orbits
    if not orbits:
        castle = high_castle(space, n, deadline=deadline)
        return refine_floors(castle, r, deadline) if refine else castle

    # capturing towers around every short orbit, deepened until separated
    for k in range(r, r + max_depth + 1):
        _tick(deadline, "capturing towers")
        towers = []
        for o in orbits:
            _tick(deadline, "capturing towers")
            towers.append(capturing_tower_periodic(space, o, n, _orbit_seed(o, k),
                                                   max_depth=max_depth))
        sets = [t.as_set() for t in towers]
        k_all = ClopenSet.empty(space)
        separated = True
        for s in sets:
            if not s.isdisjoint(k_all):
                separated = False
                break
            k_all = k_all | s
        if separated and is_capturing(~k_all, n):
            break
    else:
        raise DepthExhausted(max_depth, "separation of capturing towers")
    trace.capture_depth = k
    trace.K = towers
    k_all = k_all.minimized()
    b_all = union_all((t.base for t in towers), space)

    # the invariant remainder gets a high castle, lifted back as L
    sub = maximal_invariant(~k_all)
    trace.invariant_states = sub.child.q
    l_towers: list[Tower] = []
    if not sub.is_empty:
        inner = high_castle(sub.child, n, deadline=deadline)
        trace.inner = inner
        for depth in range(max_depth + 1):
            _tick(deadline, "lifting the invariant castle")
            l_towers = [Tower(sub.lift(t.base, depth), t.height, role="L") for t in inner.towers]
            acc = k_all
            ok = True
            for t in l_towers:
                for f in t.floors():
                    if not f.isdisjoint(acc):
                        ok = False
                        break
                    acc = acc | f
                if not ok:
                    break
            if ok:
                break
        else:
            raise DepthExhausted(max_depth, "lift of the invariant castle")
        trace.lift_depth = depth
    trace.L = l_towers
    l_all = union_all((t.as_set() for t in l_towers), space)
    c_all = union_all((t.base for t in l_towers), space)

    e = (b_all | (l_all.shift(1) & c_all) | (k_all.shift(1) - k_all)).minimized()
    trace.E = e
    q = kakutani_rokhlin(e, check=False, max_height=8 * n + 64, deadline=deadline)

    out: list[Tower] = []
    for t in q.towers:
        mine = [kt for kt in towers if kt.height == t.height]
        for kt in mine:
            if not kt.base.issubset(t.base):
                raise ConstructionError(f"capturing tower {kt.orbit} is not a return tower")
            out.append(kt)
        rest = (t.base - b_all).minimized()
        if rest.is_empty():
            continue
        if t.height < n:
            raise ConstructionError(f"non-capturing tower of height {t.height} < {n}")
        out.append(Tower(rest, t.height, role="tall"))
    for kt in towers:
        if not any(o is kt for o in out):
            raise ConstructionError(f"capturing tower {kt.orbit} missing from the castle")
    castle = split_tall(Castle(space, out, N=n), n)
    if refine:
        castle = refine_floors(castle, r, deadline)
    return castle


# ---------------------------------------------------------------------------
# verification


def castle_structure(castle: Castle) -> tuple[bool, bool]:
    """(floors pairwise disjoint, floors partition the space), from bases only.

    With ``B`` the union of the bases, the floors are disjoint exactly when the
    bases are disjoint and no ``B_i`` meets ``T^{-j} B`` for ``0 < j < l_i``;
    they partition the space when moreover ``T^{l_i} B_i ⊆ B`` and the sets
    ``T^j B`` for ``j`` below the top height cover the space.
    """
    space = castle.space
    if not castle.towers:
        return True, space.is_empty
    by_height: dict[int, list[ClopenSet]] = {}
    for t in castle.towers:
        by_height.setdefault(t.height, []).append(t.base)
    level = {h: disjoint_union(bs, space) for h, bs in by_height.items()}
    b_all, disjoint = disjoint_union([u for u, _ in level.values()], space)
    disjoint = disjoint and all(ok for _, ok in level.values())
    top = max(by_height)
    for j in range(1, top):
        above = union_all((u for h, (u, _) in level.items() if h > j), space)
        if not disjoint:
            break
        disjoint = above.isdisjoint(b_all.shift(-j))
    if not disjoint:
        return False, False
    returns = all(u.issubset(b_all.shift(-h)) for h, (u, _) in level.items())
    if not returns:
        return True, False
    # returns take at most `top` steps, so covering is a finite union
    swept = union_all((b_all.shift(j) for j in range(top)), space)
    return True, swept.equals(ClopenSet.full(space))


def verify_castle(castle: Castle, *, N: int | None = None, depth: int | None = None) -> dict:
    """Re-run every exact check on a castle; returns named booleans."""
    n = castle.N if N is None else N
    r = castle.depth if depth is None else depth
    disjoint, partition = castle_structure(castle)
    # disjoint floors already make every tower a tower
    checks = {"towers": disjoint or all(t.is_tower() for t in castle.towers)}
    if r is not None:
        # floor j sits in one [-r, r] cylinder for every j iff the base
        # projects to a single word on [-r, height - 1 + r]
        checks["floor_depth"] = all(t.base.project(-r, t.height - 1 + r).count() == 1
                                    for t in castle.towers)
    checks["floors_disjoint"], checks["partition"] = disjoint, partition
    if n is not None:
        short = [t for t in castle.towers if t.height < n]
        checks["short_capturing"] = all(is_capturing(t.as_set(), n) for t in short)
        checks["short_power_capturing"] = all(
            is_capturing(t.as_set(), t.height * math.ceil(n / t.height)) for t in short)
        checks["short_reentry"] = all(t.reenters_at_base() for t in short)
    return checks
