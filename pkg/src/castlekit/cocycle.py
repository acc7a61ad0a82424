"""Locally constant linear cocycles over an SFT and the certified removal of
quasiconformal orbits.

A cocycle is a finite list of (clopen piece, matrix) pairs whose pieces
partition the space.  Cocycles read from a table use the cylinders on
``[-r, r]`` as pieces; perturbed cocycles use castle floors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import matperturb as mp
from .castles import (Castle, CaptureReport, _tick, castle_structure, disjoint_union,
                      dungeon_castle, is_capturing)
from .errors import (NotConstantOnFloor, NotPartition, ShortTowerUnsupported, SpaceMismatch)
from .shiftspace import ClopenSet, EventuallyPeriodicPoint, Sft, periodic_orbits

TOL = 1e-9


def required_N(M: float, eps: float) -> int:
    """Least ``n`` with ``(1+ε)^n > M²``, read with a ``1e-12`` relative margin."""
    if M <= 1 or eps <= 0:
        raise ValueError("need M > 1 and eps > 0")
    goal = M * M * (1 + 1e-12)
    n = max(1, math.floor(math.log(goal) / math.log1p(eps)))
    while n > 1 and (1 + eps) ** (n - 1) > goal:
        n -= 1
    while (1 + eps) ** n <= goal:
        n += 1
    return n


class Cocycle:
    def __init__(self, space: Sft, pieces: Iterable[tuple[ClopenSet, np.ndarray]], *,
                 field: str | None = None, depth: int = 0, check: bool = True):
        pieces = [(s, np.asarray(a)) for s, a in pieces if not s.is_empty()]
        if not pieces:
            raise ValueError("a cocycle needs at least one piece")
        if field is None:
            field = "complex" if any(np.iscomplexobj(a) for _, a in pieces) else "real"
        self.space = space
        self.field = field
        self.pieces = [(s, mp.as_matrix(a, field)) for s, a in pieces]
        self.dim = self.pieces[0][1].shape[0]
        self.depth = depth
        self.table: dict[tuple[int, ...], np.ndarray] | None = None
        for s, a in self.pieces:
            if s.space != space:
                raise SpaceMismatch("piece lives in a different shift space")
            if a.shape != (self.dim, self.dim):
                raise ValueError("matrices of mixed dimension")
            if check:
                mp.kappa(a)  # raises Singular
        if check:
            union, disjoint = disjoint_union([s for s, _ in self.pieces], space)
            if not (disjoint and union.equals(ClopenSet.full(space))):
                raise NotPartition("cocycle pieces do not partition the space")
        self._index: dict[tuple[int, ...], list[int]] = {}
        for i, (s, _) in enumerate(self.pieces):
            for w in s.project(-depth, depth).words():
                self._index.setdefault(w, []).append(i)

    # construction --------------------------------------------------------------

    @classmethod
    def from_table(cls, space: Sft, table: Mapping, depth: int, field: str | None = None
                   ) -> "Cocycle":
        """``table`` maps every admissible word on ``[-depth, depth]`` to a matrix."""
        enc = {}
        for w, a in table.items():
            key = space.encode(w) if isinstance(w, str) else tuple(w)
            if len(key) != 2 * depth + 1:
                raise ValueError(f"word {w!r} does not have length {2 * depth + 1}")
            if not space.is_admissible(key):
                raise ValueError(f"word {w!r} is not admissible")
            enc[key] = a
        missing = [w for w in space.words(2 * depth + 1) if w not in enc]
        if missing:
            raise ValueError(f"no value for admissible word {space.decode(missing[0])!r}")
        pieces = [(ClopenSet.cylinder(space, w, -depth), a) for w, a in enc.items()]
        out = cls(space, pieces, field=field, depth=depth, check=False)
        for s, a in out.pieces:
            mp.kappa(a)
        out.table = {w: a for (w, _), (_, a) in zip(enc.items(), out.pieces)}
        return out

    @classmethod
    def constant(cls, space: Sft, matrix, field: str | None = None) -> "Cocycle":
        return cls.from_table(space, {w: matrix for w in space.words(1)}, 0, field)

    # evaluation ----------------------------------------------------------------

    def eval(self, x: EventuallyPeriodicPoint) -> np.ndarray:
        if x.space != self.space:
            raise SpaceMismatch("point lives in a different shift space")
        w = x.window(-self.depth, self.depth)
        if self.table is not None:
            return self.table[w]
        for i in self._index.get(w, ()):
            s, a = self.pieces[i]
            if s.contains_point(x):
                return a
        raise NotPartition(f"no piece contains {x}")

    __call__ = eval

    def product(self, x: EventuallyPeriodicPoint, n: int) -> np.ndarray:
        """``F^{(n)}(x)``; negative ``n`` gives ``F^{(-n)}(T^n x)^{-1}``."""
        if n < 0:
            return np.linalg.inv(self.product(x.shift(n), -n))
        out = np.eye(self.dim, dtype=complex if self.field == "complex" else float)
        for k in range(n):
            out = self.eval(x.shift(k)) @ out
        return out

    def overlaps(self, other: "Cocycle") -> Iterable[tuple[np.ndarray, np.ndarray]]:
        """Value pairs ``(F, G)`` over every nonempty ``P ∩ Q`` of pieces."""
        if self.space != other.space:
            raise SpaceMismatch("cocycles live in different shift spaces")
        if self.field != other.field or self.dim != other.dim:
            raise ValueError("cocycles differ in field or dimension")
        big, small, flip = (self, other, False) if len(self.pieces) >= len(other.pieces) else (
            other, self, True)
        k = small.depth
        for s, a in big.pieces:
            seen = set()
            for w in s.project(-k, k).words():
                for j in small._index.get(w, ()):
                    if j in seen:
                        continue
                    t, b = small.pieces[j]
                    if not s.isdisjoint(t):
                        seen.add(j)
                        yield (b, a) if flip else (a, b)


def sup_norm_C0(f: Cocycle) -> float:
    return max(mp.op_norm(a) for _, a in f.pieces)


def dist_dprime(f: Cocycle, g: Cocycle) -> float:
    """``sup_x ‖F(x) - G(x)‖``."""
    return max(mp.op_norm(a - b) for a, b in f.overlaps(g))


def dist_d(f: Cocycle, g: Cocycle) -> float:
    """``sup_x (‖F(x) - G(x)‖ + ‖F(x)^{-1} - G(x)^{-1}‖)``."""
    return max(mp.op_norm(a - b) + mp.op_norm(np.linalg.inv(a) - np.linalg.inv(b))
               for a, b in f.overlaps(g))


@dataclass
class KappaTrace:
    times: list[int]
    values: list[float]

    @property
    def running_max(self) -> float:
        return max(self.values)

    def first_exceeding(self, bound: float) -> int | None:
        """Smallest ``|n|`` with ``κ(F^{(n)}(x)) > bound``."""
        hits = [abs(n) for n, v in zip(self.times, self.values) if v > bound]
        return min(hits) if hits else None


def kappa_trace(f: Cocycle, x: EventuallyPeriodicPoint, a: int, b: int) -> KappaTrace:
    """``κ(F^{(n)}(x))`` for ``n`` in ``[a, b]``."""
    if not a <= 0 <= b:
        raise ValueError("need a <= 0 <= b")
    fwd = {0: np.eye(f.dim)}
    p = fwd[0]
    for n in range(1, b + 1):
        p = f.eval(x.shift(n - 1)) @ p
        fwd[n] = p
    # F^{(-n)}(x) = (F(T^{-1}x) ... F(T^{-n}x))^{-1}
    back = np.eye(f.dim)
    for n in range(1, -a + 1):
        back = back @ f.eval(x.shift(-n))
        fwd[-n] = np.linalg.inv(back)
    times = list(range(a, b + 1))
    return KappaTrace(times, [mp.kappa(fwd[n]) for n in times])


# ---------------------------------------------------------------------------
# certificate


@dataclass
class TowerRecord:
    tower: int
    kind: str
    height: int
    orbit: str | None
    window: tuple[int, int]
    base_words: list[str]
    measure: str
    value: float
    power: int
    achieved: float
    required: float
    capture: CaptureReport | None = None
    reentry: bool | None = None
    passed: bool = False

    def to_dict(self) -> dict:
        return {
            "tower": self.tower, "kind": self.kind, "height": self.height, "orbit": self.orbit,
            "window": list(self.window), "base_words": self.base_words, "measure": self.measure,
            "value": self.value, "power": self.power, "achieved": self.achieved,
            "required": self.required,
            "capture": self.capture.to_dict() if self.capture is not None else None,
            "reentry": self.reentry, "pass": self.passed,
        }


@dataclass
class QcCertificate:
    M: float
    eps: float
    N: int
    depth: int | None
    towers: list[TowerRecord] = field(default_factory=list)
    partition: bool = False
    dprime: float | None = None
    dprime_bound: float | None = None
    C0: float | None = None
    tol: float = TOL
    passed: bool = False

    @property
    def failures(self) -> list[int]:
        return [r.tower for r in self.towers if not r.passed]

    def summary(self) -> str:
        bad = self.failures
        state = "PASS" if self.passed else "FAIL"
        shown = bad if len(bad) <= 10 else bad[:10] + [f"... {len(bad) - 10} more"]
        extra = f"; failing towers {shown}" if bad else ""
        return (f"{state}: N={self.N}, {len(self.towers)} towers, d'={self.dprime}"
                f" (bound {self.dprime_bound}){extra}")

    def to_dict(self) -> dict:
        return {
            "M": self.M, "eps": self.eps, "N": self.N, "depth": self.depth, "tol": self.tol,
            "partition": self.partition, "C0": self.C0, "dprime": self.dprime,
            "dprime_bound": self.dprime_bound, "pass": self.passed,
            "scope": "sufficient conditions: every tower's product bound and the exact "
                     "capturing/re-entry facts; points are not enumerated",
            "towers": [r.to_dict() for r in self.towers],
        }


def _cell_word(castle: Castle, i: int, r: int) -> tuple[int, ...] | None:
    t = castle.towers[i]
    proj = t.base.project(-r, t.height - 1 + r)
    return proj.first_word() if proj.count() == 1 else None


def _key(s: ClopenSet) -> tuple[int, int, int]:
    return (s.a, s.b, s.root)


def _floor_lookup(g: Cocycle, castle: Castle) -> dict | None:
    """Piece values keyed by floor, when the pieces are exactly the floors.

    The floors partition the space, so each floor then meets only itself.
    """
    keys = {_key(s): a for s, a in g.pieces}
    floors = [_key(fl) for _, _, fl in castle.floors()]
    if len(keys) == len(g.pieces) == len(floors) and keys.keys() == set(floors):
        return keys
    return None


def floor_matrices(g: Cocycle, castle: Castle, i: int, lookup: dict | None = None
                   ) -> list[np.ndarray]:
    """The value of ``g`` on each floor of tower ``i``; raises when ``g`` is
    not constant on a floor."""
    t = castle.towers[i]
    out = []
    for j, fl in enumerate(t.floors()):
        if lookup is not None:
            out.append(lookup[_key(fl)])
            continue
        vals = [a for a, _ in _values_on(g, fl)]
        if not vals:
            raise NotPartition(f"floor {j} of tower {i} meets no cocycle piece")
        if any(not np.array_equal(vals[0], v) for v in vals[1:]):
            raise NotConstantOnFloor(f"cocycle is not constant on floor {j} of tower {i}")
        out.append(vals[0])
    return out


def _values_on(g: Cocycle, s: ClopenSet):
    k = g.depth
    seen = set()
    for w in s.project(-k, k).words():
        for j in g._index.get(w, ()):
            if j in seen:
                continue
            t, a = g.pieces[j]
            if not s.isdisjoint(t):
                seen.add(j)
                yield a, j


def verify_qc_certificate(g: Cocycle, castle: Castle, M: float, eps: float, *,
                          f: Cocycle | None = None, N: int | None = None,
                          structure: tuple[bool, bool] | None = None,
                          tol: float = TOL) -> QcCertificate:
    """Check the sufficient conditions for every orbit of ``g`` to reach
    condition number above ``M``.

    Tall towers need ``κ(product) > M²``; short towers need
    ``κ_e(product)^m > M²`` with ``m = ⌈N/ℓ⌉`` plus the exact facts that the
    tower is ``N``-capturing and re-enters at its base.
    """
    n = required_N(M, eps) if N is None else N
    cert = QcCertificate(M, eps, n, castle.depth, tol=tol)
    disjoint, partition = structure if structure is not None else castle_structure(castle)
    if not partition:
        raise NotPartition("castle floors do not partition the space")
    cert.partition = True
    goal = M * M
    lookup = _floor_lookup(g, castle)
    for i, t in enumerate(castle.towers):
        mats = floor_matrices(g, castle, i, lookup)
        prod = mp.product(mats)
        short = t.height < n
        window = (-(castle.depth or 0), t.height - 1 + (castle.depth or 0))
        word = t.base.project(*window)
        rec = TowerRecord(i, "short" if short else "tall", t.height, t.orbit, window,
                          [t.base.space.decode(w) for w in word.words()][:16],
                          "kappa_e" if short else "kappa", 0.0, 1, 0.0, goal)
        if short:
            rec.power = math.ceil(n / t.height)
            rec.value = mp.kappa_e(prod)
            rec.achieved = rec.value ** rec.power
            rec.capture = is_capturing(t.as_set(), n)
            rec.reentry = t.reenters_at_base()
            rec.passed = bool(rec.capture) and rec.reentry and rec.achieved > goal * (1 - tol)
        else:
            rec.value = mp.kappa(prod)
            rec.achieved = rec.value
            rec.passed = rec.achieved > goal * (1 - tol)
        cert.towers.append(rec)
    ok = all(r.passed for r in cert.towers)
    if f is not None:
        cert.C0 = sup_norm_C0(f)
        cert.dprime = dist_dprime(f, g)
        cert.dprime_bound = eps * cert.C0 * (1 + tol)
        ok = ok and cert.dprime <= cert.dprime_bound
    cert.passed = ok
    return cert


@dataclass
class RemovalResult:
    G: Cocycle
    certificate: QcCertificate
    castle: Castle
    perturbations: list[mp.PerturbResult]

    def __iter__(self):
        return iter((self.G, self.certificate, self.castle))


def remove_qc(f: Cocycle, M: float, eps: float, *, castle: Castle | None = None,
              deadline=None, tol: float = TOL) -> RemovalResult:
    """Perturb ``f`` by at most ``ε·C₀`` in ``d′`` so that no orbit keeps
    its condition numbers below ``M``."""
    n = required_N(M, eps)
    r = f.depth
    if f.field == "real" and f.dim == 2:
        short = periodic_orbits(f.space, n)
        if short:
            raise ShortTowerUnsupported(
                f"real d=2 with periodic orbit {short[0]} of period {short[0].period} < N={n}")
    if castle is None:
        castle = dungeon_castle(f.space, n, r, deadline=deadline)
    elif castle.depth is None or castle.depth < r:
        raise ValueError("castle floors must be resolved to the cocycle depth")
    pieces = []
    results = []
    for i, t in enumerate(castle.towers):
        _tick(deadline, "perturbing towers")
        word = _cell_word(castle, i, r)
        if word is None:
            raise NotConstantOnFloor(f"tower {i} is not refined to depth {r}")
        mats = [f.table[word[j:j + 2 * r + 1]] if f.table is not None
                else f.eval(_point_on(t.floor(j))) for j in range(t.height)]
        lemma = mp.perturb_eigen if t.height < n else mp.perturb_singular
        res = lemma(mats, eps)
        results.append(res)
        pieces.extend(zip(t.floors(), res.perturbed))
    g = Cocycle(f.space, pieces, field=f.field, depth=castle.depth, check=False)
    cert = verify_qc_certificate(g, castle, M, eps, f=f, N=n, tol=tol)
    return RemovalResult(g, cert, castle, results)


def _point_on(s: ClopenSet) -> EventuallyPeriodicPoint:
    from .shiftspace import point_through
    return point_through(s.space, s.first_word(), s.a)


def tamper_tower(g: Cocycle, castle: Castle, i: int, values: list[np.ndarray]) -> Cocycle:
    """Copy of ``g`` with the floors of tower ``i`` set to ``values``."""
    floors = castle.towers[i].floors()
    new = []
    for s, a in g.pieces:
        hit = next((j for j, fl in enumerate(floors) if fl.equals(s)), None)
        new.append((s, values[hit] if hit is not None else a))
    return Cocycle(g.space, new, field=g.field, depth=g.depth, check=False)
