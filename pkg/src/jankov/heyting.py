"""Finite Heyting algebras: construction from posets, chains, ordinal sums,
opremum, slices, enumeration up to isomorphism, and the bundled antichain
family."""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .algebra import HEYTING, FiniteAlgebra, Signature, find_embedding
from .errors import AlgebraError, NotHeyting


@dataclass(frozen=True)
class Poset:
    size: int
    covers: tuple = ()
    names: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "covers", tuple((int(a), int(b)) for a, b in self.covers))
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    def order(self) -> np.ndarray:
        """Reflexive-transitive closure as a boolean matrix ``leq[x, y]``."""
        n = self.size
        leq = np.eye(n, dtype=bool)
        for a, b in self.covers:
            if not (0 <= a < n and 0 <= b < n):
                raise AlgebraError(f"cover ({a}, {b}) out of range")
            leq[a, b] = True
        for k in range(n):
            leq |= leq[:, [k]] & leq[[k], :]
        if np.any(leq & leq.T & ~np.eye(n, dtype=bool)):
            raise AlgebraError("cover relation has a cycle")
        return leq

    @classmethod
    def from_dict(cls, d) -> "Poset":
        return cls(d["size"], tuple(tuple(c) for c in d.get("covers", ())), d.get("names"))

    def to_dict(self) -> dict:
        out = {"size": self.size, "covers": [list(c) for c in self.covers]}
        if self.names is not None:
            out["names"] = list(self.names)
        return out


def covers_of(leq: np.ndarray) -> list[tuple[int, int]]:
    n = len(leq)
    lt = leq & ~np.eye(n, dtype=bool)
    out = []
    for x in range(n):
        for y in range(n):
            if lt[x, y] and not np.any(lt[x, :] & lt[:, y]):
                out.append((x, y))
    return out


def _extremum(leq: np.ndarray, cands: np.ndarray, greatest: bool) -> Optional[int]:
    idx = np.flatnonzero(cands)
    for c in idx:
        if greatest and np.all(leq[idx, c]):
            return int(c)
        if not greatest and np.all(leq[c, idx]):
            return int(c)
    return None


def heyting_from_poset(P: Poset, signature: Signature = HEYTING,
                       label: Optional[str] = None) -> FiniteAlgebra:
    """The Heyting algebra on a finite lattice given by its Hasse diagram.

    Meets and joins come from the order; x -> y is the greatest z with
    z & x <= y.  Raises if the order is not a distributive lattice.
    """
    leq = P.order()
    n = P.size
    if n < 1:
        raise AlgebraError("empty poset")
    meet = np.empty((n, n), dtype=np.intp)
    join = np.empty((n, n), dtype=np.intp)
    for x in range(n):
        for y in range(x, n):
            m = _extremum(leq, leq[:, x] & leq[:, y], greatest=True)
            j = _extremum(leq, leq[x, :] & leq[y, :], greatest=False)
            if m is None or j is None:
                raise NotHeyting("not a lattice: missing meet or join")
            meet[x, y] = meet[y, x] = m
            join[x, y] = join[y, x] = j
    bottom = _extremum(leq, np.ones(n, dtype=bool), greatest=False)
    top = _extremum(leq, np.ones(n, dtype=bool), greatest=True)
    if bottom is None or top is None:
        raise NotHeyting("lattice is not bounded")
    lhs = meet[:, join]          # x & (y | z)
    rhs = join[meet[:, :, None], meet[:, None, :]]  # (x & y) | (x & z)
    if not np.array_equal(lhs, rhs):
        raise NotHeyting("lattice is not distributive")
    imp = np.empty((n, n), dtype=np.intp)
    for x in range(n):
        for y in range(n):
            r = _extremum(leq, leq[meet[:, x], y], greatest=True)
            if r is None:
                raise NotHeyting("missing relative pseudo-complement")
            imp[x, y] = r
    tables = {"meet": meet, "join": join, "impl": imp, "neg": imp[:, bottom],
              "one": top, "zero": bottom}
    names = P.names if P.names is not None else _default_names(leq, bottom, top)
    return FiniteAlgebra(signature, n, {k: tables[k] for k in signature.names}, names, label)


def _default_names(leq, bottom, top) -> list[str]:
    names, letter = [], 0
    for i in range(len(leq)):
        if i == bottom:
            names.append("0")
        elif i == top:
            names.append("1")
        else:
            names.append(_letter(letter))
            letter += 1
    return names


def _letter(i: int) -> str:
    return chr(ord("a") + i) if i < 26 else f"e{i}"


# -- recognising Heyting algebras ---------------------------------------------

def heyting_order(A: FiniteAlgebra) -> tuple[np.ndarray, int, int]:
    """(leq matrix, bottom, top) of a Heyting algebra; raises NotHeyting."""
    if "heyting" in A._cache:
        cached = A._cache["heyting"]
        if isinstance(cached, Exception):
            raise cached
        return cached
    try:
        result = _check_heyting(A)
    except NotHeyting as exc:
        A._cache["heyting"] = exc
        raise
    A._cache["heyting"] = result
    return result


def _check_heyting(A: FiniteAlgebra):
    for name, k in (("meet", 2), ("join", 2), ("impl", 2), ("neg", 1)):
        if not A.signature.has(name, k):
            raise NotHeyting(f"signature lacks {name}/{k}")
    n = A.size
    m, j, imp, ng = (A.tables[x] for x in ("meet", "join", "impl", "neg"))
    ar = np.arange(n)
    leq = m == ar[:, None]  # x <= y iff x & y = x
    assoc = m[m[:, :, None], ar[None, None, :]] == m[ar[:, None, None], m[None, :, :]]
    if not (np.array_equal(m, m.T) and np.array_equal(m[ar, ar], ar) and assoc.all()):
        raise NotHeyting("meet is not a semilattice operation")
    if not np.array_equal(j == ar[None, :], leq):
        raise NotHeyting("join does not match the meet order")
    bottom = int(np.flatnonzero(leq.all(axis=1))[0]) if leq.all(axis=1).any() else None
    top = int(np.flatnonzero(leq.all(axis=0))[0]) if leq.all(axis=0).any() else None
    if bottom is None or top is None:
        raise NotHeyting("no bounds")
    # residuation: z & x <= y  iff  z <= x -> y
    left = leq[m[:, :, None], ar[None, None, :]]          # [z, x, y]
    right = leq[ar[:, None, None], imp[None, :, :]]       # [z, x, y]
    if not np.array_equal(left, right):
        raise NotHeyting("implication is not the relative pseudo-complement")
    if not np.array_equal(ng, imp[:, bottom]):
        raise NotHeyting("negation is not x -> 0")
    if A.signature.has("one", 0) and A.constant("one") != top:
        raise NotHeyting("constant one is not the top")
    if A.signature.has("zero", 0) and A.constant("zero") != bottom:
        raise NotHeyting("constant zero is not the bottom")
    if not np.array_equal(m[:, j], j[m[:, :, None], m[:, None, :]]):
        raise NotHeyting("not distributive")
    return leq, bottom, top


def is_heyting(A: FiniteAlgebra) -> bool:
    try:
        heyting_order(A)
        return True
    except NotHeyting:
        return False


def to_poset(A: FiniteAlgebra) -> Poset:
    leq, _, _ = heyting_order(A)
    return Poset(A.size, tuple(covers_of(leq)), A.names)


# -- constructions ----------------------------------------------------------

def chain(n: int, signature: Signature = HEYTING) -> FiniteAlgebra:
    """The n-element linearly ordered Heyting algebra 0 < a < b < ... < 1."""
    if n < 2:
        raise AlgebraError("chain needs at least two elements")
    return heyting_from_poset(Poset(n, tuple((i, i + 1) for i in range(n - 1))), signature, f"C{n}")


def z3(signature: Signature = HEYTING) -> FiniteAlgebra:
    """The three-element chain with middle element named w (omega)."""
    return heyting_from_poset(Poset(3, ((0, 1), (1, 2)), ("0", "w", "1")), signature, "Z3")


def boolean_square(signature: Signature = HEYTING) -> FiniteAlgebra:
    """The four-element Boolean algebra (the 2x2 diamond)."""
    return heyting_from_poset(Poset(4, ((0, 1), (0, 2), (1, 3), (2, 3)), ("0", "a", "b", "1")),
                              signature, "B4")


def d5(signature: Signature = HEYTING) -> FiniteAlgebra:
    """The 2x2 diamond with a new top; s.i. with opremum the old top."""
    return heyting_from_poset(
        Poset(5, ((0, 1), (0, 2), (1, 3), (2, 3), (3, 4)), ("0", "a", "b", "c", "1")), signature, "D5")


def ordinal_sum(A: FiniteAlgebra, B: FiniteAlgebra) -> FiniteAlgebra:
    """Stack B on top of A, identifying the top of A with the bottom of B."""
    la, _, ta = heyting_order(A)
    lb, bb, _ = heyting_order(B)
    rest = [i for i in range(B.size) if i != bb]
    pos = {i: A.size + k for k, i in enumerate(rest)}
    pos[bb] = ta
    n = A.size + len(rest)
    leq = np.zeros((n, n), dtype=bool)
    leq[:A.size, :A.size] = la
    leq[:A.size, A.size:] = True
    for x in range(B.size):
        for y in range(B.size):
            if lb[x, y]:
                leq[pos[x], pos[y]] = True
    leq[:A.size, ta] = la[:, ta]
    names = list(A.names) + [B.names[i] for i in rest]
    if len(set(names)) != len(names):
        names = [f"{x}" for x in A.names] + [f"{B.names[i]}'" for i in rest]
    label = f"{A.label}+{B.label}" if A.label and B.label else None
    return heyting_from_poset(Poset(n, tuple(covers_of(leq)), tuple(names)), A.signature, label)


def opremum(A: FiniteAlgebra) -> Optional[int]:
    """Greatest element strictly below 1, if there is one."""
    leq, _, top = heyting_order(A)
    below = [x for x in range(A.size) if x != top]
    maximal = [x for x in below if not any(leq[x, y] and x != y for y in below)]
    return maximal[0] if len(maximal) == 1 else None


def slice_index(A: FiniteAlgebra) -> int:
    """Largest n such that the n-element chain is a subalgebra of A."""
    heyting_order(A)
    if A.size < 2:
        raise AlgebraError("degenerate algebra")
    n = 2
    while n < A.size and find_embedding(chain(n + 1, A.signature), A) is not None:
        n += 1
    return n


# -- enumeration up to isomorphism -----------------------------------------
#
# A finite distributive lattice is the lattice of down-sets of its poset of
# join-irreducibles, so Heyting algebras of size <= m are enumerated through
# posets whose down-set count is <= m.  Posets are grown by adding a new
# maximal point over some down-set, and duplicates are rejected through a
# canonical code taken over all linear extensions.

def _downsets(down: Sequence[int]) -> list[int]:
    """All down-sets (bitmasks) of a poset given by principal down-sets."""
    out = [0]
    for p, d in enumerate(down):  # points are numbered along a linear extension
        strict = d & ~(1 << p)
        out += [u | (1 << p) for u in out if u & strict == strict]
    return out


def _linear_extensions(down: Sequence[int]):
    k = len(down)
    strict = [d & ~(1 << p) for p, d in enumerate(down)]

    def rec(placed_mask, order):
        if len(order) == k:
            yield list(order)
            return
        for p in range(k):
            if not placed_mask >> p & 1 and strict[p] & placed_mask == strict[p]:
                order.append(p)
                yield from rec(placed_mask | (1 << p), order)
                order.pop()

    yield from rec(0, [])


def _relabel(down: Sequence[int], order: Sequence[int]) -> tuple[int, ...]:
    new = {p: i for i, p in enumerate(order)}
    out = []
    for p in order:
        m = 0
        for q in range(len(down)):
            if down[p] >> q & 1:
                m |= 1 << new[q]
        out.append(m)
    return tuple(out)


def _canonical(down: Sequence[int]) -> tuple[int, ...]:
    return min(_relabel(down, o) for o in _linear_extensions(down))


@functools.lru_cache(maxsize=None)
def _posets_up_to(max_downsets: int) -> tuple:
    """Canonical posets (tuples of principal down-set masks) with at most
    ``max_downsets`` down-sets, including the empty poset."""
    layer = {()}
    found = {()}
    while layer:
        nxt = set()
        for down in layer:
            k = len(down)
            ds = _downsets(down)
            for d in ds:
                cnt = len(ds) + sum(1 for u in ds if u & d == d)
                if cnt > max_downsets:
                    continue
                code = _canonical(down + (d | (1 << k),))
                if code not in found:
                    found.add(code)
                    nxt.add(code)
        layer = nxt
    return tuple(sorted(found, key=lambda c: (len(c), c)))


def _lattice_of(down: Sequence[int], signature: Signature) -> FiniteAlgebra:
    ds = sorted(_downsets(down), key=lambda u: (bin(u).count("1"), u))
    index = {u: i for i, u in enumerate(ds)}
    covers = []
    for u in ds:
        for p in range(len(down)):
            if not u >> p & 1:
                v = u | (1 << p)
                if v in index:
                    covers.append((index[u], index[v]))
    n = len(ds)
    label = f"C{n}" if all(bin(d).count("1") == i + 1 for i, d in enumerate(down)) and n >= 2 else None
    return heyting_from_poset(Poset(n, tuple(sorted(covers))), signature, label)


@functools.lru_cache(maxsize=None)
def _heyting_pool(max_size: int, signature: Signature) -> tuple:
    out = []
    for code in _posets_up_to(max_size):
        A = _lattice_of(code, signature)
        si = len(code) > 0 and (1 << len(code)) - 1 in code
        out.append(((A.size, -len(code), code), A, si))
    out.sort(key=lambda x: x[0])
    counts: dict[int, int] = {}
    result = []
    for _, A, si in out:
        counts[A.size] = counts.get(A.size, 0) + 1
        if A.label is None:
            # the two small non-chains are unique up to isomorphism
            if A.size == 4:
                A.label = "B4"
            elif A.size == 5 and si:
                A.label = "D5"
            else:
                A.label = f"H{A.size}.{counts[A.size]}"
        result.append((A, si))
    return tuple(result)


def heyting_algebras(max_size: int, si_only: bool = False, min_size: int = 2,
                     signature: Signature = HEYTING) -> list[FiniteAlgebra]:
    """All Heyting algebras with min_size..max_size elements, one per
    isomorphism type, ordered by size, then decreasing height, then code."""
    return [A for A, si in _heyting_pool(max_size, signature)
            if min_size <= A.size and (si or not si_only)]


def heyting_fsi(max_size: int, signature: Signature = HEYTING) -> list[FiniteAlgebra]:
    return heyting_algebras(max_size, si_only=True, signature=signature)


# -- bundled antichain family -----------------------------------------------

ANTICHAIN_FILES = ("z7_z2.json", "z9_z2.json", "z11_z2.json")


def load_poset(path) -> Poset:
    with open(path) as fh:
        return Poset.from_dict(json.load(fh))


def antichain_member(k: int, signature: Signature = HEYTING) -> FiniteAlgebra:
    """k-th member of the bundled antichain of s.i. Heyting algebras."""
    if not 0 <= k < len(ANTICHAIN_FILES):
        raise AlgebraError(f"only {len(ANTICHAIN_FILES)} members are bundled")
    text = resources.files("jankov").joinpath("data", "antichain", ANTICHAIN_FILES[k]).read_text()
    d = json.loads(text)
    return heyting_from_poset(Poset.from_dict(d), signature, d.get("label"))
