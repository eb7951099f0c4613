"""Finite algebras: operation tables, subalgebras, congruences, homomorphisms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import AlgebraError, DegenerateAlgebra, SignatureMismatch
from .terms import App, Term, Var


class Signature:
    """An ordered list of (operation name, arity) pairs."""

    def __init__(self, ops: Iterable[tuple[str, int]]):
        self.ops = tuple((str(n), int(k)) for n, k in ops)
        names = [n for n, _ in self.ops]
        if not self.ops:
            raise AlgebraError("signature needs at least one operation")
        if len(set(names)) != len(names):
            raise AlgebraError("duplicate operation names")
        if any(k < 0 for _, k in self.ops):
            raise AlgebraError("negative arity")
        self._arity = dict(self.ops)

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise SignatureMismatch(f"unknown operation {name!r}") from None

    def has(self, name: str, arity: Optional[int] = None) -> bool:
        return name in self._arity and (arity is None or self._arity[name] == arity)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.ops]

    @property
    def constants(self) -> list[str]:
        return [n for n, k in self.ops if k == 0]

    def __eq__(self, other):
        return isinstance(other, Signature) and self.ops == other.ops

    def __hash__(self):
        return hash(self.ops)

    def __repr__(self):
        return f"Signature({list(self.ops)!r})"


HEYTING = Signature([("meet", 2), ("join", 2), ("impl", 2), ("neg", 1), ("one", 0)])
HEYTING_NO_CONST = Signature([("meet", 2), ("join", 2), ("impl", 2), ("neg", 1)])


class FiniteAlgebra:
    """A finite algebra given by operation tables over ``0..size-1``.

    Tables of arity-k operations are k-dimensional integer arrays.  Instances
    are treated as immutable; derived data is cached in ``_cache``.
    """

    def __init__(self, signature: Signature, size: int, tables: Mapping[str, object],
                 names: Optional[Sequence[str]] = None, label: Optional[str] = None):
        if size < 1:
            raise AlgebraError("size must be positive")
        self.signature = signature
        self.size = int(size)
        self.tables: dict[str, np.ndarray] = {}
        for name, k in signature.ops:
            if name not in tables:
                raise AlgebraError(f"missing table for {name!r}")
            t = np.array(tables[name], dtype=np.intp)
            if t.shape != (self.size,) * k:
                raise AlgebraError(f"table {name!r} has shape {t.shape}, expected {(self.size,) * k}")
            if t.size and (t.min() < 0 or t.max() >= self.size):
                raise AlgebraError(f"table {name!r} has entries out of range")
            t.setflags(write=False)
            self.tables[name] = t
        extra = set(tables) - set(signature.names)
        if extra:
            raise AlgebraError(f"tables for unknown operations {sorted(extra)}")
        if names is None:
            names = [str(i) for i in range(self.size)]
        if len(names) != self.size:
            raise AlgebraError("names list has wrong length")
        self.names = tuple(str(n) for n in names)
        self.label = label
        self._cache: dict = {}
        self._hash = hash((signature, self.size, tuple(t.tobytes() for t in self.tables.values())))

    def __eq__(self, other):
        return (isinstance(other, FiniteAlgebra) and self._hash == other._hash
                and self.signature == other.signature and self.size == other.size
                and all(np.array_equal(self.tables[n], other.tables[n]) for n in self.signature.names))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        tag = f" {self.label}" if self.label else ""
        return f"<FiniteAlgebra{tag} size={self.size}>"

    def __len__(self):
        return self.size

    def op(self, name: str, *args: int) -> int:
        return int(self.tables[name][tuple(args)])

    def constant(self, name: str) -> int:
        return int(self.tables[name][()])

    def element(self, name: str) -> int:
        """Element index from a display name (or a decimal index)."""
        if name in self.names:
            return self.names.index(name)
        if name.isdigit() and int(name) < self.size:
            return int(name)
        raise AlgebraError(f"no element named {name!r}")

    def relabel(self, label: Optional[str] = None, names: Optional[Sequence[str]] = None) -> "FiniteAlgebra":
        return FiniteAlgebra(self.signature, self.size, self.tables,
                             self.names if names is None else names, label)

    def permuted(self, perm: Sequence[int]) -> "FiniteAlgebra":
        """Isomorphic copy in which old element i becomes perm[i]."""
        perm = np.asarray(perm, dtype=np.intp)
        inv = np.argsort(perm)
        tables = {}
        for name, k in self.signature.ops:
            t = self.tables[name]
            tables[name] = perm[t[np.ix_(*([inv] * k))]] if k else perm[t]
        names = [self.names[i] for i in inv]
        return FiniteAlgebra(self.signature, self.size, tables, names, self.label)

    # serialization
    def to_dict(self) -> dict:
        return {
            "signature": [[n, k] for n, k in self.signature.ops],
            "size": self.size,
            "tables": {n: self.tables[n].tolist() for n in self.signature.names},
            "names": list(self.names),
        }

    @classmethod
    def from_dict(cls, d: Mapping, label: Optional[str] = None) -> "FiniteAlgebra":
        sig = Signature(tuple(x) for x in d["signature"])
        return cls(sig, d["size"], d["tables"], d.get("names"), label or d.get("label"))


def check_same_signature(*algebras: FiniteAlgebra):
    sig = algebras[0].signature
    for B in algebras[1:]:
        if B.signature != sig:
            raise SignatureMismatch("algebras have different signatures")


class UnionFind:
    """Union-find on 0..n-1 where every root is the least member of its class."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if y < x:
            x, y = y, x
        self.parent[y] = x
        return True

    def blocks(self) -> tuple[int, ...]:
        return tuple(self.find(i) for i in range(len(self.parent)))


class Congruence:
    """A partition stored as element -> least member of its block."""

    __slots__ = ("blocks", "_hash")

    def __init__(self, blocks: Sequence[int]):
        self.blocks = tuple(int(b) for b in blocks)
        self._hash = hash(self.blocks)

    @classmethod
    def from_classes(cls, n: int, classes: Iterable[Iterable[int]]) -> "Congruence":
        uf = UnionFind(n)
        for c in classes:
            c = list(c)
            for x in c[1:]:
                uf.union(c[0], x)
        return cls(uf.blocks())

    @classmethod
    def identity(cls, n: int) -> "Congruence":
        return cls(range(n))

    @classmethod
    def full(cls, n: int) -> "Congruence":
        return cls([0] * n)

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def num_blocks(self) -> int:
        return len(set(self.blocks))

    def classes(self) -> list[tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for x, b in enumerate(self.blocks):
            out.setdefault(b, []).append(x)
        return [tuple(v) for _, v in sorted(out.items())]

    def related(self, a: int, b: int) -> bool:
        return self.blocks[a] == self.blocks[b]

    def is_identity(self) -> bool:
        return all(b == i for i, b in enumerate(self.blocks))

    def is_full(self) -> bool:
        return all(b == 0 for b in self.blocks)

    def __le__(self, other: "Congruence") -> bool:
        return all(other.blocks[x] == other.blocks[b] for x, b in enumerate(self.blocks))

    def __lt__(self, other: "Congruence") -> bool:
        return self <= other and self != other

    def meet(self, other: "Congruence") -> "Congruence":
        first: dict[tuple[int, int], int] = {}
        return Congruence(first.setdefault((b, c), x)
                          for x, (b, c) in enumerate(zip(self.blocks, other.blocks)))

    def join(self, other: "Congruence") -> "Congruence":
        uf = UnionFind(self.size)
        for x in range(self.size):
            uf.union(x, self.blocks[x])
            uf.union(x, other.blocks[x])
        return Congruence(uf.blocks())

    def sort_key(self):
        return (-self.num_blocks, self.blocks)

    def __eq__(self, other):
        return isinstance(other, Congruence) and self.blocks == other.blocks

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Congruence(" + "|".join(",".join(map(str, c)) for c in self.classes()) + ")"


@dataclass(frozen=True)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    map: tuple[int, ...]

    @property
    def injective(self) -> bool:
        return len(set(self.map)) == len(self.map)

    def __call__(self, a: int) -> int:
        return self.map[a]

    def verify(self) -> bool:
        return is_homomorphism(self.source, self.target, self.map)


def is_homomorphism(A: FiniteAlgebra, B: FiniteAlgebra, phi: Sequence[int]) -> bool:
    phi = np.asarray(phi, dtype=np.intp)
    for name, k in A.signature.ops:
        ta, tb = A.tables[name], B.tables[name]
        if k == 0:
            if phi[ta] != tb:
                return False
        elif not np.array_equal(phi[ta], tb[np.ix_(*([phi] * k))]):
            return False
    return True


# -- subalgebras --------------------------------------------------------------

@dataclass(frozen=True)
class GeneratedSubalgebra:
    """Closure of a generator list, with a witness term for every element.

    ``steps`` lists how each non-generator element was first produced, as
    ``(element, op, argument elements)``; replaying the steps under another
    generator assignment computes the induced map.
    """
    algebra: FiniteAlgebra
    generators: tuple[int, ...]
    variables: tuple[str, ...]
    carrier: tuple[int, ...]
    witness_terms: dict
    steps: tuple

    def subalgebra(self) -> tuple[FiniteAlgebra, Homomorphism]:
        return subalgebra(self.algebra, self.carrier)


def generated_subalgebra(A: FiniteAlgebra, gens: Sequence[int],
                         variables: Optional[Sequence[str]] = None) -> GeneratedSubalgebra:
    """Least closed subset containing ``gens`` and every constant.

    Elements are discovered in rounds: generators, then constants, then for
    each round every operation (signature order) applied to argument tuples
    (lexicographic in discovery order) that use at least one element found
    in the previous round.
    """
    gens = tuple(int(g) for g in gens)
    if variables is None:
        variables = tuple(f"x{i + 1}" for i in range(len(gens)))
    variables = tuple(variables)
    if len(variables) != len(gens):
        raise AlgebraError("one variable per generator required")
    known: list[int] = []
    witness: dict[int, Term] = {}
    steps = []
    for g, v in zip(gens, variables):
        if not 0 <= g < A.size:
            raise AlgebraError(f"generator {g} out of range")
        if g not in witness:
            witness[g] = Var(v)
            known.append(g)
    for name in A.signature.constants:
        c = A.constant(name)
        if c not in witness:
            witness[c] = App(name, ())
            known.append(c)
            steps.append((c, name, ()))
    nonconst = [(n, k) for n, k in A.signature.ops if k > 0]
    frontier = 0
    while frontier < len(known):
        end = len(known)
        for name, k in nonconst:
            table = A.tables[name]
            for idx in itertools.product(range(end), repeat=k):
                if max(idx) < frontier:
                    continue
                args = tuple(known[i] for i in idx)
                val = int(table[args])
                if val not in witness:
                    witness[val] = App(name, tuple(witness[a] for a in args))
                    known.append(val)
                    steps.append((val, name, args))
        frontier = end
    return GeneratedSubalgebra(A, gens, variables, tuple(known), witness, tuple(steps))


def closure(A: FiniteAlgebra, elems: Iterable[int]) -> frozenset[int]:
    """Carrier of the subalgebra generated by ``elems`` (no witness terms)."""
    cur = set(int(e) for e in elems)
    cur.update(A.constant(c) for c in A.signature.constants)
    ops = [(A.tables[n], k) for n, k in A.signature.ops if k > 0]
    while True:
        idx = np.array(sorted(cur), dtype=np.intp)
        new = set(cur)
        for t, k in ops:
            new.update(np.unique(t[np.ix_(*([idx] * k))]).tolist())
        if len(new) == len(cur):
            return frozenset(cur)
        cur = new


def subalgebra(A: FiniteAlgebra, carrier: Iterable[int]) -> tuple[FiniteAlgebra, Homomorphism]:
    """The subalgebra on a closed carrier, elements renumbered in increasing order."""
    elems = sorted(set(int(c) for c in carrier))
    pos = {e: i for i, e in enumerate(elems)}
    idx = np.array(elems, dtype=np.intp)
    tables = {}
    for name, k in A.signature.ops:
        sub = A.tables[name][np.ix_(*([idx] * k))] if k else A.tables[name]
        try:
            tables[name] = np.vectorize(pos.__getitem__, otypes=[np.intp])(sub) if sub.size else sub
        except KeyError:
            raise AlgebraError("carrier is not closed under the operations") from None
    S = FiniteAlgebra(A.signature, len(elems), tables, [A.names[e] for e in elems])
    return S, Homomorphism(S, A, tuple(elems))


def subalgebra_carriers(A: FiniteAlgebra) -> list[frozenset[int]]:
    """All subuniverses (nonempty), ordered by (size, sorted elements)."""
    key = "subalgebra_carriers"
    if key not in A._cache:
        seen = set()
        todo = []
        if A.signature.constants:
            base = closure(A, [])
            seen.add(base)
            todo.append(base)
        else:
            for x in range(A.size):
                c = closure(A, [x])
                if c not in seen:
                    seen.add(c)
                    todo.append(c)
        while todo:
            S = todo.pop()
            for x in range(A.size):
                if x not in S:
                    c = closure(A, S | {x})
                    if c not in seen:
                        seen.add(c)
                        todo.append(c)
        A._cache[key] = sorted(seen, key=lambda s: (len(s), sorted(s)))
    return A._cache[key]


def proper_subalgebras(A: FiniteAlgebra) -> list[FiniteAlgebra]:
    return [subalgebra(A, c)[0] for c in subalgebra_carriers(A) if len(c) < A.size]


def basis_rank(A: FiniteAlgebra) -> tuple[int, tuple[int, ...]]:
    """Least size of a generating set, and the lexicographically least such set."""
    if "basis" not in A._cache:
        for k in range(A.size + 1):
            for subset in itertools.combinations(range(A.size), k):
                if len(closure(A, subset)) == A.size:
                    A._cache["basis"] = (k, subset)
                    break
            if "basis" in A._cache:
                break
    return A._cache["basis"]


def product(A: FiniteAlgebra, B: FiniteAlgebra) -> FiniteAlgebra:
    """Direct product; the pair (a, b) is element a * |B| + b."""
    check_same_signature(A, B)
    m = B.size
    tables = {}
    for name, k in A.signature.ops:
        ta, tb = A.tables[name], B.tables[name]
        if k == 0:
            tables[name] = ta * m + tb
            continue
        out = np.empty((A.size * m,) * k, dtype=np.intp)
        for idx in itertools.product(range(A.size * m), repeat=k):
            a = tuple(i // m for i in idx)
            b = tuple(i % m for i in idx)
            out[idx] = ta[a] * m + tb[b]
        tables[name] = out
    names = [f"({x},{y})" for x in A.names for y in B.names]
    return FiniteAlgebra(A.signature, A.size * m, tables, names)


# -- congruences --------------------------------------------------------------

def _close_pairs(A: FiniteAlgebra, pairs: Iterable[tuple[int, int]]) -> Congruence:
    uf = UnionFind(A.size)
    work = [(a, b) for a, b in pairs if uf.union(int(a), int(b))]
    ops = [(A.tables[n], k) for n, k in A.signature.ops if k > 0]
    while work:
        x, y = work.pop()
        for t, k in ops:
            for i in range(k):
                tx = np.take(t, x, axis=i).ravel()
                ty = np.take(t, y, axis=i).ravel()
                diff = tx != ty
                for u, v in zip(tx[diff].tolist(), ty[diff].tolist()):
                    if uf.union(u, v):
                        work.append((u, v))
    return Congruence(uf.blocks())


def principal_congruence(A: FiniteAlgebra, a: int, b: int) -> Congruence:
    """The least congruence identifying ``a`` and ``b``."""
    key = ("theta", min(a, b), max(a, b))
    if key not in A._cache:
        A._cache[key] = _close_pairs(A, [(a, b)])
    return A._cache[key]


def compact_congruence(A: FiniteAlgebra, pairs: Iterable[tuple[int, int]]) -> Congruence:
    return _close_pairs(A, list(pairs))


def is_congruence(A: FiniteAlgebra, theta: Congruence) -> bool:
    rep = np.array(theta.blocks, dtype=np.intp)
    for name, k in A.signature.ops:
        if k == 0:
            continue
        t = A.tables[name]
        if not np.array_equal(rep[t], rep[t[np.ix_(*([rep] * k))]]):
            return False
    return True


def all_congruences(A: FiniteAlgebra) -> list[Congruence]:
    """Every congruence, ordered by decreasing number of blocks then partition.

    The identity comes first and the full congruence last, so searches over
    homomorphic images try the largest images first.
    """
    if "congruences" not in A._cache:
        principals = {principal_congruence(A, a, b)
                      for a in range(A.size) for b in range(a + 1, A.size)}
        principals = sorted(principals, key=Congruence.sort_key)
        found = {Congruence.identity(A.size)} | set(principals)
        frontier = list(principals)
        while frontier:
            nxt = []
            for x in frontier:
                for p in principals:
                    j = x.join(p)
                    if j not in found:
                        found.add(j)
                        nxt.append(j)
            frontier = nxt
        A._cache["congruences"] = sorted(found, key=Congruence.sort_key)
    return A._cache["congruences"]


def quotient(A: FiniteAlgebra, theta: Congruence) -> tuple[FiniteAlgebra, Homomorphism]:
    """A / theta with blocks numbered by their least members."""
    if theta.size != A.size or not is_congruence(A, theta):
        raise AlgebraError("partition is not a congruence of the algebra")
    reps = sorted(set(theta.blocks))
    index = {r: i for i, r in enumerate(reps)}
    proj = np.array([index[b] for b in theta.blocks], dtype=np.intp)
    ridx = np.array(reps, dtype=np.intp)
    tables = {}
    for name, k in A.signature.ops:
        t = A.tables[name]
        tables[name] = proj[t[np.ix_(*([ridx] * k))]] if k else proj[t]
    names = []
    for cls in theta.classes():
        names.append(A.names[cls[0]] if len(cls) == 1 else "[" + ",".join(A.names[c] for c in cls) + "]")
    Q = FiniteAlgebra(A.signature, len(reps), tables, names)
    return Q, Homomorphism(A, Q, tuple(proj.tolist()))


def monolith(A: FiniteAlgebra) -> Optional[tuple[Congruence, tuple[int, int]]]:
    """The least non-identity congruence with an indistinguishable pair, or None."""
    if A.size < 2:
        raise DegenerateAlgebra("one-element algebra has no monolith")
    if "monolith" not in A._cache:
        pairs = [(a, b) for a in range(A.size) for b in range(a + 1, A.size)]
        mu = None
        for a, b in pairs:
            th = principal_congruence(A, a, b)
            mu = th if mu is None else mu.meet(th)
        result = None
        if not mu.is_identity():
            pair = next(p for p in pairs if principal_congruence(A, *p) == mu)
            result = (mu, pair)
        A._cache["monolith"] = result
    return A._cache["monolith"]


def is_subdirectly_irreducible(A: FiniteAlgebra) -> bool:
    return A.size >= 2 and monolith(A) is not None


def subdirect_factors(A: FiniteAlgebra) -> list[FiniteAlgebra]:
    """S.i. quotients by minimal meet-irreducible congruences.

    A congruence is meet-irreducible when it has exactly one upper cover.
    Every meet-irreducible congruence lies above a minimal one, so the
    minimal ones already meet to the identity and give an irredundant
    subdirect decomposition.
    """
    if A.size < 2:
        raise DegenerateAlgebra("one-element algebra has no subdirect factors")
    cons = all_congruences(A)
    irreducible = []
    for th in cons:
        above = [c for c in cons if th < c]
        covers = [c for c in above if not any(th < d < c for d in above)]
        if len(covers) == 1:
            irreducible.append(th)
    minimal = [th for th in irreducible if not any(o < th for o in irreducible)]
    meet = Congruence.full(A.size)
    for th in minimal:
        meet = meet.meet(th)
    if not meet.is_identity():
        raise AssertionError("chosen congruences do not separate points")
    order = {c: i for i, c in enumerate(cons)}
    factors = [(quotient(A, th)[0], order[th]) for th in minimal]
    factors.sort(key=lambda p: (p[0].size, p[1]))
    return [f for f, _ in factors]


# -- embeddings ---------------------------------------------------------------

def _replay(G: GeneratedSubalgebra, B: FiniteAlgebra, images: Sequence[int]) -> Optional[np.ndarray]:
    phi = np.full(G.algebra.size, -1, dtype=np.intp)
    for g, b in zip(G.generators, images):
        if phi[g] >= 0 and phi[g] != b:
            return None
        phi[g] = b
    for elem, name, args in G.steps:
        phi[elem] = B.tables[name][tuple(int(phi[a]) for a in args)]
    return phi


def find_embedding(A: FiniteAlgebra, B: FiniteAlgebra) -> Optional[Homomorphism]:
    """First injective homomorphism A -> B, trying generator images in lexicographic order."""
    check_same_signature(A, B)
    if A.size > B.size:
        return None
    _, basis = basis_rank(A)
    G = A._cache.get("basis_closure")
    if G is None:
        G = A._cache["basis_closure"] = generated_subalgebra(A, basis)
    for images in itertools.permutations(range(B.size), len(basis)):
        phi = _replay(G, B, images)
        if phi is None or len(set(phi.tolist())) != A.size:
            continue
        if is_homomorphism(A, B, phi):
            return Homomorphism(A, B, tuple(phi.tolist()))
    return None


def find_homomorphisms(A: FiniteAlgebra, B: FiniteAlgebra):
    """All homomorphisms A -> B, via images of a basis."""
    check_same_signature(A, B)
    _, basis = basis_rank(A)
    G = generated_subalgebra(A, basis)
    for images in itertools.product(range(B.size), repeat=len(basis)):
        phi = _replay(G, B, images)
        if phi is not None and is_homomorphism(A, B, phi):
            yield Homomorphism(A, B, tuple(phi.tolist()))


def is_isomorphic(A: FiniteAlgebra, B: FiniteAlgebra) -> bool:
    return A.signature == B.signature and A.size == B.size and find_embedding(A, B) is not None


def in_sub_hom(A: FiniteAlgebra, B: FiniteAlgebra):
    """Whether A embeds in a quotient of B; returns (bool, (theta, embedding) or None)."""
    check_same_signature(A, B)
    if A.size > B.size:
        return False, None
    for th in all_congruences(B):
        if th.num_blocks < A.size:
            continue
        Q, _ = quotient(B, th)
        emb = find_embedding(A, Q)
        if emb is not None:
            return True, (th, emb)
    return False, None


def dedupe_isomorphic(algebras: Iterable[FiniteAlgebra]) -> list[FiniteAlgebra]:
    out: list[FiniteAlgebra] = []
    for A in algebras:
        if not any(is_isomorphic(A, B) for B in out):
            out.append(A)
    return out
