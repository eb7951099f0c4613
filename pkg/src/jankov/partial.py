"""Partial algebras and locally characteristic identities.

A partial algebra stores each operation as an integer array in which -1
marks an undefined entry.  Partial subalgebras remember the parent algebra
and the subset they were cut from.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .algebra import FiniteAlgebra, Signature, all_congruences, quotient
from .characteristic import TD_IMPL, TDTerm, require_td, td_iterate
from .errors import AlgebraError, DegenerateAlgebra, InternalConsistencyError
from .semantics import eval_grid, eval_term, holds, refuting_grid, sorted_variables
from .terms import App, Identity, Var, big_meet, element_variables, equiv, impl, subterms

UNDEFINED = -1


class PartialAlgebra:
    def __init__(self, signature: Signature, size: int, tables, names=None,
                 provenance: Optional[tuple] = None, label: Optional[str] = None):
        self.signature = signature
        self.size = size
        self.tables = {}
        for name, k in signature.ops:
            t = np.asarray(tables[name], dtype=np.intp)
            if t.shape != (size,) * k:
                raise AlgebraError(f"table of {name} has shape {t.shape}")
            if np.any((t < UNDEFINED) | (t >= size)):
                raise AlgebraError(f"table of {name} has entries out of range")
            t.setflags(write=False)
            self.tables[name] = t
        self.names = tuple(str(x) for x in names) if names is not None else tuple(str(i) for i in range(size))
        self.provenance = provenance  # (parent FiniteAlgebra, tuple of parent elements)
        self.label = label
        if provenance is not None:
            self._check_provenance()

    def _check_provenance(self):
        A, subset = self.provenance
        emb = np.array(subset, dtype=np.intp)
        for name, k in self.signature.ops:
            t = self.tables[name]
            parent = A.tables[name][np.ix_(*([emb] * k))] if k else A.tables[name]
            mask = t != UNDEFINED
            if np.any(emb[t[mask]] != np.asarray(parent)[mask]):
                raise InternalConsistencyError(f"{name} disagrees with the parent algebra")

    def __repr__(self):
        return f"<PartialAlgebra {self.label or ''} size={self.size} defined={self.num_defined()}>"

    def entries(self):
        """Defined entries (op, args, value) in signature order, then by args."""
        for name, k in self.signature.ops:
            t = self.tables[name]
            for args in itertools.product(range(self.size), repeat=k):
                v = int(t[args])
                if v != UNDEFINED:
                    yield name, args, v

    def num_defined(self) -> int:
        return sum(1 for _ in self.entries())

    def is_total(self) -> bool:
        return all(np.all(t != UNDEFINED) for t in self.tables.values())

    def to_algebra(self) -> FiniteAlgebra:
        if not self.is_total():
            raise AlgebraError("partial algebra is not total")
        return FiniteAlgebra(self.signature, self.size, self.tables, self.names, self.label)

    @classmethod
    def from_algebra(cls, A: FiniteAlgebra) -> "PartialAlgebra":
        return cls(A.signature, A.size, A.tables, A.names, (A, tuple(range(A.size))), A.label)

    def to_dict(self) -> dict:
        def enc(t):
            return None if t == UNDEFINED else t
        tables = {}
        for name, k in self.signature.ops:
            t = self.tables[name]
            tables[name] = enc(int(t)) if k == 0 else np.vectorize(enc, otypes=[object])(t).tolist()
        return {"signature": [[n, k] for n, k in self.signature.ops], "size": self.size,
                "tables": tables, "names": list(self.names)}

    @classmethod
    def from_dict(cls, d) -> "PartialAlgebra":
        sig = Signature(tuple(x) for x in d["signature"])
        tables = {}
        for name, k in sig.ops:
            raw = np.array(d["tables"][name], dtype=object)
            tables[name] = np.where(raw == None, UNDEFINED, raw).astype(np.intp)  # noqa: E711
        return cls(sig, d["size"], tables, d.get("names"), label=d.get("label"))


def partial_subalgebra(A: FiniteAlgebra, subset: Iterable[int]) -> PartialAlgebra:
    """Restriction of A to subset: an entry is defined when its arguments
    and its value all lie in subset."""
    elems = tuple(sorted(set(int(a) for a in subset)))
    if not elems:
        raise AlgebraError("empty subset")
    if elems[0] < 0 or elems[-1] >= A.size:
        raise AlgebraError("subset has elements outside the algebra")
    local = np.full(A.size, UNDEFINED, dtype=np.intp)
    local[list(elems)] = np.arange(len(elems))
    emb = np.array(elems, dtype=np.intp)
    tables = {}
    for name, k in A.signature.ops:
        t = A.tables[name]
        tables[name] = local[t[np.ix_(*([emb] * k))]] if k else local[t]
    label = f"{A.label or 'A'}|{{{','.join(A.names[a] for a in elems)}}}"
    return PartialAlgebra(A.signature, len(elems), tables, [A.names[a] for a in elems], (A, elems), label)


def signature_closure(A: FiniteAlgebra, subset: Iterable[int], ops: Iterable[str]) -> PartialAlgebra:
    """Close subset under the named operations inside A and restrict A to
    the result; the named operations are total on it."""
    ops = list(ops)
    for o in ops:
        if o not in A.signature.names:
            raise AlgebraError(f"unknown operation {o!r}")
    arity = dict(A.signature.ops)
    S = set(int(a) for a in subset)
    S.update(int(A.tables[o]) for o in ops if arity[o] == 0)
    while True:
        elems = sorted(S)
        new = set()
        for o in ops:
            k = arity[o]
            if k == 0:
                continue
            vals = A.tables[o][np.ix_(*([np.array(elems, dtype=np.intp)] * k))]
            new.update(int(v) for v in np.unique(vals))
        if new <= S:
            break
        S |= new
    return partial_subalgebra(A, S)


def positive_diagram(P: PartialAlgebra, prefix: str = "x") -> list[Identity]:
    """One identity f(x_a1, ..., x_an) = x_f(a1, ..., an) per defined entry."""
    xs = [Var(v) for v in element_variables(P.names, prefix)]
    return [Identity(App(name, tuple(xs[a] for a in args)), xs[v]) for name, args, v in P.entries()]


# -- partial isomorphisms and homomorphisms ---------------------------------------

def _partial_maps(P: PartialAlgebra, injective: bool, fixed: dict, accept, target_size: int,
                  target_table):
    """Backtracking over maps P -> target; an entry is checked as soon as all
    its arguments are assigned."""
    n = P.size
    checks: list[list] = [[] for _ in range(n)]
    for name, args, v in P.entries():
        last = max(max(args, default=0), v)
        checks[last].append((name, args, v))
    h = [-1] * n
    used = set()

    def ok(i):
        for name, args, v in checks[i]:
            if target_table(name, tuple(h[a] for a in args)) != h[v]:
                return False
        return True

    def go(i):
        if i == n:
            return accept(h)
        cands = [fixed[i]] if i in fixed else range(target_size)
        for x in cands:
            if injective and x in used:
                continue
            h[i] = x
            used.add(x)
            if ok(i) and go(i + 1):
                return True
            used.discard(x)
            h[i] = -1
        return False

    return go(0)


def partial_isomorphism(P: PartialAlgebra, Q: PartialAlgebra,
                        pair_map: Optional[dict] = None) -> Optional[tuple[int, ...]]:
    """A bijection preserving definedness and values in both directions,
    optionally required to extend pair_map."""
    if P.signature != Q.signature or P.size != Q.size:
        return None
    for name in P.signature.names:
        if np.count_nonzero(P.tables[name] != UNDEFINED) != np.count_nonzero(Q.tables[name] != UNDEFINED):
            return None
    found = []

    def table(name, args):
        return int(Q.tables[name][args])

    def accept(h):
        # forward preservation holds; equal entry counts make it bijective on entries
        found.append(tuple(h))
        return True

    if _partial_maps(P, True, dict(pair_map or {}), accept, Q.size, table):
        return found[0]
    return None


def dedupe_partial(items: Sequence[tuple[PartialAlgebra, tuple]]) -> list[tuple[PartialAlgebra, tuple]]:
    """Drop (partial algebra, pair) items isomorphic to an earlier one by a
    map sending pair to pair."""
    out: list = []
    for P, pair in items:
        if not any(Q.size == P.size and partial_isomorphism(P, Q, dict(zip(pair, qp))) is not None
                   for Q, qp in out):
            out.append((P, pair))
    return out


def partial_homomorphisms(P: PartialAlgebra, B: FiniteAlgebra, injective: bool = False,
                          separate: Optional[tuple[int, int]] = None, first_only: bool = True):
    """Maps P -> B preserving every defined operation entry.  With separate
    = (b, c), only maps with h(b) != h(c)."""
    if P.signature != B.signature:
        raise AlgebraError("signature mismatch")
    out = []

    def table(name, args):
        return int(B.tables[name][args])

    def accept(h):
        if separate is not None and h[separate[0]] == h[separate[1]]:
            return False
        out.append(tuple(h))
        return first_only

    _partial_maps(P, injective, {}, accept, B.size, table)
    return out


def separating_homomorphism(P: PartialAlgebra, B: FiniteAlgebra, b: int, c: int):
    """A congruence theta of B and a homomorphism P -> B/theta separating b
    and c, or None."""
    for theta in all_congruences(B):
        if theta.is_full():
            continue
        Q, _ = quotient(B, theta)
        hs = partial_homomorphisms(P, Q, separate=(b, c))
        if hs:
            return theta, Q, hs[0]
    return None


# -- locally characteristic identities -------------------------------------------

@dataclass
class LocalCharIdentity:
    identity: Identity
    source: PartialAlgebra
    pair: tuple
    td: TDTerm
    variables: tuple
    simplified: Optional[Identity] = None

    @property
    def valuation(self) -> dict:
        """The valuation x_a -> a in the parent algebra, when known."""
        if self.source.provenance is None:
            return {}
        _, elems = self.source.provenance
        return dict(zip(self.variables, elems))

    @property
    def best(self) -> Identity:
        return self.simplified if self.simplified is not None else self.identity

    def describe(self) -> str:
        P = self.source
        b, c = self.pair
        return (f"# locally characteristic identity of {P.label or 'partial algebra'} "
                f"({P.size} elements, {P.num_defined()} defined entries), pair "
                f"({P.names[b]}, {P.names[c]}), td {self.td.name}")


def local_char_identity(P: PartialAlgebra, b: int, c: int, td: TDTerm = TD_IMPL,
                        prefix: str = "x") -> LocalCharIdentity:
    """td(t, t', x_b) = td(t, t', x_c) over the sides t = t' of the positive
    diagram of P."""
    if b == c:
        raise AlgebraError("the pair must consist of distinct elements")
    if P.size < 2:
        raise DegenerateAlgebra("partial algebra must have at least two elements")
    names = element_variables(P.names, prefix)
    diagram = positive_diagram(P, prefix)
    lhs = [d.lhs for d in diagram]
    rhs = [d.rhs for d in diagram]
    xb, xc = Var(names[b]), Var(names[c])
    ident = Identity(td_iterate(td, lhs, rhs, xb), td_iterate(td, lhs, rhs, xc))
    simplified = None
    if td.name == "td_impl" and diagram:
        t = big_meet([equiv(s, r) for s, r in zip(lhs, rhs)])
        simplified = Identity(impl(t, xb), impl(t, xc))
    lc = LocalCharIdentity(ident, P, (b, c), td, tuple(names), simplified)
    if P.provenance is not None:
        A, elems = P.provenance
        require_td(td, [A])
        v = lc.valuation
        if eval_term(A, ident.lhs, v) == eval_term(A, ident.rhs, v):
            raise InternalConsistencyError("locally characteristic identity holds in its source")
    return lc


def characteristic_set(A: FiniteAlgebra, td: TDTerm = TD_IMPL, cap: Optional[int] = None
                       ) -> list[LocalCharIdentity]:
    """Locally characteristic identities of the partial subalgebras of A with
    2..cap elements, one per partial algebra up to isomorphism and per
    unordered pair of distinct elements."""
    cap = A.size if cap is None else cap
    parts: list[PartialAlgebra] = []
    for k in range(2, min(cap, A.size) + 1):
        for subset in itertools.combinations(range(A.size), k):
            P = partial_subalgebra(A, subset)
            if not any(Q.size == P.size and partial_isomorphism(P, Q) is not None for Q in parts):
                parts.append(P)
    return [local_char_identity(P, b, c, td)
            for P in parts for b, c in itertools.combinations(range(P.size), 2)]


# -- decomposition -------------------------------------------------------------------

@dataclass
class Decomposition:
    members: list
    sources: list                 # (algebra, valuation) per member
    pool_size: int
    verified_entails_e: bool      # every pool member of V validating all of Gamma validates e
    verified_e_entails: bool      # every pool member of V validating e validates each member
    pool_note: str = ""

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def refutation_partials(e: Identity, algebras: Sequence[FiniteAlgebra]):
    """(partial subalgebra on the subterm values, (v(lhs), v(rhs)), algebra,
    valuation) for every refuting valuation of e in the given algebras."""
    names = sorted_variables(e)
    subs = subterms(e)
    out = []
    for A in algebras:
        bad = refuting_grid(A, e, names)
        if not bad.any():
            continue
        vals = eval_grid(A, subs, names)
        idx = {t: i for i, t in enumerate(subs)}
        for pos in zip(*np.nonzero(bad)):
            S = {int(vals[i][pos]) for i in range(len(subs))}
            P = partial_subalgebra(A, S)
            local = {a: i for i, a in enumerate(P.provenance[1])}
            pair = (local[int(vals[idx[e.lhs]][pos])], local[int(vals[idx[e.rhs]][pos])])
            out.append((P, pair, A, dict(zip(names, map(int, pos)))))
    return out


def decompose_identity(e: Identity, V, td: TDTerm = TD_IMPL, pool: Optional[Sequence[FiniteAlgebra]] = None,
                       bound: Optional[int] = None) -> Decomposition:
    """A finite set of locally characteristic identities equivalent to e
    relative to V.

    Refutations are collected over the generators of V (over its s.i.
    members up to ``bound`` for axiomatized specs), one identity per partial
    algebra and pair up to isomorphism.  Both entailments are then checked
    on the members of V in ``pool``."""
    from .variety import enumerate_fsi, membership

    if V.kind == "generators":
        algebras = list(V.algebras)
    else:
        if bound is None:
            raise AlgebraError("a size bound is needed for this variety")
        algebras = enumerate_fsi(V, bound)
    found = refutation_partials(e, algebras)
    if not found:
        raise AlgebraError("identity is valid, nothing to decompose")
    kept, seen = [], []
    for P, pair, A, v in found:
        if any(Q.size == P.size and partial_isomorphism(P, Q, dict(zip(pair, qp))) is not None
               for Q, qp in seen):
            continue
        seen.append((P, pair))
        kept.append((P, pair, A, v))
    members = [local_char_identity(P, b, c, td) for P, (b, c), _, _ in kept]
    if pool is None:
        pool = enumerate_fsi(V, bound) if bound is not None else list(algebras)
    in_v = [B for B in pool if membership(B, V)]
    require_td(td, in_v)
    fwd = all(holds(B, e) for B in in_v if all(holds(B, g.identity) for g in members))
    back = all(holds(B, g.identity) for B in in_v if holds(B, e) for g in members)
    if not (fwd and back):
        raise InternalConsistencyError("decomposition is not equivalent to the identity on the pool")
    note = "" if V.kind == "generators" else "refutations collected on bounded members only"
    return Decomposition(members, [(A, v) for _, _, A, v in kept], len(in_v), fwd, back, note)


# -- embeddings into products --------------------------------------------------------

def partial_leq(P: PartialAlgebra, B: FiniteAlgebra, td: TDTerm = TD_IMPL) -> bool:
    """B refutes the locally characteristic identity of P for every pair."""
    return all(not holds(B, local_char_identity(P, b, c, td).identity)
               for b, c in itertools.combinations(range(P.size), 2))


def injective_product_homomorphism(P: PartialAlgebra, algebras: Sequence[FiniteAlgebra],
                                   td: TDTerm = TD_IMPL):
    """If for each pair b != c some algebra refutes chi(P, x_b, x_c), build
    one homomorphism P -> product of quotients that is injective.

    Returns (factors, map) where factors lists (algebra, congruence,
    quotient, component map) and map sends each element of P to its tuple
    of component values; None when some pair is not refuted."""
    factors = []
    for b, c in itertools.combinations(range(P.size), 2):
        chi = local_char_identity(P, b, c, td).identity
        for B in algebras:
            if not holds(B, chi):
                sep = separating_homomorphism(P, B, b, c)
                if sep is None:
                    raise InternalConsistencyError(
                        f"{B.label} refutes the identity but has no separating homomorphism")
                theta, Q, h = sep
                factors.append((B, theta, Q, h))
                break
        else:
            return None
    h = [tuple(f[3][a] for f in factors) for a in range(P.size)]
    if len(set(h)) != P.size:
        raise InternalConsistencyError("product map is not injective")
    for name, args, v in P.entries():
        for i, (_, _, Q, comp) in enumerate(factors):
            if int(Q.tables[name][tuple(comp[a] for a in args)]) != comp[v]:
                raise InternalConsistencyError("product map is not a homomorphism")
    return factors, h
