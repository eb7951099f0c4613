"""Variety specifications and the procedures that work at variety level:
membership, free algebras, enumeration of s.i. members, optimal
axiomatizations, and bounded decision procedures."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebra import (
    HEYTING, FiniteAlgebra, Signature, all_congruences, basis_rank, check_same_signature,
    dedupe_isomorphic, in_sub_hom, is_isomorphic, is_subdirectly_irreducible, proper_subalgebras,
    quotient, subalgebra, subalgebra_carriers, subdirect_factors,
)
from .characteristic import (
    TD_IMPL, CharacteristicIdentity, TDTerm, algebra_characteristic_identity, jankov_formula, leq,
)
from .errors import AlgebraError, BoundUnavailable, CapExceeded, InternalConsistencyError
from .heyting import chain, heyting_algebras, heyting_fsi, is_heyting
from .semantics import (
    Verdict, eval_grid, holds, semantic_consequence, sorted_variables,
)
from .terms import App, Identity, Term, Var, apply_substitution, subterms, to_text, translate


@dataclass(frozen=True, eq=False)
class VarietySpec:
    """A variety given by generating algebras, by identities inside an
    ambient variety, or the builtin variety of all Heyting algebras.

    ``beta`` is an optional table n -> upper bound for the size of the rank-n
    free algebra.  Generated varieties compute theirs exactly.
    """
    kind: str
    signature: Signature
    algebras: tuple = ()
    identities: tuple = ()
    ambient: Optional["VarietySpec"] = None
    beta: Optional[tuple] = None
    name: str = ""

    def __str__(self):
        return self.name or self.kind

    @property
    def root(self) -> "VarietySpec":
        v = self
        while v.kind == "axioms":
            v = v.ambient
        return v


def generated_by(*algebras: FiniteAlgebra, name: Optional[str] = None) -> VarietySpec:
    if not algebras:
        raise AlgebraError("need at least one generating algebra")
    check_same_signature(*algebras)
    label = name or "var(" + ", ".join(a.label or "?" for a in algebras) + ")"
    return VarietySpec("generators", algebras[0].signature, tuple(algebras), name=label)


def axiomatized(identities: Sequence[Identity], ambient: VarietySpec,
                beta: Optional[Sequence[int]] = None, name: Optional[str] = None) -> VarietySpec:
    label = name or f"{ambient} + " + "; ".join(to_text(i) for i in identities)
    return VarietySpec("axioms", ambient.signature, (), tuple(identities), ambient,
                       tuple(beta) if beta is not None else None, label)


def heyting_variety(signature: Signature = HEYTING) -> VarietySpec:
    return VarietySpec("heyting", signature, name="heyting")


def heyting_slice(n: int, signature: Signature = HEYTING) -> VarietySpec:
    """Heyting algebras validating the Jankov identity of the (n+1)-chain,
    i.e. those with no (n+1)-chain in SH."""
    if n < 1:
        raise AlgebraError("slice index must be positive")
    ident = translate(jankov_formula(chain(n + 1, signature)))
    return axiomatized([ident], heyting_variety(signature), name=f"slice:{n}")


# -- membership ------------------------------------------------------------------

def membership(B: FiniteAlgebra, V: VarietySpec) -> bool:
    if B.signature != V.signature:
        raise AlgebraError("signature mismatch")
    key = ("member", id(V))
    if key in B._cache:
        return B._cache[key][1]
    if V.kind == "heyting":
        result = is_heyting(B)
    elif V.kind == "axioms":
        result = membership(B, V.ambient) and all(holds(B, e) for e in V.identities)
    else:
        # s.i. members of a variety generated by finitely many finite algebras
        # lie in HS of the generators
        result = B.size == 1 or all(
            any(in_sub_hom(F, G)[0] for G in V.algebras) for F in subdirect_factors(B))
    B._cache[key] = (V, result)  # keep V alive so the id stays unique
    return result


# -- enumeration of s.i. members ----------------------------------------------------

def _canonical(algebras: Sequence[FiniteAlgebra], signature: Signature) -> list[FiniteAlgebra]:
    """Replace Heyting algebras by their representatives from the pool, in
    pool order; other algebras follow, ordered by size then tables."""
    if signature == HEYTING or all(is_heyting(A) for A in algebras):
        m = max((A.size for A in algebras), default=0)
        pool = heyting_algebras(m, signature=signature) if m >= 2 else []
        out = []
        for P in pool:
            if any(A.size == P.size and is_isomorphic(A, P) for A in algebras):
                out.append(P)
        if len(out) == len(algebras):
            return out
    return sorted(algebras, key=lambda A: (A.size, tuple(A.tables[n].tobytes() for n in signature.names)))


def hs_closure(algebras: Sequence[FiniteAlgebra], max_size: int) -> list[FiniteAlgebra]:
    """Quotients of subalgebras of the given algebras, up to isomorphism."""
    found: list[FiniteAlgebra] = []
    for G in algebras:
        for carrier in subalgebra_carriers(G):
            S, _ = subalgebra(G, carrier)
            for th in all_congruences(S):
                if th.num_blocks > max_size:
                    continue
                Q, _ = quotient(S, th)
                if not any(Q.size == F.size and is_isomorphic(Q, F) for F in found):
                    found.append(Q)
    return found


def enumerate_fsi(V: VarietySpec, max_size: int, order: str = "default") -> list[FiniteAlgebra]:
    """All s.i. members of V with at most max_size elements, up to isomorphism."""
    root = V.root
    if root.kind == "heyting":
        out = [A for A in heyting_fsi(max_size, root.signature) if membership(A, V)]
    else:
        cands = [A for A in hs_closure(root.algebras, max_size)
                 if A.size >= 2 and is_subdirectly_irreducible(A)]
        out = [A for A in _canonical(cands, V.signature) if membership(A, V)]
        # prefer the generators themselves where they occur
        out = [next((G for G in root.algebras if G.size == A.size and is_isomorphic(G, A)), A)
               for A in out]
    if order == "reverse":
        out = out[::-1]
    return out


def enumerate_members(V: VarietySpec, max_size: int) -> list[FiniteAlgebra]:
    """All members (not only s.i.) up to max_size, for specs whose algebras
    are Heyting algebras."""
    root = V.root
    if root.kind != "heyting" and not all(is_heyting(G) for G in root.algebras):
        raise AlgebraError("member enumeration needs Heyting algebras")
    return [A for A in heyting_algebras(max_size, signature=V.signature) if membership(A, V)]


# -- free algebras ------------------------------------------------------------------

@dataclass
class FreeAlgebra:
    algebra: FiniteAlgebra
    rank: int
    generators: tuple
    terms: list
    variables: tuple


def _generator_coordinates(algebras, n):
    blocks = []
    for G in algebras:
        tuples = np.array(list(itertools.product(range(G.size), repeat=n)), dtype=np.intp).reshape(-1, n)
        blocks.append((G, tuples))
    return blocks


def free_algebra_direct(V: VarietySpec, n: int, cap: int = 4096,
                        variables: Optional[Sequence[str]] = None) -> FreeAlgebra:
    """Subalgebra of the product of G^(G^n) over the generators G, generated
    by the n projections."""
    if V.kind != "generators":
        raise AlgebraError("the direct construction needs a generated variety")
    variables = tuple(variables or [f"x{i + 1}" for i in range(n)])
    algs = dedupe_isomorphic(V.algebras)
    blocks = _generator_coordinates(algs, n)
    sig = V.signature

    def apply(name, k, M, I):
        # coordinatewise application of op `name` to rows I[:, 0..k-1] of M
        parts, start = [], 0
        for G, tup in blocks:
            w = len(tup)
            sub = M[:, start:start + w]
            parts.append(G.tables[name][tuple(sub[I[:, j]] for j in range(k))])
            start += w
        return np.concatenate(parts, axis=1)

    rows: list[np.ndarray] = []
    terms: list[Term] = []
    index: dict[bytes, int] = {}

    def add(vec, term):
        key = vec.tobytes()
        if key not in index:
            index[key] = len(rows)
            rows.append(vec)
            terms.append(term)
            if len(rows) > cap:
                raise CapExceeded(f"free algebra of rank {n} exceeds {cap} elements")
        return index[key]

    gen_idx = []
    for i, v in enumerate(variables):
        vec = np.concatenate([t[:, i] for _, t in blocks]) if n else np.zeros(0, dtype=np.intp)
        gen_idx.append(add(vec, Var(v)))
    for c in sig.constants:
        vec = np.concatenate([np.full(len(t), G.constant(c), dtype=np.intp) for G, t in blocks])
        add(vec, App(c, ()))
    ops = [(nm, k) for nm, k in sig.ops if k > 0]
    frontier = 0
    while frontier < len(rows):
        end = len(rows)
        M = np.array(rows[:end])
        for name, k in ops:
            idx = [t for t in itertools.product(range(end), repeat=k) if max(t) >= frontier]
            if not idx:
                continue
            R = apply(name, k, M, np.array(idx, dtype=np.intp))
            for row, t in zip(R, idx):
                add(row.copy(), App(name, tuple(terms[i] for i in t)))
        frontier = end
    M = np.array(rows)
    size = len(rows)
    tables = {}
    for name, k in sig.ops:
        if k == 0:
            tables[name] = index[np.concatenate(
                [np.full(len(t), G.constant(name), dtype=np.intp) for G, t in blocks]).tobytes()]
            continue
        I = np.array(list(itertools.product(range(size), repeat=k)), dtype=np.intp)
        R = apply(name, k, M, I)
        out = np.array([index[r.tobytes()] for r in R], dtype=np.intp).reshape((size,) * k)
        tables[name] = out
    names = [to_text(t) if len(to_text(t)) < 24 else f"e{i}" for i, t in enumerate(terms)]
    A = FiniteAlgebra(sig, size, tables, names, f"F({V}, {n})")
    return FreeAlgebra(A, n, tuple(gen_idx), terms, variables)


class EquivalenceOracle:
    """Decides V |= s = t for terms in a fixed list of variables by
    evaluation: on the generators of a generated variety, or on every s.i.
    member up to the size bound of an axiomatized one."""

    def __init__(self, V: VarietySpec, variables: Sequence[str], bound: Optional[int] = None):
        self.variables = list(variables)
        if V.kind == "generators":
            self.models = dedupe_isomorphic(V.algebras)
        else:
            m = bound if bound is not None else beta(V, len(self.variables))
            self.models = enumerate_fsi(V, m)

    def key(self, t: Term) -> bytes:
        return b"|".join(eval_grid(A, [t], self.variables)[0].tobytes() for A in self.models)

    def equivalent(self, s: Term, t: Term) -> bool:
        return self.key(s) == self.key(t)


def free_algebra_by_terms(V: VarietySpec, n: int, cap: int = 4096,
                          variables: Optional[Sequence[str]] = None,
                          bound: Optional[int] = None) -> FreeAlgebra:
    """Enumerate terms by increasing depth, keep one representative per
    V-equivalence class, and stop at the first depth that adds no class."""
    variables = tuple(variables or [f"x{i + 1}" for i in range(n)])
    oracle = EquivalenceOracle(V, variables, bound)
    sig = V.signature
    reps: list[Term] = []
    keys: dict[bytes, int] = {}

    def classify(t):
        k = oracle.key(t)
        if k in keys:
            return keys[k], False
        keys[k] = len(reps)
        reps.append(t)
        if len(reps) > cap:
            raise CapExceeded(f"free algebra of rank {n} exceeds {cap} elements")
        return keys[k], True

    for v in variables:
        classify(Var(v))
    for c in sig.constants:
        classify(App(c, ()))
    ops = [(nm, k) for nm, k in sig.ops if k > 0]
    level_start = 0
    while True:
        end = len(reps)
        added = False
        for name, k in ops:
            for idx in itertools.product(range(end), repeat=k):
                if max(idx) < level_start:
                    continue
                _, new = classify(App(name, tuple(reps[i] for i in idx)))
                added |= new
        if not added:
            break
        level_start = end
    size = len(reps)
    tables = {}
    for name, k in sig.ops:
        if k == 0:
            tables[name] = keys[oracle.key(App(name, ()))]
            continue
        out = np.empty((size,) * k, dtype=np.intp)
        for idx in itertools.product(range(size), repeat=k):
            key = oracle.key(App(name, tuple(reps[i] for i in idx)))
            if key not in keys:
                raise InternalConsistencyError("term classes are not closed under operations")
            out[idx] = keys[key]
        tables[name] = out
    names = [to_text(t) if len(to_text(t)) < 24 else f"e{i}" for i, t in enumerate(reps)]
    A = FiniteAlgebra(sig, size, tables, names, f"F({V}, {n})")
    return FreeAlgebra(A, n, tuple(range(len(variables))), reps, variables)


def free_algebra(V: VarietySpec, n: int, cap: int = 4096, variables: Optional[Sequence[str]] = None,
                 method: str = "auto") -> FreeAlgebra:
    if method == "auto":
        method = "direct" if V.kind == "generators" else "terms"
    if method == "direct":
        return free_algebra_direct(V, n, cap, variables)
    if method == "terms":
        if V.kind == "heyting":
            raise AlgebraError("the variety of all Heyting algebras is not locally finite")
        return free_algebra_by_terms(V, n, cap, variables)
    raise AlgebraError(f"unknown method {method!r}")


def free_spectrum(V: VarietySpec, n: int, cap: int = 4096) -> int:
    return free_algebra(V, n, cap).algebra.size


def beta(V: VarietySpec, n: int) -> int:
    """Upper bound for the size of the rank-n free algebra of V."""
    if V.beta is not None:
        if n < len(V.beta):
            return int(V.beta[n])
        raise BoundUnavailable(f"bound table of {V} stops before rank {n}")
    if V.kind == "generators":
        return free_spectrum(V, n)
    if V.kind == "axioms":
        return beta(V.ambient, n)
    raise BoundUnavailable(f"{V} has no size bound; pass an explicit bound")


# -- decision procedures ----------------------------------------------------------

@dataclass
class IdentityDecision:
    valid: bool
    bound: int
    algebra: Optional[FiniteAlgebra] = None
    valuation: Optional[dict] = None
    minimal: Optional[FiniteAlgebra] = None
    certificate: Optional[CharacteristicIdentity] = None
    substitution: Optional[dict] = None
    certificate_checked: bool = False

    def __bool__(self):
        return self.valid

    def summary(self) -> str:
        if self.valid:
            return f"valid (checked on members up to size {self.bound})"
        A = self.algebra
        w = ", ".join(f"{k}->{A.names[v]}" for k, v in self.valuation.items())
        s = f"refuted; witness {A.label or 'algebra'}: {w}"
        if self.certificate is not None:
            s += f"; certificate chi({self.minimal.label}): {to_text(self.certificate.best)}"
        return s


def _size_bound(V: VarietySpec, r: int, bound: Optional[int]) -> int:
    if bound is not None:
        return bound
    if V.kind == "generators":
        return max(G.size for G in V.algebras)
    return beta(V, r)


def refutation_certificate(e: Identity, A: FiniteAlgebra, pool: Sequence[FiniteAlgebra],
                           td: Optional[TDTerm] = None):
    """chi(A) for an algebra refuting e, the substitution sigma sending each
    variable of e to the witness term of its refuting value, and whether
    every pool algebra refuting chi(A) at a tuple also refutes sigma(e) there."""
    td = td or TD_IMPL
    chi = algebra_characteristic_identity(A, td)
    v = holds(A, e).witness
    sigma = {name: chi.source.witness_terms[val] for name, val in v.items()}
    se = apply_substitution(sigma, e)
    names = list(chi.source.presentation.variables)
    ok = True
    for B in pool:
        l1, r1 = eval_grid(B, [chi.identity.lhs, chi.identity.rhs], names)
        l2, r2 = eval_grid(B, [se.lhs, se.rhs], names)
        if np.any((l1 != r1) & (l2 == r2)):
            ok = False
            break
    return chi, sigma, ok


def decide_identity(V: VarietySpec, e: Identity, bound: Optional[int] = None,
                    td: Optional[TDTerm] = None, certificate: bool = True) -> IdentityDecision:
    """Validity of e in V; refutations come with a characteristic-identity certificate."""
    r = len(sorted_variables(e))
    m = _size_bound(V, r, bound)
    if V.kind == "generators":
        for G in V.algebras:
            h = holds(G, e)
            if not h:
                break
        else:
            return IdentityDecision(True, m)
        witness_alg, valuation = G, h.witness
        pool = enumerate_fsi(V, m)
    else:
        pool = enumerate_fsi(V, m)
        witness_alg = next((A for A in pool if not holds(A, e)), None)
        if witness_alg is None:
            return IdentityDecision(True, m)
        valuation = holds(witness_alg, e).witness
    result = IdentityDecision(False, m, witness_alg, valuation)
    minimal = next((A for A in pool if not holds(A, e)), None)
    result.minimal = minimal
    if certificate and minimal is not None and (td is not None or is_heyting(minimal)):
        chi, sigma, ok = refutation_certificate(e, minimal, pool, td)
        if not ok:
            raise InternalConsistencyError("substitution instance does not entail the certificate")
        result.certificate, result.substitution, result.certificate_checked = chi, sigma, ok
    return result


def decide_quasi(premises: Sequence[Identity], e: Identity, V: VarietySpec,
                 bound: Optional[int] = None) -> Verdict:
    """Validity in V of the quasi-identity (AND premises) => e.

    Every counterexample lives in an r-generated member, r the number of
    variables, and these are the quotients of the rank-r free algebra (or,
    for Heyting-based specs, members up to the size bound)."""
    names = sorted_variables(e, *premises)
    r = len(names)
    if V.kind == "generators" and bound is None:
        F = free_algebra(V, r).algebra
        members = [quotient(F, th)[0] for th in all_congruences(F)]
    elif V.root.kind == "heyting":
        members = enumerate_members(V, _size_bound(V, r, bound))
    else:
        m = _size_bound(V, r, bound)
        members = [A for A in hs_closure(V.root.algebras, m) if membership(A, V)]
    return semantic_consequence(premises, e, members)


# -- axiomatizations ---------------------------------------------------------------

@dataclass
class Axiomatization:
    axioms: list                  # CharacteristicIdentity per MSI member
    sources: list                 # the MSI members
    bases: list
    certificates: list            # per axiom: (algebra, refutes own axiom, validates others)
    bound: int
    required_bound: Optional[int]
    complete: bool                # False when only bound-qualified
    rank_bound: int               # max basis rank over the MSI

    @property
    def identities(self) -> list[Identity]:
        return [a.identity for a in self.axioms]

    def report(self) -> dict:
        return {
            "bound": self.bound,
            "required_bound": self.required_bound,
            "complete": self.complete,
            "axiomatic_rank_at_most": self.rank_bound,
            "axioms": [{
                "source": A.label, "size": A.size, "basis": list(b),
                "identity": to_text(chi.identity),
                "simplified": to_text(chi.simplified) if chi.simplified is not None else None,
                "certificate": {"refutes_own": c[1], "validates_others": c[2]},
            } for chi, A, b, c in zip(self.axioms, self.sources, self.bases, self.certificates)],
        }


def _max_variables(V: VarietySpec) -> int:
    if V.kind == "generators":
        return max(G.size for G in V.algebras)
    if V.kind == "axioms":
        own = max((len(sorted_variables(e)) for e in V.identities), default=0)
        return max(own, _max_variables(V.ambient)) if V.ambient.kind != "heyting" else own
    return 0


def required_bound(V: VarietySpec, V0: VarietySpec) -> Optional[int]:
    """Size up to which s.i. members of V0 must be searched, or None if unknown.

    For generated V0 every s.i. member is in HS of the generators; otherwise
    the minimal s.i. members outside V are k-generated and the bound is
    beta_V0(k)."""
    if V0.kind == "generators":
        return max(G.size for G in V0.algebras)
    try:
        return beta(V0, _max_variables(V))
    except BoundUnavailable:
        return None


def minimal_outside(V: VarietySpec, V0: VarietySpec, max_size: int, order: str = "default",
                    td: Optional[TDTerm] = None) -> list[FiniteAlgebra]:
    outside = [B for B in enumerate_fsi(V0, max_size, order) if not membership(B, V)]
    return [B for B in outside
            if not any(C is not B and C.size <= B.size and leq(C, B, td) for C in outside)]


def optimal_axiomatization(V: VarietySpec, V0: VarietySpec, max_size: int,
                           td: Optional[TDTerm] = None, order: str = "default") -> Axiomatization:
    """Independent axiomatization of V relative to V0 by characteristic
    identities of the minimal s.i. members of V0 outside V."""
    for A in enumerate_fsi(V, max_size):
        if not membership(A, V0):
            raise AlgebraError(f"{V} is not contained in {V0}")
    req = required_bound(V, V0)
    if req is not None and max_size < req:
        raise AlgebraError(f"size bound {max_size} is below the required {req}")
    msi = minimal_outside(V, V0, max_size, order, td)
    axioms = []
    for A in msi:
        t = td or (TD_IMPL if is_heyting(A) else None)
        if t is None:
            raise AlgebraError("a TD term is required for non-Heyting algebras")
        axioms.append(algebra_characteristic_identity(A, t))
    certificates = []
    for i, A in enumerate(msi):
        own = not holds(A, axioms[i].identity)
        others = all(holds(A, axioms[j].identity) for j in range(len(msi)) if j != i)
        if not (own and others):
            raise InternalConsistencyError(f"independence certificate fails for {A.label}")
        certificates.append((A, own, others))
    bases = [basis_rank(A)[1] for A in msi]
    return Axiomatization(axioms, msi, bases, certificates, max_size, req,
                          req is not None and max_size >= req,
                          max((len(b) for b in bases), default=0))


@dataclass
class EdgeResult:
    edge: bool
    rank_lower_bound: Optional[int] = None

    def __bool__(self):
        return self.edge


def is_edge_algebra(A: FiniteAlgebra, V: VarietySpec) -> EdgeResult:
    """A is outside V while its proper subalgebras and quotients are inside."""
    if membership(A, V):
        return EdgeResult(False)
    for S in proper_subalgebras(A):
        if not membership(S, V):
            return EdgeResult(False)
    for th in all_congruences(A):
        if not th.is_identity() and not membership(quotient(A, th)[0], V):
            return EdgeResult(False)
    return EdgeResult(True, basis_rank(A)[0])


def is_r_complete(I: Sequence[Identity], V: VarietySpec, max_size: int,
                  ambient: Optional[VarietySpec] = None, td: Optional[TDTerm] = None):
    """Whether every identity refutable in V entails some member of I.

    The characteristic identities of the s.i. members of V up to max_size
    stand in for all refutable identities; entailment is checked on the s.i.
    members of the ambient variety (V itself by default) up to max_size.
    Returns (True, None) or (False, uncovered characteristic identity).
    """
    tests = []
    for A in enumerate_fsi(V, max_size):
        tests.append(algebra_characteristic_identity(A, td or TD_IMPL))
    pool = enumerate_fsi(ambient or V, max_size)
    for chi in tests:
        sat = [B for B in pool if holds(B, chi.identity)]
        if not any(all(holds(B, rho) for B in sat) for rho in I):
            return False, chi
    return True, None


def splitting_check(A: FiniteAlgebra, V0: VarietySpec, max_size: int,
                    td: Optional[TDTerm] = None):
    """Bounded check that Mod(chi(A)) is the largest subvariety of V0 omitting A.

    Every s.i. member of V0 up to max_size that refutes chi(A) must have A in
    its SH closure.  Returns (True, None) or (False, offending algebra)."""
    if A.size < 2 or not is_subdirectly_irreducible(A):
        from .errors import NotSubdirectlyIrreducible
        raise NotSubdirectlyIrreducible("splitting needs an s.i. algebra")
    if not membership(A, V0):
        raise AlgebraError("algebra is not a member of the variety")
    chi = algebra_characteristic_identity(A, td or TD_IMPL)
    for B in enumerate_fsi(V0, max_size):
        refutes = not holds(B, chi.identity)
        if refutes != in_sub_hom(A, B)[0]:
            return False, B
    return True, None
