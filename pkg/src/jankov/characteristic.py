"""Ternary deductive terms, presentations, Jankov formulas and
characteristic identities, the SH order, pre-true and meet-prime identities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebra import (
    FiniteAlgebra, Homomorphism, all_congruences, basis_rank, compact_congruence,
    generated_subalgebra, in_sub_hom, is_homomorphism, is_isomorphic, is_subdirectly_irreducible,
    monolith, principal_congruence, quotient, subalgebra_carriers,
)
from .errors import (
    AlgebraError, BoundExhausted, InternalConsistencyError, NotSubdirectlyIrreducible,
)
from .heyting import heyting_order, is_heyting, opremum
from .semantics import eval_grid, eval_term, equipotent, holds, sorted_variables
from .terms import (
    App, Identity, Term, Var, apply_substitution, big_meet, element_variables, equiv, impl,
    meet, neg, one, parse_term, to_text, variables,
)


# -- TD terms -----------------------------------------------------------------

@dataclass(frozen=True)
class TDTerm:
    name: str
    term: Term

    def __post_init__(self):
        if not set(variables(self.term)) <= {"x", "y", "z"}:
            raise AlgebraError("a TD term uses only the variables x, y, z")

    def __call__(self, a: Term, b: Term, c: Term) -> Term:
        return apply_substitution({"x": a, "y": b, "z": c}, self.term)

    def to_dict(self) -> dict:
        return {"name": self.name, "term": to_text(self.term)}

    @classmethod
    def from_dict(cls, d) -> "TDTerm":
        return cls(d["name"], parse_term(d["term"]))


X, Y, Z = Var("x"), Var("y"), Var("z")
EQ = equiv(X, Y)

TD_IMPL = TDTerm("td_impl", impl(EQ, Z))
TD_MEET = TDTerm("td_meet", meet(EQ, Z))


def _iter_impl(a: Term, b: Term, k: int) -> Term:
    """a ->^k b, that is a -> (a -> ... (a -> b))."""
    for _ in range(k):
        b = impl(a, b)
    return b


def _boxes(t: Term, n: int) -> list[Term]:
    out, cur = [], t
    for _ in range(n):
        out.append(cur)
        cur = App("box", (cur,))
    return out


def _power(t: Term, n: int, r: Term) -> Term:
    for _ in range(n):
        r = App("mul", (t, r))
    return r


# Ternary deductive terms for several varieties.  Entries taking ``n`` are
# the n-potent / n-transitive variants.  Operations: impl, meet, box
# (unary modality) and mul (monoid product).
TD_REGISTRY = {
    "td_impl": lambda n=None: TD_IMPL,
    "td_meet": lambda n=None: TD_MEET,
    "a": lambda n=None: TDTerm("a", impl(impl(X, Y), impl(impl(Y, X), Z))),
    "b": lambda n=None: TDTerm("b", meet(EQ, Z)),
    "c": lambda n: TDTerm(f"c{n}", _iter_impl(impl(X, Y), _iter_impl(impl(Y, X), Z, n - 1), n - 1)),
    "d": lambda n: TDTerm(f"d{n}", impl(big_meet(_boxes(EQ, n)), Z)),
    "e": lambda n: TDTerm(f"e{n}", meet(big_meet(_boxes(EQ, n)), Z)),
    "f": lambda n=None: TDTerm("f", impl(App("box", (EQ,)), Z)),
    "g": lambda n=None: TDTerm("g", meet(App("box", (EQ,)), Z)),
    "h": lambda n: TDTerm(f"h{n}", _power(EQ, n, Z)),
    "i": lambda n: TDTerm(f"i{n}", _iter_impl(EQ, Z, n)),
}


def get_td(spec: str) -> TDTerm:
    """Look up a registry entry; parametric entries are written ``c:3``."""
    name, _, arg = spec.partition(":")
    if name not in TD_REGISTRY:
        raise AlgebraError(f"unknown TD term {spec!r}")
    if arg:
        return TD_REGISTRY[name](int(arg))
    try:
        return TD_REGISTRY[name]()
    except TypeError:
        raise AlgebraError(f"TD term {name!r} needs a parameter, e.g. {name}:2") from None


@dataclass(frozen=True)
class TDCheck:
    ok: bool
    counterexample: Optional[dict] = None

    def __bool__(self):
        return self.ok


def td_table(td: TDTerm, A: FiniteAlgebra) -> np.ndarray:
    return eval_grid(A, [td.term], ["x", "y", "z"])[0]


def verify_td_term(td: TDTerm, A: FiniteAlgebra) -> TDCheck:
    """Check td(a, a, b) = b, and td(a, b, c) = td(a, b, d) whenever
    c and d are congruent modulo the principal congruence of (a, b)."""
    key = ("td_ok", td)
    if key in A._cache:
        return A._cache[key]
    T = td_table(td, A)
    n = A.size
    result = TDCheck(True)
    for a in range(n):
        bad = np.flatnonzero(T[a, a, :] != np.arange(n))
        if bad.size:
            result = TDCheck(False, {"clause": 1, "a": a, "b": int(bad[0])})
            break
    if result.ok:
        for a in range(n):
            for b in range(n):
                rep = np.array(principal_congruence(A, a, b).blocks)
                bad = np.flatnonzero(T[a, b, :] != T[a, b, rep])
                if bad.size:
                    c = int(bad[0])
                    result = TDCheck(False, {"clause": 2, "a": a, "b": b, "c": c, "d": int(rep[c])})
                    break
            if not result.ok:
                break
    A._cache[key] = result
    return result


def require_td(td: TDTerm, algebras: Sequence[FiniteAlgebra]) -> None:
    for A in algebras:
        chk = verify_td_term(td, A)
        if not chk:
            raise AlgebraError(f"{td.name} is not a TD term on {A!r}: {chk.counterexample}")


def td_iterate(td: TDTerm, a: Sequence[Term], b: Sequence[Term], c: Term) -> Term:
    """td(a1, b1, td(a2, b2, ... td(am, bm, c)...)); ``c`` when m = 0."""
    if len(a) != len(b):
        raise AlgebraError("td_iterate needs lists of equal length")
    out = c
    for s, t in zip(reversed(a), reversed(b)):
        out = td(s, t, out)
    return out


# -- presentations -------------------------------------------------------------

@dataclass(frozen=True)
class Presentation:
    """Generators (variable names) and defining relations over a variety.

    ``variety`` may be None for presentations built from a full diagram,
    which define the algebra in every variety containing it.
    """
    variety: object
    variables: tuple
    relations: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "relations", tuple(self.relations))
        extra = set(sorted_variables(*self.relations)) - set(self.variables) if self.relations else set()
        if extra:
            raise AlgebraError(f"relations use undeclared variables {sorted(extra)}")

    @property
    def num_generators(self) -> int:
        return len(self.variables)


def presentation(variety, n_or_vars, relations: Sequence[Identity]) -> Presentation:
    if isinstance(n_or_vars, int):
        names = [f"x{i + 1}" for i in range(n_or_vars)]
        used = sorted_variables(*relations) if relations else []
        if n_or_vars == 1 and used and used != ["x1"]:
            names = used  # allow a single generator written as any name
    else:
        names = list(n_or_vars)
    return Presentation(variety, tuple(names), tuple(relations))


@dataclass
class PresentedAlgebra:
    algebra: FiniteAlgebra
    generators: tuple          # element assigned to each presentation variable
    witness_terms: dict        # element -> term over the presentation variables
    presentation: Presentation

    @property
    def valuation(self) -> dict:
        return dict(zip(self.presentation.variables, self.generators))


def presented_algebra(P: Presentation, pool: Sequence[FiniteAlgebra] = (), cap: int = 4096) -> PresentedAlgebra:
    """F_V(n) modulo the congruence generated by the defining relations."""
    from .variety import free_algebra

    F = free_algebra(P.variety, P.num_generators, cap=cap, variables=P.variables)
    gens = dict(zip(P.variables, F.generators))
    pairs = [(eval_term(F.algebra, r.lhs, gens), eval_term(F.algebra, r.rhs, gens)) for r in P.relations]
    theta = compact_congruence(F.algebra, pairs)
    Q, proj = quotient(F.algebra, theta)
    witness = {}
    for elem, t in enumerate(F.terms):
        witness.setdefault(proj.map[elem], t)
    Q = Q.relabel(names=[to_text(witness[i]) if len(to_text(witness[i])) < 24 else f"e{i}"
                         for i in range(Q.size)])
    result = PresentedAlgebra(Q, tuple(proj.map[g] for g in F.generators), witness, P)
    for r in P.relations:
        if eval_term(Q, r.lhs, result.valuation) != eval_term(Q, r.rhs, result.valuation):
            raise InternalConsistencyError("defining relation fails in the presented algebra")
    bad = universal_property_counterexample(result, pool)
    if bad is not None:
        raise InternalConsistencyError(f"universal property fails: {bad}")
    return result


def universal_property_counterexample(PA: PresentedAlgebra, pool: Sequence[FiniteAlgebra]):
    """First (algebra, tuple) satisfying the relations whose induced map is not
    a homomorphism, or None.  Pool algebras outside the presentation's variety
    are skipped."""
    from .variety import membership

    P = PA.presentation
    elems = range(PA.algebra.size)
    for B in pool:
        if P.variety is not None and not membership(B, P.variety):
            continue
        for tup in itertools.product(range(B.size), repeat=P.num_generators):
            v = dict(zip(P.variables, tup))
            if not all(eval_term(B, r.lhs, v) == eval_term(B, r.rhs, v) for r in P.relations):
                continue
            phi = [eval_term(B, PA.witness_terms[a], v) for a in elems]
            if not is_homomorphism(PA.algebra, B, phi):
                return {"algebra": B, "tuple": tup}
    return None


def heyting_normal_form(t: Term) -> Term:
    """Bottom-up rewriting by a few Heyting laws: idempotence, units and
    absorbing elements of meet and join, s -> s = 1, s -> 1 = 1, 1 -> s = s,
    0 -> s = 1, ~1 and ~0, and commutativity of meet and join (arguments in
    printed order).  Equal normal forms imply equality in every Heyting
    algebra; the converse does not hold."""
    ONE_T, ZERO_T = one(), neg(one())
    memo: dict = {}

    def go(s):
        if s in memo:
            return memo[s]
        if isinstance(s, Var) or not s.args:
            r = s
        else:
            args = tuple(go(a) for a in s.args)
            r = App(s.op, args)
            if s.op in ("meet", "join") and len(args) == 2:
                a, b = sorted(args, key=to_text)
                unit, absorb = (ONE_T, ZERO_T) if s.op == "meet" else (ZERO_T, ONE_T)
                if a == b or b == unit:
                    r = a
                elif a == unit:
                    r = b
                elif absorb in (a, b):
                    r = absorb
                else:
                    r = App(s.op, (a, b))
            elif s.op == "impl" and len(args) == 2:
                a, b = args
                if a == b or b == ONE_T or a == ZERO_T:
                    r = ONE_T
                elif a == ONE_T:
                    r = b
            elif s.op == "neg" and len(args) == 1:
                (a,) = args
                if a == ZERO_T:
                    r = ONE_T
                elif isinstance(a, App) and a.op == "neg" and isinstance(a.args[0], App) \
                        and a.args[0].op == "neg":
                    r = a.args[0]  # ~~~s = ~s
        memo[s] = r
        return r

    return go(t)


def diagram_presentation(A: FiniteAlgebra, basis: Optional[Sequence[int]] = None,
                         prefix: str = "x") -> PresentedAlgebra:
    """Presentation of A on a basis whose relations are the table entries of A
    with every element replaced by its witness term.

    Any tuple satisfying these relations induces a homomorphism, so the
    presentation is valid in every variety containing A.  Entries that hold
    syntactically are dropped; for Heyting algebras so are entries that are
    instances of the laws applied by ``heyting_normal_form``.
    """
    if basis is None:
        basis = basis_rank(A)[1]
    names = [f"{prefix}{i + 1}" for i in range(len(basis))]
    G = generated_subalgebra(A, basis, names)
    if len(G.carrier) != A.size:
        raise AlgebraError("basis does not generate the algebra")
    w = G.witness_terms
    norm = heyting_normal_form if is_heyting(A) else (lambda t: t)
    relations, seen = [], set()
    for name, k in A.signature.ops:
        table = A.tables[name]
        for args in itertools.product(range(A.size), repeat=k):
            lhs = App(name, tuple(w[a] for a in args))
            rhs = w[int(table[args])]
            key = (norm(lhs), norm(rhs))
            if key[0] != key[1] and key not in seen:
                seen.add(key)
                relations.append(Identity(lhs, rhs))
    P = Presentation(None, tuple(names), tuple(relations))
    return PresentedAlgebra(A, tuple(basis), dict(w), P)


# -- Jankov formulas -----------------------------------------------------------

def diagram_formula(A: FiniteAlgebra, prefix: str = "p") -> tuple[Term, list[str]]:
    """Conjunction of p_a o p_b <-> p_(a o b) over o in meet, join, impl and
    of ~p_a <-> p_(~a); conjuncts ordered by operation, then a, then b."""
    heyting_order(A)
    names = element_variables(A.names, prefix)
    p = [Var(v) for v in names]
    conj = []
    for op in ("meet", "join", "impl"):
        t = A.tables[op]
        for a in range(A.size):
            for b in range(A.size):
                conj.append(equiv(App(op, (p[a], p[b])), p[int(t[a, b])]))
    for a in range(A.size):
        conj.append(equiv(neg(p[a]), p[int(A.tables["neg"][a])]))
    return big_meet(conj), names


def jankov_formula(A: FiniteAlgebra) -> Term:
    """The diagram formula of A implying the variable of its opremum."""
    w = opremum(A)
    if w is None:
        raise NotSubdirectlyIrreducible("Jankov formula needs an s.i. algebra")
    delta, names = diagram_formula(A)
    return impl(delta, Var(names[w]))


# -- characteristic identities --------------------------------------------------

@dataclass
class CharacteristicIdentity:
    identity: Identity
    simplified: Optional[Identity]
    source: PresentedAlgebra
    r1: Term
    r2: Term
    td: TDTerm

    @property
    def algebra(self) -> FiniteAlgebra:
        return self.source.algebra

    @property
    def num_variables(self) -> int:
        return self.source.presentation.num_generators

    @property
    def best(self) -> Identity:
        return self.simplified if self.simplified is not None else self.identity

    def describe(self) -> str:
        A = self.algebra
        lines = [f"# characteristic identity of {A.label or 'algebra'} ({A.size} elements)",
                 f"# td term {self.td.name}; {self.num_variables} variable(s); "
                 f"{len(self.source.presentation.relations)} defining relation(s)"]
        if self.simplified is not None:
            lines.append(f"simplified: {to_text(self.simplified)}")
        lines.append(f"raw: {to_text(self.identity)}")
        return "\n".join(lines)


def _condense(relations: Sequence[Identity]) -> Optional[Term]:
    parts = []
    for r in relations:
        if r.rhs == one():
            parts.append(r.lhs)
        elif r.lhs == one():
            parts.append(r.rhs)
        else:
            parts.append(equiv(r.lhs, r.rhs))
    return big_meet(parts) if parts else None


def condense_relations(P: Presentation) -> Presentation:
    """Heyting presentations: replace all relations by one relation t = 1."""
    t = _condense(P.relations)
    rel = () if t is None else (Identity(t, one()),)
    return Presentation(P.variety, P.variables, rel)


def _default_pair(PA: PresentedAlgebra) -> tuple[Term, Term]:
    A = PA.algebra
    if is_heyting(A):
        w = opremum(A)
        if w is None:
            raise NotSubdirectlyIrreducible("presented algebra is not s.i.")
        _, _, top = heyting_order(A)
        r2 = one() if A.signature.has("one", 0) else PA.witness_terms[top]
        return PA.witness_terms[w], r2
    mono = monolith(A) if A.size > 1 else None
    if mono is None:
        raise NotSubdirectlyIrreducible("presented algebra is not s.i.")
    a, b = mono[1]
    return PA.witness_terms[a], PA.witness_terms[b]


def build_characteristic_identity(PA: PresentedAlgebra, td: TDTerm = TD_IMPL,
                                  r1: Optional[Term] = None, r2: Optional[Term] = None,
                                  extra_algebras: Sequence[FiniteAlgebra] = ()) -> CharacteristicIdentity:
    A = PA.algebra
    if A.size < 2 or not is_subdirectly_irreducible(A):
        raise NotSubdirectlyIrreducible("characteristic identities need an s.i. algebra")
    if r1 is None or r2 is None:
        d1, d2 = _default_pair(PA)
        r1 = d1 if r1 is None else r1
        r2 = d2 if r2 is None else r2
    v = PA.valuation
    a, b = eval_term(A, r1, v), eval_term(A, r2, v)
    if a == b or principal_congruence(A, a, b) != monolith(A)[0]:
        raise AlgebraError("r1 and r2 do not name an indistinguishable pair")
    require_td(td, [A, *extra_algebras])
    rels = PA.presentation.relations
    lhs_side = [r.lhs for r in rels]
    rhs_side = [r.rhs for r in rels]
    ident = Identity(td_iterate(td, lhs_side, rhs_side, r1), td_iterate(td, lhs_side, rhs_side, r2))
    simplified = None
    if td.name in ("td_impl", "td_meet") and r2 == one():
        t = _condense(rels)
        if t is None:
            simplified = Identity(r1, r2)
        elif td.name == "td_impl":
            simplified = Identity(impl(t, r1), one())
        else:
            simplified = Identity(meet(t, r1), t)
    chi = CharacteristicIdentity(ident, simplified, PA, r1, r2, td)
    if holds(A, ident):
        raise InternalConsistencyError("characteristic identity holds in its own algebra")
    return chi


def characteristic_identity(P: Presentation, r1: Optional[Term] = None, r2: Optional[Term] = None,
                            td: TDTerm = TD_IMPL, pool: Sequence[FiniteAlgebra] = ()) -> CharacteristicIdentity:
    """Characteristic identity of the algebra finitely presented by P."""
    PA = presented_algebra(P, pool)
    gens = list(getattr(P.variety, "algebras", ()))
    return build_characteristic_identity(PA, td, r1, r2, gens)


def algebra_characteristic_identity(A: FiniteAlgebra, td: TDTerm = TD_IMPL) -> CharacteristicIdentity:
    """Characteristic identity of A in r_b(A) variables, from the diagram
    presentation on the least basis."""
    key = ("chi", td)
    if key not in A._cache:
        A._cache[key] = build_characteristic_identity(diagram_presentation(A), td)
    return A._cache[key]


# -- the SH order ----------------------------------------------------------------

def _require_si(*algebras: FiniteAlgebra) -> None:
    for A in algebras:
        if A.size < 2 or not is_subdirectly_irreducible(A):
            raise NotSubdirectlyIrreducible(f"{A!r} is not subdirectly irreducible")


def leq(A: FiniteAlgebra, B: FiniteAlgebra, td: Optional[TDTerm] = None,
        cross_check: bool = True) -> bool:
    """A <= B in the SH order, cross-checked against B |= chi(A) when a
    characteristic identity of A is available."""
    _require_si(A, B)
    result, _ = in_sub_hom(A, B)
    if cross_check:
        if td is None and is_heyting(A):
            td = TD_IMPL
        if td is not None:
            require_td(td, [B])
            chi = algebra_characteristic_identity(A, td)
            refuted = not holds(B, chi.identity)
            if refuted != result:
                raise InternalConsistencyError(
                    f"SH search says {result} but characteristic identity says {refuted}")
    return result


def antichain_check(algebras: Sequence[FiniteAlgebra], td: Optional[TDTerm] = None):
    """(True, None) if pairwise incomparable, else (False, (A, B)) with A <= B."""
    _require_si(*algebras)
    for i, A in enumerate(algebras):
        for j, B in enumerate(algebras):
            if i != j and leq(A, B, td):
                return False, (A, B)
    return True, None


# -- pre-true and meet-prime identities --------------------------------------------

def is_pretrue(e: Identity, A: FiniteAlgebra) -> bool:
    """Refuted in A, valid in every proper subalgebra and proper quotient."""
    if holds(A, e):
        return False
    from .algebra import subalgebra
    for carrier in subalgebra_carriers(A):
        if len(carrier) < A.size and not holds(subalgebra(A, carrier)[0], e):
            return False
    for th in all_congruences(A):
        if not th.is_identity() and not holds(quotient(A, th)[0], e):
            return False
    return True


@dataclass
class PrimeVerdict:
    kind: str                      # "prime", "not-prime" or "valid"
    bound: int
    chi: Optional[CharacteristicIdentity] = None
    algebras: tuple = ()

    def summary(self) -> str:
        tag = f"(checked up to size {self.bound})"
        if self.kind == "prime":
            return f"prime: equipotent with the characteristic identity of {self.algebras[0].label} {tag}"
        if self.kind == "not-prime":
            return f"not prime: pre-true in {', '.join(str(a.label) for a in self.algebras)} {tag}"
        return f"valid in the ambient variety {tag}"


def meet_prime_decide(e: Identity, ambient, bound: int, td: Optional[TDTerm] = None) -> PrimeVerdict:
    """Bounded decision whether e is meet-prime in the ambient variety.

    Searches the s.i. members up to ``bound`` in increasing size.  The first
    refuting algebra A is pre-true for e.  A second non-isomorphic pre-true
    algebra shows e is not prime; equipotence of e with chi(A) over the pool
    shows it is.  Anything else raises BoundExhausted.
    """
    from .variety import enumerate_fsi

    pool = enumerate_fsi(ambient, bound)
    first = next((A for A in pool if not holds(A, e)), None)
    if first is None:
        return PrimeVerdict("valid", bound)
    pretrue = [A for A in pool if is_pretrue(e, A)]
    if not any(is_isomorphic(first, A) for A in pretrue):
        raise InternalConsistencyError("least refuting algebra is not pre-true")
    if len(pretrue) >= 2:
        return PrimeVerdict("not-prime", bound, None, tuple(pretrue[:2]))
    if td is None:
        td = TD_IMPL if is_heyting(first) else None
    if td is None:
        raise AlgebraError("a TD term is required for non-Heyting algebras")
    chi = algebra_characteristic_identity(first, td)
    if equipotent(e, chi.identity, pool):
        return PrimeVerdict("prime", bound, chi, (first,))
    raise BoundExhausted(f"no verdict for {to_text(e)} within size {bound}")


def conjoin(identities: Sequence[Identity]) -> Identity:
    """Heyting conjunction of identities as one identity t = 1."""
    parts = [i.lhs if i.rhs == one() else equiv(i.lhs, i.rhs) for i in identities]
    return Identity(big_meet(parts), one())
