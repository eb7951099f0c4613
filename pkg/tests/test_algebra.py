import itertools

import pytest
from hypothesis import given, strategies as st

import oracles
from jankov.algebra import (
    HEYTING_NO_CONST, Congruence, FiniteAlgebra, Signature, all_congruences, basis_rank, closure,
    compact_congruence, find_embedding, generated_subalgebra, in_sub_hom, is_homomorphism,
    is_isomorphic, is_subdirectly_irreducible, monolith, principal_congruence, product, quotient,
    subalgebra_carriers, subdirect_factors,
)
from jankov.errors import AlgebraError, DegenerateAlgebra
from jankov.heyting import boolean_square, chain, heyting_algebras, z3
from jankov.semantics import eval_term
from jankov.terms import parse_term

POOL5 = heyting_algebras(5)


@st.composite
def small_algebras(draw):
    """Random algebra with one binary and one unary operation on 2..4 elements."""
    n = draw(st.integers(2, 4))
    cell = st.integers(0, n - 1)
    binary = draw(st.lists(st.lists(cell, min_size=n, max_size=n), min_size=n, max_size=n))
    unary = draw(st.lists(cell, min_size=n, max_size=n))
    return FiniteAlgebra(Signature([("f", 2), ("g", 1)]), n, {"f": binary, "g": unary})


def blocks_of(th: Congruence):
    return frozenset(frozenset(c) for c in th.classes())


# -- construction ------------------------------------------------------------

def test_table_validation():
    with pytest.raises(AlgebraError):
        FiniteAlgebra(Signature([("f", 1)]), 2, {"f": [0, 2]})
    with pytest.raises(AlgebraError):
        FiniteAlgebra(Signature([("f", 2)]), 2, {"f": [0, 1]})


def test_json_roundtrip():
    A = z3()
    B = FiniteAlgebra.from_dict(A.to_dict())
    assert B == A and B.names == A.names


def test_eval_term_examples():
    Z = z3()
    assert eval_term(Z, parse_term("~~x -> x"), {"x": 1}) == 1
    C4 = chain(4)
    assert eval_term(C4, parse_term("x -> y"), {"x": 2, "y": 1}) == 1


# -- subalgebras ---------------------------------------------------------------

def test_generated_subalgebra_examples():
    G = generated_subalgebra(chain(4), [1])
    assert sorted(G.carrier) == [0, 1, 3]
    assert sorted(generated_subalgebra(z3(), [1]).carrier) == [0, 1, 2]
    assert sorted(generated_subalgebra(chain(2), []).carrier) == [0, 1]


def test_witness_terms_evaluate_to_their_elements():
    for A in POOL5:
        _, basis = basis_rank(A)
        G = generated_subalgebra(A, basis)
        v = dict(zip(G.variables, basis))
        for a, t in G.witness_terms.items():
            assert eval_term(A, t, v) == a


@pytest.mark.parametrize("A", POOL5, ids=lambda A: A.label)
def test_subalgebra_carriers_match_brute_force(A):
    assert set(subalgebra_carriers(A)) == set(oracles.subuniverses(A))


@given(small_algebras())
def test_subalgebra_carriers_random(A):
    assert set(subalgebra_carriers(A)) == set(oracles.subuniverses(A))


def test_basis_rank_examples():
    assert basis_rank(chain(4)) == (2, (1, 2))
    assert basis_rank(chain(2))[0] == 0
    assert basis_rank(chain(2, HEYTING_NO_CONST))[0] == 1
    assert basis_rank(z3()) == (1, (1,))


@pytest.mark.parametrize("A", POOL5, ids=lambda A: A.label)
def test_basis_rank_is_minimal(A):
    k, basis = basis_rank(A)
    assert len(closure(A, basis)) == A.size
    if k > 0:
        assert all(len(closure(A, s)) < A.size for s in itertools.combinations(range(A.size), k - 1))


# -- congruences -----------------------------------------------------------------

def test_principal_congruence_examples():
    Z = z3()
    assert principal_congruence(Z, 1, 2).classes() == [(0,), (1, 2)]
    assert principal_congruence(Z, 0, 1).is_full()
    assert principal_congruence(Z, 1, 1).is_identity()


def test_compact_congruence_examples():
    Z = z3()
    assert compact_congruence(Z, [(1, 2)]) == principal_congruence(Z, 1, 2)
    C4 = chain(4)
    assert compact_congruence(C4, [(1, 0), (2, 3)]) == \
        principal_congruence(C4, 1, 0).join(principal_congruence(C4, 2, 3))
    assert compact_congruence(C4, []).is_identity()


def test_all_congruences_examples():
    cons = all_congruences(z3())
    assert [c.classes() for c in cons] == [[(0,), (1,), (2,)], [(0,), (1, 2)], [(0, 1, 2)]]
    assert len(all_congruences(chain(2))) == 2


@pytest.mark.parametrize("A", POOL5, ids=lambda A: A.label)
def test_congruences_match_brute_force(A):
    assert {blocks_of(c) for c in all_congruences(A)} == set(oracles.congruences(A))


@pytest.mark.parametrize("A", POOL5, ids=lambda A: A.label)
def test_principal_congruences_match_brute_force(A):
    for a in range(A.size):
        for b in range(A.size):
            assert blocks_of(principal_congruence(A, a, b)) == oracles.principal(A, a, b)


@given(small_algebras(), st.data())
def test_principal_congruence_random(A, data):
    a = data.draw(st.integers(0, A.size - 1))
    b = data.draw(st.integers(0, A.size - 1))
    assert blocks_of(principal_congruence(A, a, b)) == oracles.principal(A, a, b)


@given(small_algebras())
def test_congruences_random(A):
    assert {blocks_of(c) for c in all_congruences(A)} == set(oracles.congruences(A))


def test_congruence_order_starts_with_identity():
    for A in POOL5:
        cons = all_congruences(A)
        assert cons[0].is_identity() and cons[-1].is_full()


# -- quotients and monoliths ---------------------------------------------------------

def test_quotient_examples():
    Z = z3()
    Q, h = quotient(Z, principal_congruence(Z, 1, 2))
    assert is_isomorphic(Q, chain(2))
    assert h.verify()
    assert is_isomorphic(quotient(Z, Congruence.identity(3))[0], Z)
    assert quotient(Z, Congruence.full(3))[0].size == 1


def test_quotient_rejects_non_congruence():
    with pytest.raises(AlgebraError):
        quotient(z3(), Congruence.from_classes(3, [[0, 1]]))


def test_monolith_examples():
    mu, pair = monolith(z3())
    assert mu.classes() == [(0,), (1, 2)] and pair == (1, 2)
    mu, pair = monolith(chain(4))
    assert mu.classes() == [(0,), (1,), (2, 3)] and pair == (2, 3)
    assert monolith(boolean_square()) is None
    with pytest.raises(DegenerateAlgebra):
        monolith(quotient(z3(), Congruence.full(3))[0])


@pytest.mark.parametrize("A", POOL5, ids=lambda A: A.label)
def test_monolith_is_meet_of_principals(A):
    mu = None
    for a, b in itertools.combinations(range(A.size), 2):
        th = oracles.principal(A, a, b)
        rel = oracles.related_pairs(th)
        mu = rel if mu is None else mu & rel
    m = monolith(A)
    if mu == {(x, x) for x in range(A.size)}:
        assert m is None
    else:
        assert m is not None and oracles.related_pairs(blocks_of(m[0])) == mu
        # the monolith is contained in every non-identity congruence
        for th in all_congruences(A):
            assert th.is_identity() or m[0] <= th
        Q, _ = quotient(A, m[0])
        assert Q.size < A.size


def test_subdirect_factors_examples():
    B4 = boolean_square()
    assert [F.size for F in subdirect_factors(B4)] == [2, 2]
    assert all(is_isomorphic(F, chain(2)) for F in subdirect_factors(B4))
    assert [F.size for F in subdirect_factors(z3())] == [3]
    P = product(chain(2), chain(3))
    fs = subdirect_factors(P)
    assert is_isomorphic(fs[0], chain(2)) and is_isomorphic(fs[1], chain(3))


@pytest.mark.parametrize("A", heyting_algebras(6), ids=lambda A: A.label)
def test_subdirect_factors_are_si_and_separate(A):
    fs = subdirect_factors(A)
    assert all(is_subdirectly_irreducible(F) for F in fs)
    assert (len(fs) == 1) == is_subdirectly_irreducible(A)


# -- embeddings and the SH order -------------------------------------------------------

def test_find_embedding_examples():
    e = find_embedding(chain(3), chain(4))
    assert e.map == (0, 1, 3)
    assert find_embedding(chain(4), chain(3)) is None
    assert find_embedding(z3(), z3()).map == (0, 1, 2)


def test_in_sub_hom_examples():
    ok, (th, emb) = in_sub_hom(chain(3), chain(4))
    assert ok and th.is_identity() and emb.map == (0, 1, 3)
    assert not in_sub_hom(chain(4), chain(3))[0]
    for B in POOL5:
        assert in_sub_hom(chain(2), B)[0]


SI5 = [A for A in POOL5 if is_subdirectly_irreducible(A)]


@pytest.mark.parametrize("A,B", list(itertools.product(SI5, SI5)),
                         ids=lambda A: A.label)
def test_in_sub_hom_matches_brute_force(A, B):
    ok, wit = in_sub_hom(A, B)
    assert ok == oracles.in_sub_hom(A, B)
    if ok:
        th, emb = wit
        assert emb.injective and emb.verify()


def test_in_sub_hom_is_a_partial_order_up_to_isomorphism():
    pool = heyting_algebras(5)
    rel = {(i, j): in_sub_hom(A, B)[0] for i, A in enumerate(pool) for j, B in enumerate(pool)}
    n = len(pool)
    for i in range(n):
        assert rel[i, i]
        for j in range(n):
            if i != j and rel[i, j] and rel[j, i]:
                assert is_isomorphic(pool[i], pool[j])
            for k in range(n):
                if rel[i, j] and rel[j, k]:
                    assert rel[i, k]


@given(st.sampled_from(POOL5), st.sampled_from(POOL5))
def test_embeddings_preserve_tables(A, B):
    e = find_embedding(A, B)
    if e is not None:
        assert is_homomorphism(A, B, e.map)
        assert oracles.is_hom(A, B, list(e.map))


def test_product_projections_are_homomorphisms():
    A, B = chain(2), z3()
    P = product(A, B)
    assert is_homomorphism(P, A, [i // 3 for i in range(P.size)])
    assert is_homomorphism(P, B, [i % 3 for i in range(P.size)])
