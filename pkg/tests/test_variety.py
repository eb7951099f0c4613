import itertools

import pytest
from hypothesis import given, settings, strategies as st

from jankov.algebra import all_congruences, is_homomorphism, is_isomorphic, quotient
from jankov.characteristic import algebra_characteristic_identity
from jankov.errors import AlgebraError, BoundUnavailable, NotSubdirectlyIrreducible
from jankov.heyting import boolean_square, chain, d5, heyting_algebras, z3
from jankov.semantics import equipotent, eval_term, holds
from jankov.terms import Identity, parse_identity
from jankov.variety import (
    axiomatized, beta, decide_identity, decide_quasi, enumerate_fsi, enumerate_members, free_algebra,
    free_spectrum, generated_by, heyting_slice, heyting_variety, is_edge_algebra, is_r_complete,
    membership, optimal_axiomatization, splitting_check,
)
from strategies import terms

HEYT = heyting_variety()
POOL5 = heyting_algebras(5)
POOL6 = heyting_algebras(6)


def labels(algs):
    return [A.label for A in algs]


# -- membership and enumeration ------------------------------------------------------

def test_membership_examples():
    VZ = generated_by(z3())
    assert membership(chain(2), VZ)
    assert not membership(chain(4), VZ)
    assert membership(z3(), heyting_slice(3))
    assert not membership(chain(4), heyting_slice(3))
    assert membership(boolean_square(), generated_by(chain(2)))


def test_membership_signature_mismatch():
    from jankov.algebra import HEYTING_NO_CONST
    with pytest.raises(AlgebraError):
        membership(chain(2, HEYTING_NO_CONST), HEYT)


def test_enumerate_fsi_examples():
    assert labels(enumerate_fsi(HEYT, 5)) == ["C2", "C3", "C4", "C5", "D5"]
    assert labels(enumerate_fsi(generated_by(chain(2)), 4)) == ["C2"]
    fsi = enumerate_fsi(generated_by(z3()), 5)
    assert [A.size for A in fsi] == [2, 3] and is_isomorphic(fsi[1], z3())


def test_enumerate_fsi_of_slice_matches_filter():
    V = heyting_slice(3)
    expected = [A for A in enumerate_fsi(HEYT, 6) if membership(A, V)]
    assert labels(enumerate_fsi(V, 6)) == labels(expected)
    assert "C4" not in labels(expected) and "D5" in labels(expected)


def test_enumerate_members_includes_non_si():
    ms = enumerate_members(generated_by(chain(2)), 4)
    assert [A.size for A in ms] == [2, 4]


# -- free algebras --------------------------------------------------------------------

@pytest.mark.parametrize("gen,n,size", [(chain(2), 1, 4), (chain(2), 2, 16), (z3(), 1, 6)])
def test_free_algebra_sizes(gen, n, size):
    V = generated_by(gen)
    F1 = free_algebra(V, n, method="direct")
    F2 = free_algebra(V, n, method="terms")
    assert F1.algebra.size == F2.algebra.size == size
    assert is_isomorphic(F1.algebra, F2.algebra)
    assert free_spectrum(V, n) == size


def test_free_algebra_cap():
    from jankov.errors import CapExceeded
    with pytest.raises(CapExceeded):
        free_algebra(generated_by(z3()), 2, cap=50)


@pytest.mark.parametrize("gen,n", [(chain(2), 2), (z3(), 1), (z3(), 2)])
def test_free_algebra_universal_property(gen, n):
    V = generated_by(gen)
    F = free_algebra(V, n)
    names = list(F.variables)
    for tup in itertools.product(range(gen.size), repeat=n):
        v = dict(zip(names, tup))
        phi = [eval_term(gen, t, v) for t in F.terms]
        assert is_homomorphism(F.algebra, gen, phi)
        assert [phi[g] for g in F.generators] == list(tup)


def test_beta():
    assert beta(generated_by(z3()), 1) == 6
    with pytest.raises(BoundUnavailable):
        beta(HEYT, 1)
    V = axiomatized([parse_identity("x | ~x")], HEYT, beta=[1, 2, 4, 16])
    assert beta(V, 2) == 4


# -- deciding identities ----------------------------------------------------------------

def test_decide_identity_examples():
    VZ = generated_by(z3())
    d = decide_identity(VZ, parse_identity("x | ~x"))
    assert not d and d.valuation == {"x": 1}
    assert is_isomorphic(d.algebra, z3())
    assert d.certificate is not None and d.certificate_checked
    assert bool(decide_identity(generated_by(chain(2)), parse_identity("x | ~x")))
    d = decide_identity(VZ, parse_identity("~~x -> x"))
    assert not d and is_isomorphic(d.minimal, z3())
    assert "refuted" in d.summary()


def test_decide_identity_axiomatized_needs_bound():
    V = heyting_slice(3)
    with pytest.raises(BoundUnavailable):
        decide_identity(V, parse_identity("x | ~x"))
    d = decide_identity(V, parse_identity("x | ~x"), bound=5)
    assert not d and d.bound == 5


@given(terms(names=("x", "y"), max_leaves=8))
@settings(max_examples=40)
def test_decide_identity_agrees_with_bounded_members(t):
    V = generated_by(d5())
    e = Identity(t, parse_identity("1").lhs)
    members = enumerate_members(V, 5)
    assert bool(decide_identity(V, e, certificate=False)) == all(holds(B, e) for B in members)


def test_decide_quasi_examples():
    VZ = generated_by(z3())
    assert decide_quasi([parse_identity("x | ~x")], parse_identity("~~x -> x"), VZ)
    assert decide_quasi([parse_identity("~~x")], parse_identity("x"), generated_by(chain(2)))
    assert not decide_quasi([parse_identity("~~x")], parse_identity("x"), VZ)


@pytest.mark.parametrize("text", ["x | ~x", "~~x -> x", "~x | ~~x", "x = x"])
def test_decide_quasi_without_premises_is_decide_identity(text):
    VZ = generated_by(z3())
    e = parse_identity(text)
    assert bool(decide_quasi([], e, VZ)) == bool(decide_identity(VZ, e))


# -- axiomatizations ---------------------------------------------------------------------

def test_axiomatize_boolean_inside_z3():
    ax = optimal_axiomatization(generated_by(chain(2)), generated_by(z3()), 4)
    assert len(ax.axioms) == 1
    assert equipotent(ax.identities[0], parse_identity("~~x -> x"), POOL6)
    assert ax.complete


def test_axiomatize_three_chain_inside_slice():
    V, V0 = generated_by(chain(3)), heyting_slice(3)
    ax = optimal_axiomatization(V, V0, 6)
    assert "D5" in labels(ax.sources)
    # brute-force minimal elements of FSI(V0) outside V
    outside = [B for B in enumerate_fsi(HEYT, 6) if membership(B, V0) and not membership(B, V)]
    from jankov.algebra import in_sub_hom
    msi = [B for B in outside if not any(C is not B and in_sub_hom(C, B)[0] for C in outside)]
    assert labels(ax.sources) == labels(msi)
    for chi in ax.axioms:
        assert all(holds(B, chi.identity) for B in enumerate_fsi(V, 6))
    for B in outside:
        assert any(not holds(B, e) for e in ax.identities)
    for chi, A, (_, own, others), basis in zip(ax.axioms, ax.sources, ax.certificates, ax.bases):
        assert own and others
        assert chi.num_variables <= len(basis)


def test_axiomatize_same_variety_is_empty():
    V = generated_by(z3())
    assert optimal_axiomatization(V, V, 4).axioms == []


def test_axiomatize_not_contained():
    with pytest.raises(AlgebraError):
        optimal_axiomatization(generated_by(chain(4)), generated_by(z3()), 4)


def test_axiomatize_bound_too_small():
    with pytest.raises(AlgebraError, match="required"):
        optimal_axiomatization(generated_by(chain(2)), generated_by(chain(4)), 3)


def test_axiomatizations_from_two_orders_are_equipotent():
    V, V0 = generated_by(chain(3)), heyting_slice(3)
    a = optimal_axiomatization(V, V0, 6, order="default")
    b = optimal_axiomatization(V, V0, 6, order="reverse")
    assert len(a.axioms) == len(b.axioms)
    for e in a.identities:
        assert sum(bool(equipotent(e, f, POOL6)) for f in b.identities) == 1


# -- edge algebras, completeness and splittings -------------------------------------------------

def test_edge_algebra_examples():
    r = is_edge_algebra(chain(4), heyting_slice(3))
    assert r and r.rank_lower_bound == 2
    assert not is_edge_algebra(z3(), generated_by(z3()))
    assert is_edge_algebra(d5(), generated_by(chain(3)))


def test_r_complete_examples():
    VZ = generated_by(z3())
    chi = algebra_characteristic_identity(z3()).identity
    ok, _ = is_r_complete([chi], VZ, 5, ambient=heyting_slice(3))
    assert ok
    ok, uncovered = is_r_complete([], VZ, 5, ambient=heyting_slice(3))
    assert not ok and uncovered is not None
    ok, _ = is_r_complete([algebra_characteristic_identity(chain(2)).identity], generated_by(chain(2)), 4,
                          ambient=VZ)
    assert ok


@pytest.mark.parametrize("gen", [chain(2), z3(), chain(4), d5()], ids=lambda A: A.label)
def test_tabular_varieties_have_finite_r_complete_sets(gen):
    V = generated_by(gen)
    I = [algebra_characteristic_identity(A).identity for A in enumerate_fsi(V, gen.size)]
    assert is_r_complete(I, V, gen.size)[0]


def test_splitting_examples():
    assert splitting_check(z3(), heyting_slice(3), 6) == (True, None)
    assert splitting_check(chain(2), generated_by(d5()), 5) == (True, None)
    with pytest.raises(NotSubdirectlyIrreducible):
        splitting_check(boolean_square(), HEYT, 5)


@pytest.mark.parametrize("A", [chain(3), chain(4), d5()], ids=lambda A: A.label)
def test_every_finite_si_splits_heyting_at_desk_scale(A):
    assert splitting_check(A, HEYT, 6)[0]
