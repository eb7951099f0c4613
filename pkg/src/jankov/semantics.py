"""Evaluation of terms and identities in finite algebras.

Evaluation is vectorized: every variable is laid out along its own axis of
an n^k grid, so one pass of fancy indexing computes a term under all
valuations at once.  Grids above ``GRID_LIMIT`` cells are swept in chunks
by fixing a prefix of the variables.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .algebra import FiniteAlgebra
from .errors import SignatureMismatch
from .terms import App, Identity, Term, Var, subterms, variables

GRID_LIMIT = 1 << 20


def var_sort_key(name: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name)]


def sorted_variables(*items) -> list[str]:
    names = set()
    for it in items:
        names.update(variables(it))
    return sorted(names, key=var_sort_key)


def check_signature(A: FiniteAlgebra, t) -> None:
    for s in subterms(t):
        if isinstance(s, App) and not A.signature.has(s.op, len(s.args)):
            raise SignatureMismatch(f"operation {s.op}/{len(s.args)} not in signature")


def _evaluate(A: FiniteAlgebra, roots: Sequence[Term], env: Mapping[str, object]) -> list:
    memo: dict[Term, object] = {}
    for r in roots:
        for s in subterms(r):
            if s in memo:
                continue
            if isinstance(s, Var):
                try:
                    memo[s] = env[s.name]
                except KeyError:
                    raise KeyError(f"unbound variable {s.name!r}") from None
            else:
                table = A.tables[s.op]
                memo[s] = table[tuple(memo[a] for a in s.args)] if s.args else table[()]
    return [memo[r] for r in roots]


def eval_term(A: FiniteAlgebra, t: Term, v: Mapping[str, int]) -> int:
    """Value of ``t`` under the valuation ``v``."""
    check_signature(A, t)
    return int(_evaluate(A, [t], {k: int(x) for k, x in v.items()})[0])


def eval_grid(A: FiniteAlgebra, terms: Sequence[Term], names: Sequence[str]) -> list[np.ndarray]:
    """Values of each term under every valuation of ``names``, as n^k arrays."""
    k = len(names)
    env = {}
    for i, name in enumerate(names):
        shape = [1] * k
        shape[i] = A.size
        env[name] = np.arange(A.size, dtype=np.intp).reshape(shape)
    full = (A.size,) * k
    return [np.broadcast_to(np.asarray(x), full) for x in _evaluate(A, terms, env)]


@dataclass(frozen=True)
class Verdict:
    """Outcome of a validity check; falsy when a refuting valuation exists."""
    holds: bool
    witness: Optional[dict] = None

    def __bool__(self):
        return self.holds


def _sweep(A: FiniteAlgebra, pairs: Sequence[tuple[Term, Term]], names: Sequence[str],
           premises: Sequence[tuple[Term, Term]] = ()) -> Optional[dict]:
    """Lexicographically least valuation satisfying all premises and
    violating some pair, or None."""
    n, k = A.size, len(names)
    inner = k
    while inner > 0 and n ** inner > GRID_LIMIT:
        inner -= 1
    outer_names, inner_names = names[:k - inner], names[k - inner:]
    shape = (n,) * inner
    roots = [t for p in list(premises) + list(pairs) for t in p]
    for prefix in itertools.product(range(n), repeat=len(outer_names)):
        env = {}
        for i, name in enumerate(inner_names):
            sh = [1] * inner
            sh[i] = n
            env[name] = np.arange(n, dtype=np.intp).reshape(sh)
        env.update({name: np.intp(x) for name, x in zip(outer_names, prefix)})
        vals = [np.broadcast_to(np.asarray(x), shape) for x in _evaluate(A, roots, env)]
        ok = np.ones(shape, dtype=bool)
        for i in range(len(premises)):
            ok &= vals[2 * i] == vals[2 * i + 1]
        bad = np.zeros(shape, dtype=bool)
        off = 2 * len(premises)
        for i in range(len(pairs)):
            bad |= vals[off + 2 * i] != vals[off + 2 * i + 1]
        bad &= ok
        if bad.any():
            pos = np.unravel_index(int(np.argmax(bad.ravel())), shape) if inner else ()
            return {**dict(zip(outer_names, prefix)),
                    **{name: int(x) for name, x in zip(inner_names, pos)}}
    return None


def holds(A: FiniteAlgebra, e: Identity, names: Optional[Sequence[str]] = None) -> Verdict:
    """Whether ``e`` holds under every valuation.

    On failure the witness is the lexicographically least refuting valuation,
    with variables ordered by natural name order.
    """
    check_signature(A, e)
    if names is None:
        names = sorted_variables(e)
    w = _sweep(A, [(e.lhs, e.rhs)], list(names))
    return Verdict(w is None, w)


def refuting_grid(A: FiniteAlgebra, e: Identity, names: Sequence[str]) -> np.ndarray:
    """Boolean n^k array marking the valuations that refute ``e``."""
    check_signature(A, e)
    lhs, rhs = eval_grid(A, [e.lhs, e.rhs], names)
    return lhs != rhs


def holds_all(A: FiniteAlgebra, es: Iterable[Identity]) -> bool:
    return all(holds(A, e) for e in es)


def semantic_consequence(gamma: Sequence[Identity], e: Identity,
                         K: Iterable[FiniteAlgebra]) -> Verdict:
    """Whether the quasi-identity (AND gamma) => e holds in every algebra of K.

    The witness on failure is ``{"algebra": A, "valuation": v}``.
    """
    names = sorted_variables(e, *gamma)
    for A in K:
        for g in gamma:
            check_signature(A, g)
        check_signature(A, e)
        w = _sweep(A, [(e.lhs, e.rhs)], names, [(g.lhs, g.rhs) for g in gamma])
        if w is not None:
            return Verdict(False, {"algebra": A, "valuation": w})
    return Verdict(True)


def equipotent(e1: Identity, e2: Identity, pool: Iterable[FiniteAlgebra]) -> Verdict:
    """Whether e1 and e2 hold in exactly the same pool algebras."""
    for A in pool:
        h1, h2 = bool(holds(A, e1)), bool(holds(A, e2))
        if h1 != h2:
            return Verdict(False, {"algebra": A, "first_holds": h1, "second_holds": h2})
    return Verdict(True)


def entails(e1: Identity, e2: Identity, pool: Iterable[FiniteAlgebra]) -> Verdict:
    """e1 |= e2 over the pool: every pool algebra validating e1 validates e2."""
    for A in pool:
        if holds(A, e1) and not holds(A, e2):
            return Verdict(False, {"algebra": A})
    return Verdict(True)
