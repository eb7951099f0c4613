"""Terms, identities, parsing and printing.

Terms are immutable trees.  A leaf is either a ``Var`` or an ``App`` of a
0-ary operation (a constant).  Hashes are computed once at construction so
that terms can be used as memo keys during evaluation of large formulas.
"""
from __future__ import annotations

import re
from typing import Iterable, Mapping, Union


class Var:
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        if not name or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise ValueError(f"bad variable name {name!r}")
        self.name = name
        self._hash = hash(("var", name))

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r})"

    def __str__(self):
        return self.name


class App:
    __slots__ = ("op", "args", "_hash")

    def __init__(self, op: str, args: Iterable["Term"] = ()):
        self.op = op
        self.args = tuple(args)
        self._hash = hash((op, self.args))

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, App) and other._hash == self._hash
                and other.op == self.op and other.args == self.args)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"App({self.op!r}, {self.args!r})"

    def __str__(self):
        return to_text(self)


Term = Union[Var, App]


class Identity:
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: Term, rhs: Term):
        self.lhs = lhs
        self.rhs = rhs

    def __eq__(self, other):
        return isinstance(other, Identity) and (self.lhs, self.rhs) == (other.lhs, other.rhs)

    def __hash__(self):
        return hash(("ident", self.lhs, self.rhs))

    def __repr__(self):
        return f"Identity({self.lhs!r}, {self.rhs!r})"

    def __str__(self):
        return to_text(self)


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


# Heyting operation names and their surface symbols.
MEET, JOIN, IMPL, NEG, ONE, ZERO = "meet", "join", "impl", "neg", "one", "zero"

_BINARY = {MEET: "&", JOIN: "|", IMPL: "->"}
_PREC = {IMPL: 1, JOIN: 2, MEET: 3}


# -- construction helpers ---------------------------------------------------

def var(name: str) -> Var:
    return Var(name)


def const(op: str) -> App:
    return App(op, ())


def meet(a: Term, b: Term) -> App:
    return App(MEET, (a, b))


def join(a: Term, b: Term) -> App:
    return App(JOIN, (a, b))


def impl(a: Term, b: Term) -> App:
    return App(IMPL, (a, b))


def neg(a: Term) -> App:
    return App(NEG, (a,))


def one() -> App:
    return App(ONE, ())


def equiv(a: Term, b: Term) -> App:
    """``a <-> b`` as the abbreviation (a->b) & (b->a)."""
    return meet(impl(a, b), impl(b, a))


def big_meet(terms: Iterable[Term]) -> Term:
    """Left-nested conjunction; raises on an empty list."""
    out = None
    for t in terms:
        out = t if out is None else meet(out, t)
    if out is None:
        raise ValueError("empty conjunction")
    return out


# -- traversal --------------------------------------------------------------

def variables(t: Union[Term, Identity]) -> list[str]:
    """Variable names in order of first occurrence (left to right)."""
    seen: dict[str, None] = {}
    stack = [t.rhs, t.lhs] if isinstance(t, Identity) else [t]
    done = set()
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            seen.setdefault(s.name)
        elif s not in done:
            done.add(s)
            stack.extend(reversed(s.args))
    return list(seen)


def subterms(t: Union[Term, Identity]) -> list[Term]:
    """Distinct subterms, children before parents."""
    out: dict[Term, None] = {}
    roots = [t.lhs, t.rhs] if isinstance(t, Identity) else [t]
    for root in roots:
        stack = [(root, False)]
        while stack:
            s, expanded = stack.pop()
            if s in out:
                continue
            if expanded or isinstance(s, Var) or not s.args:
                out[s] = None
            else:
                stack.append((s, True))
                stack.extend((a, False) for a in reversed(s.args))
    return list(out)


def ops_used(t: Union[Term, Identity]) -> set[str]:
    return {s.op for s in subterms(t) if isinstance(s, App)}


def depth(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(depth(a) for a in t.args)


def apply_substitution(sigma: Mapping[str, Term], t):
    """Simultaneous substitution; unmapped variables are left alone."""
    if isinstance(t, Identity):
        return Identity(apply_substitution(sigma, t.lhs), apply_substitution(sigma, t.rhs))
    memo: dict[Term, Term] = {}

    def go(s):
        r = memo.get(s)
        if r is not None:
            return r
        if isinstance(s, Var):
            r = sigma.get(s.name, s)
        else:
            r = App(s.op, tuple(go(a) for a in s.args))
        memo[s] = r
        return r

    return go(t)


def rename_variables(t, mapping: Mapping[str, str]):
    return apply_substitution({k: Var(v) for k, v in mapping.items()}, t)


def translate(phi: Term, signature=None) -> Identity:
    """The formula-to-identity translation phi |-> (phi = 1)."""
    if signature is not None and not signature.has(ONE, 0):
        raise ValueError("signature has no constant 1")
    return Identity(phi, one())


# -- printing ---------------------------------------------------------------

def _prec(t: Term) -> int:
    if isinstance(t, App):
        if t.op in _PREC and len(t.args) == 2:
            return _PREC[t.op]
        if t.op == NEG and len(t.args) == 1:
            return 4
    return 5


def to_text(t: Union[Term, Identity]) -> str:
    if isinstance(t, Identity):
        return f"{to_text(t.lhs)} = {to_text(t.rhs)}"
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return {ONE: "1", ZERO: "0"}.get(t.op, t.op)
    p = _prec(t)
    if p == 4:
        return "~" + _wrap(t.args[0], 4)
    if p in (1, 2, 3):
        a, b = t.args
        if p == 1:  # right associative
            return f"{_wrap(a, 2)} -> {_wrap(b, 1)}"
        return f"{_wrap(a, p)} {_BINARY[t.op]} {_wrap(b, p + 1)}"
    return f"{t.op}({', '.join(to_text(a) for a in t.args)})"


def _wrap(t: Term, need: int) -> str:
    s = to_text(t)
    return f"({s})" if _prec(t) < need else s


# -- parsing ----------------------------------------------------------------

_ALIASES = {
    "∧": "&", "∨": "|", "→": "->", "¬": "~", "↔": "<->", "≈": "=",
    "⊤": "1", "⊥": "0", "<=>": "<->", "=>": "->",
}
_TOKEN = re.compile(r"\s*(<->|->|[&|~()=,]|[A-Za-z_][A-Za-z0-9_]*|\d+)")


def _tokenize(text: str):
    for k, v in _ALIASES.items():
        # keep positions stable enough for error messages: pad with spaces
        text = text.replace(k, v if len(v) >= len(k) else v.ljust(len(k)))
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        toks.append((m.group(1), m.start(1)))
        pos = m.end()
    toks.append(("<end>", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, signature):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = signature

    def peek(self):
        return self.toks[self.i][0]

    def take(self, expected=None):
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def fail(self, msg):
        raise ParseError(msg, self.toks[self.i][1])

    def check_op(self, name, arity):
        if self.sig is not None and not self.sig.has(name, arity):
            self.fail(f"operation {name}/{arity} not in signature")

    def top(self):
        lhs = self.formula()
        if self.peek() == "=":
            self.take()
            rhs = self.formula()
            self.take("<end>")
            return Identity(lhs, rhs)
        self.take("<end>")
        return lhs

    def formula(self):
        left = self.disj()
        tok = self.peek()
        if tok == "->":
            self.take()
            self.check_op(IMPL, 2)
            return impl(left, self.formula())
        if tok == "<->":
            self.take()
            self.check_op(IMPL, 2)
            self.check_op(MEET, 2)
            return equiv(left, self.formula())
        return left

    def disj(self):
        t = self.conj()
        while self.peek() == "|":
            self.take()
            self.check_op(JOIN, 2)
            t = join(t, self.conj())
        return t

    def conj(self):
        t = self.unary()
        while self.peek() == "&":
            self.take()
            self.check_op(MEET, 2)
            t = meet(t, self.unary())
        return t

    def unary(self):
        if self.peek() == "~":
            self.take()
            self.check_op(NEG, 1)
            return neg(self.unary())
        return self.atom()

    def atom(self):
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            t = self.formula()
            self.take(")")
            return t
        if tok.isdigit():
            self.take()
            if tok == "1":
                self.check_op(ONE, 0)
                return one()
            if tok == "0":
                if self.sig is not None and self.sig.has(ZERO, 0):
                    return const(ZERO)
                self.check_op(NEG, 1)
                self.check_op(ONE, 0)
                return neg(one())  # 0 abbreviates ~1
            raise ParseError(f"unknown constant {tok!r}", pos)
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            self.take()
            if self.peek() == "(":
                self.take()
                args = [self.formula()]
                while self.peek() == ",":
                    self.take()
                    args.append(self.formula())
                self.take(")")
                if self.sig is not None:
                    if not self.sig.has(tok, len(args)):
                        raise ParseError(f"operation {tok}/{len(args)} not in signature", pos)
                return App(tok, args)
            if self.sig is not None and self.sig.has(tok, 0):
                return const(tok)
            return Var(tok)
        raise ParseError(f"unexpected token {tok!r}", pos)


def parse(text: str, signature=None) -> Union[Term, Identity]:
    """Parse a formula (``Term``) or an identity ``lhs = rhs``.

    Precedence: ``~`` binds tightest, then ``&``, ``|``, and the right
    associative ``->``.  ``a <-> b`` abbreviates ``(a -> b) & (b -> a)`` and
    ``0`` abbreviates ``~1`` unless the signature has a ``zero`` constant.
    Other operations use call syntax, e.g. ``box(x)``.
    """
    return _Parser(text, signature).top()


def parse_identity(text: str, signature=None) -> Identity:
    """Parse an identity; a bare formula phi is read as ``phi = 1``."""
    r = parse(text, signature)
    if isinstance(r, Identity):
        return r
    return translate(r, signature)


def parse_term(text: str, signature=None) -> Term:
    r = parse(text, signature)
    if isinstance(r, Identity):
        raise ParseError("expected a term, found an identity", 0)
    return r


def element_variables(names, prefix: str) -> list[str]:
    """One variable per element, ``<prefix>_<name>`` when the name allows it."""
    out = []
    for i, n in enumerate(names):
        v = f"{prefix}_{n}" if re.fullmatch(r"[A-Za-z0-9_]+", str(n)) else f"{prefix}_{i}"
        if v in out:
            v = f"{prefix}_{i}"
        out.append(v)
    if len(set(out)) != len(out):
        out = [f"{prefix}_{i}" for i in range(len(names))]
    return out
