"""Command-line front end.

Exit codes: 0 success or true, 1 a boolean query answered false, 2 input
error, 3 a size bound was exhausted or unavailable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from typing import Optional, Sequence

from . import characteristic as ch
from . import partial as pa
from . import variety as va
from .algebra import (
    HEYTING, HEYTING_NO_CONST, FiniteAlgebra, basis_rank, is_subdirectly_irreducible, monolith,
)
from .errors import AlgebraError, BoundExhausted, BoundUnavailable, CapExceeded
from .heyting import (
    Poset, boolean_square, chain, d5, antichain_member, heyting_from_poset, heyting_order, is_heyting,
    opremum, slice_index, z3,
)
from .semantics import holds, sorted_variables
from .terms import ParseError, parse_identity, to_text, translate

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_BOUND = 0, 1, 2, 3

SIGNATURES = {"heyting": HEYTING, "heyting-noconst": HEYTING_NO_CONST}


class InputError(Exception):
    pass


# -- loading ----------------------------------------------------------------------

def _builtin_algebra(name: str, sig):
    if name in ("z3", "Z3"):
        return z3(sig)
    if name in ("b4", "B4"):
        return boolean_square(sig)
    if name in ("d5", "D5"):
        return d5(sig)
    if name.lower().startswith("chain:"):
        return chain(int(name.split(":", 1)[1]), sig)
    if len(name) > 1 and name[0] in "cC" and name[1:].isdigit():
        return chain(int(name[1:]), sig)
    if name.startswith("antichain:"):
        return antichain_member(int(name.split(":", 1)[1]), sig)
    return None


def algebra_from_dict(d: dict, sig=HEYTING) -> FiniteAlgebra:
    if "tables" in d:
        return FiniteAlgebra.from_dict(d)
    if "covers" in d:
        return heyting_from_poset(Poset.from_dict(d), sig, d.get("label"))
    raise InputError("algebra file needs 'tables' or 'covers'")


def load_algebra(ref: str, sig=HEYTING) -> FiniteAlgebra:
    """A JSON file (operation tables, or the cover relation of a lattice), a
    bundled file name such as z3.json, or a builtin: z3, b4, d5, c<n>,
    chain:<n>, antichain:<k>."""
    if os.path.exists(ref):
        with open(ref) as fh:
            d = json.load(fh)
    else:
        A = _builtin_algebra(ref, sig)
        if A is not None:
            return A
        bundled = resources.files("jankov").joinpath("data", "algebras", os.path.basename(ref))
        if not bundled.is_file():
            raise InputError(f"no such algebra: {ref}")
        d = json.loads(bundled.read_text())
    A = algebra_from_dict(d, sig)
    if A.label is None:
        A.label = os.path.splitext(os.path.basename(ref))[0]
    return A


def load_variety(ref: str, sig=HEYTING) -> va.VarietySpec:
    """gen:F1,F2 | slice:n | heyting | a variety JSON file."""
    if ref == "heyting":
        return va.heyting_variety(sig)
    if ref.startswith("slice:"):
        return va.heyting_slice(int(ref.split(":", 1)[1]), sig)
    if ref.startswith("gen:"):
        return va.generated_by(*[load_algebra(r, sig) for r in ref[4:].split(",") if r])
    if not os.path.exists(ref):
        raise InputError(f"unknown variety {ref!r}")
    with open(ref) as fh:
        d = json.load(fh)
    base = os.path.dirname(ref)

    def resolve(p):
        q = os.path.join(base, p)
        return q if os.path.exists(q) else p

    if d.get("kind") == "generators":
        return va.generated_by(*[load_algebra(resolve(a), sig) for a in d["algebras"]], name=d.get("name"))
    if d.get("kind") == "axioms":
        amb = d["ambient"]
        ambient = load_variety(resolve(amb) if amb.endswith(".json") else amb, sig)
        ids = [parse_identity(s, ambient.signature) for s in d["identities"]]
        return va.axiomatized(ids, ambient, d.get("beta"), d.get("name"))
    raise InputError("variety file needs kind 'generators' or 'axioms'")


def load_identities(path: str, sig) -> list:
    with open(path) as fh:
        text = fh.read()
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        items = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return [parse_identity(s, sig) for s in items]


# -- reports ------------------------------------------------------------------------

def _valuation_text(A: FiniteAlgebra, v: dict) -> str:
    return ", ".join(f"{k}->{A.names[x]}" for k, x in v.items())


def _alg_ref(A: FiniteAlgebra) -> dict:
    return {"label": A.label, "size": A.size}


class Report:
    def __init__(self, command: str):
        self.data = {"command": command}
        self.lines: list[str] = []

    def __setitem__(self, k, v):
        self.data[k] = v

    def say(self, line: str):
        self.lines.append(line)

    def emit(self, as_json: bool, out=None):
        out = out or sys.stdout
        if as_json:
            out.write(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        else:
            out.write("\n".join(self.lines) + "\n")


# -- verbs --------------------------------------------------------------------------

def _td(args):
    return ch.get_td(args.td) if args.td else ch.TD_IMPL


def cmd_alg_info(args, sig, rep):
    A = load_algebra(args.file, sig)
    si = A.size >= 2 and is_subdirectly_irreducible(A)
    rb, basis = basis_rank(A)
    mono = monolith(A) if si else None
    rep["algebra"] = _alg_ref(A)
    rep["names"] = list(A.names)
    rep["subdirectly_irreducible"] = si
    rep["basis_rank"] = rb
    rep["basis"] = [A.names[b] for b in basis]
    rep["monolith"] = [[A.names[x] for x in c] for c in mono[0].classes()] if mono else None
    heyting = is_heyting(A)
    rep["heyting"] = heyting
    w = opremum(A) if heyting else None
    rep["opremum"] = A.names[w] if w is not None else None
    rep["slice"] = slice_index(A) if heyting and A.size >= 2 else None
    rep.say(f"algebra {A.label}: {A.size} elements ({', '.join(A.names)})")
    rep.say(f"subdirectly irreducible: {'yes' if si else 'no'}")
    if mono:
        rep.say("monolith: " + " | ".join(",".join(c) for c in rep.data["monolith"]))
    rep.say(f"basis rank: {rb} (basis {', '.join(rep.data['basis']) or 'empty'})")
    if heyting:
        rep.say(f"opremum: {rep.data['opremum'] or 'none'}")
        rep.say(f"slice: {rep.data['slice']}")
    return EXIT_OK


def cmd_alg_jankov(args, sig, rep):
    A = load_algebra(args.file, sig)
    J = ch.jankov_formula(A)
    rep["algebra"] = _alg_ref(A)
    rep["formula"] = to_text(J)
    rep["identity"] = to_text(translate(J))
    rep.say(f"# Jankov formula of {A.label}")
    rep.say(to_text(J))
    return EXIT_OK


def cmd_alg_chi(args, sig, rep):
    A = load_algebra(args.file, sig)
    td = _td(args)
    if args.relations:
        V = load_variety(args.variety, A.signature) if args.variety else va.generated_by(A)
        rels = [parse_identity(r, A.signature) for r in args.relations]
        P = ch.presentation(V, sorted_variables(*rels), rels)
        chi = ch.characteristic_identity(P, td=td)
    else:
        chi = ch.algebra_characteristic_identity(A, td)
    rep["algebra"] = _alg_ref(chi.algebra)
    rep["td"] = td.name
    rep["variables"] = chi.num_variables
    rep["relations"] = [to_text(r) for r in chi.source.presentation.relations]
    rep["identity"] = to_text(chi.identity)
    rep["simplified"] = to_text(chi.simplified) if chi.simplified is not None else None
    rep.say(chi.describe())
    return EXIT_OK


def cmd_alg_leq(args, sig, rep):
    A, B = load_algebra(args.a, sig), load_algebra(args.b, sig)
    r = ch.leq(A, B, ch.get_td(args.td) if args.td else None)
    rep["a"], rep["b"], rep["leq"] = _alg_ref(A), _alg_ref(B), bool(r)
    rep.say(f"{A.label} <= {B.label}: {'true' if r else 'false'}")
    return EXIT_OK if r else EXIT_FALSE


def cmd_alg_antichain(args, sig, rep):
    algs = [load_algebra(f, sig) for f in args.files]
    ok, pair = ch.antichain_check(algs, ch.get_td(args.td) if args.td else None)
    rep["algebras"] = [_alg_ref(A) for A in algs]
    rep["antichain"] = bool(ok)
    rep["comparable"] = [_alg_ref(x) for x in pair] if pair else None
    if ok:
        rep.say("antichain: true")
    else:
        rep.say(f"antichain: false ({pair[0].label} <= {pair[1].label})")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_alg_pretrue(args, sig, rep):
    A = load_algebra(args.file, sig)
    e = parse_identity(args.identity, A.signature)
    r = ch.is_pretrue(e, A)
    rep["algebra"], rep["identity"], rep["pretrue"] = _alg_ref(A), to_text(e), bool(r)
    rep.say(f"pre-true in {A.label}: {'true' if r else 'false'}")
    return EXIT_OK if r else EXIT_FALSE


def cmd_ident_decide(args, sig, rep):
    V = load_variety(args.variety, sig)
    e = parse_identity(args.identity, V.signature)
    d = va.decide_identity(V, e, args.bound, ch.get_td(args.td) if args.td else None)
    rep["variety"], rep["identity"], rep["bound"] = str(V), to_text(e), d.bound
    rep["valid"] = d.valid
    if not d.valid:
        rep["witness"] = {"algebra": _alg_ref(d.algebra),
                          "valuation": {k: d.algebra.names[x] for k, x in d.valuation.items()}}
        if d.certificate is not None:
            rep["certificate"] = {"algebra": _alg_ref(d.minimal),
                                  "identity": to_text(d.certificate.best),
                                  "substitution": {k: to_text(t) for k, t in d.substitution.items()},
                                  "checked_on_pool": d.certificate_checked}
        rep.say(f"refuted; witness {d.algebra.label}: {_valuation_text(d.algebra, d.valuation)}")
        if d.certificate is not None:
            rep.say(f"certificate: characteristic identity of {d.minimal.label}")
            rep.say(to_text(d.certificate.best))
        return EXIT_FALSE
    rep.say(f"valid (checked on members up to size {d.bound})")
    return EXIT_OK


def cmd_ident_decompose(args, sig, rep):
    from .heyting import heyting_algebras
    V = load_variety(args.variety, sig)
    e = parse_identity(args.identity, V.signature)
    pool = heyting_algebras(args.pool, signature=V.signature) if args.pool else None
    d = pa.decompose_identity(e, V, _td(args), pool, args.bound)
    rep["variety"], rep["identity"] = str(V), to_text(e)
    rep["members"] = [{
        "source": {"label": g.source.label, "size": g.source.size, "defined": g.source.num_defined()},
        "pair": [g.source.names[x] for x in g.pair],
        "refutation": {"algebra": _alg_ref(A), "valuation": {k: A.names[x] for k, x in v.items()}},
        "identity": to_text(g.best),
    } for g, (A, v) in zip(d.members, d.sources)]
    rep["pool_members_checked"] = d.pool_size
    rep.say(f"{len(d)} locally characteristic identit{'y' if len(d) == 1 else 'ies'} "
            f"(equivalence checked on {d.pool_size} members of the variety)")
    for g, (A, v) in zip(d.members, d.sources):
        rep.say(g.describe() + f"; refutation in {A.label}: {_valuation_text(A, v)}")
        rep.say(to_text(g.best))
    return EXIT_OK


def cmd_ident_prime(args, sig, rep):
    V = load_variety(args.ambient, sig)
    e = parse_identity(args.identity, V.signature)
    v = ch.meet_prime_decide(e, V, args.bound, ch.get_td(args.td) if args.td else None)
    rep["identity"], rep["ambient"], rep["bound"] = to_text(e), str(V), v.bound
    rep["verdict"] = v.kind
    rep["algebras"] = [_alg_ref(A) for A in v.algebras]
    rep.say(v.summary())
    return EXIT_OK if v.kind == "prime" else EXIT_FALSE


def cmd_variety_axiomatize(args, sig, rep):
    V = load_variety(args.sub, sig)
    V0 = load_variety(args.ambient, sig)
    ax = va.optimal_axiomatization(V, V0, args.bound, ch.get_td(args.td) if args.td else None)
    rep["sub"], rep["ambient"] = str(V), str(V0)
    rep.data.update(ax.report())
    qual = "complete" if ax.complete else f"bound-qualified (searched up to size {ax.bound})"
    rep.say(f"{len(ax.axioms)} axiom(s), {qual}; axiomatic rank at most {ax.rank_bound}")
    for chi, A in zip(ax.axioms, ax.sources):
        rep.say(f"# from {A.label} ({A.size} elements, {chi.num_variables} variable(s))")
        rep.say(to_text(chi.best))
    return EXIT_OK


def cmd_variety_free(args, sig, rep):
    V = load_variety(args.spec, sig)
    F = va.free_algebra(V, args.n, args.cap, method=args.method)
    rep["variety"], rep["rank"], rep["size"] = str(V), args.n, F.algebra.size
    rep["elements"] = [to_text(t) for t in F.terms]
    rep.say(f"free algebra of rank {args.n} in {V}: {F.algebra.size} elements")
    if args.elements:
        for t in F.terms:
            rep.say(f"  {to_text(t)}")
    return EXIT_OK


def cmd_variety_rcomplete(args, sig, rep):
    V = load_variety(args.spec, sig)
    ambient = load_variety(args.ambient, sig) if args.ambient else None
    ids = load_identities(args.set, V.signature)
    ok, uncovered = va.is_r_complete(ids, V, args.bound, ambient, ch.get_td(args.td) if args.td else None)
    rep["variety"], rep["bound"], rep["r_complete"] = str(V), args.bound, bool(ok)
    rep["uncovered"] = ({"algebra": _alg_ref(uncovered.algebra), "identity": to_text(uncovered.best)}
                        if uncovered is not None else None)
    if ok:
        rep.say(f"r-complete (checked up to size {args.bound})")
    else:
        rep.say(f"not r-complete: nothing covers the characteristic identity of {uncovered.algebra.label}")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_variety_split(args, sig, rep):
    A = load_algebra(args.algebra, sig)
    V0 = load_variety(args.ambient, A.signature)
    ok, bad = va.splitting_check(A, V0, args.bound, ch.get_td(args.td) if args.td else None)
    rep["algebra"], rep["ambient"], rep["bound"], rep["splitting"] = _alg_ref(A), str(V0), args.bound, ok
    rep["counterexample"] = _alg_ref(bad) if bad is not None else None
    if ok:
        rep.say(f"{A.label} splits {V0} (checked up to size {args.bound})")
    else:
        rep.say(f"splitting check fails at {bad.label}")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_check(args, sig, rep):
    """Quick invariant checks on bundled data."""
    from .algebra import in_sub_hom
    from .heyting import heyting_algebras, heyting_fsi
    results = []

    def record(name, ok):
        results.append({"check": name, "ok": bool(ok)})
        rep.say(f"{'PASS' if ok else 'FAIL'} {name}")

    si = heyting_fsi(5)
    record("jankov refutation matches SH order (s.i. up to 5)",
           all((not holds(B, translate(ch.jankov_formula(A)))) == in_sub_hom(A, B)[0]
               for A in si for B in si))
    record("td terms verified (Heyting up to 5)",
           all(ch.verify_td_term(t, A) for t in (ch.TD_IMPL, ch.TD_MEET) for A in heyting_algebras(5)))
    record("free spectra 4, 16, 6",
           [va.free_spectrum(va.generated_by(chain(2)), 1), va.free_spectrum(va.generated_by(chain(2)), 2),
            va.free_spectrum(va.generated_by(z3()), 1)] == [4, 16, 6])
    record("bundled family is an antichain", ch.antichain_check([antichain_member(k) for k in range(3)])[0])
    rep["checks"] = results
    return EXIT_OK if all(r["ok"] for r in results) else EXIT_FALSE


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--td", help="TD term name, e.g. td_impl, td_meet, c:2")
    common.add_argument("--signature", choices=sorted(SIGNATURES), default="heyting",
                        help="signature for builtin algebras and varieties")

    p = argparse.ArgumentParser(prog="jankov", parents=[common],
                                description="Characteristic identities of finite algebras.")
    p.add_argument("--check", action="store_true", help="run the self-test on bundled data")
    sub = p.add_subparsers(dest="group")

    alg = sub.add_parser("alg", help="single algebras").add_subparsers(dest="verb", required=True)
    s = alg.add_parser("info", parents=[common])
    s.add_argument("file")
    s.set_defaults(func=cmd_alg_info)
    s = alg.add_parser("jankov", parents=[common])
    s.add_argument("file")
    s.set_defaults(func=cmd_alg_jankov)
    s = alg.add_parser("chi", parents=[common])
    s.add_argument("file")
    s.add_argument("--relations", nargs="+", help="defining relations of a presentation")
    s.add_argument("--variety", help="variety for the presentation (default: generated by the algebra)")
    s.set_defaults(func=cmd_alg_chi)
    s = alg.add_parser("leq", parents=[common])
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_alg_leq)
    s = alg.add_parser("antichain", parents=[common])
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_alg_antichain)
    s = alg.add_parser("pretrue", parents=[common])
    s.add_argument("file")
    s.add_argument("identity")
    s.set_defaults(func=cmd_alg_pretrue)

    ident = sub.add_parser("ident", help="identities").add_subparsers(dest="verb", required=True)
    s = ident.add_parser("decide", parents=[common])
    s.add_argument("--variety", required=True)
    s.add_argument("--bound", type=int)
    s.add_argument("identity")
    s.set_defaults(func=cmd_ident_decide)
    s = ident.add_parser("decompose", parents=[common])
    s.add_argument("--variety", required=True)
    s.add_argument("--bound", type=int)
    s.add_argument("--pool", type=int, help="check equivalence on Heyting algebras up to this size")
    s.add_argument("identity")
    s.set_defaults(func=cmd_ident_decompose)
    s = ident.add_parser("prime", parents=[common])
    s.add_argument("--ambient", required=True)
    s.add_argument("--bound", type=int, required=True)
    s.add_argument("identity")
    s.set_defaults(func=cmd_ident_prime)

    var = sub.add_parser("variety", help="varieties").add_subparsers(dest="verb", required=True)
    s = var.add_parser("axiomatize", parents=[common])
    s.add_argument("--sub", required=True)
    s.add_argument("--ambient", required=True)
    s.add_argument("--bound", type=int, required=True)
    s.set_defaults(func=cmd_variety_axiomatize)
    s = var.add_parser("free", parents=[common])
    s.add_argument("--spec", required=True)
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--cap", type=int, default=4096)
    s.add_argument("--method", choices=["auto", "direct", "terms"], default="auto")
    s.add_argument("--elements", action="store_true", help="list a term for every element")
    s.set_defaults(func=cmd_variety_free)
    s = var.add_parser("rcomplete", parents=[common])
    s.add_argument("--spec", required=True)
    s.add_argument("--set", required=True, help="file with one identity per line, or a JSON list")
    s.add_argument("--ambient")
    s.add_argument("--bound", type=int, required=True)
    s.set_defaults(func=cmd_variety_rcomplete)
    s = var.add_parser("split", parents=[common])
    s.add_argument("--algebra", required=True)
    s.add_argument("--ambient", required=True)
    s.add_argument("--bound", type=int, required=True)
    s.set_defaults(func=cmd_variety_split)
    return p


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.check:
        func, name = cmd_check, "check"
    elif getattr(args, "func", None) is None:
        parser.print_usage(err)
        return EXIT_INPUT
    else:
        func, name = args.func, f"{args.group} {args.verb}"
    rep = Report(name)
    sig = SIGNATURES[args.signature]
    try:
        code = func(args, sig, rep)
    except (BoundExhausted, BoundUnavailable, CapExceeded) as exc:
        err.write(f"jankov: bound: {exc}\n")
        return EXIT_BOUND
    except (AlgebraError, ParseError, InputError, OSError, ValueError, KeyError) as exc:
        err.write(f"jankov: error: {exc}\n")
        return EXIT_INPUT
    rep["exit"] = code
    rep.emit(args.json, out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
