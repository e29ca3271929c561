"""Temporal property trees, the ``.prop`` parser and printers.

Grammar (lowest precedence first)::

    phi    ::= or ('->' phi)?
    or     ::= and ('OR' and)*
    and    ::= unary ('AND' unary)*
    unary  ::= '!' unary | AG unary | EG unary | AF unary | EF unary
             | AX unary | EX unary | 'A' '[' phi 'U' phi ']' | 'E' '[' phi 'U' phi ']'
             | '(' phi ')' | local
             | FORALL ?v . (FORALL ?v .)* local ('->' phi)?
             | EXISTS ?v . (EXISTS ?v .)* local ('AND' phi)?
    local  ::= '[' ucq ']' | '{' ecq '}'

A quantifier chain ending in a bare guard has no body; it reads as
"some/every answer of the guard exists", i.e. the body is true.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..query import Embedded, Var, format_ecq, parse_ecq_expr, parse_ucq_body
from ..syntax import ParseError, TokenStream

UNARY = ("AG", "EG", "AF", "EF", "AX", "EX")


def _dedup(vs):
    return tuple(dict.fromkeys(vs))


@dataclass(frozen=True)
class Local:
    """A state formula: an ECQ (semantic level) or a first-order source query."""

    query: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", tuple(self.query.fv))


@dataclass(frozen=True)
class TNot:
    body: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.body.fv)


@dataclass(frozen=True)
class _Binary:
    left: object
    right: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", _dedup(self.left.fv + self.right.fv))


class TAnd(_Binary):
    pass


class TOr(_Binary):
    pass


class TImplies(_Binary):
    pass


class AU(_Binary):
    pass


class EU(_Binary):
    pass


@dataclass(frozen=True)
class Temporal:
    """``op body`` for op in AG, EG, AF, EF, AX, EX."""

    op: str
    body: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.op not in UNARY:
            raise ValueError(f"unknown temporal operator {self.op}")
        object.__setattr__(self, "fv", self.body.fv)


def AG(body):
    return Temporal("AG", body)


def EG(body):
    return Temporal("EG", body)


def AF(body):
    return Temporal("AF", body)


def EF(body):
    return Temporal("EF", body)


def AX(body):
    return Temporal("AX", body)


def EX(body):
    return Temporal("EX", body)


@dataclass(frozen=True)
class _Quant:
    vars: tuple
    guard: object
    body: object = None
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inner = tuple(self.guard.fv) + (self.body.fv if self.body is not None else ())
        object.__setattr__(self, "fv", tuple(v for v in _dedup(inner) if v not in self.vars))


class Forall(_Quant):
    """``FORALL ?x.. . [guard] -> body``."""

    kind = "forall"


class ExistsQ(_Quant):
    """``EXISTS ?x.. . [guard] AND body``."""

    kind = "exists"


@dataclass(frozen=True)
class Branch:
    """One expansion of a quantifier block: each variable bound to a template."""

    templates: tuple  # Fn per quantified variable
    vars: tuple  # fresh value variables bound by this branch
    guard: object
    body: object = None


@dataclass(frozen=True)
class QuantBlock:
    """Relational quantifier: a conjunction (forall) or disjunction (exists) of branches."""

    kind: str
    source_vars: tuple
    branches: tuple
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        out = []
        for b in self.branches:
            inner = tuple(b.guard.fv) + (b.body.fv if b.body is not None else ())
            out.extend(v for v in inner if v not in b.vars)
        object.__setattr__(self, "fv", _dedup(out))


def children(f):
    if isinstance(f, Local):
        return ()
    if isinstance(f, (TNot, Temporal)):
        return (f.body,)
    if isinstance(f, _Binary):
        return (f.left, f.right)
    if isinstance(f, _Quant):
        return () if f.body is None else (f.body,)
    if isinstance(f, QuantBlock):
        return tuple(b.body for b in f.branches if b.body is not None)
    raise TypeError(f"not a property node: {f!r}")


def skeleton(f):
    """Operator skeleton: node kinds with quantifiers collapsed to one marker."""
    if isinstance(f, Local):
        return "local"
    if isinstance(f, Temporal):
        return (f.op, skeleton(f.body))
    if isinstance(f, TNot):
        return ("not", skeleton(f.body))
    if isinstance(f, _Binary):
        return (type(f).__name__, skeleton(f.left), skeleton(f.right))
    if isinstance(f, _Quant):
        return (f.kind, None if f.body is None else skeleton(f.body))
    if isinstance(f, QuantBlock):
        bodies = {None if b.body is None else skeleton(b.body) for b in f.branches}
        if len(bodies) > 1:
            raise ValueError("branches of one quantifier block differ in shape")
        return (f.kind, bodies.pop() if bodies else "vacuous")
    raise TypeError(f"not a property node: {f!r}")


# -- parsing -------------------------------------------------------------------


def _local(ts: TokenStream):
    if ts.accept("OP", "["):
        q = parse_ucq_body(ts)
        ts.expect_op("]")
        return Local(Embedded(q))
    if ts.accept("OP", "{"):
        q = parse_ecq_expr(ts)
        ts.expect_op("}")
        return Local(q)
    raise ts.error(f"expected [query] or {{query}}, got {ts.peek().text!r}")


def _phi(ts):
    left = _or(ts)
    if ts.accept("OP", "->"):
        return TImplies(left, _phi(ts))
    return left


def _or(ts):
    left = _and(ts)
    while ts.at_word("OR"):
        ts.next()
        left = TOr(left, _and(ts))
    return left


def _and(ts):
    left = _unary(ts)
    while ts.at_word("AND"):
        ts.next()
        left = TAnd(left, _unary(ts))
    return left


def _quantifier(ts, word, cls, connective):
    vars_ = []
    while ts.at_word(word):
        ts.next()
        v = Var(ts.expect("VAR").text[1:])
        if v in vars_:
            raise ts.error(f"variable {v} quantified twice in one chain")
        vars_.append(v)
        ts.expect_op(".")
    guard = _local(ts).query
    body = None
    if (connective == "->" and ts.accept("OP", "->")) or (connective == "AND" and ts.at_word("AND")):
        if connective == "AND":
            ts.next()
        body = _phi(ts)
    return cls(tuple(vars_), guard, body)


def _unary(ts):
    tok = ts.peek()
    if ts.accept("OP", "!"):
        return TNot(_unary(ts))
    if tok.kind == "IDENT":
        if tok.text in UNARY:
            ts.next()
            return Temporal(tok.text, _unary(ts))
        if tok.text in ("A", "E") and ts.at_op("[", 1):
            ts.next()
            ts.expect_op("[")
            left = _phi(ts)
            ts.expect_word("U")
            right = _phi(ts)
            ts.expect_op("]")
            return AU(left, right) if tok.text == "A" else EU(left, right)
        if tok.text == "FORALL":
            return _quantifier(ts, "FORALL", Forall, "->")
        if tok.text == "EXISTS":
            return _quantifier(ts, "EXISTS", ExistsQ, "AND")
    if ts.accept("OP", "("):
        f = _phi(ts)
        ts.expect_op(")")
        return f
    if ts.at_op("[") or ts.at_op("{"):
        return _local(ts)
    raise ts.error(f"expected a temporal formula, got {tok.text!r}")


def parse_property(text: str):
    ts = TokenStream(text)
    f = _phi(ts)
    ts.expect_end()
    return f


# -- printing ------------------------------------------------------------------


def _format_local(q) -> str:
    if isinstance(q, Embedded):
        return format_ecq(q)
    return "{ " + format_ecq(q) + " }"


def format_property(f, prec: int = 0) -> str:
    """Print a property; relational properties use the same layout.

    Relational quantifier blocks print as ``FORALL< branch | branch >``
    where each branch is ``?v1, ?v2 . {guard} -> body``.
    """
    if isinstance(f, Local):
        return _format_local(f.query)
    if isinstance(f, TNot):
        s, mine = "! " + format_property(f.body, 3), 3
    elif isinstance(f, Temporal):
        s, mine = f"{f.op} " + format_property(f.body, 3), 3
    elif isinstance(f, (AU, EU)):
        q = "A" if isinstance(f, AU) else "E"
        return f"{q} [ {format_property(f.left)} U {format_property(f.right)} ]"
    elif isinstance(f, TAnd):
        s, mine = format_property(f.left, 2) + " AND " + format_property(f.right, 3), 2
    elif isinstance(f, TOr):
        s, mine = format_property(f.left, 1) + " OR " + format_property(f.right, 2), 1
    elif isinstance(f, TImplies):
        s, mine = format_property(f.left, 1) + " -> " + format_property(f.right, 0), 0
    elif isinstance(f, _Quant):
        word = "FORALL" if f.kind == "forall" else "EXISTS"
        s = "".join(f"{word} {v} . " for v in f.vars) + _format_local(f.guard)
        if f.body is not None:
            s += (" -> " if f.kind == "forall" else " AND ") + format_property(f.body, 0)
        mine = 0
    elif isinstance(f, QuantBlock):
        word = "FORALL" if f.kind == "forall" else "EXISTS"
        conn = " -> " if f.kind == "forall" else " AND "
        parts = []
        for b in f.branches:
            head = ", ".join(str(v) for v in b.vars) or "()"
            text = f"{head} . " + "{ " + format_ecq(b.guard) + " }"
            if b.body is not None:
                text += conn + format_property(b.body, 0)
            parts.append(text)
        return f"{word}< " + " | ".join(parts) + " >"
    else:
        raise TypeError(f"not a property node: {f!r}")
    return f"({s})" if mine < prec else s


__all__ = [
    "AF",
    "AG",
    "AU",
    "AX",
    "Branch",
    "EF",
    "EG",
    "EU",
    "EX",
    "ExistsQ",
    "Forall",
    "Local",
    "ParseError",
    "QuantBlock",
    "TAnd",
    "TImplies",
    "TNot",
    "TOr",
    "Temporal",
    "children",
    "format_property",
    "parse_property",
    "skeleton",
]
