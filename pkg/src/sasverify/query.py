"""Query ASTs, the bracketed query grammar, and printers.

Semantic-level queries
    ``Cq`` / ``Ucq`` over concept and role atoms, composed into ECQs with
    :class:`Not`, :class:`And` and :class:`Exists` around :class:`Embedded`
    UCQ leaves.

Relational-level queries
    ``SourceQuery`` (conjunctive atoms plus comparison filters), composed into
    first-order queries with the same connectives (plus :class:`Or`) around
    :class:`SourceLeaf` leaves.  :class:`Tagged` wraps the result of unfolding
    an open UCQ: each branch says how its answer constants are rebuilt from
    relational values.

Grammar inside brackets::

    [ C(?x), P(?x, _) | D(?x), ?y = "a" ]

``_`` is a fresh single-use variable, ``?_name`` is a variable local to one
conjunct, any other ``?name`` is an answer variable, ``true`` is the empty
conjunction and ``false`` the empty union.  Outside brackets ECQs use
``not``, ``and``, ``or``, ``->`` and ``exists ?v .``; ``or`` and ``->`` are
rewritten into ``not``/``and`` when parsed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import ParseError, TokenStream, parse_literal
from .terms import format_literal, is_constant

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return f"?{self.name}"

    def __repr__(self):
        return f"?{self.name}"


@dataclass(frozen=True, slots=True)
class Fn:
    """An object-term template ``f(?x1..?xk)`` over value variables.

    ``symbol=None`` with one argument stands for a bare value.
    """

    symbol: str | None
    args: tuple

    def __str__(self):
        if self.symbol is None:
            return str(self.args[0])
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({', '.join(format_term(a) for a in self.args)})"


def format_term(t) -> str:
    if isinstance(t, (Var, Fn)):
        return str(t)
    return format_literal(t)


def term_vars(t):
    if isinstance(t, Var):
        return (t,)
    if isinstance(t, Fn):
        return tuple(a for a in t.args if isinstance(a, Var))
    return ()


def atom_vars(atoms):
    out = {}
    for a in atoms:
        for t in a.args:
            for v in term_vars(t):
                out[v] = None
    return tuple(out)


@dataclass(frozen=True)
class Cq:
    """A conjunctive query; ``head`` holds one term per answer variable."""

    head: tuple
    atoms: tuple

    def variables(self):
        return atom_vars(self.atoms)


@dataclass(frozen=True)
class Ucq:
    answer_vars: tuple
    disjuncts: tuple

    def __post_init__(self):
        for cq in self.disjuncts:
            if len(cq.head) != len(self.answer_vars):
                raise ValueError("disjunct head does not match the answer variables")

    @classmethod
    def of(cls, answer_vars, *atom_lists):
        answer_vars = tuple(answer_vars)
        return cls(answer_vars, tuple(Cq(answer_vars, tuple(atoms)) for atoms in atom_lists))

    def __str__(self):
        return format_ucq(self)


# -- connectives shared by ECQs and first-order source queries ---------------


def _dedup(vs):
    return tuple(dict.fromkeys(vs))


@dataclass(frozen=True)
class Embedded:
    ucq: Ucq
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", tuple(self.ucq.answer_vars))


@dataclass(frozen=True)
class Not:
    body: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.body.fv)


@dataclass(frozen=True)
class And:
    left: object
    right: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", _dedup(self.left.fv + self.right.fv))


@dataclass(frozen=True)
class Or:
    left: object
    right: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", _dedup(self.left.fv + self.right.fv))


@dataclass(frozen=True)
class Exists:
    var: Var
    body: object
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", tuple(v for v in self.body.fv if v != self.var))


def free_vars(q) -> tuple:
    return q.fv


def or_(left, right):
    """``left or right`` written with ``not``/``and`` (ECQ sugar)."""
    return Not(And(Not(left), Not(right)))


def implies(left, right):
    return Not(And(left, Not(right)))


def conjoin(parts):
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjoin(parts, empty):
    parts = list(parts)
    if not parts:
        return empty
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def leaves(q):
    if isinstance(q, (Embedded, SourceLeaf)):
        yield q
    elif isinstance(q, (Not, Exists)):
        yield from leaves(q.body)
    elif isinstance(q, (And, Or)):
        yield from leaves(q.left)
        yield from leaves(q.right)
    elif isinstance(q, Tagged):
        for _, body in q.branches:
            yield from leaves(body)


def has_negation(q) -> bool:
    if isinstance(q, (Not, Or)):
        return True
    if isinstance(q, Exists):
        return has_negation(q.body)
    if isinstance(q, And):
        return has_negation(q.left) or has_negation(q.right)
    return False


def map_leaves(q, fn):
    if isinstance(q, (Embedded, SourceLeaf)):
        return fn(q)
    if isinstance(q, Not):
        return Not(map_leaves(q.body, fn))
    if isinstance(q, And):
        return And(map_leaves(q.left, fn), map_leaves(q.right, fn))
    if isinstance(q, Or):
        return Or(map_leaves(q.left, fn), map_leaves(q.right, fn))
    if isinstance(q, Exists):
        return Exists(q.var, map_leaves(q.body, fn))
    raise TypeError(f"not a query node: {q!r}")


def ecq_predicates(q) -> set:
    return {a.pred for leaf in leaves(q) for cq in leaf.ucq.disjuncts for a in cq.atoms}


# -- relational side ---------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Filter:
    left: object
    op: str
    right: object

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def __str__(self):
        return f"{format_term(self.left)} {self.op} {format_term(self.right)}"


@dataclass(frozen=True)
class SourceQuery:
    """Conjunctive atoms over a schema, comparison filters, output terms."""

    atoms: tuple
    filters: tuple = ()
    output: tuple = ()

    def __post_init__(self):
        bound = set(atom_vars(self.atoms))
        for t in self.output:
            if isinstance(t, Var) and t not in bound:
                raise ValueError(f"output variable {t} does not occur in an atom")
        for f in self.filters:
            for t in (f.left, f.right):
                if isinstance(t, Var) and t not in bound:
                    raise ValueError(f"filter variable {t} does not occur in an atom")

    @property
    def output_vars(self):
        return tuple(t for t in self.output if isinstance(t, Var))

    def __str__(self):
        return format_conjunction(self.atoms, self.filters)


@dataclass(frozen=True)
class SourceLeaf:
    """Union of source queries, each projecting onto ``vars``."""

    vars: tuple
    queries: tuple
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for q in self.queries:
            if len(q.output) != len(self.vars):
                raise ValueError("source query output does not match the leaf variables")
        object.__setattr__(self, "fv", tuple(self.vars))


FALSE_LEAF = SourceLeaf((), ())


@dataclass(frozen=True)
class Tagged:
    """Unfolded open UCQ: branches of ``(tags, body)``.

    Each tag rebuilds one answer constant from ``body``'s value variables: it
    is ``(symbol, terms)`` with ``symbol=None`` for a bare value.
    """

    answer_vars: tuple
    branches: tuple
    fv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", tuple(self.answer_vars))


# -- printing ------------------------------------------------------------------


def format_conjunction(atoms, filters=()) -> str:
    parts = [str(a) for a in atoms] + [str(f) for f in filters]
    return ", ".join(parts) if parts else "true"


def _cq_text(answer_vars, cq: Cq) -> str:
    counts = {}
    for a in cq.atoms:
        for t in a.args:
            for v in term_vars(t):
                counts[v] = counts.get(v, 0) + 1
    rename = {}
    used = {a.name for a in answer_vars}
    eqs = []
    for a, h in zip(answer_vars, cq.head):
        if isinstance(h, Var) and h not in rename:
            rename[h] = a
        else:
            eqs.append((a, h))
    k = 0
    for v in cq.variables():
        if v in rename:
            continue
        if counts.get(v, 0) == 1:
            rename[v] = None
            continue
        while True:
            k += 1
            name = f"_{k}"
            if name not in used:
                break
        rename[v] = Var(name)

    def term(t):
        if isinstance(t, Var):
            r = rename.get(t, t)
            return "_" if r is None else str(r)
        if isinstance(t, Fn):
            return f"{t.symbol}({', '.join(term(x) for x in t.args)})" if t.symbol else term(t.args[0])
        return format_literal(t)

    parts = [f"{a.pred}({', '.join(term(t) for t in a.args)})" for a in cq.atoms]
    parts += [f"{a} = {term(h)}" for a, h in eqs]
    return ", ".join(parts) if parts else "true"


def format_ucq(q: Ucq) -> str:
    if not q.disjuncts:
        return "[ false ]"
    return "[ " + " | ".join(_cq_text(q.answer_vars, cq) for cq in q.disjuncts) + " ]"


_PREC = {"exists": 0, "and": 2, "or": 1, "not": 3}


def format_ecq(q, prec=0) -> str:
    """Print an ECQ or first-order source query in the surface syntax."""
    if isinstance(q, Embedded):
        return format_ucq(q.ucq)
    if isinstance(q, SourceLeaf):
        return format_source_leaf(q)
    if isinstance(q, Not):
        s = "not " + format_ecq(q.body, 3)
        mine = 3
    elif isinstance(q, And):
        s = format_ecq(q.left, 2) + " and " + format_ecq(q.right, 3)
        mine = 2
    elif isinstance(q, Or):
        s = format_ecq(q.left, 1) + " or " + format_ecq(q.right, 2)
        mine = 1
    elif isinstance(q, Exists):
        s = f"exists {q.var} . " + format_ecq(q.body, 0)
        mine = 0
    elif isinstance(q, Tagged):
        return format_tagged(q)
    else:
        raise TypeError(f"not a query node: {q!r}")
    return f"({s})" if mine < prec else s


def format_source_leaf(leaf: SourceLeaf) -> str:
    if not leaf.queries:
        return "false"
    head = ", ".join(str(v) for v in leaf.vars)
    bodies = []
    for sq in leaf.queries:
        rename = {}
        extra = []
        for v, t in zip(leaf.vars, sq.output):
            if isinstance(t, Var) and t not in rename:
                rename[t] = v
            else:
                extra.append((v, t))
        k = 0
        for v in atom_vars(sq.atoms):
            if v not in rename:
                k += 1
                rename[v] = Var(f"_{k}")

        def term(t):
            return str(rename[t]) if isinstance(t, Var) else format_literal(t)

        parts = [f"{a.pred}({', '.join(term(t) for t in a.args)})" for a in sq.atoms]
        parts += [f"{term(f.left)} {f.op} {term(f.right)}" for f in sq.filters]
        parts += [f"{v} = {term(t)}" for v, t in extra]
        bodies.append(", ".join(parts) if parts else "true")
    return "src(" + head + "){ " + " | ".join(bodies) + " }"


def format_tagged(q: Tagged) -> str:
    out = []
    for tags, body in q.branches:
        shown = ", ".join(
            f"{a}={sym}({', '.join(format_term(t) for t in terms)})" if sym else f"{a}={format_term(terms[0])}"
            for a, (sym, terms) in zip(q.answer_vars, tags)
        )
        out.append(f"<{shown}> {format_ecq(body, 3)}")
    return " ; ".join(out) if out else "false"


# -- parsing -------------------------------------------------------------------


class _Fresh:
    def __init__(self, taken=()):
        self.taken = set(taken)
        self.n = 0

    def __call__(self):
        while True:
            self.n += 1
            name = f"_{self.n}"
            if name not in self.taken:
                self.taken.add(name)
                return Var(name)


def parse_term(ts: TokenStream, fresh):
    tok = ts.peek()
    if tok.kind == "VAR":
        ts.next()
        return Var(tok.text[1:])
    if tok.kind == "IDENT" and tok.text == "_":
        ts.next()
        return fresh()
    return parse_literal(ts)


def _parse_items(ts, fresh, allow_filters):
    """Comma-separated atoms and comparisons, up to the next delimiter."""
    atoms, comparisons = [], []
    if ts.at_word("true") and not ts.at_op("(", 1) and not _at_comparison(ts, 1):
        ts.next()
        return atoms, comparisons
    while True:
        tok = ts.peek()
        if tok.kind == "IDENT" and ts.at_op("(", 1) and not _is_literal_comparison(ts):
            ts.next()
            ts.expect_op("(")
            args = [parse_term(ts, fresh)]
            while ts.accept("OP", ","):
                args.append(parse_term(ts, fresh))
            ts.expect_op(")")
            atoms.append(Atom(tok.text, tuple(args)))
        else:
            left = parse_term(ts, fresh)
            op = ts.peek()
            if op.kind != "OP" or op.text not in COMPARISONS:
                raise ts.error("expected an atom or a comparison", tok)
            ts.next()
            if op.text != "=" and not allow_filters:
                raise ts.error(f"comparison {op.text!r} not allowed in a conjunctive query", op)
            right = parse_term(ts, fresh)
            comparisons.append(Filter(left, op.text, right))
        if not ts.accept("OP", ","):
            return atoms, comparisons


def _at_comparison(ts, offset):
    tok = ts.peek(offset)
    return tok.kind == "OP" and tok.text in COMPARISONS


def _is_literal_comparison(ts):
    # f(1) = ?x : a ground object term on the left of a comparison
    depth, i = 0, 1
    while True:
        tok = ts.peek(i)
        if tok.kind == "EOF":
            return False
        if tok.kind == "OP" and tok.text == "(":
            depth += 1
        elif tok.kind == "OP" and tok.text == ")":
            depth -= 1
            if depth == 0:
                return _at_comparison(ts, i + 1)
        i += 1


def _bind_equalities(head, atoms, eqs):
    """Resolve ``term = term`` items by substitution; None if contradictory."""
    parent = {}

    def find(t):
        while t in parent:
            t = parent[t]
        return t

    in_atoms = set(atom_vars(atoms))
    for e in eqs:
        a, b = find(e.left), find(e.right)
        if a == b:
            continue
        if is_constant(a) and is_constant(b):
            return None
        # constants win, then variables that occur in atoms
        if is_constant(a) or (isinstance(b, Var) and b not in in_atoms and a in in_atoms):
            a, b = b, a
        parent[a] = b

    def sub(t):
        if isinstance(t, Var):
            return find(t)
        return t

    return tuple(sub(h) for h in head), tuple(Atom(a.pred, tuple(sub(t) for t in a.args)) for a in atoms)


def _ucq_body(ts: TokenStream):
    if ts.at_word("false") and not ts.at_op("(", 1):
        ts.next()
        return []
    raw = [_parse_items_collect(ts)]
    while ts.accept("OP", "|"):
        raw.append(_parse_items_collect(ts))
    return raw


def _parse_items_collect(ts):
    # Parse once to learn the user's variable names, then build terms with
    # fresh names that cannot clash with them.
    start = ts.pos
    names = set()
    depth = 0
    while True:
        tok = ts.peek()
        if tok.kind == "EOF":
            break
        if tok.kind == "OP" and tok.text in "([{":
            depth += 1
        elif tok.kind == "OP" and tok.text in ")]}":
            if depth == 0:
                break
            depth -= 1
        elif tok.kind == "OP" and tok.text == "|" and depth == 0:
            break
        elif tok.kind == "VAR":
            names.add(tok.text[1:])
        ts.next()
    ts.pos = start
    return _parse_items(ts, _Fresh(names), allow_filters=False)


def parse_ucq_body(ts: TokenStream) -> Ucq:
    """Parse the inside of ``[ ... ]``."""
    tok = ts.peek()
    raw = _ucq_body(ts)
    answer = {}
    for atoms, eqs in raw:
        for v in atom_vars(atoms) + tuple(t for e in eqs for t in (e.left, e.right) if isinstance(t, Var)):
            if not v.name.startswith("_"):
                answer[v] = None
    answer_vars = tuple(answer)
    disjuncts = []
    for atoms, eqs in raw:
        mentioned = set(atom_vars(atoms)) | {t for e in eqs for t in (e.left, e.right) if isinstance(t, Var)}
        for v in answer_vars:
            if v not in mentioned:
                raise ParseError(f"answer variable {v} missing from a disjunct", tok.line, tok.column)
        bound = _bind_equalities(answer_vars, atoms, eqs)
        if bound is None:
            continue
        head, atoms = bound
        in_atoms = set(atom_vars(atoms))
        for v, h in zip(answer_vars, head):
            if isinstance(h, Var) and h not in in_atoms:
                raise ParseError(f"unsafe variable {v}: occurs in no atom", tok.line, tok.column)
        disjuncts.append(Cq(head, atoms))
    return Ucq(answer_vars, tuple(disjuncts))


def parse_ucq(text: str) -> Ucq:
    ts = TokenStream(text)
    bracketed = ts.accept("OP", "[")
    q = parse_ucq_body(ts)
    if bracketed:
        ts.expect_op("]")
    ts.expect_end()
    return q


def parse_ecq_expr(ts: TokenStream):
    return _implication(ts)


def _implication(ts):
    left = _disjunction(ts)
    if ts.accept("OP", "->"):
        return implies(left, _implication(ts))
    return left


def _disjunction(ts):
    left = _conjunction(ts)
    while ts.at_word("or"):
        ts.next()
        left = or_(left, _conjunction(ts))
    return left


def _conjunction(ts):
    left = _unary(ts)
    while ts.at_word("and"):
        ts.next()
        left = And(left, _unary(ts))
    return left


def _unary(ts):
    if ts.at_word("not"):
        ts.next()
        return Not(_unary(ts))
    if ts.at_word("exists"):
        ts.next()
        var = Var(ts.expect("VAR").text[1:])
        ts.expect_op(".")
        return Exists(var, _implication(ts))
    if ts.accept("OP", "("):
        q = _implication(ts)
        ts.expect_op(")")
        return q
    if ts.accept("OP", "["):
        q = parse_ucq_body(ts)
        ts.expect_op("]")
        return Embedded(q)
    raise ts.error(f"expected a query, got {ts.peek().text!r}")


def parse_ecq(text: str):
    ts = TokenStream(text)
    q = _implication(ts)
    ts.expect_end()
    return q


def parse_source(ts: TokenStream, names=()) -> tuple:
    """Atoms and filters of a source query; returns ``(atoms, filters)``."""
    start = ts.pos
    taken = set(names)
    while not ts.at_end():
        tok = ts.next()
        if tok.kind == "VAR":
            taken.add(tok.text[1:])
    ts.pos = start
    atoms, filters = _parse_items(ts, _Fresh(taken), allow_filters=True)
    return atoms, filters


def source_query(atoms, filters=(), output=None) -> SourceQuery:
    atoms = tuple(atoms)
    if output is None:
        output = atom_vars(atoms)
    return SourceQuery(atoms, tuple(filters), tuple(output))


# -- renaming ------------------------------------------------------------------


def rename_cq_canonical(head, atoms):
    """Rename variables by first occurrence; sort and dedupe atoms."""
    head_pos = {}
    for i, h in enumerate(head):
        if isinstance(h, Var):
            head_pos.setdefault(h, i)

    def masked(atom):
        return (
            atom.pred,
            len(atom.args),
            tuple(
                (0, head_pos[t]) if isinstance(t, Var) and t in head_pos
                else (1, "") if isinstance(t, Var)
                else (2, repr(t))
                for t in atom.args
            ),
        )

    ordered = sorted(set(atoms), key=masked)
    for _ in range(3):
        names = {}
        for h in head:
            if isinstance(h, Var) and h not in names:
                names[h] = Var(f"v{len(names)}")
        for a in ordered:
            for t in a.args:
                if isinstance(t, Var) and t not in names:
                    names[t] = Var(f"v{len(names)}")
        new_atoms = [Atom(a.pred, tuple(names.get(t, t) for t in a.args)) for a in ordered]
        new_head = tuple(names.get(h, h) for h in head)
        resorted = sorted(set(new_atoms), key=lambda a: (a.pred, len(a.args), tuple(repr(t) for t in a.args)))
        if resorted == new_atoms:
            return new_head, tuple(new_atoms)
        head = new_head
        ordered = resorted
        head_pos = {}
        for i, h in enumerate(head):
            if isinstance(h, Var):
                head_pos.setdefault(h, i)
    return new_head, tuple(new_atoms)
