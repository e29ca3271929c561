"""Mapping assertions: the ``.map`` format, virtual ABoxes, and unfolding.

File format::

    mapping ReviewedByAccepting
    source: CPMR(?id, _, _, ?ok), ?ok = true
    target: ReviewedReport(cpmr(?id))

A target term is a source variable (a bare value) or a template ``f(?x, ...)``
building an object term.  Disjunctive sources are written as several
assertions with the same target.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .evaluate import EvaluationError, compare, solve
from .ontology import TBox, vocabulary
from .query import (
    FALSE_LEAF,
    And,
    Atom,
    Embedded,
    Exists,
    Filter,
    Fn,
    Not,
    Or,
    SourceLeaf,
    SourceQuery,
    Tagged,
    Ucq,
    Cq,
    Var,
    atom_vars,
    has_negation,
    parse_source,
)
from .syntax import ParseError, TokenStream
from .terms import ABox, ObjectTerm, Schema, format_literal, is_constant


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class MappingAssertion:
    id: str
    source: SourceQuery
    target: tuple

    def __post_init__(self):
        if not self.target:
            raise MappingError(f"mapping {self.id}: empty target")
        outputs = set(self.source.output_vars)
        for atom in self.target:
            if len(atom.args) not in (1, 2):
                raise MappingError(f"mapping {self.id}: target atom {atom} must be unary or binary")
            for t in atom.args:
                vs = t.args if isinstance(t, Fn) else (t,)
                for v in vs:
                    if not isinstance(v, Var):
                        raise MappingError(f"mapping {self.id}: target terms must be variables or templates")
                    if v not in outputs:
                        raise MappingError(f"mapping {self.id}: target variable {v} not in the source output")

    def symbols(self):
        for atom in self.target:
            for t in atom.args:
                if isinstance(t, Fn):
                    yield t.symbol, len(t.args)


class MappingSet:
    def __init__(self, assertions=(), schema: Schema | None = None):
        self.assertions = tuple(assertions)
        ids = [a.id for a in self.assertions]
        if len(set(ids)) != len(ids):
            raise MappingError("duplicate mapping ids")
        arities = {}
        for a in self.assertions:
            for sym, k in a.symbols():
                if arities.setdefault(sym, k) != k:
                    raise MappingError(f"function symbol {sym} used with arities {arities[sym]} and {k}")
        if schema is None:
            schema = _infer_schema(self.assertions)
        for a in self.assertions:
            for atom in a.source.atoms:
                if atom.pred not in schema:
                    raise MappingError(f"mapping {a.id}: unknown relation {atom.pred}")
                if schema.arity(atom.pred) != len(atom.args):
                    raise MappingError(f"mapping {a.id}: {atom.pred} expects arity {schema.arity(atom.pred)}")
        self.schema = schema
        self._index = {}
        for n, a in enumerate(self.assertions):
            for atom in a.target:
                self._index.setdefault((atom.pred, len(atom.args)), []).append((n, atom))

    def targets_for(self, pred, arity):
        return self._index.get((pred, arity), ())

    def target_predicates(self) -> set:
        return {p for p, _ in self._index}

    def __len__(self):
        return len(self.assertions)

    def __eq__(self, other):
        return isinstance(other, MappingSet) and self.assertions == other.assertions and self.schema == other.schema

    def __hash__(self):
        return hash(self.assertions)

    def __str__(self):
        return format_mappings(self)


def _infer_schema(assertions) -> Schema:
    arities = {}
    for a in assertions:
        for atom in a.source.atoms:
            if arities.setdefault(atom.pred, len(atom.args)) != len(atom.args):
                raise MappingError(f"relation {atom.pred} used with different arities")
    return Schema.from_arities(arities)


@dataclass(frozen=True)
class ObdaSystem:
    schema: Schema
    tbox: TBox
    mappings: MappingSet

    def __post_init__(self):
        concepts, roles = vocabulary(self.tbox)
        for a in self.mappings.assertions:
            for atom in a.target:
                names = concepts if len(atom.args) == 1 else roles
                if atom.pred not in names:
                    raise MappingError(f"mapping {a.id}: {atom.pred} is not in the TBox vocabulary")
        for rel in self.mappings.schema:
            if rel.name not in self.schema or self.schema.arity(rel.name) != rel.arity:
                raise MappingError(f"mapping source relation {rel.name} not in the schema")


def function_symbols(m: MappingSet) -> set:
    return {s for a in m.assertions for s in a.symbols()}


# -- parsing and printing -----------------------------------------------------


def _target_term(ts: TokenStream):
    tok = ts.peek()
    if tok.kind == "VAR":
        ts.next()
        return Var(tok.text[1:])
    if tok.kind == "IDENT" and ts.at_op("(", 1):
        ts.next()
        ts.expect_op("(")
        args = [Var(ts.expect("VAR").text[1:])]
        while ts.accept("OP", ","):
            args.append(Var(ts.expect("VAR").text[1:]))
        ts.expect_op(")")
        return Fn(tok.text, tuple(args))
    raise ts.error("expected a variable or a template f(?x, ...)")


def _target(ts: TokenStream):
    atoms = []
    while True:
        name = ts.expect("IDENT")
        ts.expect_op("(")
        args = [_target_term(ts)]
        while ts.accept("OP", ","):
            args.append(_target_term(ts))
        ts.expect_op(")")
        atoms.append(Atom(name.text, tuple(args)))
        if not ts.accept("OP", ","):
            return tuple(atoms)


def parse_mappings(text: str, schema: Schema | None = None) -> MappingSet:
    ts = TokenStream(text)
    assertions = []
    while not ts.at_end():
        start = ts.expect_word("mapping")
        ident = ts.next()
        if ident.kind not in ("IDENT", "INT"):
            raise ts.error("expected a mapping id", ident)
        ts.expect_word("source")
        ts.expect_op(":")
        atoms, filters = parse_source(ts)
        ts.expect_word("target")
        ts.expect_op(":")
        target = _target(ts)
        try:
            sq = SourceQuery(tuple(atoms), tuple(filters), atom_vars(atoms))
            assertions.append(MappingAssertion(ident.text, sq, target))
        except ValueError as exc:
            raise ParseError(str(exc), start.line, start.column) from None
    try:
        return MappingSet(assertions, schema)
    except MappingError as exc:
        raise ParseError(str(exc)) from None


def _named_source_text(sq: SourceQuery) -> str:
    counts = {}
    for a in sq.atoms:
        for t in a.args:
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1
    for f in sq.filters:
        for t in (f.left, f.right):
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1

    def term(t):
        if isinstance(t, Var):
            return "_" if t.name.startswith("_") and counts[t] == 1 else str(t)
        return format_literal(t)

    parts = [f"{a.pred}({', '.join(term(t) for t in a.args)})" for a in sq.atoms]
    parts += [f"{term(f.left)} {f.op} {term(f.right)}" for f in sq.filters]
    return ", ".join(parts)


def format_mappings(m: MappingSet) -> str:
    blocks = []
    for a in m.assertions:
        target = ", ".join(str(atom) for atom in a.target)
        blocks.append(f"mapping {a.id}\nsource: {_named_source_text(a.source)}\ntarget: {target}\n")
    return "\n".join(blocks)


# -- virtual ABox -----------------------------------------------------------------


def _instantiate(t, b):
    if isinstance(t, Fn):
        return ObjectTerm(t.symbol, tuple(b[v] for v in t.args))
    return b[t]


def materialize(m: MappingSet, i) -> ABox:
    """The ABox generated from instance ``i`` by the mapping set."""
    concepts, roles = set(), set()
    for a in m.assertions:
        for b in solve(a.source.atoms, i, a.source.filters):
            for atom in a.target:
                args = tuple(_instantiate(t, b) for t in atom.args)
                if len(args) == 1:
                    concepts.add((atom.pred, args[0]))
                else:
                    roles.add((atom.pred, args[0], args[1]))
    return ABox(concepts, roles)


# -- unfolding ---------------------------------------------------------------------


def live_query(t: TBox) -> Ucq:
    """``live(x)``: x occurs in some concept or role fact over the vocabulary."""
    concepts, roles = vocabulary(t)
    x = Var("x")
    disjuncts = [Cq((x,), (Atom(c, (x,)),)) for c in sorted(concepts)]
    for r in sorted(roles):
        disjuncts.append(Cq((x,), (Atom(r, (x, Var("_y"))),)))
        disjuncts.append(Cq((x,), (Atom(r, (Var("_y"), x)),)))
    return Ucq((x,), tuple(disjuncts))


_VALUE = ("value",)


class _Unifier:
    """Union-find over variables; classes may carry a constant or template shape."""

    def __init__(self):
        self.parent = {}
        self.shape = {}
        self._n = 0

    def find(self, v):
        p = self.parent
        while v in p:
            v = p[v]
        return v

    def _fresh(self, shape):
        self._n += 1
        v = Var(f"#k{self._n}")
        self.shape[v] = shape
        return v

    def node(self, t, value=False):
        if isinstance(t, Var):
            if value and not self._mark_value(t):
                return None
            return t
        if isinstance(t, Fn):
            if t.symbol is None:
                v = t.args[0]
                if isinstance(v, Var):
                    return v if self._mark_value(v) else None
                return self._fresh(("const", v)) if not isinstance(v, ObjectTerm) else None
            args = []
            for x in t.args:
                n = self.node(x, value=True) if isinstance(x, Var) else self._fresh(("const", x))
                if n is None:
                    return None
                args.append(n)
            return self._fresh(("fn", t.symbol, tuple(args)))
        if is_constant(t):
            return self._fresh(("const", t))
        raise TypeError(f"not a term: {t!r}")

    def _mark_value(self, v) -> bool:
        r = self.find(v)
        s = self.shape.get(r)
        if s is None:
            self.shape[r] = _VALUE
            return True
        if s[0] == "fn" or (s[0] == "const" and isinstance(s[1], ObjectTerm)):
            return False
        return True

    def unify(self, a, b) -> bool:
        if a is None or b is None:
            return False
        a, b = self.find(a), self.find(b)
        if a == b:
            return True
        sa, sb = self.shape.pop(a, None), self.shape.get(b)
        self.parent[a] = b
        if sa is None:
            return True
        if sb is None:
            self.shape[b] = sa
            return True
        merged = self._merge(sa, sb)
        if merged is None:
            return False
        self.shape[self.find(b)] = merged
        return True

    def _merge(self, sa, sb):
        ka, kb = sa[0], sb[0]
        if ka == "value" and kb == "value":
            return sa
        if ka == "value" or kb == "value":
            other = sb if ka == "value" else sa
            if other[0] == "const" and not isinstance(other[1], ObjectTerm):
                return other
            return None
        if ka == "const" and kb == "const":
            return sa if sa[1] == sb[1] else None
        if ka == "fn" and kb == "fn":
            if sa[1] != sb[1] or len(sa[2]) != len(sb[2]):
                return None
            for x, y in zip(sa[2], sb[2]):
                if not self.unify(x, y):
                    return None
            return sb
        const, fn = (sa, sb) if ka == "const" else (sb, sa)
        c = const[1]
        if not isinstance(c, ObjectTerm) or c.symbol != fn[1] or c.arity != len(fn[2]):
            return None
        for x, arg in zip(fn[2], c.args):
            if not self.unify(x, self._fresh(("const", arg))):
                return None
        return const

    def shape_of(self, v):
        return self.shape.get(self.find(v))


def _canonical_source(atoms, filters, output) -> SourceQuery:
    names = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var) and t not in names:
                names[t] = Var(f"s{len(names)}")

    def r(t):
        return names.get(t, t) if isinstance(t, Var) else t

    atoms = tuple(dict.fromkeys(Atom(a.pred, tuple(r(t) for t in a.args)) for a in atoms))
    filters = tuple(dict.fromkeys(Filter(r(f.left), f.op, r(f.right)) for f in filters))
    return SourceQuery(atoms, filters, tuple(r(t) for t in output))


def _unfold_cq(answer_vars, cq, sigma, m: MappingSet):
    """Yield ``(atoms, filters, term_of, tag_of)`` per successful unification."""
    choices = [m.targets_for(a.pred, len(a.args)) for a in cq.atoms]
    if any(not c for c in choices):
        return
    for combo in itertools.product(*choices):
        u = _Unifier()
        ok = True
        for a, h in zip(answer_vars, cq.head):
            if a in sigma and not u.unify(u.node(h), u.node(sigma[a])):
                ok = False
                break
        if not ok:
            continue
        renamings = []
        for k, (atom, (ai, target)) in enumerate(zip(cq.atoms, combo)):
            src = m.assertions[ai].source
            ren = {v: Var(f"#{k}.{v.name}") for v in atom_vars(src.atoms)}
            renamings.append((src, ren))

            def rt(t, ren=ren):
                if isinstance(t, Fn):
                    return Fn(t.symbol, tuple(ren[v] for v in t.args))
                return ren[t]

            for qt, tt in zip(atom.args, target.args):
                tnode = u.node(rt(tt), value=True)
                if not u.unify(u.node(qt), tnode):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        # every source variable ranges over values
        for src, ren in renamings:
            for v in ren.values():
                if not u._mark_value(v):
                    ok = False
                    break
        if not ok:
            continue
        rep = {}
        for src, ren in renamings:
            for v in ren.values():
                rep.setdefault(u.find(v), v)

        def term_of(v, u=u, rep=rep):
            root = u.find(v)
            s = u.shape.get(root)
            if s is not None and s[0] == "const":
                return s[1]
            return rep.get(root)

        atoms, filters = [], []
        for src, ren in renamings:
            for a in src.atoms:
                atoms.append(Atom(a.pred, tuple(term_of(ren[t]) if isinstance(t, Var) else t for t in a.args)))
            for f in src.filters:
                left = term_of(ren[f.left]) if isinstance(f.left, Var) else f.left
                right = term_of(ren[f.right]) if isinstance(f.right, Var) else f.right
                if not isinstance(left, Var) and not isinstance(right, Var):
                    try:
                        if not compare(f.op, left, right):
                            ok = False
                            break
                        continue
                    except EvaluationError:
                        pass
                filters.append(Filter(left, f.op, right))
            if not ok:
                break
        if not ok:
            continue

        def tag_of(h, u=u, term_of=term_of):
            if is_constant(h):
                if isinstance(h, ObjectTerm):
                    return h.symbol, h.args
                return None, (h,)
            s = u.shape_of(h)
            if s is not None and s[0] == "fn":
                return s[1], tuple(term_of(x) for x in s[2])
            return None, (term_of(h),)

        yield atoms, filters, term_of, tag_of


def unfold_ucq(q: Ucq, m: MappingSet) -> Tagged:
    """Unfold an open UCQ into a union of source queries with answer tags."""
    groups = {}
    for cq in q.disjuncts:
        for atoms, filters, term_of, tag_of in _unfold_cq(q.answer_vars, cq, {}, m):
            shape, output = [], []
            for h in cq.head:
                sym, terms = tag_of(h)
                slots = []
                for t in terms:
                    if isinstance(t, Var):
                        slots.append(None)
                        output.append(t)
                    else:
                        slots.append(("const", t))
                shape.append((sym, tuple(slots)))
            sq = _canonical_source(atoms, filters, output)
            bucket = groups.setdefault(tuple(shape), {})
            bucket.setdefault(sq, None)
    branches = []
    for shape, queries in groups.items():
        leaf_vars = []
        tags = []
        for sym, slots in shape:
            terms = []
            for s in slots:
                if s is None:
                    v = Var(f"t{len(leaf_vars)}")
                    leaf_vars.append(v)
                    terms.append(v)
                else:
                    terms.append(s[1])
            tags.append((sym, tuple(terms)))
        branches.append((tuple(tags), SourceLeaf(tuple(leaf_vars), tuple(queries))))
    return Tagged(tuple(q.answer_vars), tuple(branches))


def _leaf_pattern(answer_vars, sigma):
    """Leaf variables (value variables of the bindings) and a cache-friendly key."""
    leaf_vars = []
    for a in answer_vars:
        for v in sigma[a].args:
            if isinstance(v, Var) and v not in leaf_vars:
                leaf_vars.append(v)
    pos = {v: i for i, v in enumerate(leaf_vars)}
    key = tuple(
        (sigma[a].symbol, tuple(("v", pos[v]) if isinstance(v, Var) else ("c", v) for v in sigma[a].args))
        for a in answer_vars
    )
    return tuple(leaf_vars), key


@lru_cache(maxsize=8192)
def _unfold_bound(q: Ucq, key, m: MappingSet):
    n = 1 + max((i for _, args in key for kind, i in args if kind == "v"), default=-1)
    slot_vars = tuple(Var(f"#p{i}") for i in range(n))
    sigma = {}
    for a, (sym, args) in zip(q.answer_vars, key):
        sigma[a] = Fn(sym, tuple(slot_vars[i] if kind == "v" else i for kind, i in args))
    queries = {}
    for cq in q.disjuncts:
        for atoms, filters, term_of, _ in _unfold_cq(q.answer_vars, cq, sigma, m):
            output = [term_of(v) for v in slot_vars]
            if any(o is None for o in output):
                continue
            queries.setdefault(_canonical_source(atoms, filters, output), None)
    return tuple(queries)


def unfold_bound_ucq(q: Ucq, sigma: dict, m: MappingSet) -> SourceLeaf:
    """Unfold ``q`` with every answer variable bound to a template.

    The result is a source leaf over the value variables of the templates.
    """
    missing = [a for a in q.answer_vars if a not in sigma]
    if missing:
        raise ValueError(f"unfolding needs a template for {missing}")
    leaf_vars, key = _leaf_pattern(q.answer_vars, sigma)
    queries = _unfold_bound(q, key, m)
    return SourceLeaf(leaf_vars, queries)


def is_false(q) -> bool:
    if isinstance(q, SourceLeaf):
        return not q.queries
    if isinstance(q, And):
        return is_false(q.left) or is_false(q.right)
    if isinstance(q, Or):
        return is_false(q.left) and is_false(q.right)
    if isinstance(q, Exists):
        return is_false(q.body)
    return False


class _Names:
    def __init__(self):
        self.n = 0

    def fresh(self, base, sym):
        self.n += 1
        return Var(f"{base}@{sym or 'val'}{self.n}")


def expansion_shapes(m: MappingSet):
    """Symbols a quantified variable can denote: each ``f/k`` plus bare values."""
    return sorted(function_symbols(m)) + [(None, 1)]


def live_leaf(template: Fn, m: MappingSet, t: TBox) -> SourceLeaf:
    x = Var("x")
    return unfold_bound_ucq(live_query(t), {x: template}, m)


def needs_live(q, var) -> bool:
    """Whether a quantifier over ``var`` must be guarded by ``live``.

    Negation-free bodies mentioning ``var`` already confine it to the
    active domain.
    """
    return var not in q.fv or has_negation(q)


def unfold_ecq(q, m: MappingSet, t: TBox, sigma=None, names=None):
    """Unfold a rewritten ECQ into a first-order query over the schema.

    ``sigma`` binds the ECQ's free variables to templates over value
    variables.  Existential quantifiers expand into one branch per function
    symbol plus a branch for bare values.
    """
    sigma = dict(sigma or {})
    names = names or _Names()
    unbound = [v for v in q.fv if v not in sigma]
    if unbound:
        raise ValueError(f"free variables {unbound} need templates before unfolding")
    return _unfold(q, m, t, sigma, names)


def _unfold(q, m, t, sigma, names):
    if isinstance(q, Embedded):
        return unfold_bound_ucq(q.ucq, {a: sigma[a] for a in q.ucq.answer_vars}, m)
    if isinstance(q, Not):
        return Not(_unfold(q.body, m, t, sigma, names))
    if isinstance(q, And):
        left = _unfold(q.left, m, t, sigma, names)
        if is_false(left):
            return FALSE_LEAF
        right = _unfold(q.right, m, t, sigma, names)
        if is_false(right):
            return FALSE_LEAF
        return And(left, right)
    if isinstance(q, Or):
        parts = [p for p in (_unfold(q.left, m, t, sigma, names), _unfold(q.right, m, t, sigma, names)) if not is_false(p)]
        if not parts:
            return FALSE_LEAF
        return parts[0] if len(parts) == 1 else Or(parts[0], parts[1])
    if isinstance(q, Exists):
        branches = []
        for sym, k in expansion_shapes(m):
            fresh = tuple(names.fresh(q.var.name, sym) for _ in range(k))
            template = Fn(sym, fresh)
            inner = dict(sigma)
            inner[q.var] = template
            body = _unfold(q.body, m, t, inner, names)
            if needs_live(q.body, q.var):
                live = live_leaf(template, m, t)
                if is_false(live):
                    continue
                body = And(live, body)
            if is_false(body):
                continue
            for v in reversed(fresh):
                body = Exists(v, body)
            branches.append(body)
        if not branches:
            return FALSE_LEAF
        out = branches[0]
        for b in branches[1:]:
            out = Or(out, b)
        return out
    raise TypeError(f"not an ECQ node: {q!r}")
