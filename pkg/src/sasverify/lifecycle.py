"""Guarded-action systems and the transition systems they generate.

File format (``.sys``)::

    schema Flag(v)
    pool v { 0, 1 }
    init { Flag(0) }
    action toggle(?old: adom, ?new: v)
      pre: Flag(?old), ?old != ?new
      del: Flag(?old)
      add: Flag(?new)

A parameter is typed by a pool (a declared column name) or by ``adom``, the
active domain of the current instance.  Parameters not bound by the
precondition are enumerated over their type.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .evaluate import holds_fo, solve
from .mapping import MappingSet, ObdaSystem, materialize, unfold_ucq
from .ontology import TBox, normalize
from .query import Atom, Filter, Ucq, Cq, Var, atom_vars, format_term
from .rewrite import concept_atom, perfect_ref, role_atom, unsat_query
from .syntax import ParseError, TokenStream, parse_literal
from .terms import (
    DatabaseInstance,
    Relation,
    Schema,
    SchemaError,
    adom_instance,
    canonical_form,
    format_fact,
    format_literal,
    is_value,
)

GOVERNANCE = ("prune", "assume", "fail")


class StateCapExceeded(RuntimeError):
    def __init__(self, cap):
        super().__init__(f"state cap of {cap} exceeded")
        self.cap = cap


class Inconsistent(RuntimeError):
    def __init__(self, instance, violated):
        facts = ", ".join(format_fact(n, t) for n, t in instance.facts())
        super().__init__(f"inconsistent state {{{facts}}} violates {', '.join(violated) or 'the TBox'}")
        self.instance = instance
        self.violated = violated


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple  # of (Var, type) where type is "adom" or a pool name
    pre: tuple = ()
    filters: tuple = ()
    delete: tuple = ()
    add: tuple = ()

    @property
    def param_vars(self):
        return tuple(v for v, _ in self.params)


@dataclass(frozen=True)
class ActionSystem:
    schema: Schema
    init: DatabaseInstance
    pools: tuple = ()  # of (column, tuple of values)
    actions: tuple = ()

    def __post_init__(self):
        pools = dict(self.pools)
        if len(pools) != len(self.pools):
            raise SchemaError("duplicate pool declaration")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate action name")
        for a in self.actions:
            _check_action(a, self.schema, pools)

    def pool(self, name):
        return dict(self.pools)[name]

    def __str__(self):
        return format_system(self)


def _check_action(a: Action, schema: Schema, pools):
    params = set()
    for v, ty in a.params:
        if v in params:
            raise SchemaError(f"action {a.name}: parameter {v} declared twice")
        params.add(v)
        if ty != "adom" and ty not in pools:
            raise SchemaError(f"action {a.name}: unknown pool {ty}")
    for atom in a.pre + a.delete + a.add:
        if atom.pred not in schema:
            raise SchemaError(f"action {a.name}: unknown relation {atom.pred}")
        if schema.arity(atom.pred) != len(atom.args):
            raise SchemaError(f"action {a.name}: {atom} has the wrong arity")
    bound = params | set(atom_vars(a.pre))
    for f in a.filters:
        for t in (f.left, f.right):
            if isinstance(t, Var) and t not in bound:
                raise SchemaError(f"action {a.name}: filter variable {t} is unbound")
    for atom in a.delete + a.add:
        for t in atom.args:
            if isinstance(t, Var):
                if t not in params:
                    raise SchemaError(f"action {a.name}: template variable {t} is not a parameter")
            elif not is_value(t):
                raise SchemaError(f"action {a.name}: templates hold parameters and values only")


@dataclass(frozen=True)
class SasSystem:
    actions: ActionSystem
    obda: ObdaSystem

    def __post_init__(self):
        if self.actions.schema != self.obda.schema:
            raise SchemaError("action system and OBDA system use different schemas")

    @property
    def tbox(self) -> TBox:
        return self.obda.tbox

    @property
    def mappings(self) -> MappingSet:
        return self.obda.mappings


# -- parsing and printing ---------------------------------------------------------


def _fact_template(ts: TokenStream, allow_vars: bool):
    name = ts.expect("IDENT")
    ts.expect_op("(")
    args = []
    while True:
        if allow_vars and ts.at("VAR"):
            args.append(Var(ts.next().text[1:]))
        else:
            args.append(parse_literal(ts))
        if not ts.accept("OP", ","):
            break
    ts.expect_op(")")
    return Atom(name.text, tuple(args))


def _templates(ts: TokenStream):
    if ts.at_word("none"):
        ts.next()
        return ()
    out = [_fact_template(ts, True)]
    while ts.accept("OP", ","):
        out.append(_fact_template(ts, True))
    return tuple(out)


def parse_system(text: str) -> ActionSystem:
    from .query import _Fresh, _parse_items

    ts = TokenStream(text)
    relations, pools, init_facts, actions = [], [], [], []
    try:
        while not ts.at_end():
            tok = ts.peek()
            if ts.at_word("schema"):
                ts.next()
                name = ts.expect("IDENT").text
                ts.expect_op("(")
                cols = [ts.expect("IDENT").text]
                while ts.accept("OP", ","):
                    cols.append(ts.expect("IDENT").text)
                ts.expect_op(")")
                relations.append(Relation(name, tuple(cols)))
            elif ts.at_word("pool"):
                ts.next()
                name = ts.expect("IDENT").text
                ts.expect_op("{")
                values = []
                if not ts.at_op("}"):
                    values.append(parse_literal(ts))
                    while ts.accept("OP", ","):
                        values.append(parse_literal(ts))
                ts.expect_op("}")
                for v in values:
                    if not is_value(v):
                        raise ts.error("pool values must be plain values", tok)
                pools.append((name, tuple(dict.fromkeys(values))))
            elif ts.at_word("init"):
                ts.next()
                ts.expect_op("{")
                while not ts.at_op("}"):
                    fact = _fact_template(ts, False)
                    init_facts.append((fact.pred, fact.args))
                    ts.accept("OP", ",")
                ts.expect_op("}")
            elif ts.at_word("action"):
                ts.next()
                name = ts.expect("IDENT").text
                ts.expect_op("(")
                params = []
                if not ts.at_op(")"):
                    while True:
                        v = Var(ts.expect("VAR").text[1:])
                        ts.expect_op(":")
                        params.append((v, ts.expect("IDENT").text))
                        if not ts.accept("OP", ","):
                            break
                ts.expect_op(")")
                pre, filters, dels, adds = (), (), (), ()
                if ts.at_word("pre"):
                    ts.next()
                    ts.expect_op(":")
                    taken = {v.name for v, _ in params}
                    atoms, fs = _parse_items(ts, _Fresh(taken), allow_filters=True)
                    pre, filters = tuple(atoms), tuple(fs)
                if ts.at_word("del"):
                    ts.next()
                    ts.expect_op(":")
                    dels = _templates(ts)
                if ts.at_word("add"):
                    ts.next()
                    ts.expect_op(":")
                    adds = _templates(ts)
                actions.append(Action(name, tuple(params), pre, filters, dels, adds))
            else:
                raise ts.error(f"expected schema, pool, init or action, got {tok.text!r}", tok)
        schema = Schema(relations)
        return ActionSystem(schema, DatabaseInstance(schema, init_facts), tuple(pools), tuple(actions))
    except SchemaError as exc:
        raise ParseError(str(exc)) from None


def _items_text(atoms, filters=()):
    parts = [f"{a.pred}({', '.join(format_term(t) for t in a.args)})" for a in atoms]
    parts += [str(f) for f in filters]
    return ", ".join(parts)


def format_system(s: ActionSystem) -> str:
    lines = [f"schema {r.name}({', '.join(r.columns)})" for r in s.schema]
    for name, values in s.pools:
        lines.append(f"pool {name} {{ {', '.join(format_literal(v) for v in values)} }}")
    facts = [format_fact(n, t) for n, t in s.init.facts()]
    lines.append("init { " + ", ".join(facts) + " }" if facts else "init { }")
    for a in s.actions:
        params = ", ".join(f"{v}: {ty}" for v, ty in a.params)
        lines.append(f"action {a.name}({params})")
        if a.pre or a.filters:
            lines.append(f"  pre: {_items_text(a.pre, a.filters)}")
        lines.append(f"  del: {_items_text(a.delete) or 'none'}")
        lines.append(f"  add: {_items_text(a.add) or 'none'}")
    return "\n".join(lines) + "\n"


# -- successor relation ------------------------------------------------------------


def _ground(templates, binding):
    return [(a.pred, tuple(binding[t] if isinstance(t, Var) else t for t in a.args)) for a in templates]


def groundings(sys: ActionSystem, action: Action, i: DatabaseInstance):
    """Every parameter assignment under which ``action`` is enabled in ``i``."""
    in_pre = set(atom_vars(action.pre))
    free = [v for v in action.param_vars if v not in in_pre]
    types = dict(action.params)
    pooled = {v: frozenset(sys.pool(ty)) for v, ty in action.params if ty != "adom" and v in in_pre}
    adom = None
    domains = []
    for v in free:
        if types[v] == "adom":
            if adom is None:
                adom = sorted(adom_instance(i), key=_value_key)
            domains.append(adom)
        else:
            domains.append(sys.pool(types[v]))
    seen = set()
    for combo in itertools.product(*domains):
        start = dict(zip(free, combo))
        for b in solve(action.pre, i, action.filters, start):
            g = tuple(b[v] for v in action.param_vars)
            if g in seen:
                continue
            if all(b[v] in pool for v, pool in pooled.items()):
                seen.add(g)
                yield dict(zip(action.param_vars, g))


def _value_key(v):
    from .terms import sort_key

    return sort_key(v)


def transitions(sys: ActionSystem, i: DatabaseInstance):
    """Yield ``(action, binding, successor)`` for every enabled grounded action."""
    for action in sys.actions:
        for b in groundings(sys, action, i):
            yield action, b, i.apply(_ground(action.delete, b), _ground(action.add, b))


def successors(sys: ActionSystem, i: DatabaseInstance) -> list:
    """Distinct successor instances, in canonical order."""
    out = {}
    for _, _, j in transitions(sys, i):
        out.setdefault(canonical_form(j), j)
    return [out[k] for k in sorted(out)]


# -- transition systems -------------------------------------------------------------


@dataclass
class TransitionSystem:
    states: list
    edges: frozenset
    initial: int = 0
    succ: list = field(default_factory=list)
    _aboxes: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.succ:
            succ = [[] for _ in self.states]
            for a, b in sorted(self.edges):
                succ[a].append(b)
            self.succ = [tuple(s) for s in succ]

    def db(self, s) -> DatabaseInstance:
        return self.states[s]

    def __len__(self):
        return len(self.states)

    def structure(self):
        return len(self.states), self.initial, self.edges


def unsat_fo(t: TBox, m: MappingSet):
    """The unsatisfiability query unfolded to the schema."""
    return unfold_ucq(unsat_query(normalize(t)), m)


def violated_disjointness(t: TBox, m: MappingSet, i: DatabaseInstance) -> list:
    t = normalize(t)
    out = []
    x, y = Var("x"), Var("y")
    checks = []
    n = iter(range(1, 1 << 30))

    def fresh():
        return Var(f"u{next(n)}")

    for d in t.concept_disjointness:
        checks.append((str(d), (concept_atom(d.first, x, fresh), concept_atom(d.second, x, fresh))))
    for d in t.role_disjointness:
        checks.append((str(d), (role_atom(d.first, x, y), role_atom(d.second, x, y))))
    for label, atoms in checks:
        q = perfect_ref(Ucq((), (Cq((), atoms),)), t)
        if holds_fo(unfold_ucq(q, m), i):
            out.append(label)
    return out


def build_rts(sas, governance: str = "assume", cap: int = 10000) -> TransitionSystem:
    """Breadth-first closure from the initial instance.

    ``sas`` is a :class:`SasSystem` or a bare :class:`ActionSystem` (no
    ontology, so every state is consistent).
    """
    if governance not in GOVERNANCE:
        raise ValueError(f"governance must be one of {GOVERNANCE}")
    if cap < 1:
        raise ValueError("state cap must be at least 1")
    if isinstance(sas, SasSystem):
        sys_, t, m = sas.actions, sas.tbox, sas.mappings
        check = unsat_fo(t, m) if governance != "assume" and unsat_query(normalize(t)).disjuncts else None
    else:
        sys_, t, m, check = sas, None, None, None

    def consistent(i):
        return check is None or not holds_fo(check, i)

    init = sys_.init
    if not consistent(init):
        raise Inconsistent(init, violated_disjointness(t, m, init))
    states = [init]
    index = {canonical_form(init): 0}
    edges = set()
    frontier = [0]
    while frontier:
        fresh = {}
        pending = []
        for s in frontier:
            for j in successors(sys_, states[s]):
                key = canonical_form(j)
                if key in index:
                    edges.add((s, index[key]))
                    continue
                if key not in fresh:
                    if not consistent(j):
                        if governance == "fail":
                            raise Inconsistent(j, violated_disjointness(t, m, j))
                        fresh[key] = None
                    else:
                        fresh[key] = j
                if fresh[key] is not None:
                    pending.append((s, key))
        frontier = []
        for key in sorted(k for k, j in fresh.items() if j is not None):
            if len(states) >= cap:
                raise StateCapExceeded(cap)
            index[key] = len(states)
            states.append(fresh[key])
            frontier.append(index[key])
        for s, key in pending:
            edges.add((s, index[key]))
    return TransitionSystem(states, frozenset(edges))


def sts_abox(rts: TransitionSystem, m: MappingSet, s: int):
    """``abox(s) = M(db(s))``, memoized per state."""
    if not 0 <= s < len(rts.states):
        raise KeyError(f"unknown state {s}")
    key = (m, s)
    a = rts._aboxes.get(key)
    if a is None:
        a = rts._aboxes[key] = materialize(m, rts.states[s])
    return a


__all__ = [
    "Action",
    "ActionSystem",
    "Filter",
    "Inconsistent",
    "SasSystem",
    "StateCapExceeded",
    "TransitionSystem",
    "build_rts",
    "format_system",
    "groundings",
    "parse_system",
    "sts_abox",
    "successors",
    "transitions",
    "unsat_fo",
    "violated_disjointness",
]
