"""Seeded random generators for every artifact the library consumes."""
from __future__ import annotations

import random

from sasverify.lifecycle import Action, ActionSystem
from sasverify.mapping import MappingAssertion, MappingSet
from sasverify.ontology import (
    ConceptDisjoint,
    ConceptInclusion,
    ExistsRole,
    Named,
    QualifiedExists,
    Role,
    RoleDisjoint,
    RoleInclusion,
    TBox,
)
from sasverify.query import (
    And,
    Atom,
    Cq,
    Embedded,
    Exists,
    Filter,
    Fn,
    Not,
    Or,
    SourceLeaf,
    SourceQuery,
    Ucq,
    Var,
)
from sasverify.temporal.formula import (
    AU,
    EU,
    Branch,
    ExistsQ,
    Forall,
    Local,
    QuantBlock,
    TAnd,
    TImplies,
    TNot,
    TOr,
    Temporal,
)
from sasverify.terms import TRUE, ABox, DatabaseInstance, Relation, Schema
from sasverify.lifecycle import TransitionSystem

CONCEPTS = ("A", "B", "C", "D", "E")
ROLES = ("P", "Q", "R")
TEMPORAL_OPS = ("AG", "EG", "AF", "EF", "AX", "EX")


# -- ontologies ----------------------------------------------------------------------


def _role(rng, roles):
    return Role(rng.choice(roles), rng.random() < 0.4)


def _basic(rng, concepts, roles):
    if roles and rng.random() < 0.35:
        return ExistsRole(_role(rng, roles))
    return Named(rng.choice(concepts))


def random_tbox(rng, *, concepts=None, roles=None, size=None, disjoint=0, max_exist=3, qualified=True):
    """A DL-Lite TBox over at most 8 names with at most 12 assertions."""
    if concepts is None:
        concepts = CONCEPTS[: rng.randint(2, 5)]
    if roles is None:
        roles = ROLES[: rng.randint(1, 3)]
    size = rng.randint(1, 12 - disjoint) if size is None else size
    cis, ris = [], []
    exist = 0
    for _ in range(size):
        r = rng.random()
        if roles and r < 0.2:
            ris.append(RoleInclusion(_role(rng, roles), _role(rng, roles)))
            continue
        lhs = _basic(rng, concepts, roles)
        if roles and exist < max_exist and r < 0.45:
            exist += 1
            role = _role(rng, roles)
            rhs = QualifiedExists(role, Named(rng.choice(concepts))) if qualified and rng.random() < 0.5 else ExistsRole(role)
        else:
            rhs = _basic(rng, concepts, roles)
        cis.append(ConceptInclusion(lhs, rhs))
    cds, rds = [], []
    for _ in range(disjoint):
        if roles and rng.random() < 0.25:
            rds.append(RoleDisjoint(_role(rng, roles), _role(rng, roles)))
        else:
            cds.append(ConceptDisjoint(_basic(rng, concepts, roles), _basic(rng, concepts, roles)))
    return TBox(tuple(cis), tuple(ris), tuple(cds), tuple(rds))


def covering_tbox(rng, concepts, roles, extra=3):
    """A TBox whose vocabulary is exactly ``concepts`` and ``roles``."""
    base = random_tbox(rng, concepts=concepts, roles=roles, size=extra, qualified=False)
    cover = [ConceptInclusion(Named(c), Named(c)) for c in concepts]
    cover += [ConceptInclusion(ExistsRole(Role(r)), ExistsRole(Role(r))) for r in roles]
    return TBox(base.concept_inclusions + tuple(cover), base.role_inclusions)


def random_abox(rng, concepts, roles, size=None, constants=("a", "b", "c", "d")):
    size = rng.randint(0, 12) if size is None else size
    cs, rs = set(), set()
    for _ in range(size):
        if roles and rng.random() < 0.45:
            rs.add((rng.choice(roles), rng.choice(constants), rng.choice(constants)))
        else:
            cs.add((rng.choice(concepts), rng.choice(constants)))
    return ABox(cs, rs)


# -- queries -------------------------------------------------------------------------


def random_cq_atoms(rng, concepts, roles, n_atoms, base_vars, constants=()):
    """A connected atom list; variables are drawn from ``base_vars`` first."""
    pool = list(base_vars) or [Var("x")]
    used = [pool[0]]
    fresh = iter(Var(f"y{k}") for k in range(100))
    atoms = []
    for _ in range(n_atoms):
        anchor = rng.choice(used)
        if roles and rng.random() < 0.55:
            if constants and rng.random() < 0.1:
                other = rng.choice(constants)
            elif rng.random() < 0.5 or len(used) == 1:
                other = next((v for v in pool if v not in used), None) or next(fresh)
                used.append(other)
            else:
                other = rng.choice(used)
            pair = (anchor, other) if rng.random() < 0.5 else (other, anchor)
            atoms.append(Atom(rng.choice(roles), pair))
        else:
            atoms.append(Atom(rng.choice(concepts), (anchor,)))
    for v in pool:
        if v not in used:
            atoms.append(Atom(rng.choice(concepts), (v,)))
            if roles and rng.random() < 0.5:
                atoms[-1] = Atom(rng.choice(roles), (used[0], v) if rng.random() < 0.5 else (v, used[0]))
            used.append(v)
    return tuple(atoms)


def random_cq(rng, concepts, roles, max_atoms=4, max_answers=2, constants=()):
    n = rng.randint(1, max_atoms)
    vs = [Var("x"), Var("z")][: rng.randint(0, max_answers)]
    atoms = random_cq_atoms(rng, concepts, roles, n, vs or [Var("w")], constants)
    return Ucq.of(tuple(vs), atoms)


def random_ucq(rng, concepts, roles, answer_vars, disjuncts=None, max_atoms=3, constants=()):
    k = rng.randint(1, 2) if disjuncts is None else disjuncts
    answer_vars = tuple(answer_vars)
    bodies = []
    for _ in range(k):
        n = rng.randint(1, max_atoms)
        bodies.append(random_cq_atoms(rng, concepts, roles, n, list(answer_vars) or [Var("w")], constants))
    return Ucq(answer_vars, tuple(Cq(answer_vars, b) for b in bodies))


def random_ecq(rng, concepts, roles, scope=(), depth=2, closed_vars=("u", "v", "s")):
    """An ECQ whose free variables lie within ``scope``."""
    r = rng.random()
    if depth <= 0 or r < 0.3:
        k = rng.randint(0, min(2, len(scope)))
        ans = tuple(rng.sample(list(scope), k))
        return Embedded(random_ucq(rng, concepts, roles, ans, max_atoms=2))
    if r < 0.45:
        return Not(random_ecq(rng, concepts, roles, scope, depth - 1, closed_vars))
    if r < 0.7:
        return And(random_ecq(rng, concepts, roles, scope, depth - 1, closed_vars), random_ecq(rng, concepts, roles, scope, depth - 1, closed_vars))
    fresh = [Var(n) for n in closed_vars if Var(n) not in scope]
    if not fresh:
        return Not(random_ecq(rng, concepts, roles, scope, depth - 1, closed_vars))
    v = fresh[0]
    return Exists(v, random_ecq(rng, concepts, roles, tuple(scope) + (v,), depth - 1, closed_vars))


# -- relational side --------------------------------------------------------------


def random_schema(rng, n=None, max_arity=3):
    n = rng.randint(1, 3) if n is None else n
    return Schema(Relation(f"R{k}", tuple(f"c{j}" for j in range(rng.randint(1, max_arity)))) for k in range(n))


def random_instance(rng, schema, values=(0, 1, 2, 3), max_tuples=4):
    facts = []
    for rel in schema:
        for _ in range(rng.randint(0, max_tuples)):
            facts.append((rel.name, tuple(rng.choice(values) for _ in range(rel.arity))))
    return DatabaseInstance(schema, facts)


def _source_atoms(rng, schema, vars_, constants=(0, 1)):
    atoms = []
    for _ in range(rng.randint(1, 2)):
        rel = rng.choice(schema.relations)
        args = []
        for _ in range(rel.arity):
            if constants and rng.random() < 0.12:
                args.append(rng.choice(constants))
            else:
                args.append(rng.choice(vars_))
        atoms.append(Atom(rel.name, tuple(args)))
    return tuple(atoms)


def random_filters(rng, vars_, values=(0, 1, 2), ordering=True):
    out = []
    if vars_ and rng.random() < 0.3:
        ops = ("=", "!=", "<", "<=", ">", ">=") if ordering else ("=", "!=")
        left = rng.choice(vars_)
        right = rng.choice(vars_) if rng.random() < 0.3 else rng.choice(values)
        out.append(Filter(left, rng.choice(ops), right))
    return tuple(out)


def random_source_query(rng, schema, output=None, vars_=("a", "b", "c")):
    vs = [Var(n) for n in vars_]
    atoms = _source_atoms(rng, schema, vs)
    bound = [v for a in atoms for v in a.args if isinstance(v, Var)]
    bound = list(dict.fromkeys(bound))
    if output is None:
        output = tuple(bound)
    return SourceQuery(atoms, random_filters(rng, bound), tuple(output))


SYMBOLS = (("f", 1), ("g", 2), ("h", 1))


def random_mappings(rng, schema, concepts=("A", "B", "C"), roles=("P", "Q"), n=None, symbols=SYMBOLS, bare=0.3):
    n = rng.randint(1, 5) if n is None else n
    symbols = symbols[: rng.randint(0, len(symbols))] if symbols else ()
    out = []
    for k in range(n):
        sq = random_source_query(rng, schema)
        outs = list(sq.output_vars)
        if not outs:
            # a source made of constants only: give it one variable
            rel = schema.relations[0]
            atom = Atom(rel.name, (Var("a"),) + tuple(0 for _ in range(rel.arity - 1)))
            sq = SourceQuery(sq.atoms + (atom,), sq.filters, tuple(dict.fromkeys(sq.output_vars + (Var("a"),))))
            outs = list(sq.output_vars)

        def term():
            if not symbols or rng.random() < bare:
                return rng.choice(outs)
            sym, ar = rng.choice(symbols)
            return Fn(sym, tuple(rng.choice(outs) for _ in range(ar)))

        target = []
        for _ in range(rng.randint(1, 2)):
            if rng.random() < 0.5:
                target.append(Atom(rng.choice(concepts), (term(),)))
            else:
                target.append(Atom(rng.choice(roles), (term(), term())))
        out.append(MappingAssertion(f"m{k}", sq, tuple(target)))
    return MappingSet(out, schema)


# -- action systems ---------------------------------------------------------------------


def random_action_system(rng, *, relations=None, max_arity=3, max_actions=5, values=(0, 1, 2), strings=False):
    """A guarded-action system; pools hold at most 3 values."""
    n_rel = rng.randint(1, 3) if relations is None else relations
    cols_all = ("k", "v", "w", "s")
    rels = []
    for i in range(n_rel):
        ar = rng.randint(1, max_arity)
        rels.append(Relation(f"T{i}", cols_all[:ar]))
    schema = Schema(rels)
    pool_cols = sorted({c for r in rels for c in r.columns})
    pools = []
    for c in pool_cols:
        if rng.random() < 0.7:
            vals = tuple(sorted(rng.sample(values, rng.randint(1, min(3, len(values))))))
            if strings and rng.random() < 0.3:
                vals = ("x", "y")[: rng.randint(1, 2)]
            pools.append((c, vals))
    init_vals = list(values) + (["x", '"q"'] if strings else [])
    facts = []
    for r in rels:
        for _ in range(rng.randint(0, 2)):
            facts.append((r.name, tuple(rng.choice(init_vals) for _ in range(r.arity))))
    if strings and rng.random() < 0.3 and facts:
        name, t = facts[0]
        facts[0] = (name, (TRUE,) + t[1:])
    init = DatabaseInstance(schema, facts)
    actions = []
    for k in range(rng.randint(0, max_actions)):
        params = []
        for j in range(rng.randint(1, 2)):
            ty = rng.choice(["adom"] + [c for c, _ in pools])
            params.append((Var(f"p{j}"), ty))
        pvars = [v for v, _ in params]
        extra = [Var("e0"), Var("e1")]
        pre = []
        for _ in range(rng.randint(0, 2)):
            rel = rng.choice(rels)
            pre.append(Atom(rel.name, tuple(rng.choice(pvars + extra[:1]) for _ in range(rel.arity))))
        bound = list(dict.fromkeys(pvars + [t for a in pre for t in a.args if isinstance(t, Var)]))
        filters = ()
        if rng.random() < 0.3:
            filters = (Filter(rng.choice(pvars), rng.choice(("=", "!=")), rng.choice(bound)),)
        delete = tuple(a for a in pre if all(not isinstance(t, Var) or t in pvars for t in a.args) and rng.random() < 0.6)
        add = []
        for _ in range(rng.randint(0, 2)):
            rel = rng.choice(rels)
            add.append(Atom(rel.name, tuple(rng.choice(pvars) if rng.random() < 0.8 else rng.choice(values) for _ in range(rel.arity))))
        actions.append(Action(f"act{k}", tuple(params), tuple(pre), filters, delete, tuple(add)))
    return ActionSystem(schema, init, tuple(pools), tuple(actions))


# -- temporal properties ------------------------------------------------------------------


def _guard_ucq(rng, concepts, roles, v, scope):
    """A guard for ``v``: ``v`` first in a role or inside a concept atom."""
    atoms = []
    if roles and rng.random() < 0.4:
        other = rng.choice(list(scope)) if scope and rng.random() < 0.5 else Var("g")
        atoms.append(Atom(rng.choice(roles), (v, other)))
        if other == Var("g") and rng.random() < 0.5:
            atoms.append(Atom(rng.choice(concepts), (other,)))
    else:
        atoms.append(Atom(rng.choice(concepts), (v,)))
    ans = (v,)
    if scope and rng.random() < 0.3:
        w = rng.choice(list(scope))
        if roles:
            atoms.append(Atom(rng.choice(roles), (w, v) if rng.random() < 0.5 else (v, w)))
            ans = (v, w)
    return Embedded(Ucq.of(ans, atoms))


def _local_query(rng, concepts, roles, scope):
    if rng.random() < 0.75 or not scope:
        k = rng.randint(0, min(2, len(scope)))
        ans = tuple(rng.sample(list(scope), k))
        return Embedded(random_ucq(rng, concepts, roles, ans, disjuncts=rng.randint(1, 2), max_atoms=2))
    return random_ecq(rng, concepts, roles, tuple(scope), depth=2)


def random_property(rng, concepts, roles, scope=(), depth=3, quantifiers=True):
    r = rng.random()
    if depth <= 0 or r < 0.15:
        return Local(_local_query(rng, concepts, roles, scope))
    if quantifiers and r < 0.4 and len(scope) < 2:
        v = Var(("x", "y")[len(scope)])
        guard = _guard_ucq(rng, concepts, roles, v, scope)
        if rng.random() < 0.15:
            body = None
        else:
            body = random_property(rng, concepts, roles, tuple(scope) + (v,), depth - 1, quantifiers)
        return (Forall if rng.random() < 0.5 else ExistsQ)((v,), guard, body)
    if r < 0.55:
        return TNot(random_property(rng, concepts, roles, scope, depth - 1, quantifiers))
    if r < 0.75:
        return Temporal(rng.choice(TEMPORAL_OPS), random_property(rng, concepts, roles, scope, depth - 1, quantifiers))
    cls = rng.choice((TAnd, TOr, TImplies, AU, EU))
    return cls(
        random_property(rng, concepts, roles, scope, depth - 1, quantifiers),
        random_property(rng, concepts, roles, scope, depth - 1, quantifiers),
    )


# -- raw transition systems for the checker ------------------------------------------------


CTL_SCHEMA = Schema([Relation("R", ("a", "b")), Relation("S", ("a",))])


def random_rts(rng, max_states=50, values=(0, 1, 2)):
    n = rng.randint(1, max_states)
    seen, states = set(), []
    universe = [("R", (a, b)) for a in values for b in values] + [("S", (a,)) for a in values]
    while len(states) < n:
        facts = frozenset(f for f in universe if rng.random() < 0.25)
        if facts in seen:
            if len(seen) > 4 * n:
                break
            continue
        seen.add(facts)
        states.append(DatabaseInstance(CTL_SCHEMA, facts))
    n = len(states)
    edges = set()
    for s in range(n):
        if rng.random() < 0.12:
            continue
        for _ in range(rng.randint(1, 3)):
            edges.add((s, rng.randrange(n)))
    return TransitionSystem(states, frozenset(edges))


def _fo_leaf(rng, vars_):
    """A source leaf projecting onto ``vars_``."""
    pool = list(vars_) + [Var("e")]
    queries = []
    for _ in range(rng.randint(1, 2)):
        atoms = []
        for v in vars_:
            atoms.append(Atom("S", (v,)) if rng.random() < 0.5 else Atom("R", (v, rng.choice(pool)) if rng.random() < 0.5 else (rng.choice(pool), v)))
        if not atoms or rng.random() < 0.4:
            atoms.append(Atom("R", (rng.choice(pool), rng.choice(pool))) if rng.random() < 0.6 else Atom("S", (rng.choice(pool),)))
        bound = list(dict.fromkeys(t for a in atoms for t in a.args if isinstance(t, Var)))
        queries.append(SourceQuery(tuple(atoms), random_filters(rng, bound, values=(0, 1, 2)), tuple(vars_)))
    return SourceLeaf(tuple(vars_), tuple(queries))


def random_fo(rng, scope, depth=2):
    r = rng.random()
    if depth <= 0 or r < 0.4:
        k = rng.randint(0, min(2, len(scope)))
        return _fo_leaf(rng, tuple(rng.sample(list(scope), k)))
    if r < 0.55:
        return Not(random_fo(rng, scope, depth - 1))
    if r < 0.7:
        return And(random_fo(rng, scope, depth - 1), random_fo(rng, scope, depth - 1))
    if r < 0.85:
        return Or(random_fo(rng, scope, depth - 1), random_fo(rng, scope, depth - 1))
    v = Var(f"q{len(scope)}")
    return Exists(v, random_fo(rng, tuple(scope) + (v,), depth - 1))


def random_ctl_a(rng, scope=(), depth=3):
    """A relational CTL formula with single-branch quantifier blocks."""
    r = rng.random()
    if depth <= 0 or r < 0.15:
        return Local(random_fo(rng, scope, 1))
    if r < 0.35 and len(scope) < 2:
        v = Var(("x", "y")[len(scope)])
        ans = (v,) + ((rng.choice(scope),) if scope and rng.random() < 0.3 else ())
        guard = _fo_leaf(rng, ans)
        body = random_ctl_a(rng, tuple(scope) + (v,), depth - 1)
        kind = rng.choice(("forall", "exists"))
        return QuantBlock(kind, (v,), (Branch((Fn(None, (v,)),), (v,), guard, body),))
    if r < 0.5:
        return TNot(random_ctl_a(rng, scope, depth - 1))
    if r < 0.75:
        return Temporal(rng.choice(TEMPORAL_OPS), random_ctl_a(rng, scope, depth - 1))
    cls = rng.choice((TAnd, TOr, TImplies, AU, EU))
    return cls(random_ctl_a(rng, scope, depth - 1), random_ctl_a(rng, scope, depth - 1))


def rng_for(*seed):
    return random.Random(":".join(map(str, seed)))


__all__ = [name for name in dir() if name.startswith("random_")] + ["CTL_SCHEMA", "covering_tbox", "rng_for"]

