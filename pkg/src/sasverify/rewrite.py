"""Compiling a DL-Lite_R TBox away from queries.

:func:`perfect_ref` saturates a UCQ under two steps until nothing new
appears (modulo variable renaming):

* atom rewriting: replace one atom by the body of a positive inclusion that
  applies to it, e.g. ``B <= A`` turns ``A(x)`` into ``B(x)``;
* reduction: unify two atoms of one conjunct with their most general unifier.

The input's conjuncts are returned verbatim; derived conjuncts subsumed by
another conjunct are dropped.

A variable is *unbound* when it is not an answer position and occurs once;
existential inclusions only apply to atoms whose other argument is unbound.
"""
from __future__ import annotations

from functools import lru_cache

from .evaluate import eval_ucq
from .ontology import ConceptDisjoint, ExistsRole, Named, Role, TBox, normalize
from .query import Atom, Cq, Embedded, Ucq, Var, map_leaves, rename_cq_canonical
from .terms import is_constant


class _Fresh:
    def __init__(self, prefix="n"):
        self.prefix = prefix
        self.n = 0

    def __call__(self):
        self.n += 1
        return Var(f"{self.prefix}{self.n}")


def concept_atom(b, x, fresh) -> Atom:
    """The atom asserting membership of ``x`` in the basic concept ``b``."""
    if isinstance(b, Named):
        return Atom(b.name, (x,))
    role = b.role
    if role.inverse:
        return Atom(role.name, (fresh(), x))
    return Atom(role.name, (x, fresh()))


def role_atom(u: Role, x, y) -> Atom:
    return Atom(u.name, (y, x)) if u.inverse else Atom(u.name, (x, y))


class _Rules:
    """Positive inclusions indexed by the predicate they can rewrite."""

    def __init__(self, t: TBox):
        self.concept = {}  # A -> [lhs]
        self.exists = {}  # (P, inverse) -> [lhs]
        self.roles = {}  # P -> [(P1, swap)]
        for ci in t.concept_inclusions:
            if isinstance(ci.rhs, Named):
                self.concept.setdefault(ci.rhs.name, []).append(ci.lhs)
            elif isinstance(ci.rhs, ExistsRole):
                key = (ci.rhs.role.name, ci.rhs.role.inverse)
                self.exists.setdefault(key, []).append(ci.lhs)
        for ri in t.role_inclusions:
            for lhs, rhs in ((ri.lhs, ri.rhs), (ri.lhs.inv(), ri.rhs.inv())):
                if not rhs.inverse:
                    swap = lhs.inverse
                    entry = (lhs.name, swap)
                    bucket = self.roles.setdefault(rhs.name, [])
                    if entry not in bucket:
                        bucket.append(entry)


def _occurrences(head, atoms):
    counts = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1
    head_vars = {h for h in head if isinstance(h, Var)}
    return counts, head_vars


def _unbound(t, counts, head_vars):
    return isinstance(t, Var) and t not in head_vars and counts.get(t, 0) == 1


def _atom_rewritings(atom, rules: _Rules, counts, head_vars, fresh):
    if len(atom.args) == 1:
        (x,) = atom.args
        for lhs in rules.concept.get(atom.pred, ()):
            yield concept_atom(lhs, x, fresh)
        return
    x, y = atom.args
    if _unbound(y, counts, head_vars):
        for lhs in rules.exists.get((atom.pred, False), ()):
            yield concept_atom(lhs, x, fresh)
    if _unbound(x, counts, head_vars):
        for lhs in rules.exists.get((atom.pred, True), ()):
            yield concept_atom(lhs, y, fresh)
    for name, swap in rules.roles.get(atom.pred, ()):
        yield Atom(name, (y, x) if swap else (x, y))


def _mgu(a1: Atom, a2: Atom):
    if a1.pred != a2.pred or len(a1.args) != len(a2.args):
        return None
    parent = {}

    def find(t):
        while t in parent:
            t = parent[t]
        return t

    for s, t in zip(a1.args, a2.args):
        s, t = find(s), find(t)
        if s == t:
            continue
        if is_constant(s) and is_constant(t):
            return None
        if is_constant(s):
            s, t = t, s
        parent[s] = t
    return {v: find(v) for v in parent}


def _substitute(head, atoms, sub):
    def s(t):
        return sub.get(t, t) if isinstance(t, Var) else t

    return tuple(s(h) for h in head), tuple(Atom(a.pred, tuple(s(t) for t in a.args)) for a in atoms)


def _steps(head, atoms, rules, fresh):
    counts, head_vars = _occurrences(head, atoms)
    for i, atom in enumerate(atoms):
        for new in _atom_rewritings(atom, rules, counts, head_vars, fresh):
            yield head, atoms[:i] + (new,) + atoms[i + 1:]
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            sub = _mgu(atoms[i], atoms[j])
            if sub is not None:
                yield _substitute(head, atoms, sub)


@lru_cache(maxsize=4096)
def _perfect_ref(q: Ucq, t: TBox) -> Ucq:
    t = normalize(t)
    rules = _Rules(t)
    fresh = _Fresh()
    seen = {}
    for cq in q.disjuncts:
        seen.setdefault(rename_cq_canonical(cq.head, cq.atoms), cq)
    order = list(seen)
    n_input = len(order)
    frontier = list(order)
    while frontier:
        nxt = []
        for head, atoms in frontier:
            for h2, a2 in _steps(head, atoms, rules, fresh):
                key = rename_cq_canonical(h2, a2)
                if key not in seen:
                    seen[key] = Cq(*key)
                    order.append(key)
                    nxt.append(key)
        frontier = nxt
    aux = t.auxiliary_roles
    # the input's own conjuncts come first, verbatim
    out = list(q.disjuncts) + [
        seen[key] for key in order[n_input:] if not (aux and any(a.pred in aux for a in seen[key].atoms))
    ]
    return Ucq(q.answer_vars, tuple(_prune(out, len(q.disjuncts))))


def _maps_into(general: Cq, specific: Cq) -> bool:
    """Is there a homomorphism from ``general`` onto ``specific`` fixing the head?"""
    binding = {}
    for g, s in zip(general.head, specific.head):
        if isinstance(g, Var):
            if binding.setdefault(g, s) != s:
                return False
        elif g != s:
            return False
    by_pred = {}
    for a in specific.atoms:
        by_pred.setdefault(a.pred, []).append(a.args)

    def go(k, b):
        if k == len(general.atoms):
            return True
        atom = general.atoms[k]
        for args in by_pred.get(atom.pred, ()):
            nb = dict(b)
            for x, c in zip(atom.args, args):
                if isinstance(x, Var):
                    if nb.setdefault(x, c) != c:
                        break
                elif x != c:
                    break
            else:
                if go(k + 1, nb):
                    return True
        return False

    return go(0, binding)


def _prune(cqs, n_original):
    # keep only maximal conjuncts (the earliest of equivalent ones); the
    # input's own conjuncts always stay
    kept = list(cqs[:n_original])
    for d in cqs[n_original:]:
        if any(_maps_into(c, d) for c in kept):
            continue
        kept = kept[:n_original] + [c for c in kept[n_original:] if not _maps_into(d, c)]
        kept.append(d)
    return kept


def perfect_ref(q: Ucq, t: TBox) -> Ucq:
    """Rewrite ``q`` so that plain evaluation yields certain answers w.r.t. ``t``."""
    return _perfect_ref(q, t)


def rewrite_ecq(q, t: TBox):
    """Replace every embedded UCQ by its rewriting; connectives untouched."""
    return map_leaves(q, lambda leaf: Embedded(perfect_ref(leaf.ucq, t)))


@lru_cache(maxsize=256)
def unsat_query(t: TBox) -> Ucq:
    """Boolean UCQ that is true exactly on ABoxes inconsistent with ``t``."""
    t = normalize(t)
    fresh = _Fresh("u")
    disjuncts = []
    for d in t.concept_disjointness:
        x = Var("x")
        disjuncts.append(Cq((), (concept_atom(d.first, x, fresh), concept_atom(d.second, x, fresh))))
    for d in t.role_disjointness:
        x, y = Var("x"), Var("y")
        disjuncts.append(Cq((), (role_atom(d.first, x, y), role_atom(d.second, x, y))))
    return perfect_ref(Ucq((), tuple(disjuncts)), t)


def is_satisfiable(t: TBox, a) -> bool:
    return not eval_ucq(unsat_query(t), a)


__all__ = [
    "ConceptDisjoint",
    "concept_atom",
    "is_satisfiable",
    "perfect_ref",
    "rewrite_ecq",
    "role_atom",
    "unsat_query",
]
