"""Plain (no-reasoning) evaluation of queries with active-domain semantics."""
from __future__ import annotations

from itertools import product

from .query import (
    And,
    Embedded,
    Exists,
    Not,
    Or,
    SourceLeaf,
    Tagged,
    Var,
)
from .terms import Bool, ObjectTerm, adom_abox, adom_instance


class EvaluationError(TypeError):
    pass


def compare(op, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if type(a) is not type(b) or isinstance(a, ObjectTerm):
        raise EvaluationError(f"cannot order {a!r} and {b!r}")
    if isinstance(a, Bool):
        a, b = a.value, b.value
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _resolve(t, binding):
    if isinstance(t, Var):
        return binding.get(t, _UNBOUND)
    return t


_UNBOUND = object()


def solve(atoms, store, filters=(), binding=None):
    """Yield every extension of ``binding`` mapping all atoms into ``store``.

    ``store`` provides ``tuples(pred)`` and ``index(pred, pos)``; atom
    arguments are variables or constants.
    """
    binding = dict(binding or {})
    pending = list(filters)
    ok, pending = _check_filters(pending, binding)
    if not ok:
        return
    yield from _solve(list(atoms), store, pending, binding)


def _check_filters(filters, binding):
    rest = []
    for f in filters:
        a, b = _resolve(f.left, binding), _resolve(f.right, binding)
        if a is _UNBOUND or b is _UNBOUND:
            rest.append(f)
        elif not compare(f.op, a, b):
            return False, rest
    return True, rest


def _solve(atoms, store, filters, binding):
    if not atoms:
        yield dict(binding)
        return
    # most-bound atom first
    best, best_score = 0, -1
    for i, a in enumerate(atoms):
        score = sum(1 for t in a.args if not isinstance(t, Var) or t in binding)
        if score > best_score:
            best, best_score = i, score
    atom = atoms[best]
    rest = atoms[:best] + atoms[best + 1:]
    args = atom.args
    n = len(args)
    candidates = None
    for pos, t in enumerate(args):
        val = _resolve(t, binding)
        if val is not _UNBOUND:
            candidates = store.index(atom.pred, pos).get(val, ())
            break
    if candidates is None:
        candidates = store.tuples(atom.pred)
    for tup in candidates:
        if len(tup) != n:
            continue
        added = []
        ok = True
        for t, c in zip(args, tup):
            if isinstance(t, Var):
                cur = binding.get(t, _UNBOUND)
                if cur is _UNBOUND:
                    binding[t] = c
                    added.append(t)
                elif cur != c:
                    ok = False
                    break
            elif t != c:
                ok = False
                break
        if ok:
            if filters and added:
                ok, remaining = _check_filters(filters, binding)
            else:
                remaining = filters
            if ok:
                yield from _solve(rest, store, remaining, binding)
        for t in added:
            del binding[t]


# -- UCQs over ABoxes -----------------------------------------------------------


def _head_binding(answer_vars, head, env):
    """Pre-bind head variables from ``env``; None when inconsistent."""
    binding = {}
    for a, h in zip(answer_vars, head):
        if a not in env:
            continue
        want = env[a]
        if isinstance(h, Var):
            if binding.get(h, want) != want:
                return None
            binding[h] = want
        elif h != want:
            return None
    return binding


def eval_ucq(q, a, env=None) -> set:
    """Answers of ``q`` over the ABox ``a`` as tuples over ``q.answer_vars``."""
    env = env or {}
    out = set()
    for cq in q.disjuncts:
        binding = _head_binding(q.answer_vars, cq.head, env)
        if binding is None:
            continue
        for b in solve(cq.atoms, a, (), binding):
            out.add(tuple(b[h] if isinstance(h, Var) else h for h in cq.head))
    return out


# -- connectives with active-domain semantics --------------------------------


class _Engine:
    def __init__(self, domain_fn, leaf_fn):
        self._domain_fn = domain_fn
        self._domain = None
        self.leaf = leaf_fn

    @property
    def domain(self):
        if self._domain is None:
            self._domain = tuple(self._domain_fn())
        return self._domain

    def rel(self, q, env):
        """Return ``(vars, rows)`` for the free variables of ``q`` not in ``env``."""
        vars_ = tuple(v for v in q.fv if v not in env)
        if isinstance(q, (Embedded, SourceLeaf, Tagged)):
            return vars_, self.leaf(q, env, vars_)
        if isinstance(q, Not):
            _, inner = self.rel(q.body, env)
            if not vars_:
                return vars_, set() if inner else {()}
            return vars_, {t for t in product(self.domain, repeat=len(vars_)) if t not in inner}
        if isinstance(q, Exists):
            inner_env = env
            if q.var in env:
                inner_env = {k: v for k, v in env.items() if k != q.var}
            bvars, rows = self.rel(q.body, inner_env)
            if q.var not in bvars:
                if not self.domain:
                    return vars_, set()
                return vars_, _reorder(bvars, rows, vars_)
            keep = [i for i, v in enumerate(bvars) if v != q.var]
            projected = {tuple(r[i] for i in keep) for r in rows}
            return vars_, _reorder(tuple(bvars[i] for i in keep), projected, vars_)
        if isinstance(q, And):
            return vars_, self._and(q, env, vars_)
        if isinstance(q, Or):
            lv, lrows = self.rel(q.left, env)
            rv, rrows = self.rel(q.right, env)
            return vars_, self._pad(lv, lrows, vars_) | self._pad(rv, rrows, vars_)
        raise TypeError(f"not a query node: {q!r}")

    def _and(self, q, env, vars_):
        first, second = q.left, q.right
        if _negative(first) and not _negative(second):
            first, second = second, first
        fv, frows = self.rel(first, env)
        if not frows:
            return set()
        shared = set(fv) & set(second.fv)
        out = set()
        if not shared:
            sv, srows = self.rel(second, env)
            if not srows:
                return set()
            joined_vars = fv + sv
            for r in frows:
                for s in srows:
                    out.add(r + s)
            return _reorder(joined_vars, out, vars_)
        joined_vars = None
        for r in frows:
            sub_env = dict(env)
            sub_env.update(zip(fv, r))
            sv, srows = self.rel(second, sub_env)
            joined_vars = fv + sv
            for s in srows:
                out.add(r + s)
        if joined_vars is None:
            return set()
        return _reorder(joined_vars, out, vars_)

    def _pad(self, have, rows, want):
        if have == want:
            return rows
        missing = [v for v in want if v not in have]
        pos = {v: i for i, v in enumerate(have)}
        out = set()
        for r in rows:
            for extra in product(self.domain, repeat=len(missing)):
                full = dict(zip(missing, extra))
                out.add(tuple(r[pos[v]] if v in pos else full[v] for v in want))
        return out


def _negative(q):
    return isinstance(q, Not) or (isinstance(q, Exists) and _negative(q.body))


def _reorder(have, rows, want):
    have = tuple(have)
    want = tuple(want)
    if have == want:
        return set(rows)
    pos = [have.index(v) for v in want]
    return {tuple(r[i] for i in pos) for r in rows}


def _full_tuples(q, env, vars_, rows):
    """Extend rows over the unbound free variables to all free variables."""
    if len(vars_) == len(q.fv):
        return rows
    pos = {v: i for i, v in enumerate(vars_)}
    return {tuple(r[pos[v]] if v in pos else env[v] for v in q.fv) for r in rows}


# -- ECQs ------------------------------------------------------------------------


def eval_ecq_plain(q, a, env=None) -> set:
    """Evaluate an ECQ whose embedded UCQs are taken as already rewritten."""
    env = env or {}

    def leaf(node, env_, vars_):
        return _reorder(node.fv, eval_ucq(node.ucq, a, env_), vars_)

    engine = _Engine(lambda: adom_abox(a), leaf)
    vars_, rows = engine.rel(q, env)
    return _full_tuples(q, env, vars_, rows)


def eval_ecq(q, a, t, env=None) -> set:
    """Certain answers of the ECQ ``q`` over ``(t, a)``.

    Every embedded UCQ is rewritten against the (normalized) TBox ``t`` and
    evaluated plainly; connectives range over the ABox's active domain.
    """
    from .rewrite import rewrite_ecq

    return eval_ecq_plain(rewrite_ecq(q, t), a, env)


# -- first-order source queries over instances ----------------------------------


def eval_source(sq, i, env_values):
    """Rows of one source query; ``env_values`` pre-binds output positions."""
    binding = {}
    for pos, want in env_values.items():
        t = sq.output[pos]
        if isinstance(t, Var):
            if binding.get(t, want) != want:
                return set()
            binding[t] = want
        elif t != want:
            return set()
    out = set()
    for b in solve(sq.atoms, i, sq.filters, binding):
        out.add(tuple(b[t] if isinstance(t, Var) else t for t in sq.output))
    return out


def _source_leaf_rows(leaf, i, env, vars_):
    pre = {pos: env[v] for pos, v in enumerate(leaf.vars) if v in env}
    # a leaf variable may repeat; rows must agree on repeated positions
    out = set()
    for sq in leaf.queries:
        for row in eval_source(sq, i, pre):
            seen = {}
            ok = True
            for v, c in zip(leaf.vars, row):
                if seen.setdefault(v, c) != c:
                    ok = False
                    break
            if ok:
                out.add(tuple(seen[v] for v in vars_))
    return out


def _tagged_rows(node, i, env, vars_, engine):
    out = set()
    for tags, body in node.branches:
        sub_env = {}
        ok = True
        for a, (sym, terms) in zip(node.answer_vars, tags):
            if a not in env:
                continue
            want = env[a]
            got = _untag(sym, terms, want)
            if got is None:
                ok = False
                break
            for v, c in got:
                if isinstance(v, Var):
                    if sub_env.setdefault(v, c) != c:
                        ok = False
                elif v != c:
                    ok = False
        if not ok:
            continue
        bvars, rows = engine.rel(body, sub_env)
        pos = {v: k for k, v in enumerate(bvars)}
        for r in rows:
            def val(t):
                if isinstance(t, Var):
                    return r[pos[t]] if t in pos else sub_env[t]
                return t
            consts = {}
            for a, (sym, terms) in zip(node.answer_vars, tags):
                vals = tuple(val(t) for t in terms)
                consts[a] = vals[0] if sym is None else ObjectTerm(sym, vals)
            out.add(tuple(consts[a] for a in vars_))
    return out


def _untag(sym, terms, want):
    if sym is None:
        if isinstance(want, ObjectTerm):
            return None
        return [(terms[0], want)]
    if not isinstance(want, ObjectTerm) or want.symbol != sym or want.arity != len(terms):
        return None
    return list(zip(terms, want.args))


def eval_fo(q, i, env=None) -> set:
    """Evaluate a first-order source query over a database instance."""
    env = env or {}
    engine = None

    def leaf(node, env_, vars_):
        if isinstance(node, Tagged):
            return _tagged_rows(node, i, env_, vars_, engine)
        return _source_leaf_rows(node, i, env_, vars_)

    engine = _Engine(lambda: adom_instance(i), leaf)
    vars_, rows = engine.rel(q, env)
    return _full_tuples(q, env, vars_, rows)


def holds_fo(q, i, env=None) -> bool:
    env = env or {}
    return bool(eval_fo(q, i, env))
