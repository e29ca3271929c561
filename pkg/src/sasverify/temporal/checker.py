"""Explicit-state CTL model checking with first-order environments.

States with no successors follow the finite-path convention: ``EX`` is false
there, ``AX`` true, and ``EG phi`` holds iff ``phi`` does.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..evaluate import eval_ecq_plain, eval_fo
from ..lifecycle import SasSystem, TransitionSystem, build_rts, sts_abox
from ..mapping import MappingSet, is_false
from ..ontology import TBox
from .compile import compile_property, rewrite_property
from .formula import AU, EU, Local, QuantBlock, TAnd, TImplies, TNot, TOr, Temporal, _Quant


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: tuple | None = None

    def as_dict(self):
        return {"holds": self.holds, "witness": None if self.witness is None else list(self.witness)}


class Checker:
    """CTL labelling over a finite transition system.

    ``local(query, state, env)`` decides local formulas; ``answers(node,
    state, env)`` lists ``(body, bindings)`` pairs for a quantifier node.
    """

    def __init__(self, rts: TransitionSystem, local, answers, memoize=True):
        self.rts = rts
        self.n = len(rts.states)
        self.succ = rts.succ
        self.pred = [[] for _ in range(self.n)]
        for s, ts in enumerate(self.succ):
            for t in ts:
                self.pred[t].append(s)
        self.all = frozenset(range(self.n))
        self.local = local
        self.answers = answers
        self.memoize = memoize
        self.memo = {}

    def sat(self, f, env=None) -> frozenset:
        env = env or {}
        key = None
        if self.memoize:
            key = (id(f), tuple((v, env[v]) for v in f.fv if v in env))
            hit = self.memo.get(key)
            if hit is not None:
                return hit[1]
        out = frozenset(self._sat(f, env))
        if key is not None:
            # keep f alive so its id cannot be reused while memoized
            self.memo[key] = (f, out)
        return out

    def _sat(self, f, env):
        if isinstance(f, Local):
            return {s for s in range(self.n) if self.local(f.query, s, env)}
        if isinstance(f, TNot):
            return self.all - self.sat(f.body, env)
        if isinstance(f, TAnd):
            left = self.sat(f.left, env)
            return left & self.sat(f.right, env) if left else left
        if isinstance(f, TOr):
            return self.sat(f.left, env) | self.sat(f.right, env)
        if isinstance(f, TImplies):
            return (self.all - self.sat(f.left, env)) | self.sat(f.right, env)
        if isinstance(f, Temporal):
            body = self.sat(f.body, env)
            return getattr(self, "_" + f.op.lower())(body)
        if isinstance(f, EU):
            return self._eu(self.sat(f.left, env), self.sat(f.right, env))
        if isinstance(f, AU):
            return self._au(self.sat(f.left, env), self.sat(f.right, env))
        if isinstance(f, (_Quant, QuantBlock)):
            universal = f.kind == "forall"
            out = set()
            for s in range(self.n):
                ok = universal
                for body, ext in self.answers(f, s, env):
                    if body is None:
                        good = True
                    else:
                        inner = dict(env)
                        inner.update(ext)
                        good = s in self.sat(body, inner)
                    if good != universal:
                        ok = good
                        break
                if ok:
                    out.add(s)
            return out
        raise TypeError(f"not a property node: {f!r}")

    # -- fixpoints ----------------------------------------------------------------

    def _ex(self, target):
        return {s for s in range(self.n) if any(t in target for t in self.succ[s])}

    def _ax(self, target):
        return {s for s in range(self.n) if all(t in target for t in self.succ[s])}

    def _ef(self, target):
        return self._eu(self.all, target)

    def _af(self, target):
        return self._au(self.all, target)

    def _ag(self, target):
        return self.all - self._ef(self.all - target)

    def _eg(self, target):
        alive = set(target)
        count = {s: sum(1 for t in self.succ[s] if t in alive) for s in alive}
        queue = deque(s for s in alive if self.succ[s] and count[s] == 0)
        while queue:
            s = queue.popleft()
            if s not in alive:
                continue
            alive.discard(s)
            for p in self.pred[s]:
                if p in alive:
                    count[p] -= 1
                    if count[p] == 0:
                        queue.append(p)
        return alive

    def _eu(self, left, right):
        reached = set(right)
        queue = deque(reached)
        while queue:
            s = queue.popleft()
            for p in self.pred[s]:
                if p not in reached and p in left:
                    reached.add(p)
                    queue.append(p)
        return reached

    def _au(self, left, right):
        reached = set(right)
        remaining = {}
        queue = deque(reached)
        while queue:
            s = queue.popleft()
            for p in self.pred[s]:
                if p in reached or p not in left:
                    continue
                if p not in remaining:
                    remaining[p] = len(self.succ[p])
                remaining[p] -= 1
                if remaining[p] == 0:
                    reached.add(p)
                    queue.append(p)
        return reached

    # -- witnesses ------------------------------------------------------------------

    def path_to(self, goal, through=None):
        """Shortest path from the initial state to ``goal`` inside ``through``."""
        start = self.rts.initial
        if start in goal:
            return (start,)
        if through is not None and start not in through:
            return None
        parent = {start: None}
        queue = deque([start])
        while queue:
            s = queue.popleft()
            for t in self.succ[s]:
                if t in parent:
                    continue
                parent[t] = s
                if t in goal:
                    path = [t]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return tuple(reversed(path))
                if through is None or t in through:
                    queue.append(t)
        return None

    def verdict(self, f) -> Verdict:
        holds = self.rts.initial in self.sat(f)
        witness = None
        if isinstance(f, Temporal) and f.op == "AG" and not holds:
            witness = self.path_to(self.all - self.sat(f.body))
        elif isinstance(f, Temporal) and f.op == "EF" and holds:
            witness = self.path_to(self.sat(f.body))
        elif isinstance(f, EU) and holds:
            witness = self.path_to(self.sat(f.right), self.sat(f.left))
        return Verdict(holds, witness)


# -- the two levels ---------------------------------------------------------------


def _project(fv, row, names):
    pos = {v: i for i, v in enumerate(fv)}
    return {v: row[pos[v]] for v in names}


def relational_checker(rts: TransitionSystem, memoize=True) -> Checker:
    def local(q, s, env):
        return bool(eval_fo(q, rts.states[s], env))

    def answers(node, s, env):
        db = rts.states[s]
        for b in node.branches:
            if is_false(b.guard):
                continue
            missing = [v for v in b.vars if v not in b.guard.fv]
            if missing:
                raise ValueError(f"guard does not bind {missing}")
            for row in eval_fo(b.guard, db, env):
                yield b.body, _project(b.guard.fv, row, b.vars)

    return Checker(rts, local, answers, memoize)


def semantic_checker(rts: TransitionSystem, m: MappingSet, memoize=True) -> Checker:
    """Checker over the STS; properties must already be rewritten."""

    def local(q, s, env):
        return bool(eval_ecq_plain(q, sts_abox(rts, m, s), env))

    def answers(node, s, env):
        a = sts_abox(rts, m, s)
        for row in eval_ecq_plain(node.guard, a, env):
            yield node.body, _project(node.guard.fv, row, node.vars)

    return Checker(rts, local, answers, memoize)


def check_rts(f, rts: TransitionSystem, memoize=True) -> Verdict:
    """Check a compiled (relational) property at the initial state."""
    return relational_checker(rts, memoize).verdict(f)


def check_sts(f, rts: TransitionSystem, t: TBox, m: MappingSet, memoize=True) -> Verdict:
    """Reference check of a semantic property over the STS view of ``rts``."""
    return semantic_checker(rts, m, memoize).verdict(rewrite_property(f, t))


@dataclass(frozen=True)
class CrossCheck:
    sts: Verdict
    rts: Verdict
    states: int
    edges: int

    @property
    def agree(self) -> bool:
        return self.sts.holds == self.rts.holds


def cross_check(sas: SasSystem, f, governance="assume", cap=10000, rts=None) -> CrossCheck:
    """Check ``f`` on the STS and its compilation on the RTS; they must agree."""
    if rts is None:
        rts = build_rts(sas, governance, cap)
    compiled = compile_property(f, sas.tbox, sas.mappings)
    v_rts = check_rts(compiled, rts)
    v_sts = check_sts(f, rts, sas.tbox, sas.mappings)
    return CrossCheck(v_sts, v_rts, len(rts.states), len(rts.edges))


__all__ = [
    "Checker",
    "CrossCheck",
    "Verdict",
    "check_rts",
    "check_sts",
    "cross_check",
    "relational_checker",
    "semantic_checker",
]
