"""Property validation and compilation: rewrite against the TBox, then unfold."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..mapping import (
    MappingSet,
    _Names,
    expansion_shapes,
    is_false,
    live_leaf,
    needs_live,
    unfold_ecq,
)
from ..ontology import TBox, normalize, vocabulary
from ..query import FALSE_LEAF, And, Fn, Var, leaves
from ..rewrite import rewrite_ecq
from .formula import (
    Branch,
    ExistsQ,
    Forall,
    Local,
    QuantBlock,
    TNot,
    Temporal,
    _Binary,
    _Quant,
)


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # closedness | guard | value-ordering | vocabulary
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


class CompileError(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


def _guard_atoms(q):
    for leaf in leaves(q):
        for cq in leaf.ucq.disjuncts:
            # answer variables appear through the head
            rename = {h: a for a, h in zip(leaf.ucq.answer_vars, cq.head) if isinstance(h, Var)}
            for atom in cq.atoms:
                yield atom.pred, tuple(rename.get(t, t) for t in atom.args)


def validate(f, t: TBox) -> list:
    """Diagnostics for ``f``; empty when it can be compiled."""
    out = []
    concepts, roles = vocabulary(t)
    if f.fv:
        out.append(Diagnostic("closedness", f"free variables {', '.join(map(str, f.fv))}"))
    _validate(f, (), concepts, roles, out)
    return out


def _check_vocabulary(q, concepts, roles, out):
    for pred, args in _guard_atoms(q):
        names = concepts if len(args) == 1 else roles
        if pred not in names:
            kind = "concept" if len(args) == 1 else "role"
            out.append(Diagnostic("vocabulary", f"{pred} is not a {kind} of the TBox"))


def _validate(f, bound, concepts, roles, out):
    if isinstance(f, Local):
        _check_vocabulary(f.query, concepts, roles, out)
        return
    if isinstance(f, _Quant):
        _check_vocabulary(f.guard, concepts, roles, out)
        gfv = set(f.guard.fv)
        for v in f.vars:
            if v in bound:
                out.append(Diagnostic("guard", f"{v} is already bound by an outer quantifier"))
            if v not in gfv:
                out.append(Diagnostic("guard", f"quantified variable {v} does not occur in its guard"))
        atoms = list(_guard_atoms(f.guard))
        for k, y in enumerate(f.vars):
            earlier = set(bound) | set(f.vars[:k])
            occurrences = [(args.index(y) if y in args else None, args) for _, args in atoms if y in args]
            if not occurrences:
                continue
            value_only = all(len(args) == 2 and args[1] == y and args[0] != y for _, args in occurrences)
            if value_only and not any(args[0] in earlier for _, args in occurrences):
                out.append(
                    Diagnostic(
                        "value-ordering",
                        f"{y} only fills attribute values; quantify the owning object first",
                    )
                )
        if f.body is not None:
            _validate(f.body, tuple(bound) + f.vars, concepts, roles, out)
        return
    if isinstance(f, (TNot, Temporal)):
        _validate(f.body, bound, concepts, roles, out)
        return
    if isinstance(f, _Binary):
        _validate(f.left, bound, concepts, roles, out)
        _validate(f.right, bound, concepts, roles, out)
        return
    raise TypeError(f"not a property node: {f!r}")


def map_queries(f, fn):
    """Apply ``fn`` to every local query and guard, keeping the temporal skeleton."""
    if isinstance(f, Local):
        return Local(fn(f.query))
    if isinstance(f, TNot):
        return TNot(map_queries(f.body, fn))
    if isinstance(f, Temporal):
        return Temporal(f.op, map_queries(f.body, fn))
    if isinstance(f, _Binary):
        return type(f)(map_queries(f.left, fn), map_queries(f.right, fn))
    if isinstance(f, _Quant):
        body = None if f.body is None else map_queries(f.body, fn)
        return type(f)(f.vars, fn(f.guard), body)
    raise TypeError(f"not a property node: {f!r}")


def rewrite_property(f, t: TBox):
    t = normalize(t)
    return map_queries(f, lambda q: rewrite_ecq(q, t))


def unfold_property(f, m: MappingSet, t: TBox, sigma=None, names=None):
    """Unfold a rewritten property into a relational one."""
    names = names or _Names()
    return _unfold(f, m, t, dict(sigma or {}), names)


def _unfold(f, m, t, sigma, names):
    if isinstance(f, Local):
        return Local(unfold_ecq(f.query, m, t, sigma, names))
    if isinstance(f, TNot):
        return TNot(_unfold(f.body, m, t, sigma, names))
    if isinstance(f, Temporal):
        return Temporal(f.op, _unfold(f.body, m, t, sigma, names))
    if isinstance(f, _Binary):
        return type(f)(_unfold(f.left, m, t, sigma, names), _unfold(f.right, m, t, sigma, names))
    if isinstance(f, _Quant):
        shapes = expansion_shapes(m)
        branches = []
        for combo in itertools.product(shapes, repeat=len(f.vars)):
            inner = dict(sigma)
            templates, fresh = [], []
            for v, (sym, k) in zip(f.vars, combo):
                xs = tuple(names.fresh(v.name, sym) for _ in range(k))
                templates.append(Fn(sym, xs))
                fresh.extend(xs)
                inner[v] = templates[-1]
            guard = unfold_ecq(f.guard, m, t, inner, names)
            for v, tpl in zip(f.vars, templates):
                if is_false(guard):
                    break
                if needs_live(f.guard, v):
                    guard = And(live_leaf(tpl, m, t), guard)
            if is_false(guard):
                continue
            body = None if f.body is None else _unfold(f.body, m, t, inner, names)
            branches.append(Branch(tuple(templates), tuple(fresh), guard, body))
        if not branches:
            # keep the block's shape visible even when no branch survives
            inner = dict(sigma)
            for v in f.vars:
                inner[v] = Fn(None, (names.fresh(v.name, None),))
            body = None if f.body is None else _unfold(f.body, m, t, inner, names)
            branches.append(Branch(tuple(inner[v] for v in f.vars), tuple(inner[v].args[0] for v in f.vars), FALSE_LEAF, body))
        return QuantBlock(f.kind, f.vars, tuple(branches))
    raise TypeError(f"not a property node: {f!r}")


def compile_property(f, t: TBox, m: MappingSet):
    """validate, then rewrite, then unfold; raises :class:`CompileError`."""
    diagnostics = validate(f, t)
    if diagnostics:
        raise CompileError(diagnostics)
    return unfold_property(rewrite_property(f, t), m, t)


__all__ = [
    "CompileError",
    "Diagnostic",
    "ExistsQ",
    "Forall",
    "compile_property",
    "map_queries",
    "rewrite_property",
    "unfold_property",
    "validate",
]
