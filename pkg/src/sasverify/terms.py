"""Values, object terms, relational schemas and instances, and ABoxes.

Values are plain Python ``int`` and ``str`` objects plus the two members of
:class:`Bool`.  Python's own ``True`` hashes and compares equal to ``1``,
which would silently merge distinct literals inside sets, so booleans get
their own type.
"""
from __future__ import annotations

import enum
import json
from functools import lru_cache
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class Bool(enum.Enum):
    FALSE = False
    TRUE = True

    def __repr__(self) -> str:
        return "true" if self.value else "false"

    __str__ = __repr__


TRUE = Bool.TRUE
FALSE = Bool.FALSE


def is_value(x) -> bool:
    return isinstance(x, (str, Bool)) or (isinstance(x, int) and not isinstance(x, bool))


def value(x):
    """Coerce a Python literal into a Value (``bool`` becomes :class:`Bool`)."""
    if isinstance(x, bool):
        return TRUE if x else FALSE
    if is_value(x):
        return x
    raise TypeError(f"not a value literal: {x!r}")


@dataclass(frozen=True, slots=True)
class ObjectTerm:
    """A function-symbol application ``f(v1, ..., vn)`` over values."""

    symbol: str
    args: tuple

    def __post_init__(self):
        for a in self.args:
            if not is_value(a):
                raise TypeError(f"object term arguments must be values, got {a!r}")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return f"{self.symbol}({', '.join(format_literal(a) for a in self.args)})"

    def __repr__(self) -> str:
        return str(self)


def is_constant(x) -> bool:
    return isinstance(x, ObjectTerm) or is_value(x)


def format_literal(c) -> str:
    if isinstance(c, ObjectTerm):
        return str(c)
    if isinstance(c, Bool):
        return repr(c)
    if isinstance(c, str):
        return json.dumps(c, ensure_ascii=False)
    if isinstance(c, int):
        return str(c)
    raise TypeError(f"not a constant: {c!r}")


def sort_key(c):
    """Total order over constants: ints, strings, booleans, object terms."""
    if isinstance(c, ObjectTerm):
        return (3, c.symbol, tuple(sort_key(a) for a in c.args))
    if isinstance(c, Bool):
        return (2, int(c.value))
    if isinstance(c, str):
        return (1, c)
    return (0, c)


def tuple_key(t):
    return tuple(sort_key(c) for c in t)


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    name: str
    columns: tuple

    @property
    def arity(self) -> int:
        return len(self.columns)


class Schema:
    def __init__(self, relations: Iterable[Relation] = ()):
        self.relations: tuple = tuple(relations)
        self._by_name = {}
        for r in self.relations:
            if r.name in self._by_name:
                raise SchemaError(f"duplicate relation {r.name}")
            if r.arity < 1:
                raise SchemaError(f"relation {r.name} must have arity >= 1")
            if len(set(r.columns)) != len(r.columns):
                raise SchemaError(f"duplicate column in relation {r.name}")
            self._by_name[r.name] = r

    @classmethod
    def from_arities(cls, arities: Mapping[str, int]) -> "Schema":
        return cls(Relation(n, tuple(f"c{i + 1}" for i in range(k))) for n, k in sorted(arities.items()))

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __getitem__(self, name) -> Relation:
        return self._by_name[name]

    def __iter__(self):
        return iter(self.relations)

    def arity(self, name) -> int:
        return self._by_name[name].arity

    def __eq__(self, other):
        return isinstance(other, Schema) and self.relations == other.relations

    def __hash__(self):
        return hash(self.relations)

    def __repr__(self):
        return f"Schema({', '.join(f'{r.name}/{r.arity}' for r in self.relations)})"


class _Indexed:
    """Mixin: lazily built per-predicate, per-position hash indexes."""

    def index(self, pred, pos) -> dict:
        key = (pred, pos)
        idx = self._index.get(key)
        if idx is None:
            idx = {}
            for t in self.tuples(pred):
                if pos < len(t):
                    idx.setdefault(t[pos], []).append(t)
            self._index[key] = idx
        return idx


class DatabaseInstance(_Indexed):
    """An immutable set of relational facts conforming to a schema."""

    __slots__ = ("schema", "_rels", "_canon", "_index", "_adom")

    def __init__(self, schema: Schema, facts=()):
        rels: dict = {}
        items = facts.items() if isinstance(facts, Mapping) else None
        if items is not None:
            for name, tuples in items:
                for t in tuples:
                    rels.setdefault(name, set()).add(tuple(t))
        else:
            for name, t in facts:
                rels.setdefault(name, set()).add(tuple(t))
        for name, tuples in rels.items():
            if name not in schema:
                raise SchemaError(f"unknown relation {name}")
            k = schema.arity(name)
            for t in tuples:
                if len(t) != k:
                    raise SchemaError(f"{name}{t} has arity {len(t)}, expected {k}")
                for c in t:
                    if not is_value(c):
                        raise SchemaError(f"{name}{t}: instance components must be values")
        self.schema = schema
        self._rels = {n: frozenset(ts) for n, ts in rels.items() if ts}
        self._canon = None
        self._index = {}
        self._adom = None

    @classmethod
    def _trusted(cls, schema, rels):
        obj = cls.__new__(cls)
        obj.schema = schema
        obj._rels = rels
        obj._canon = None
        obj._index = {}
        obj._adom = None
        return obj

    def tuples(self, name) -> frozenset:
        return self._rels.get(name, frozenset())

    def facts(self) -> Iterator[tuple]:
        """All facts as ``(relation, tuple)`` in canonical order."""
        for name in sorted(self._rels):
            for t in sorted(self._rels[name], key=tuple_key):
                yield name, t

    def __len__(self):
        return sum(len(ts) for ts in self._rels.values())

    def apply(self, deleted, added) -> "DatabaseInstance":
        """Return ``(self - deleted) + added``; both are iterables of ``(rel, tuple)``."""
        changed = {}
        for name, t in deleted:
            if t in self._rels.get(name, ()):
                changed.setdefault(name, set(self._rels[name])).discard(t)
        for name, t in added:
            if name not in changed:
                if t in self._rels.get(name, ()):
                    continue
                changed[name] = set(self._rels.get(name, ()))
            changed[name].add(t)
        if not changed:
            return self
        rels = dict(self._rels)
        for name, ts in changed.items():
            if ts:
                rels[name] = frozenset(ts)
            else:
                rels.pop(name, None)
        return DatabaseInstance._trusted(self.schema, rels)

    def __eq__(self, other):
        return isinstance(other, DatabaseInstance) and canonical_form(self) == canonical_form(other)

    def __hash__(self):
        return hash(canonical_form(self))

    def __repr__(self):
        return "DatabaseInstance{" + ", ".join(format_fact(n, t) for n, t in self.facts()) + "}"


def format_fact(name, args) -> str:
    return f"{name}({', '.join(format_literal(a) for a in args)})"


def adom_instance(i: DatabaseInstance) -> frozenset:
    if i._adom is None:
        i._adom = frozenset(c for ts in i._rels.values() for t in ts for c in t)
    return i._adom


def canonical_form(i: DatabaseInstance) -> bytes:
    """Deterministic serialization; equal iff the instances hold the same tuples."""
    if i._canon is None:
        i._canon = b"\n".join(_relation_text(n, i._rels[n]) for n in sorted(i._rels))
    return i._canon


@lru_cache(maxsize=1 << 16)
def _relation_text(name, tuples) -> bytes:
    # relations untouched by a transition are shared between instances
    return "\n".join(format_fact(name, t) for t in sorted(tuples, key=tuple_key)).encode()


class ABox(_Indexed):
    """Concept facts ``(C, c)`` and role facts ``(P, c1, c2)`` over constants."""

    __slots__ = ("concepts", "roles", "_by_pred", "_index", "_adom")

    def __init__(self, concepts=(), roles=()):
        self.concepts = frozenset(concepts)
        self.roles = frozenset(roles)
        for _, c in self.concepts:
            if not is_constant(c):
                raise TypeError(f"not a constant: {c!r}")
        for _, c1, c2 in self.roles:
            if not (is_constant(c1) and is_constant(c2)):
                raise TypeError(f"not a constant pair: {(c1, c2)!r}")
        by_pred: dict = {}
        for name, c in self.concepts:
            by_pred.setdefault(name, set()).add((c,))
        for name, c1, c2 in self.roles:
            by_pred.setdefault(name, set()).add((c1, c2))
        self._by_pred = by_pred
        self._index = {}
        self._adom = None

    def tuples(self, pred):
        return self._by_pred.get(pred, ())

    def facts(self) -> list:
        out = [(n, (c,)) for n, c in self.concepts] + [(n, (a, b)) for n, a, b in self.roles]
        return sorted(out, key=lambda f: (f[0], tuple_key(f[1])))

    def predicates(self) -> set:
        return set(self._by_pred)

    def __len__(self):
        return len(self.concepts) + len(self.roles)

    def __eq__(self, other):
        return isinstance(other, ABox) and self.concepts == other.concepts and self.roles == other.roles

    def __hash__(self):
        return hash((self.concepts, self.roles))

    def __repr__(self):
        return "ABox{" + ", ".join(format_fact(n, t) for n, t in self.facts()) + "}"


def adom_abox(a: ABox) -> frozenset:
    if a._adom is None:
        a._adom = frozenset(c for ts in a._by_pred.values() for t in ts for c in t)
    return a._adom
