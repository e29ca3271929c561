"""DL-Lite_R TBoxes: representation, the ``.tbox`` format, normalization.

File format, one assertion per line, ``#`` comments::

    FinishedReport <= PublishedCPReport
    exists(inv(contains)) <= PublishedCPReport
    A <= exists(P, B)
    role P <= inv(Q)
    disjoint(A, B)
    role-disjoint(P, Q)
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import ParseError, TokenStream

RESERVED = {"role", "disjoint", "role-disjoint", "exists", "inv"}


@dataclass(frozen=True, slots=True)
class Role:
    name: str
    inverse: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("role name must be nonempty")

    def inv(self) -> "Role":
        return Role(self.name, not self.inverse)

    def __str__(self):
        return f"inv({self.name})" if self.inverse else self.name


@dataclass(frozen=True, slots=True)
class Named:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class ExistsRole:
    """The basic concept ``∃U``: first component of ``U``."""

    role: Role

    def __str__(self):
        return f"exists({self.role})"


@dataclass(frozen=True, slots=True)
class QualifiedExists:
    """``∃U.B``; only legal on the right-hand side of a concept inclusion."""

    role: Role
    filler: object

    def __str__(self):
        return f"exists({self.role}, {self.filler})"


@dataclass(frozen=True, slots=True)
class ConceptInclusion:
    lhs: object
    rhs: object

    def __str__(self):
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True, slots=True)
class RoleInclusion:
    lhs: Role
    rhs: Role

    def __str__(self):
        return f"role {self.lhs} <= {self.rhs}"


@dataclass(frozen=True, slots=True)
class ConceptDisjoint:
    first: object
    second: object

    def __str__(self):
        return f"disjoint({self.first}, {self.second})"


@dataclass(frozen=True, slots=True)
class RoleDisjoint:
    first: Role
    second: Role

    def __str__(self):
        return f"role-disjoint({self.first}, {self.second})"


def _dedup(items):
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class TBox:
    concept_inclusions: tuple = ()
    role_inclusions: tuple = ()
    concept_disjointness: tuple = ()
    role_disjointness: tuple = ()
    auxiliary_roles: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "concept_inclusions", _dedup(self.concept_inclusions))
        object.__setattr__(self, "role_inclusions", _dedup(self.role_inclusions))
        object.__setattr__(self, "concept_disjointness", _dedup(self.concept_disjointness))
        object.__setattr__(self, "role_disjointness", _dedup(self.role_disjointness))
        object.__setattr__(self, "auxiliary_roles", frozenset(self.auxiliary_roles))

    def assertions(self):
        return (
            list(self.concept_inclusions)
            + list(self.role_inclusions)
            + list(self.concept_disjointness)
            + list(self.role_disjointness)
        )

    def is_normalized(self) -> bool:
        return not any(isinstance(ci.rhs, QualifiedExists) for ci in self.concept_inclusions)

    def __len__(self):
        return len(self.assertions())

    def __str__(self):
        return format_tbox(self)


def _basic_names(b, concepts, roles):
    if isinstance(b, Named):
        concepts.add(b.name)
    elif isinstance(b, ExistsRole):
        roles.add(b.role.name)
    elif isinstance(b, QualifiedExists):
        roles.add(b.role.name)
        _basic_names(b.filler, concepts, roles)


def all_names(t: TBox):
    concepts, roles = set(), set()
    for ci in t.concept_inclusions:
        _basic_names(ci.lhs, concepts, roles)
        _basic_names(ci.rhs, concepts, roles)
    for ri in t.role_inclusions:
        roles.update((ri.lhs.name, ri.rhs.name))
    for d in t.concept_disjointness:
        _basic_names(d.first, concepts, roles)
        _basic_names(d.second, concepts, roles)
    for d in t.role_disjointness:
        roles.update((d.first.name, d.second.name))
    return concepts, roles


def vocabulary(t: TBox):
    """User concept and role names; auxiliary roles are left out."""
    concepts, roles = all_names(t)
    return concepts, roles - t.auxiliary_roles


def normalize(t: TBox) -> TBox:
    """Replace every ``B <= exists(U, B')`` with three assertions over a fresh role."""
    if t.is_normalized():
        return t
    concepts, roles = all_names(t)
    used = concepts | roles
    inclusions = []
    role_inclusions = list(t.role_inclusions)
    aux = set(t.auxiliary_roles)
    counter = 0
    for ci in t.concept_inclusions:
        if not isinstance(ci.rhs, QualifiedExists):
            inclusions.append(ci)
            continue
        u, filler = ci.rhs.role, ci.rhs.filler
        while True:
            counter += 1
            name = f"aux{counter}_{u.name}{'_inv' if u.inverse else ''}_{_slug(filler)}"
            if name not in used and name not in aux:
                break
        aux.add(name)
        fresh = Role(name)
        inclusions.append(ConceptInclusion(ci.lhs, ExistsRole(fresh)))
        role_inclusions.append(RoleInclusion(fresh, u))
        inclusions.append(ConceptInclusion(ExistsRole(fresh.inv()), filler))
    return TBox(
        tuple(inclusions),
        tuple(role_inclusions),
        t.concept_disjointness,
        t.role_disjointness,
        frozenset(aux),
    )


def _slug(b) -> str:
    if isinstance(b, Named):
        return b.name
    return ("some_inv_" if b.role.inverse else "some_") + b.role.name


# -- parsing -----------------------------------------------------------------


def _name(ts: TokenStream) -> str:
    tok = ts.expect("IDENT")
    if tok.text in RESERVED:
        raise ts.error(f"reserved word {tok.text!r} used as a name", tok)
    return tok.text


def _role(ts: TokenStream) -> Role:
    if ts.at_word("inv"):
        ts.next()
        ts.expect_op("(")
        r = Role(_name(ts), True)
        ts.expect_op(")")
        return r
    return Role(_name(ts))


def _concept(ts: TokenStream, general: bool):
    if ts.at_word("exists"):
        ts.next()
        ts.expect_op("(")
        r = _role(ts)
        filler = None
        if ts.accept("OP", ","):
            if not general:
                raise ts.error("qualified existential only allowed on the right-hand side")
            filler = _concept(ts, general=False)
        ts.expect_op(")")
        return ExistsRole(r) if filler is None else QualifiedExists(r, filler)
    return Named(_name(ts))


def parse_tbox(text: str) -> TBox:
    ts = TokenStream(text)
    cis, ris, cds, rds = [], [], [], []
    while not ts.at_end():
        if ts.at_word("role"):
            ts.next()
            lhs = _role(ts)
            ts.expect_op("<=")
            ris.append(RoleInclusion(lhs, _role(ts)))
        elif ts.at_word("disjoint"):
            ts.next()
            ts.expect_op("(")
            b1 = _concept(ts, general=False)
            ts.expect_op(",")
            b2 = _concept(ts, general=False)
            ts.expect_op(")")
            cds.append(ConceptDisjoint(b1, b2))
        elif ts.at_word("role-disjoint"):
            ts.next()
            ts.expect_op("(")
            u1 = _role(ts)
            ts.expect_op(",")
            u2 = _role(ts)
            ts.expect_op(")")
            rds.append(RoleDisjoint(u1, u2))
        else:
            lhs = _concept(ts, general=False)
            ts.expect_op("<=")
            cis.append(ConceptInclusion(lhs, _concept(ts, general=True)))
    return TBox(tuple(cis), tuple(ris), tuple(cds), tuple(rds))


def format_tbox(t: TBox) -> str:
    return "".join(f"{a}\n" for a in t.assertions())


__all__ = [
    "ConceptDisjoint",
    "ConceptInclusion",
    "ExistsRole",
    "Named",
    "ParseError",
    "QualifiedExists",
    "Role",
    "RoleDisjoint",
    "RoleInclusion",
    "TBox",
    "format_tbox",
    "normalize",
    "parse_tbox",
    "vocabulary",
]
