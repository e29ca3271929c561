import pytest

from generators import (
    CTL_SCHEMA,
    covering_tbox,
    random_action_system,
    random_ctl_a,
    random_mappings,
    random_property,
    random_rts,
    rng_for,
)
from oracles import PathOracle, brute_block_answers, brute_local
from sasverify.lifecycle import SasSystem, TransitionSystem, build_rts, parse_system
from sasverify.mapping import MappingSet, ObdaSystem, parse_mappings
from sasverify.ontology import TBox, parse_tbox
from sasverify.query import FALSE_LEAF, Atom, Embedded, Not, SourceLeaf, SourceQuery, Ucq, Var
from sasverify.syntax import ParseError
from sasverify.temporal import (
    CompileError,
    check_rts,
    check_sts,
    compile_property,
    cross_check,
    format_property,
    parse_property,
    rewrite_property,
    skeleton,
    unfold_property,
    validate,
)
from sasverify.temporal.formula import (
    AG,
    AX,
    EF,
    EG,
    EU,
    EX,
    AF,
    Forall,
    Local,
    QuantBlock,
    Temporal,
    TNot,
)
from sasverify.terms import TRUE, DatabaseInstance

CONCEPTS, ROLES = ("A", "B", "C"), ("P", "Q")
X = Var("x")
TRUE_LOCAL = Local(Not(FALSE_LEAF))
FALSE_LOCAL = Local(FALSE_LEAF)


def _sas(fixture_text, name):
    s = parse_system(fixture_text(f"{name}.sys"))
    t = parse_tbox(fixture_text(f"{name}.tbox"))
    m = parse_mappings(fixture_text(f"{name}.map"), s.schema)
    return SasSystem(s, ObdaSystem(s.schema, t, m))


# -- syntax ------------------------------------------------------------------------


def test_parse_energy_property(fixture_text):
    f = parse_property(fixture_text("energy.prop"))
    assert isinstance(f, Temporal) and f.op == "AG"
    assert isinstance(f.body, Forall) and f.body.vars == (X,)
    assert isinstance(f.body.body, Temporal) and f.body.body.op == "EF"
    assert isinstance(f.body.body.body, Local)


def test_parse_until():
    assert isinstance(parse_property("E [ [A(?x)] U [B(?x)] ]"), EU)


def test_implication_is_kept():
    f = parse_property("[A(?x)] -> [B(?x)] OR [C(?x)]")
    assert type(f).__name__ == "TImplies"
    assert format_property(f) == "[ A(?x) ] -> [ B(?x) ] OR [ C(?x) ]"


@pytest.mark.parametrize(
    "text",
    ["AG ([A(?x)]", "E [ [A(?x)] [B(?x)] ]", "FORALL x . [A(?x)]", "AG", "[A(?x)] AND", "{ [A(?x)] "],
)
def test_parse_errors_carry_positions(text):
    with pytest.raises(ParseError) as err:
        parse_property(text)
    assert ":" in str(err.value).split()[0]


def test_print_parse_round_trip():
    for k in range(200):
        rng = rng_for("prop-rt", k)
        once = parse_property(format_property(random_property(rng, CONCEPTS, ROLES)))
        assert parse_property(format_property(once)) == once, k


def test_bare_guard_terminal():
    f = parse_property("EXISTS ?x . [A(?x)]")
    assert f.body is None
    assert format_property(f) == "EXISTS ?x . [ A(?x) ]"


# -- validation --------------------------------------------------------------------


T_ATTR = parse_tbox("C <= C\nrole Attr <= Attr")


def _kinds(text, t=T_ATTR):
    return [d.kind for d in validate(parse_property(text), t)]


def test_accepted_ordering():
    assert _kinds("FORALL ?x . [C(?x)] -> EXISTS ?y . [Attr(?x,?y)]") == []


def test_rejected_ordering():
    assert _kinds("EXISTS ?y . EXISTS ?x . [Attr(?x,?y)] AND [C(?x)]") == ["value-ordering"]


def test_closedness_vocabulary_and_guards():
    assert _kinds("[C(?x)]") == ["closedness"]
    assert _kinds("EXISTS ?x . [D(?x)]") == ["vocabulary"]
    assert "guard" in _kinds("FORALL ?x . [C(?y)] -> [C(?x)]")


def test_compile_rejects_invalid_properties():
    with pytest.raises(CompileError) as err:
        compile_property(parse_property("[C(?x)]"), T_ATTR, MappingSet())
    assert err.value.diagnostics


# -- rewriting and unfolding ----------------------------------------------------------


def test_energy_rewrite_guard(fixture_text):
    f = rewrite_property(parse_property(fixture_text("energy.prop")), parse_tbox(fixture_text("energy.tbox")))
    assert len(f.body.guard.ucq.disjuncts) == 7
    assert len(f.body.body.body.query.ucq.disjuncts) == 1


def test_rewrite_with_empty_tbox_is_identity():
    for k in range(100):
        f = random_property(rng_for("prop-id", k), CONCEPTS, ROLES)
        assert rewrite_property(f, TBox()) == f


def test_compile_preserves_the_skeleton():
    for k in range(200):
        rng = rng_for("skel", k)
        schema = random_action_system(rng).schema
        m = random_mappings(rng, schema, CONCEPTS, ROLES)
        t = covering_tbox(rng, CONCEPTS, ROLES)
        f = random_property(rng, CONCEPTS, ROLES)
        if validate(f, t):
            continue
        assert skeleton(rewrite_property(f, t)) == skeleton(f)
        assert skeleton(compile_property(f, t, m)) == skeleton(f)


def test_energy_unfolding_structure(fixture_text):
    sas = _sas(fixture_text, "energy")
    compiled = compile_property(parse_property(fixture_text("energy.prop")), sas.tbox, sas.mappings)
    block = compiled.body
    assert isinstance(block, QuantBlock) and block.kind == "forall"
    (branch,) = block.branches
    assert [fn.symbol for fn in branch.templates] == ["cpmr"]
    flag_columns = {
        next(k for k, c in enumerate(sq.atoms[0].args) if c == TRUE)
        for sq in branch.guard.queries
        if sq.atoms[0].pred == "CPMR" and sum(c == TRUE for c in sq.atoms[0].args) == 1
    }
    assert {4, 5, 6} <= flag_columns
    (finished,) = branch.body.body.query.queries
    assert finished.atoms[0].args[3] == TRUE


def test_empty_mapping_makes_every_leaf_false(fixture_text):
    t = parse_tbox(fixture_text("energy.tbox"))
    f = parse_property(fixture_text("energy.prop"))
    compiled = compile_property(f, t, MappingSet())
    (branch,) = compiled.body.branches
    assert branch.guard.queries == () and branch.body.body.query.queries == ()
    sas = _sas(fixture_text, "energy")
    assert check_rts(compiled, build_rts(sas)).holds


def test_unfold_property_alone(fixture_text):
    t = parse_tbox(fixture_text("toggle.tbox"))
    m = parse_mappings(fixture_text("toggle.map"))
    f = parse_property("EF EXISTS ?x . [On(?x)]")
    assert unfold_property(f, m, t) == compile_property(f, t, m)


# -- checking ---------------------------------------------------------------------------


def _single(facts=()):
    return TransitionSystem([DatabaseInstance(CTL_SCHEMA, facts)], frozenset())


def test_ag_true_holds_everywhere():
    for k in range(20):
        rts = random_rts(rng_for("agtrue", k), max_states=10)
        assert check_rts(AG(TRUE_LOCAL), rts).holds
        true_ecq = Local(Not(Embedded(Ucq((), ()))))
        assert check_sts(AG(true_ecq), rts, TBox(), MappingSet()).holds


def test_toggle_ef_witness(fixture_text):
    sas = _sas(fixture_text, "toggle")
    rts = build_rts(sas)
    on = SourceLeaf((), (SourceQuery((Atom("Flag", (Var("v"),)),), (), ()),))
    one = Local(SourceLeaf((), (SourceQuery((Atom("Flag", (1,)),), (), ()),)))
    verdict = check_rts(EF(one), rts)
    assert verdict.holds and verdict.witness == (0, 1)
    assert check_rts(AG(Local(on)), rts).holds


def test_deadlock_convention():
    rts = _single()
    assert not check_rts(EX(TRUE_LOCAL), rts).holds
    assert check_rts(AX(FALSE_LOCAL), rts).holds
    assert check_rts(EG(TRUE_LOCAL), rts).holds
    assert not check_rts(EG(FALSE_LOCAL), rts).holds
    assert not check_rts(AF(FALSE_LOCAL), rts).holds


def test_empty_guard_range():
    rts = _single()
    guard = SourceLeaf((X,), (SourceQuery((Atom("S", (X,)),), (), (X,)),))
    for kind, expected in (("forall", True), ("exists", False)):
        from sasverify.query import Fn
        from sasverify.temporal.formula import Branch

        block = QuantBlock(kind, (X,), (Branch((Fn(None, (X,)),), (X,), guard, FALSE_LOCAL),))
        assert check_rts(block, rts).holds is expected


def test_bindings_persist_across_states(fixture_text):
    sas = _sas(fixture_text, "toggle")
    rts = build_rts(sas)
    # the lamp bound while on is no longer on in the next state
    f = parse_property("EF EXISTS ?x . [On(?x)] AND AX ! [On(?x)]")
    assert not validate(f, sas.tbox)
    result = cross_check(sas, f, rts=rts)
    assert result.agree and result.sts.holds


def test_memoized_and_plain_checkers_agree():
    for k in range(60):
        rng = rng_for("memo", k)
        rts = random_rts(rng, max_states=8)
        f = random_ctl_a(rng, depth=3)
        assert check_rts(f, rts).holds == check_rts(f, rts, memoize=False).holds, k


def _path_ok(rts, path):
    return path[0] == rts.initial and all(b in rts.succ[a] for a, b in zip(path, path[1:]))


def test_witness_paths_are_valid():
    seen = 0
    for k in range(150):
        rng = rng_for("witness", k)
        rts = random_rts(rng, max_states=20)
        phi = random_ctl_a(rng, depth=1)
        oracle = PathOracle(rts.succ, brute_local(rts.states), brute_block_answers(rts.states))
        ef = check_rts(EF(phi), rts)
        if ef.holds:
            seen += 1
            assert _path_ok(rts, ef.witness) and oracle.holds(phi, ef.witness[-1])
        ag = check_rts(AG(phi), rts)
        if not ag.holds:
            assert _path_ok(rts, ag.witness) and not oracle.holds(phi, ag.witness[-1])
    assert seen > 20


def test_checker_matches_path_oracle():
    for k in range(200):
        rng = rng_for("ctl", k)
        rts = random_rts(rng)
        phi = random_ctl_a(rng)
        oracle = PathOracle(rts.succ, brute_local(rts.states), brute_block_answers(rts.states))
        assert check_rts(phi, rts).holds == oracle.holds(phi, 0), k


def test_cross_check_toggle(fixture_text):
    sas = _sas(fixture_text, "toggle")
    result = cross_check(sas, parse_property(fixture_text("toggle.prop")))
    assert result.agree and result.rts.holds


def test_cross_check_empty_mapping(fixture_text):
    s = parse_system(fixture_text("toggle.sys"))
    t = parse_tbox(fixture_text("toggle.tbox"))
    sas = SasSystem(s, ObdaSystem(s.schema, t, MappingSet(schema=s.schema)))
    for text in ("EF EXISTS ?x . [On(?x)]", "AG FORALL ?x . [Lit(?x)] -> EF [On(?x)]"):
        result = cross_check(sas, parse_property(text))
        assert result.agree


def test_energy_cross_check(fixture_text):
    sas = _sas(fixture_text, "energy")
    assert cross_check(sas, parse_property(fixture_text("energy.prop"))).agree


def test_sts_checker_on_guard_answers(fixture_text):
    sas = _sas(fixture_text, "toggle")
    rts = build_rts(sas)
    assert not check_sts(parse_property("EXISTS ?x . [Lit(?x)]"), rts, sas.tbox, sas.mappings).holds
    assert check_sts(parse_property("EX EXISTS ?x . [Lit(?x)]"), rts, sas.tbox, sas.mappings).holds
    assert check_sts(TNot(AG(parse_property("[Lit(_)]"))), rts, sas.tbox, sas.mappings).holds
