"""Derivation checking, proof search, and rule validation."""
import random

import pytest

from decolog.calculus import (
    Bang,
    BaseType,
    EffectKind,
    Id,
    Op,
    OperationSymbol,
    Axiom,
    Strength,
    Theory,
    Unit,
    compose,
    pair,
    strong,
    weak,
)
from decolog.deduction import (
    ALL_RULES,
    AXIOM,
    ConclusionMismatch,
    DepthExhausted,
    Derivation,
    IllFormedParameter,
    PAIR_COMP_LOWRANK,
    PAIR_CONG_STRONG,
    PAIR_PROJ,
    REFL,
    REPL_STRONG,
    RuleMisapplied,
    STRONG_TO_WEAK,
    SUBST_STRONG,
    SYM,
    TRANS_MIXED,
    TRANS_STRONG,
    TRANS_WEAK,
    UNIT_STRONG_LOWRANK,
    UNIT_WEAK,
    WEAK_REPL,
    WEAK_SUBST,
    WEAK_TO_STRONG_LOWRANK,
    check_derivation,
    deriv,
    prove,
    validate_rules,
)
from decolog.semantics import holds

from gen import random_derivation

Int = BaseType("Int")


@pytest.fixture(scope="session")
def bank_proof(bank):
    theory, f, g = bank
    return deriv(
        TRANS_MIXED,
        deriv(WEAK_SUBST, deriv(AXIOM, name="ax1"), g=Op("seven")),
        deriv(TRANS_STRONG,
              deriv(REPL_STRONG,
                    deriv(PAIR_COMP_LOWRANK, f=Id(Int),
                          g=compose(Op("balance"), Bang(Int)), w=Op("seven")),
                    h=Op("plus")),
              deriv(REPL_STRONG,
                    deriv(PAIR_CONG_STRONG,
                          deriv(REFL, term=Op("seven")),
                          deriv(REPL_STRONG,
                                deriv(UNIT_STRONG_LOWRANK,
                                      f=compose(Bang(Int), Op("seven"))),
                                h=Op("balance"))),
                    h=Op("plus"))))


@pytest.fixture(scope="session")
def throwcatch_proof():
    return deriv(
        TRANS_WEAK,
        deriv(WEAK_REPL, deriv(AXIOM, name="ax2"), h=Op("catchZero")),
        deriv(WEAK_SUBST, deriv(AXIOM, name="ax1"), g=Op("zero")))


class TestChecker:
    def test_bank_proof(self, bank, bank_proof):
        theory, f, g = bank
        j = check_derivation(theory, bank_proof, expected=weak(f, g))
        assert j.equation.strength is Strength.WEAK
        assert (j.dom, j.cod) == (Unit, Int)

    def test_throwcatch_proof(self, throwcatch, throwcatch_proof):
        theory, _ = throwcatch
        goal = weak(compose(Op("catchZero"), Op("catchZero"), Op("throw")),
                    Op("zero"))
        check_derivation(theory, throwcatch_proof, expected=goal)

    def test_refl(self, bank):
        theory, f, _ = bank
        j = check_derivation(theory, deriv(REFL, term=f))
        assert j.equation == strong(f, f)

    def test_axiom_lookup(self, bank):
        theory, _, _ = bank
        j = check_derivation(theory, deriv(AXIOM, name="ax1"))
        assert j.equation == theory.axiom("ax1").equation.normalized()
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(AXIOM, name="nothere"))

    def test_sym_flips_but_keeps_strength(self, bank):
        theory, _, _ = bank
        j = check_derivation(theory, deriv(SYM, deriv(AXIOM, name="ax1")))
        ax = theory.axiom("ax1").equation.normalized()
        assert j.equation.lhs == ax.rhs and j.equation.rhs == ax.lhs
        assert j.equation.strength is Strength.WEAK

    def test_trans_middle_mismatch(self, bank):
        theory, f, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(TRANS_STRONG,
                                           deriv(REFL, term=f),
                                           deriv(REFL, term=Op("seven"))))

    def test_trans_strong_rejects_weak_premise(self, bank):
        theory, _, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(TRANS_STRONG,
                                           deriv(AXIOM, name="ax1"),
                                           deriv(AXIOM, name="ax1")))

    def test_trans_mixed_both_orders(self, throwcatch):
        theory, _ = throwcatch
        ax2 = theory.axiom("ax2").equation.normalized()
        st = deriv(REFL, term=ax2.rhs)
        check_derivation(theory, deriv(TRANS_MIXED, deriv(AXIOM, name="ax2"), st))
        pre = deriv(REFL, term=ax2.lhs)
        check_derivation(theory, deriv(TRANS_MIXED, pre, deriv(AXIOM, name="ax2")))
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(TRANS_MIXED, st, st))

    def test_strong_to_weak(self, bank):
        theory, f, _ = bank
        j = check_derivation(theory, deriv(STRONG_TO_WEAK, deriv(REFL, term=f)))
        assert j.equation.strength is Strength.WEAK

    def test_weak_to_strong_needs_low_rank(self, bank):
        theory, f, _ = bank
        low = deriv(STRONG_TO_WEAK, deriv(REFL, term=Op("balance")))
        j = check_derivation(theory, deriv(WEAK_TO_STRONG_LOWRANK, low))
        assert j.equation.strength is Strength.STRONG
        high = deriv(STRONG_TO_WEAK, deriv(REFL, term=f))
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(WEAK_TO_STRONG_LOWRANK, high))

    def test_weak_subst_purity_by_effect(self, bank, throwcatch):
        states, _, _ = bank
        exceptions, _ = throwcatch
        # states: any g may be substituted, even the rank-2 deposit chain
        check_derivation(states, deriv(
            WEAK_SUBST, deriv(AXIOM, name="ax1"),
            g=compose(Op("balance"), Op("deposit"))))
        # exceptions: a throwing g is rejected
        with pytest.raises(RuleMisapplied):
            check_derivation(exceptions, deriv(
                WEAK_SUBST, deriv(AXIOM, name="ax1"), g=Op("throw")))
        check_derivation(exceptions, deriv(
            WEAK_SUBST, deriv(AXIOM, name="ax1"), g=Op("zero")))

    def test_weak_repl_purity_by_effect(self, bank, throwcatch):
        states, _, _ = bank
        exceptions, _ = throwcatch
        with pytest.raises(RuleMisapplied):
            check_derivation(states, deriv(
                WEAK_REPL, deriv(AXIOM, name="ax1"), h=Op("balance")))
        # exceptions: even the catcher may wrap a weak equation
        check_derivation(exceptions, deriv(
            WEAK_REPL, deriv(AXIOM, name="ax1"), h=Op("catchZero")))

    def test_pair_cong_needs_matching_domains(self, bank):
        theory, _, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(
                PAIR_CONG_STRONG,
                deriv(REFL, term=Op("seven")),
                deriv(REFL, term=Id(Int))))

    def test_pair_cong_rank_limit(self, bank):
        theory, f, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(
                PAIR_CONG_STRONG,
                deriv(REFL, term=f),
                deriv(REFL, term=f)))

    def test_pair_proj_both_sides(self, bank):
        theory, _, _ = bank
        for side in (1, 2):
            j = check_derivation(theory, deriv(
                PAIR_PROJ, f=Op("seven"), g=Op("balance"), side=side))
            assert j.equation.rhs == (Op("seven") if side == 1 else Op("balance"))
        with pytest.raises(IllFormedParameter):
            check_derivation(theory, deriv(
                PAIR_PROJ, f=Op("seven"), g=Op("balance"), side=3))

    def test_pair_comp_rank_limit(self, bank, throwcatch):
        states, _, _ = bank
        check_derivation(states, deriv(
            PAIR_COMP_LOWRANK, f=Id(Int), g=compose(Op("balance"), Bang(Int)),
            w=Op("seven")))
        exceptions, _ = throwcatch
        with pytest.raises(RuleMisapplied):
            check_derivation(exceptions, deriv(
                PAIR_COMP_LOWRANK, f=Id(Int), g=Id(Int), w=Op("throw")))

    def test_unit_rules_by_effect(self, bank, throwcatch):
        states, _, _ = bank
        exceptions, _ = throwcatch
        # states: bang composed with an observer chain stays canonical
        check_derivation(states, deriv(
            UNIT_STRONG_LOWRANK, f=compose(Bang(Int), Op("balance"))))
        # states: a modifier into Unit is only weakly canonical
        with pytest.raises(RuleMisapplied):
            check_derivation(states, deriv(UNIT_STRONG_LOWRANK, f=Op("deposit")))
        check_derivation(states, deriv(UNIT_WEAK, f=Op("deposit")))
        # exceptions: anything that may raise is out, strongly and weakly
        raising = compose(Bang(Int), Op("throw"))
        with pytest.raises(RuleMisapplied):
            check_derivation(exceptions, deriv(UNIT_STRONG_LOWRANK, f=raising))
        with pytest.raises(RuleMisapplied):
            check_derivation(exceptions, deriv(UNIT_WEAK, f=raising))
        check_derivation(exceptions, deriv(UNIT_WEAK, f=Bang(Int)))

    def test_conclusion_mismatch(self, bank):
        theory, f, g = bank
        with pytest.raises(ConclusionMismatch):
            check_derivation(theory, deriv(REFL, term=f), expected=weak(f, g))

    def test_missing_parameter(self, bank):
        theory, _, _ = bank
        with pytest.raises(IllFormedParameter):
            check_derivation(theory, deriv(REFL))

    def test_wrong_premise_count(self, bank):
        theory, f, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, deriv(SYM))

    def test_unknown_rule(self, bank):
        theory, _, _ = bank
        with pytest.raises(RuleMisapplied):
            check_derivation(theory, Derivation("modus_ponens"))

    def test_error_names_the_failing_premise(self, bank):
        theory, f, _ = bank
        bad = deriv(TRANS_STRONG,
                    deriv(REFL, term=f),
                    deriv(SYM, deriv(AXIOM, name="missing")))
        with pytest.raises(RuleMisapplied) as err:
            check_derivation(theory, bad)
        assert err.value.path == (1, 0)

    def test_ill_typed_parameter(self, bank):
        theory, _, _ = bank
        with pytest.raises(IllFormedParameter):
            check_derivation(theory, deriv(
                SUBST_STRONG, deriv(REFL, term=Op("seven")),
                g=compose(Op("seven"), Op("seven"))))


class TestSoundness:
    """Checker-accepted derivations conclude equations that hold in every
    model of the axioms."""

    @pytest.mark.parametrize("seed", range(25))
    def test_bank_derivations_hold_mod4(self, seed, bank, bank_mod4):
        theory, _, _ = bank
        d = random_derivation(random.Random(seed), theory)
        eq = check_derivation(theory, d).equation
        assert holds(bank_mod4, theory, eq)

    @pytest.mark.parametrize("seed", range(25))
    def test_throwcatch_derivations_hold_mod2(self, seed, throwcatch):
        theory, model = throwcatch
        d = random_derivation(random.Random(seed), theory)
        eq = check_derivation(theory, d).equation
        assert holds(model, theory, eq)

    def test_fixture_proofs_hold(self, bank, bank_mod4, throwcatch,
                                 bank_proof, throwcatch_proof):
        theory, _, _ = bank
        eq = check_derivation(theory, bank_proof).equation
        assert holds(bank_mod4, theory, eq)
        tc_theory, tc_model = throwcatch
        eq2 = check_derivation(tc_theory, throwcatch_proof).equation
        assert holds(tc_model, tc_theory, eq2)


class TestProve:
    def test_bank_weak_goal(self, bank):
        theory, f, g = bank
        d = prove(theory, weak(f, g))
        check_derivation(theory, d, expected=weak(f, g))

    def test_throwcatch_weak_goal(self, throwcatch):
        theory, _ = throwcatch
        goal = weak(compose(Op("catchZero"), Op("catchZero"), Op("throw")),
                    Op("zero"))
        d = prove(theory, goal)
        check_derivation(theory, d, expected=goal)

    def test_trivial_goals(self, bank):
        theory, f, _ = bank
        assert prove(theory, strong(f, f)).rule == REFL
        assert prove(theory, weak(f, f)).rule == STRONG_TO_WEAK

    def test_strong_rewriting(self):
        A = BaseType("A")
        theory = Theory(
            effect=EffectKind.EXCEPTIONS,
            base_types=("A",),
            operations=(OperationSymbol("a", A, A, 0),
                        OperationSymbol("b", A, A, 0)),
            axioms=(Axiom("ab", strong(Op("a"), Op("b"))),),
        )
        goal = strong(compose(Op("a"), Op("a")), compose(Op("b"), Op("b")))
        d = prove(theory, goal)
        check_derivation(theory, d, expected=goal)

    def test_axiom_used_right_to_left(self):
        A = BaseType("A")
        theory = Theory(
            effect=EffectKind.STATES,
            base_types=("A",),
            operations=(OperationSymbol("a", A, A, 0),
                        OperationSymbol("b", A, A, 0)),
            axioms=(Axiom("ab", strong(Op("a"), Op("b"))),),
        )
        goal = strong(Op("b"), Op("a"))
        check_derivation(theory, prove(theory, goal), expected=goal)

    def test_identity_axiom_collapses(self, throwcatch):
        theory, _ = throwcatch
        # catchZero ~ id lets a catcher disappear entirely
        goal = weak(compose(Op("catchZero"), Op("zero")), Op("zero"))
        check_derivation(theory, prove(theory, goal), expected=goal)

    def test_unit_collapse(self, bank):
        theory, _, _ = bank
        goal = strong(compose(Op("seven"), Bang(Int), Op("seven")), Op("seven"))
        check_derivation(theory, prove(theory, goal), expected=goal)

    def test_projection_collapse(self, bank):
        theory, _, _ = bank
        from decolog.calculus import Proj2
        goal = strong(compose(Proj2(Int, Int), pair(Op("seven"), Op("balance"))),
                      Op("balance"))
        check_derivation(theory, prove(theory, goal), expected=goal)

    def test_depth_exhausted(self, bank):
        theory, f, g = bank
        with pytest.raises(DepthExhausted):
            prove(theory, strong(f, g), max_depth=6, max_nodes=3000)

    def test_exhaustion_says_nothing(self, bank):
        theory, f, g = bank
        # provable goal, but not within one step
        with pytest.raises(DepthExhausted):
            prove(theory, weak(f, g), max_depth=1)


@pytest.fixture(scope="session")
def rules_exceptions():
    return validate_rules(EffectKind.EXCEPTIONS, max_carrier=2)


@pytest.fixture(scope="session")
def rules_states():
    return validate_rules(EffectKind.STATES, max_carrier=2)


class TestValidateRules:
    def test_exceptions_catalog_validates(self, rules_exceptions):
        assert rules_exceptions.ok
        for r in rules_exceptions.results:
            assert r.ok, f"{r.rule}: {r.description}"

    def test_states_catalog_validates(self, rules_states):
        assert rules_states.ok
        for r in rules_states.results:
            assert r.ok, f"{r.rule}: {r.description}"

    def test_sound_scenarios_have_no_violations(self, rules_exceptions, rules_states):
        for report in (rules_exceptions, rules_states):
            for r in report.results:
                if r.expectation == "sound":
                    assert r.violations == 0
                    assert r.models_checked > 0

    def test_exceptions_reject_impure_subst(self, rules_exceptions):
        found = [r for r in rules_exceptions.results
                 if r.rule == WEAK_SUBST and r.expectation == "countermodel"]
        assert len(found) == 1
        assert found[0].violations > 0
        assert found[0].example is not None

    def test_states_reject_impure_repl(self, rules_states):
        found = [r for r in rules_states.results
                 if r.rule == WEAK_REPL and r.expectation == "countermodel"]
        assert len(found) == 1
        assert found[0].violations > 0
        assert found[0].example is not None

    def test_jobs_do_not_change_the_report(self):
        a = validate_rules(EffectKind.EXCEPTIONS, max_carrier=1)
        b = validate_rules(EffectKind.EXCEPTIONS, max_carrier=1, jobs=3)
        assert a == b
