import pytest

from decolog.calculus import (
    Axiom,
    Bang,
    BaseType,
    EffectKind,
    Id,
    Op,
    OperationSymbol,
    Prod,
    Theory,
    Unit,
    compose,
    pair,
    weak,
)
from decolog.semantics import FiniteModel, OperationTable, UNIT, exc, ok

Int = BaseType("Int")
Z4 = tuple(range(4))
Z2 = tuple(range(2))


@pytest.fixture(scope="session")
def bank():
    """Account theory over states: a stored balance, a deposit that adds to
    it, and the axiom tying deposit to addition.  Returns (theory, f, g)
    where f deposits seven then reads, and g reads then adds seven."""
    f = compose(Op("balance"), Op("deposit"), Op("seven"))
    g = compose(Op("plus"), pair(Op("seven"), Op("balance")))
    theory = Theory(
        effect=EffectKind.STATES,
        base_types=("Int",),
        operations=(
            OperationSymbol("seven", Unit, Int, 0),
            OperationSymbol("plus", Prod(Int, Int), Int, 0),
            OperationSymbol("balance", Unit, Int, 1),
            OperationSymbol("deposit", Int, Unit, 2),
        ),
        axioms=(Axiom("ax1", weak(compose(Op("balance"), Op("deposit")),
                                  compose(Op("plus"),
                                          pair(Id(Int),
                                               compose(Op("balance"), Bang(Int)))))),),
    )
    return theory, f, g


@pytest.fixture(scope="session")
def bank_mod4():
    """The bank theory interpreted with integers mod 4 as both the value
    carrier and the state."""
    tables = {
        "seven": OperationTable(EffectKind.STATES, 0, {UNIT: 3}),
        "plus": OperationTable(EffectKind.STATES, 0,
                               {(a, b): (a + b) % 4 for a in Z4 for b in Z4}),
        "balance": OperationTable(EffectKind.STATES, 1, {(UNIT, s): s for s in Z4}),
        "deposit": OperationTable(EffectKind.STATES, 2,
                                  {(a, s): (UNIT, (a + s) % 4)
                                   for a in Z4 for s in Z4}),
    }
    return FiniteModel(EffectKind.STATES, {"Int": Z4}, Z4, tables)


@pytest.fixture(scope="session")
def throwcatch():
    """Exception theory: a thrower, a catcher that recovers to the thrown-at
    value zero, and the two axioms saying the catcher is invisible on
    ordinary values and recovers a fresh throw to zero.  Returns
    (theory, model) with the mod-2 model."""
    theory = Theory(
        effect=EffectKind.EXCEPTIONS,
        base_types=("Int",),
        operations=(
            OperationSymbol("zero", Unit, Int, 0),
            OperationSymbol("throw", Unit, Int, 1),
            OperationSymbol("catchZero", Int, Int, 2),
        ),
        axioms=(
            Axiom("ax1", weak(Op("catchZero"), Id(Int))),
            Axiom("ax2", weak(compose(Op("catchZero"), Op("throw")), Op("zero"))),
        ),
    )
    tables = {
        "zero": OperationTable(EffectKind.EXCEPTIONS, 0, {UNIT: 0}),
        "throw": OperationTable(EffectKind.EXCEPTIONS, 1, {UNIT: exc(0)}),
        "catchZero": OperationTable(EffectKind.EXCEPTIONS, 2,
                                    {ok(0): ok(0), ok(1): ok(1), exc(0): ok(0)}),
    }
    model = FiniteModel(EffectKind.EXCEPTIONS, {"Int": Z2}, (0,), tables)
    return theory, model
