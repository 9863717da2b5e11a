"""Effect-decorated signatures and terms.

A theory fixes one effect (exceptions or states), declares base types and
operation symbols, and states decorated equations over a small categorical
term language: identities, declared operations, composition, pairing,
projections, and the unique map into Unit.

Every operation carries a decoration rank 0/1/2 describing how it interacts
with the effect.  Rank 0 is "pure" for both effects; rank 1 is "propagator"
(may raise) or "observer" (may read the state); rank 2 is "catcher" (may
recover) or "modifier" (may write the state).  No type of exceptions and no
type of states exists anywhere in this syntax: the ranks are the only trace
of the effect.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator, Mapping, Optional, Union


class CalculusError(ValueError):
    """Base class for well-formedness failures."""


class UndeclaredSymbol(CalculusError):
    pass


class CompositionTypeMismatch(CalculusError):
    def __init__(self, inner_cod: "TypeExpr", outer_dom: "TypeExpr"):
        self.inner_cod = inner_cod
        self.outer_dom = outer_dom
        super().__init__(
            f"cannot compose: first factor produces {type_str(inner_cod)} "
            f"but second expects {type_str(outer_dom)}"
        )


class PairDomainMismatch(CalculusError):
    pass


class PairRankViolation(CalculusError):
    pass


class SideTypeMismatch(CalculusError):
    pass


class TheoryError(CalculusError):
    pass


class EffectKind(enum.Enum):
    EXCEPTIONS = "exceptions"
    STATES = "states"

    def __str__(self) -> str:
        return self.value


# Decoration ranks.  Plain ints keep the term machinery light; the names
# depend on the effect and live in RANK_NAMES.
Decoration = int

PURE = 0
RANK_NAMES: Mapping[EffectKind, tuple[str, str, str]] = {
    EffectKind.EXCEPTIONS: ("pure", "propagator", "catcher"),
    EffectKind.STATES: ("pure", "observer", "modifier"),
}


def rank_name(effect: EffectKind, rank: Decoration) -> str:
    return RANK_NAMES[effect][rank]


def rank_of_keyword(keyword: str) -> Optional[Decoration]:
    """Decoration rank for a keyword, or None if the keyword is unknown."""
    for names in RANK_NAMES.values():
        if keyword in names:
            return names.index(keyword)
    return None


def keyword_matches_effect(effect: EffectKind, keyword: str) -> bool:
    return keyword in RANK_NAMES[effect]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseType:
    name: str


@dataclass(frozen=True)
class UnitType:
    pass


@dataclass(frozen=True)
class Prod:
    left: "TypeExpr"
    right: "TypeExpr"


TypeExpr = Union[BaseType, UnitType, Prod]

Unit = UnitType()


def type_str(t: TypeExpr) -> str:
    """Render a type; products associate to the left."""
    if isinstance(t, BaseType):
        return t.name
    if isinstance(t, UnitType):
        return "Unit"
    left = type_str(t.left)
    right = type_str(t.right)
    if isinstance(t.right, Prod):
        right = f"({right})"
    return f"{left} * {right}"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Id:
    ty: TypeExpr


@dataclass(frozen=True)
class Op:
    name: str


@dataclass(frozen=True)
class Comp:
    """after ∘ first: apply `first`, then `after`."""
    after: "DecoratedTerm"
    first: "DecoratedTerm"


@dataclass(frozen=True)
class Pair:
    left: "DecoratedTerm"
    right: "DecoratedTerm"


@dataclass(frozen=True)
class Proj1:
    left_ty: TypeExpr
    right_ty: TypeExpr


@dataclass(frozen=True)
class Proj2:
    left_ty: TypeExpr
    right_ty: TypeExpr


@dataclass(frozen=True)
class Bang:
    """The unique pure map ty -> Unit."""
    ty: TypeExpr


DecoratedTerm = Union[Id, Op, Comp, Pair, Proj1, Proj2, Bang]


def term_str(term: DecoratedTerm, unicode_comp: bool = False) -> str:
    """Render a term in the surface syntax: `f . g` for composition (or
    with the ring operator when unicode_comp is set), `<f, g>` for pairs,
    and explicit types on the builtins."""
    dot = " ∘ " if unicode_comp else " . "
    if isinstance(term, Comp):
        return term_str(term.after, unicode_comp) + dot + term_str(term.first, unicode_comp)
    if isinstance(term, Op):
        return term.name
    if isinstance(term, Id):
        return f"id({type_str(term.ty)})"
    if isinstance(term, Pair):
        return f"<{term_str(term.left, unicode_comp)}, {term_str(term.right, unicode_comp)}>"
    if isinstance(term, Proj1):
        return f"p1({type_str(term.left_ty)}, {type_str(term.right_ty)})"
    if isinstance(term, Proj2):
        return f"p2({type_str(term.left_ty)}, {type_str(term.right_ty)})"
    if isinstance(term, Bang):
        return f"bang({type_str(term.ty)})"
    raise TypeError(f"not a term: {term!r}")


def normalize(term: DecoratedTerm) -> DecoratedTerm:
    """Canonical form: compositions right-associated with identity factors
    dropped, Bang(Unit) collapsed to Id(Unit).  Associativity and identity
    laws are definitional, so equality of normal forms is the term equality
    used everywhere else.
    """
    if isinstance(term, Comp):
        atoms = list(_atoms(term))
        if not atoms:
            return Id(_leftmost_id_type(term))
        return _spine(atoms)
    if isinstance(term, Pair):
        return Pair(normalize(term.left), normalize(term.right))
    if isinstance(term, Bang) and isinstance(term.ty, UnitType):
        return Id(Unit)
    return term


def _atoms(term: DecoratedTerm) -> Iterator[DecoratedTerm]:
    """Non-identity composition factors, outermost (last applied) first."""
    if isinstance(term, Comp):
        yield from _atoms(term.after)
        yield from _atoms(term.first)
    elif isinstance(term, Id):
        return
    else:
        t = normalize(term)
        if not isinstance(t, Id):
            yield t


def _leftmost_id_type(term: DecoratedTerm) -> TypeExpr:
    # Only reached when every factor is an identity; any factor's type works
    # for well-formed input.
    while isinstance(term, Comp):
        term = term.first
    assert isinstance(term, Id) or (
        isinstance(term, Bang) and isinstance(term.ty, UnitType)
    )
    return Unit if isinstance(term, Bang) else term.ty


def _spine(atoms: list[DecoratedTerm]) -> DecoratedTerm:
    return reduce(lambda acc, a: Comp(a, acc), reversed(atoms[:-1]), atoms[-1]) \
        if len(atoms) > 1 else atoms[0]


def spine(term: DecoratedTerm) -> tuple[DecoratedTerm, ...]:
    """Composition factors of the normal form, outermost first.

    Empty for identities; callers keep the domain type around for that case.
    """
    return tuple(_atoms(term))


def from_spine(atoms: Iterable[DecoratedTerm], dom: TypeExpr) -> DecoratedTerm:
    atoms = list(atoms)
    if not atoms:
        return Id(dom)
    return normalize(_spine(atoms))


def compose(*factors: DecoratedTerm) -> DecoratedTerm:
    """compose(f, g, h) is f ∘ g ∘ h (h applied first), normalized."""
    if not factors:
        raise ValueError("compose() needs at least one factor")
    return normalize(reduce(Comp, factors))


def pair(left: DecoratedTerm, right: DecoratedTerm) -> Pair:
    return Pair(normalize(left), normalize(right))


# ---------------------------------------------------------------------------
# Equations and theories
# ---------------------------------------------------------------------------

class Strength(enum.Enum):
    STRONG = "strong"
    WEAK = "weak"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DecoratedEquation:
    strength: Strength
    lhs: DecoratedTerm
    rhs: DecoratedTerm

    def normalized(self) -> "DecoratedEquation":
        return DecoratedEquation(self.strength, normalize(self.lhs), normalize(self.rhs))

    def flipped(self) -> "DecoratedEquation":
        return DecoratedEquation(self.strength, self.rhs, self.lhs)


def strong(lhs: DecoratedTerm, rhs: DecoratedTerm) -> DecoratedEquation:
    return DecoratedEquation(Strength.STRONG, normalize(lhs), normalize(rhs))


def weak(lhs: DecoratedTerm, rhs: DecoratedTerm) -> DecoratedEquation:
    return DecoratedEquation(Strength.WEAK, normalize(lhs), normalize(rhs))


@dataclass(frozen=True)
class OperationSymbol:
    name: str
    dom: TypeExpr
    cod: TypeExpr
    decoration: Decoration

    def __post_init__(self):
        if self.decoration not in (0, 1, 2):
            raise TheoryError(f"decoration rank must be 0, 1 or 2, got {self.decoration}")


@dataclass(frozen=True)
class Axiom:
    name: str
    equation: DecoratedEquation


#: Names reserved for the term-language builtins.
RESERVED_NAMES = frozenset({"id", "p1", "p2", "bang"})


@dataclass(frozen=True)
class Theory:
    """An effect, base types, decorated operations, named axioms, and
    optional named term abbreviations (definitions).

    Definitions are transparent: the stored term is fully expanded, so no
    term anywhere refers to a definition by name.
    """
    effect: EffectKind
    base_types: tuple[str, ...] = ()
    operations: tuple[OperationSymbol, ...] = ()
    axioms: tuple[Axiom, ...] = ()
    definitions: tuple[tuple[str, DecoratedTerm], ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        if "Unit" in self.base_types:
            raise TheoryError("base type may not be named Unit")
        if len(set(self.base_types)) != len(self.base_types):
            raise TheoryError("duplicate base type declaration")
        for sym in self.operations:
            if sym.name in RESERVED_NAMES:
                raise TheoryError(f"operation may not shadow builtin {sym.name!r}")
            if sym.name in seen:
                raise TheoryError(f"duplicate operation {sym.name!r}")
            seen.add(sym.name)
        for name, _ in self.definitions:
            if name in RESERVED_NAMES:
                raise TheoryError(f"definition may not shadow builtin {name!r}")
            if name in seen:
                raise TheoryError(f"definition {name!r} clashes with another symbol")
            seen.add(name)
        axnames = [ax.name for ax in self.axioms]
        if len(set(axnames)) != len(axnames):
            raise TheoryError("duplicate axiom name")
        self.validate()

    def op(self, name: str) -> OperationSymbol:
        found = self._op_index.get(name)
        if found is None:
            raise UndeclaredSymbol(f"operation {name!r} is not declared")
        return found

    @property
    def _op_index(self) -> dict[str, OperationSymbol]:
        cached = self.__dict__.get("_op_index_cache")
        if cached is None:
            cached = {sym.name: sym for sym in self.operations}
            self.__dict__["_op_index_cache"] = cached
        return cached

    def axiom(self, name: str) -> Axiom:
        for ax in self.axioms:
            if ax.name == name:
                return ax
        raise UndeclaredSymbol(f"axiom {name!r} is not declared")

    def definition(self, name: str) -> DecoratedTerm:
        for dname, term in self.definitions:
            if dname == name:
                return term
        raise UndeclaredSymbol(f"definition {name!r} is not declared")

    def validate(self) -> None:
        """Check every declaration, definition and axiom for well-formedness."""
        for sym in self.operations:
            _check_type_declared(self, sym.dom)
            _check_type_declared(self, sym.cod)
        for _, term in self.definitions:
            wf_term(self, term)
        for ax in self.axioms:
            check_equation_wf(self, ax.equation)


def _check_type_declared(theory: Theory, t: TypeExpr) -> None:
    if isinstance(t, BaseType):
        if t.name not in theory.base_types:
            raise UndeclaredSymbol(f"base type {t.name!r} is not declared")
    elif isinstance(t, Prod):
        _check_type_declared(theory, t.left)
        _check_type_declared(theory, t.right)


# ---------------------------------------------------------------------------
# Typing and decoration inference
# ---------------------------------------------------------------------------

#: Largest rank a pair component may have, per effect.  Pairing of rank-2
#: maps would need a sequencing convention for the two effectful components
#: and is deliberately not in the language.
PAIR_COMPONENT_RANK_LIMIT: Mapping[EffectKind, Decoration] = {
    EffectKind.EXCEPTIONS: 0,
    EffectKind.STATES: 1,
}


def analyze_term(theory: Theory, term: DecoratedTerm) -> tuple[TypeExpr, TypeExpr, Decoration]:
    """Domain, codomain and inferred rank of a term, or a CalculusError."""
    if isinstance(term, Id):
        _check_type_declared(theory, term.ty)
        return term.ty, term.ty, 0
    if isinstance(term, Op):
        sym = theory.op(term.name)
        return sym.dom, sym.cod, sym.decoration
    if isinstance(term, Comp):
        fdom, fcod, frank = analyze_term(theory, term.first)
        gdom, gcod, grank = analyze_term(theory, term.after)
        if fcod != gdom:
            raise CompositionTypeMismatch(fcod, gdom)
        return fdom, gcod, max(frank, grank)
    if isinstance(term, Pair):
        ldom, lcod, lrank = analyze_term(theory, term.left)
        rdom, rcod, rrank = analyze_term(theory, term.right)
        if ldom != rdom:
            raise PairDomainMismatch(
                f"pair components need one domain, got {type_str(ldom)} and {type_str(rdom)}"
            )
        limit = PAIR_COMPONENT_RANK_LIMIT[theory.effect]
        if lrank > limit or rrank > limit:
            raise PairRankViolation(
                f"pair components must have rank <= {limit} under {theory.effect}, "
                f"got ranks ({lrank}, {rrank})"
            )
        return ldom, Prod(lcod, rcod), max(lrank, rrank)
    if isinstance(term, Proj1):
        _check_type_declared(theory, term.left_ty)
        _check_type_declared(theory, term.right_ty)
        return Prod(term.left_ty, term.right_ty), term.left_ty, 0
    if isinstance(term, Proj2):
        _check_type_declared(theory, term.left_ty)
        _check_type_declared(theory, term.right_ty)
        return Prod(term.left_ty, term.right_ty), term.right_ty, 0
    if isinstance(term, Bang):
        _check_type_declared(theory, term.ty)
        return term.ty, Unit, 0
    raise TypeError(f"not a term: {term!r}")


def wf_term(theory: Theory, term: DecoratedTerm) -> tuple[TypeExpr, TypeExpr]:
    dom, cod, _ = analyze_term(theory, term)
    return dom, cod


def infer_decoration(theory: Theory, term: DecoratedTerm) -> Decoration:
    return analyze_term(theory, term)[2]


@dataclass(frozen=True)
class EquationReport:
    dom: TypeExpr
    cod: TypeExpr
    lhs_rank: Decoration
    rhs_rank: Decoration

    @property
    def comparison_rank(self) -> Decoration:
        return max(self.lhs_rank, self.rhs_rank)


def check_equation_wf(theory: Theory, eq: DecoratedEquation) -> EquationReport:
    """Both sides well-formed with one domain and codomain.  The two sides
    may have different ranks; equations compare at the larger one.
    """
    ldom, lcod, lrank = analyze_term(theory, eq.lhs)
    rdom, rcod, rrank = analyze_term(theory, eq.rhs)
    if ldom != rdom or lcod != rcod:
        raise SideTypeMismatch(
            f"equation sides disagree: {type_str(ldom)} -> {type_str(lcod)} "
            f"vs {type_str(rdom)} -> {type_str(rcod)}"
        )
    return EquationReport(ldom, lcod, lrank, rrank)


def term_equal(a: DecoratedTerm, b: DecoratedTerm) -> bool:
    return normalize(a) == normalize(b)


def mentions_products(term: DecoratedTerm) -> bool:
    """True if the term uses pairing, projections or the Unit map."""
    if isinstance(term, (Pair, Proj1, Proj2, Bang)):
        return True
    if isinstance(term, Comp):
        return mentions_products(term.after) or mentions_products(term.first)
    return False
