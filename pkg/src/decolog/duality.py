"""Syntactic duality between the exceptions calculus and the states calculus.

The two effects mirror each other: raising maps to reading, catching to
writing, propagators to observers and catchers to modifiers.  The mirror is
composition reversal.  An operation f: A -> B becomes an operation with the
same name and rank from B to A, a composite g . f becomes f* . g*, and the
substitution rules trade places with the replacement rules.  Everything else
(strengths, axiom names, transitivity, symmetry) carries over unchanged, so a
derivation valid on one side maps to a derivation valid on the other.

Products do not survive the mirror: pairing would have to become copairing,
which the term language does not provide.  The transform therefore refuses
theories and derivations that mention product types, pairs, projections, or
the canonical arrows into Unit.  The Unit type itself is fine; it reads as
the empty product on one side and the empty copairing target on the other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .calculus import (
    Axiom,
    Bang,
    Comp,
    DecoratedEquation,
    DecoratedTerm,
    EffectKind,
    Id,
    Op,
    OperationSymbol,
    Pair,
    Prod,
    Proj1,
    Proj2,
    Theory,
    TypeExpr,
    normalize,
    rank_name,
    term_str,
    type_str,
)
from .deduction import (
    AXIOM,
    Derivation,
    PAIR_COMP_LOWRANK,
    PAIR_CONG_STRONG,
    PAIR_PROJ,
    REPL_STRONG,
    SUBST_STRONG,
    UNIT_STRONG_LOWRANK,
    UNIT_WEAK,
    WEAK_REPL,
    WEAK_SUBST,
    check_derivation,
    path_str,
)


class NotDualizable(ValueError):
    """The input mentions constructs that have no mirror image."""

    def __init__(self, offenders: list[str]):
        self.offenders = tuple(offenders)
        super().__init__("no dual exists for: " + "; ".join(self.offenders))


DUAL_EFFECT = {
    EffectKind.EXCEPTIONS: EffectKind.STATES,
    EffectKind.STATES: EffectKind.EXCEPTIONS,
}

#: Rules that trade places under the mirror.  Everything not listed here and
#: not product- or unit-specific is its own dual.
DUAL_RULES = {
    SUBST_STRONG: REPL_STRONG,
    REPL_STRONG: SUBST_STRONG,
    WEAK_SUBST: WEAK_REPL,
    WEAK_REPL: WEAK_SUBST,
}

_PARAM_RENAME = {
    SUBST_STRONG: {"g": "h"},
    REPL_STRONG: {"h": "g"},
    WEAK_SUBST: {"g": "h"},
    WEAK_REPL: {"h": "g"},
}

_PRODUCT_RULES = frozenset({
    PAIR_CONG_STRONG,
    PAIR_PROJ,
    PAIR_COMP_LOWRANK,
    UNIT_STRONG_LOWRANK,
    UNIT_WEAK,
})

_TERM_NODES = (Id, Op, Comp, Pair, Proj1, Proj2, Bang)


def _type_offenders(ty: TypeExpr) -> list[str]:
    if isinstance(ty, Prod):
        return [f"product type {type_str(ty)}"]
    return []


def _term_offenders(term: DecoratedTerm) -> list[str]:
    if isinstance(term, Comp):
        return _term_offenders(term.after) + _term_offenders(term.first)
    if isinstance(term, Pair):
        return ([f"pair {term_str(term)}"]
                + _term_offenders(term.left) + _term_offenders(term.right))
    if isinstance(term, (Proj1, Proj2)):
        return [f"projection {term_str(term)}"]
    if isinstance(term, Bang):
        return [f"{term_str(term)}"]
    if isinstance(term, Id):
        return _type_offenders(term.ty)
    return []


def _swap(term: DecoratedTerm) -> DecoratedTerm:
    if isinstance(term, Comp):
        return Comp(_swap(term.first), _swap(term.after))
    return term


def _dual_term(term: DecoratedTerm) -> DecoratedTerm:
    return normalize(_swap(term))


def dualize_term(term: DecoratedTerm) -> DecoratedTerm:
    """The same atoms composed in the opposite order, in canonical form.
    Identities and operation names are their own duals; product constructs
    have none.  On canonical terms the transform is an exact involution."""
    bad = _term_offenders(term)
    if bad:
        raise NotDualizable(bad)
    return _dual_term(term)


def _dual_equation(eq: DecoratedEquation) -> DecoratedEquation:
    return DecoratedEquation(eq.strength, _dual_term(eq.lhs), _dual_term(eq.rhs))


def dualize_theory(theory: Theory) -> Theory:
    """The mirror theory: effect flipped, every arrow reversed, every name,
    rank, and axiom strength kept.  Applying the transform twice gives back
    the original theory exactly."""
    offenders: list[str] = []
    for sym in theory.operations:
        for ty in (sym.dom, sym.cod):
            offenders.extend(_type_offenders(ty))
    for _, term in theory.definitions:
        offenders.extend(_term_offenders(term))
    for ax in theory.axioms:
        offenders.extend(_term_offenders(ax.equation.lhs))
        offenders.extend(_term_offenders(ax.equation.rhs))
    if offenders:
        raise NotDualizable(offenders)
    return Theory(
        effect=DUAL_EFFECT[theory.effect],
        base_types=theory.base_types,
        operations=tuple(
            OperationSymbol(sym.name, sym.cod, sym.dom, sym.decoration)
            for sym in theory.operations),
        axioms=tuple(
            Axiom(ax.name, _dual_equation(ax.equation)) for ax in theory.axioms),
        definitions=tuple(
            (name, _dual_term(term)) for name, term in theory.definitions),
    )


@dataclass(frozen=True)
class DualityMap:
    """A theory together with its mirror and the symbol correspondence.

    Built with duality_map().  Operation names are preserved, so the
    correspondence pairs each symbol with its reversed-arrow counterpart in
    declaration order.
    """
    source: Theory
    target: Theory

    def correspondence(self) -> Iterator[tuple[OperationSymbol, OperationSymbol]]:
        return zip(self.source.operations, self.target.operations)

    def rows(self) -> list[tuple[str, str, str]]:
        """(name, source signature, target signature) for each operation,
        with the rank spelled in each effect's own vocabulary."""
        out = []
        for src, tgt in self.correspondence():
            out.append((
                src.name,
                f"{type_str(src.dom)} -> {type_str(src.cod)} "
                f"[{rank_name(self.source.effect, src.decoration)}]",
                f"{type_str(tgt.dom)} -> {type_str(tgt.cod)} "
                f"[{rank_name(self.target.effect, tgt.decoration)}]",
            ))
        return out


def duality_map(theory: Theory) -> DualityMap:
    return DualityMap(source=theory, target=dualize_theory(theory))


def _derivation_offenders(d: Derivation, path: tuple[int, ...]) -> list[str]:
    out = []
    if d.rule in _PRODUCT_RULES:
        out.append(f"rule {d.rule} at {path_str(path)}")
    for key, value in d.params:
        if isinstance(value, _TERM_NODES):
            out.extend(f"{o} (parameter {key} at {path_str(path)})"
                       for o in _term_offenders(value))
    for i, premise in enumerate(d.premises):
        out.extend(_derivation_offenders(premise, path + (i,)))
    return out


def _dual_derivation(d: Derivation) -> Derivation:
    rule = DUAL_RULES.get(d.rule, d.rule)
    rename = _PARAM_RENAME.get(d.rule, {})
    params = []
    for key, value in d.params:
        if isinstance(value, _TERM_NODES):
            value = _dual_term(value)
        params.append((rename.get(key, key), value))
    return Derivation(rule, tuple(params),
                      tuple(_dual_derivation(p) for p in d.premises))


def dualize_derivation(m: DualityMap, d: Derivation) -> Derivation:
    """The mirror derivation: substitution nodes become replacement nodes
    and vice versa, term parameters are reversed, everything else is kept.

    The input must check under m.source; the image is checked under m.target
    before it is returned, so a returned derivation is always valid.
    """
    offenders = _derivation_offenders(d, ())
    if offenders:
        raise NotDualizable(offenders)
    check_derivation(m.source, d)
    image = _dual_derivation(d)
    check_derivation(m.target, image)
    return image
