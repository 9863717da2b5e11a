"""Derivations in decorated equational logic, and their soundness.

A derivation is a tree: each node names an inference rule, carries the
rule's explicit parameters (terms, an axiom name, a projection side), and
lists its premise subtrees.  check_derivation walks the tree and computes
the conclusion bottom-up, rejecting any node whose side conditions fail.

The side conditions are where the two effects genuinely differ.  Weak
equations compose on one side only:

    states       f1 ~ f2  entails  f1.g ~ f2.g  for every g,
                 but h.f1 ~ h.f2 only for pure h (an impure h may read
                 the very state cells on which f1 and f2 disagree);
    exceptions   f1 ~ f2  entails  h.f1 ~ h.f2  for every h,
                 but f1.g ~ f2.g only for pure g (an impure g may raise,
                 and catchers f1, f2 are unconstrained on exceptions).

The unit laws are also effect-sensitive.  Any f : A -> Unit that leaves
the state alone is the canonical map (there is only one value to return
and nothing else to observe), so states admit the strong unit law up to
rank 1 and the weak one at every rank.  Under exceptions an impure
f : A -> Unit may raise, which no coercion of the canonical map ever
does, so both unit laws require f pure.

validate_rules replays every rule schema against exhaustively enumerated
finite interpretations and confirms each side condition is tight: the
sound instances hold in every model and the excluded instances all have
countermodels.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Sequence

from .calculus import (
    Bang,
    CalculusError,
    Comp,
    DecoratedEquation,
    DecoratedTerm,
    EffectKind,
    Id,
    Op,
    OperationSymbol,
    PAIR_COMPONENT_RANK_LIMIT,
    Pair,
    Proj1,
    Proj2,
    Strength,
    Theory,
    TypeExpr,
    Unit,
    UnitType,
    analyze_term,
    check_equation_wf,
    compose,
    from_spine,
    infer_decoration,
    normalize,
    rank_name,
    spine,
    strong,
    term_str,
    weak,
    wf_term,
)
from .semantics import (
    UNIT,
    check_factoring,
    compose_mappings,
    is_ok,
    lift_mapping,
    ok,
    table_domain,
    table_outputs,
    weak_equal,
    weak_variants,
)

# ---------------------------------------------------------------------------
# Rule identifiers
# ---------------------------------------------------------------------------

REFL = "refl"
SYM = "sym"
TRANS_STRONG = "trans_strong"
TRANS_WEAK = "trans_weak"
TRANS_MIXED = "trans_mixed"
STRONG_TO_WEAK = "strong_to_weak"
WEAK_TO_STRONG_LOWRANK = "weak_to_strong_lowrank"
SUBST_STRONG = "subst_strong"
REPL_STRONG = "repl_strong"
WEAK_SUBST = "weak_subst"
WEAK_REPL = "weak_repl"
PAIR_CONG_STRONG = "pair_cong_strong"
PAIR_PROJ = "pair_proj"
PAIR_COMP_LOWRANK = "pair_comp_lowrank"
UNIT_STRONG_LOWRANK = "unit_strong_lowrank"
UNIT_WEAK = "unit_weak"
AXIOM = "axiom"

ALL_RULES = (
    REFL, SYM, TRANS_STRONG, TRANS_WEAK, TRANS_MIXED, STRONG_TO_WEAK,
    WEAK_TO_STRONG_LOWRANK, SUBST_STRONG, REPL_STRONG, WEAK_SUBST, WEAK_REPL,
    PAIR_CONG_STRONG, PAIR_PROJ, PAIR_COMP_LOWRANK, UNIT_STRONG_LOWRANK,
    UNIT_WEAK, AXIOM,
)


class DeductionError(Exception):
    pass


class RuleMisapplied(DeductionError):
    def __init__(self, path: tuple[int, ...], message: str):
        self.path = path
        super().__init__(f"at {path_str(path)}: {message}")


class ConclusionMismatch(DeductionError):
    pass


class IllFormedParameter(DeductionError):
    def __init__(self, path: tuple[int, ...], message: str):
        self.path = path
        super().__init__(f"at {path_str(path)}: {message}")


class DepthExhausted(DeductionError):
    """The bounded search gave up.  Says nothing about provability."""


def path_str(path: tuple[int, ...]) -> str:
    return "root" if not path else "premise " + ".".join(map(str, path))


@dataclass(frozen=True)
class Derivation:
    rule: str
    params: tuple[tuple[str, object], ...] = ()
    premises: tuple["Derivation", ...] = ()

    def param_map(self) -> dict:
        return dict(self.params)


def deriv(rule: str, *premises: Derivation, **params: object) -> Derivation:
    return Derivation(rule, tuple(params.items()), premises)


@dataclass(frozen=True)
class Judgment:
    equation: DecoratedEquation
    dom: TypeExpr
    cod: TypeExpr


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------

def check_derivation(theory: Theory, derivation: Derivation,
                     expected: Optional[DecoratedEquation] = None) -> Judgment:
    """Conclusion of a derivation, or an error naming the offending node.

    When `expected` is given the root conclusion must match it exactly
    (same strength, same sides up to normalization)."""
    eq = _check(theory, derivation, ())
    report = check_equation_wf(theory, eq)
    if expected is not None and eq != expected.normalized():
        raise ConclusionMismatch(
            f"derivation concludes {_eq_str(eq)}, expected {_eq_str(expected.normalized())}")
    return Judgment(eq, report.dom, report.cod)


def _eq_str(eq: DecoratedEquation) -> str:
    middle = "==" if eq.strength is Strength.STRONG else "~"
    return f"{term_str(eq.lhs)} {middle} {term_str(eq.rhs)}"


def _need_premises(d: Derivation, n: int, path: tuple[int, ...]) -> None:
    if len(d.premises) != n:
        raise RuleMisapplied(path, f"{d.rule} takes {n} premise(s), got {len(d.premises)}")


def _term_param(theory: Theory, d: Derivation, key: str,
                path: tuple[int, ...]) -> DecoratedTerm:
    params = d.param_map()
    if key not in params:
        raise IllFormedParameter(path, f"{d.rule} needs parameter {key}")
    term = params[key]
    if not isinstance(term, (Id, Op, Comp, Pair, Proj1, Proj2, Bang)):
        raise IllFormedParameter(path, f"parameter {key} of {d.rule} must be a term")
    try:
        wf_term(theory, term)
    except CalculusError as e:
        raise IllFormedParameter(path, f"parameter {key} of {d.rule}: {e}")
    return normalize(term)


def _strength_of(eq: DecoratedEquation, want: Strength, d: Derivation,
                 idx: int, path: tuple[int, ...]) -> None:
    if eq.strength is not want:
        raise RuleMisapplied(
            path, f"premise {idx} of {d.rule} must be {want}, got {eq.strength}")


def _check(theory: Theory, d: Derivation, path: tuple[int, ...]) -> DecoratedEquation:
    if d.rule not in ALL_RULES:
        raise RuleMisapplied(path, f"unknown rule {d.rule!r}")
    premises = [_check(theory, p, path + (i,)) for i, p in enumerate(d.premises)]
    try:
        eq = _conclude(theory, d, premises, path)
        check_equation_wf(theory, eq)
        return eq
    except CalculusError as e:
        raise RuleMisapplied(path, f"{d.rule}: {e}")


def _conclude(theory: Theory, d: Derivation,
              premises: list[DecoratedEquation],
              path: tuple[int, ...]) -> DecoratedEquation:
    effect = theory.effect
    rule = d.rule

    if rule == REFL:
        _need_premises(d, 0, path)
        t = _term_param(theory, d, "term", path)
        return strong(t, t)

    if rule == AXIOM:
        _need_premises(d, 0, path)
        params = d.param_map()
        name = params.get("name")
        if not isinstance(name, str):
            raise IllFormedParameter(path, "axiom needs a string parameter name")
        return theory.axiom(name).equation.normalized()

    if rule == SYM:
        _need_premises(d, 1, path)
        return premises[0].flipped()

    if rule in (TRANS_STRONG, TRANS_WEAK, TRANS_MIXED):
        _need_premises(d, 2, path)
        p1, p2 = premises
        if rule == TRANS_STRONG:
            _strength_of(p1, Strength.STRONG, d, 1, path)
            _strength_of(p2, Strength.STRONG, d, 2, path)
            out = Strength.STRONG
        elif rule == TRANS_WEAK:
            _strength_of(p1, Strength.WEAK, d, 1, path)
            _strength_of(p2, Strength.WEAK, d, 2, path)
            out = Strength.WEAK
        else:
            if {p1.strength, p2.strength} != {Strength.STRONG, Strength.WEAK}:
                raise RuleMisapplied(
                    path, "trans_mixed takes one strong and one weak premise")
            out = Strength.WEAK
        if p1.rhs != p2.lhs:
            raise RuleMisapplied(
                path, f"middle terms differ: {_eq_str(p1)} then {_eq_str(p2)}")
        return DecoratedEquation(out, p1.lhs, p2.rhs)

    if rule == STRONG_TO_WEAK:
        _need_premises(d, 1, path)
        _strength_of(premises[0], Strength.STRONG, d, 1, path)
        return DecoratedEquation(Strength.WEAK, premises[0].lhs, premises[0].rhs)

    if rule == WEAK_TO_STRONG_LOWRANK:
        _need_premises(d, 1, path)
        p = premises[0]
        _strength_of(p, Strength.WEAK, d, 1, path)
        for side in (p.lhs, p.rhs):
            r = infer_decoration(theory, side)
            if r > 1:
                raise RuleMisapplied(
                    path, f"weak_to_strong_lowrank needs both sides of rank <= 1, "
                          f"one side is a {rank_name(effect, r)}")
        return DecoratedEquation(Strength.STRONG, p.lhs, p.rhs)

    if rule in (SUBST_STRONG, WEAK_SUBST):
        _need_premises(d, 1, path)
        p = premises[0]
        g = _term_param(theory, d, "g", path)
        if rule == SUBST_STRONG:
            _strength_of(p, Strength.STRONG, d, 1, path)
        else:
            _strength_of(p, Strength.WEAK, d, 1, path)
            if effect is EffectKind.EXCEPTIONS and infer_decoration(theory, g) > 0:
                raise RuleMisapplied(
                    path, "under exceptions weak_subst needs a pure g: an impure g "
                          "may raise, where the weak premise promises nothing")
        out = p.strength
        return DecoratedEquation(out, compose(p.lhs, g), compose(p.rhs, g))

    if rule in (REPL_STRONG, WEAK_REPL):
        _need_premises(d, 1, path)
        p = premises[0]
        h = _term_param(theory, d, "h", path)
        if rule == REPL_STRONG:
            _strength_of(p, Strength.STRONG, d, 1, path)
        else:
            _strength_of(p, Strength.WEAK, d, 1, path)
            if effect is EffectKind.STATES and infer_decoration(theory, h) > 0:
                raise RuleMisapplied(
                    path, "under states weak_repl needs a pure h: an impure h may "
                          "read the state, where the weak premise promises nothing")
        return DecoratedEquation(p.strength, compose(h, p.lhs), compose(h, p.rhs))

    if rule == PAIR_CONG_STRONG:
        _need_premises(d, 2, path)
        p1, p2 = premises
        _strength_of(p1, Strength.STRONG, d, 1, path)
        _strength_of(p2, Strength.STRONG, d, 2, path)
        return strong(Pair(p1.lhs, p2.lhs), Pair(p1.rhs, p2.rhs))

    if rule == PAIR_PROJ:
        _need_premises(d, 0, path)
        f = _term_param(theory, d, "f", path)
        g = _term_param(theory, d, "g", path)
        side = d.param_map().get("side")
        if side not in (1, 2):
            raise IllFormedParameter(path, "pair_proj needs side=1 or side=2")
        _, fcod, _ = analyze_term(theory, f)
        _, gcod, _ = analyze_term(theory, g)
        proj = Proj1(fcod, gcod) if side == 1 else Proj2(fcod, gcod)
        return strong(Comp(proj, Pair(f, g)), f if side == 1 else g)

    if rule == PAIR_COMP_LOWRANK:
        _need_premises(d, 0, path)
        f = _term_param(theory, d, "f", path)
        g = _term_param(theory, d, "g", path)
        w = _term_param(theory, d, "w", path)
        limit = PAIR_COMPONENT_RANK_LIMIT[effect]
        for label, t in (("f.w", Comp(f, w)), ("g.w", Comp(g, w))):
            r = infer_decoration(theory, t)
            if r > limit:
                raise RuleMisapplied(
                    path, f"pair_comp_lowrank: component {label} has rank {r}, "
                          f"pairs under {effect} allow at most {limit}")
        return strong(Comp(Pair(f, g), w), Pair(Comp(f, w), Comp(g, w)))

    if rule in (UNIT_STRONG_LOWRANK, UNIT_WEAK):
        _need_premises(d, 0, path)
        f = _term_param(theory, d, "f", path)
        fdom, fcod, r = analyze_term(theory, f)
        if not isinstance(fcod, UnitType):
            raise RuleMisapplied(path, f"{rule} needs a term into Unit")
        if effect is EffectKind.EXCEPTIONS and r > 0:
            raise RuleMisapplied(
                path, f"under exceptions {rule} needs a pure term: a "
                      f"{rank_name(effect, r)} into Unit may still raise")
        if rule == UNIT_STRONG_LOWRANK and effect is EffectKind.STATES and r > 1:
            raise RuleMisapplied(
                path, "under states unit_strong_lowrank allows rank <= 1: a "
                      "modifier into Unit is only weakly canonical")
        out = Strength.STRONG if rule == UNIT_STRONG_LOWRANK else Strength.WEAK
        return DecoratedEquation(out, normalize(f), normalize(Bang(fdom)))

    raise RuleMisapplied(path, f"unknown rule {rule!r}")


# ---------------------------------------------------------------------------
# Bounded proof search
# ---------------------------------------------------------------------------
#
# Bidirectional rewriting over normal forms.  Both sides of the goal grow a
# frontier; a proof is found when the frontiers share a term.  Strong moves
# rewrite any window of the composition spine (and descend into pair
# components through the congruence rules); weak moves rewrite only windows
# whose surrounding context the weak congruences can legalize.

def _atom_types(theory: Theory, atoms: Sequence[DecoratedTerm],
                dom: TypeExpr) -> list[TypeExpr]:
    """Boundary types t[0..n]: t[n] = dom, t[i] = cod of atoms[i]."""
    bounds = [None] * (len(atoms) + 1)
    bounds[len(atoms)] = dom
    for i in range(len(atoms) - 1, -1, -1):
        _, cod, _ = analyze_term(theory, atoms[i])
        bounds[i] = cod
    return bounds


def _wrap_context(theory: Theory, prefix: Sequence[DecoratedTerm],
                  suffix: Sequence[DecoratedTerm], suffix_dom: TypeExpr,
                  middle_cod: TypeExpr, inner: Derivation,
                  inner_eq: DecoratedEquation) -> Optional[Derivation]:
    """Embed a window rewrite into its spine context, picking the
    substitution/replacement rules the strength demands.  None when a weak
    rewrite sits in a context the weak congruences reject."""
    d = inner
    effect = theory.effect
    weak_mode = inner_eq.strength is Strength.WEAK
    if suffix:
        g = from_spine(suffix, suffix_dom)
        if weak_mode:
            if effect is EffectKind.EXCEPTIONS and infer_decoration(theory, g) > 0:
                return None
            d = deriv(WEAK_SUBST, d, g=g)
        else:
            d = deriv(SUBST_STRONG, d, g=g)
    if prefix:
        h = from_spine(prefix, middle_cod)
        if weak_mode:
            if effect is EffectKind.STATES and infer_decoration(theory, h) > 0:
                return None
            d = deriv(WEAK_REPL, d, h=h)
        else:
            d = deriv(REPL_STRONG, d, h=h)
    return d


def _window_rewrites(theory: Theory, term: DecoratedTerm, dom: TypeExpr,
                     allow_weak: bool) -> Iterator[tuple[DecoratedTerm, Derivation, Strength]]:
    """All one-step rewrites of the spine, as (new_term, derivation,
    strength of the step)."""
    atoms = list(spine(term))
    n = len(atoms)
    bounds = _atom_types(theory, atoms, dom)

    axiom_sides = []
    for ax in theory.axioms:
        eq = ax.equation.normalized()
        axiom_sides.append((ax.name, eq, spine(eq.lhs), spine(eq.rhs), False))
        axiom_sides.append((ax.name, eq, spine(eq.rhs), spine(eq.lhs), True))

    for i in range(n):
        for j in range(i + 1, n + 1):
            window = atoms[i:j]
            prefix, suffix = atoms[:i], atoms[j:]

            for name, eq, src, dst, flip in axiom_sides:
                if not src or list(src) != window:
                    continue
                step: Derivation = deriv(AXIOM, name=name)
                step_eq = eq
                if flip:
                    step = deriv(SYM, step)
                    step_eq = eq.flipped()
                if step_eq.strength is Strength.WEAK and not allow_weak:
                    continue
                wrapped = _wrap_context(theory, prefix, suffix, bounds[n],
                                        bounds[i], step, step_eq)
                if wrapped is None:
                    continue
                new_term = from_spine(prefix + list(dst) + suffix, bounds[n])
                if new_term != term:
                    yield new_term, wrapped, step_eq.strength

            if isinstance(bounds[i], UnitType):
                window_term = from_spine(window, bounds[j])
                r = infer_decoration(theory, window_term)
                replacement = normalize(Bang(bounds[j]))
                if window_term != replacement:
                    strong_ok = (r == 0 if theory.effect is EffectKind.EXCEPTIONS
                                 else r <= 1)
                    if strong_ok:
                        step = deriv(UNIT_STRONG_LOWRANK, f=window_term)
                        step_eq = strong(window_term, replacement)
                    elif allow_weak and theory.effect is EffectKind.STATES:
                        step = deriv(UNIT_WEAK, f=window_term)
                        step_eq = weak(window_term, replacement)
                    else:
                        continue
                    wrapped = _wrap_context(theory, prefix, suffix, bounds[n],
                                            bounds[i], step, step_eq)
                    if wrapped is not None:
                        new_term = from_spine(
                            prefix + list(spine(replacement)) + suffix, bounds[n])
                        if new_term != term:
                            yield new_term, wrapped, step_eq.strength


def _pair_rewrites(theory: Theory, term: DecoratedTerm,
                   dom: TypeExpr) -> Iterator[tuple[DecoratedTerm, Derivation, Strength]]:
    """Strong rewrites involving pairs: projection collapse, moving a factor
    in and out of a pair, and congruence steps inside components."""
    atoms = list(spine(term))
    n = len(atoms)
    bounds = _atom_types(theory, atoms, dom)

    def emit(i, j, new_atoms, step):
        # any ill-typed or rank-violating candidate is simply not a move
        try:
            new_term = from_spine(atoms[:i] + new_atoms + atoms[j:], bounds[n])
            if new_term == term:
                return None
            step_eq = _check(theory, step, ())
            wrapped = _wrap_context(theory, atoms[:i], atoms[j:], bounds[n],
                                    bounds[i], step, step_eq)
        except (DeductionError, CalculusError):
            return None
        if wrapped is None:
            return None
        return new_term, wrapped, Strength.STRONG

    for k in range(n):
        a = atoms[k]
        if isinstance(a, (Proj1, Proj2)) and k + 1 < n and isinstance(atoms[k + 1], Pair):
            p = atoms[k + 1]
            side = 1 if isinstance(a, Proj1) else 2
            kept = p.left if side == 1 else p.right
            step = deriv(PAIR_PROJ, f=p.left, g=p.right, side=side)
            got = emit(k, k + 2, list(spine(kept)), step)
            if got:
                yield got

        if isinstance(a, Pair):
            if k + 1 < n:
                w = atoms[k + 1]
                try:
                    new_atom = Pair(compose(a.left, w), compose(a.right, w))
                except CalculusError:
                    new_atom = None
                if new_atom is not None:
                    step = deriv(PAIR_COMP_LOWRANK, f=a.left, g=a.right, w=w)
                    got = emit(k, k + 2, [new_atom], step)
                    if got:
                        yield got
            sl, sr = spine(a.left), spine(a.right)
            if sl and sr and sl[-1] == sr[-1]:
                w = sl[-1]
                _, wcod, _ = analyze_term(theory, w)
                f2 = from_spine(sl[:-1], wcod)
                g2 = from_spine(sr[:-1], wcod)
                step = deriv(SYM, deriv(PAIR_COMP_LOWRANK, f=f2, g=g2, w=w))
                got = emit(k, k + 1, [Pair(f2, g2), w], step)
                if got:
                    yield got
            for side in (0, 1):
                comp = a.left if side == 0 else a.right
                other = a.right if side == 0 else a.left
                for sub_term, sub_drv, _ in _strong_moves(theory, comp, bounds[k + 1]):
                    if side == 0:
                        new_atom = Pair(sub_term, other)
                        step = deriv(PAIR_CONG_STRONG, sub_drv,
                                     deriv(REFL, term=other))
                    else:
                        new_atom = Pair(other, sub_term)
                        step = deriv(PAIR_CONG_STRONG,
                                     deriv(REFL, term=other), sub_drv)
                    got = emit(k, k + 1, [new_atom], step)
                    if got:
                        yield got


def _strong_moves(theory: Theory, term: DecoratedTerm,
                  dom: TypeExpr) -> Iterator[tuple[DecoratedTerm, Derivation, Strength]]:
    for move in _window_rewrites(theory, term, dom, allow_weak=False):
        yield move
    for move in _pair_rewrites(theory, term, dom):
        yield move


def _all_moves(theory: Theory, term: DecoratedTerm, dom: TypeExpr,
               allow_weak: bool) -> Iterator[tuple[DecoratedTerm, Derivation, Strength]]:
    for move in _window_rewrites(theory, term, dom, allow_weak):
        yield move
    for move in _pair_rewrites(theory, term, dom):
        yield move


def _chain(base: Optional[Derivation], base_weak: bool,
           step: Derivation, step_strength: Strength) -> tuple[Derivation, bool]:
    step_weak = step_strength is Strength.WEAK
    if base is None:
        return step, step_weak
    if not base_weak and not step_weak:
        return deriv(TRANS_STRONG, base, step), False
    if base_weak and step_weak:
        return deriv(TRANS_WEAK, base, step), True
    return deriv(TRANS_MIXED, base, step), True


def prove(theory: Theory, goal: DecoratedEquation, max_depth: int = 8,
          max_nodes: int = 4000) -> Derivation:
    """Search for a derivation of the goal; DepthExhausted when the bounded
    bidirectional search gives up (which decides nothing).

    The result always passes check_derivation against the goal."""
    eq = goal.normalized()
    check_equation_wf(theory, eq)
    want_weak = eq.strength is Strength.WEAK

    if eq.lhs == eq.rhs:
        found: Derivation = deriv(REFL, term=eq.lhs)
        if want_weak:
            found = deriv(STRONG_TO_WEAK, found)
        check_derivation(theory, found, expected=eq)
        return found

    dom = check_equation_wf(theory, eq).dom
    # reached[side]: term -> (derivation of `start ? term`, is_weak); the
    # seed entry holds None for "no steps yet"
    reached = [
        {eq.lhs: (None, False)},
        {eq.rhs: (None, False)},
    ]
    frontiers = [deque([(eq.lhs, 0)]), deque([(eq.rhs, 0)])]
    nodes = 0

    def meet(term: DecoratedTerm) -> Optional[Derivation]:
        left, right = reached[0].get(term), reached[1].get(term)
        if left is None or right is None:
            return None
        dl, wl = left
        dr, wr = right
        if (wl or wr) and not want_weak:
            return None
        if dl is None:
            dl, wl = deriv(REFL, term=eq.lhs), False
        if dr is None:
            dr, wr = deriv(REFL, term=eq.rhs), False
        back = deriv(SYM, dr)
        if not wl and not wr:
            out = deriv(TRANS_STRONG, dl, back)
            if want_weak:
                out = deriv(STRONG_TO_WEAK, out)
            return out
        if wl and wr:
            return deriv(TRANS_WEAK, dl, back)
        return deriv(TRANS_MIXED, dl, back)

    while any(frontiers) and nodes < max_nodes:
        for side in (0, 1):
            if not frontiers[side]:
                continue
            term, depth = frontiers[side].popleft()
            if depth >= max_depth:
                continue
            base, base_weak = reached[side][term]
            for new_term, step, strength in _all_moves(theory, term, dom, want_weak):
                nodes += 1
                combined, combined_weak = _chain(base, base_weak, step, strength)
                prev = reached[side].get(new_term)
                if prev is not None and (not prev[1] or combined_weak):
                    continue
                reached[side][new_term] = (combined, combined_weak)
                frontiers[side].append((new_term, depth + 1))
                done = meet(new_term)
                if done is not None:
                    check_derivation(theory, done, expected=eq)
                    return done
                if nodes >= max_nodes:
                    break

    raise DepthExhausted(
        f"no derivation found within depth {max_depth} ({nodes} rewrites tried); "
        "the goal may still be derivable")


# ---------------------------------------------------------------------------
# Machine validation of the rule catalog
# ---------------------------------------------------------------------------

EXPECT_SOUND = "sound"
EXPECT_COUNTERMODEL = "countermodel"


@dataclass(frozen=True)
class ScenarioResult:
    rule: str
    effect: EffectKind
    description: str
    expectation: str
    models_checked: int
    violations: int
    example: Optional[str]

    @property
    def ok(self) -> bool:
        if self.expectation == EXPECT_SOUND:
            return self.violations == 0
        return self.violations > 0


@dataclass(frozen=True)
class ValidationReport:
    effect: EffectKind
    results: tuple[ScenarioResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def _maps(effect: EffectKind, rank: int, dom: tuple, cod: tuple,
          eff: tuple) -> Iterator[dict]:
    ins = table_domain(effect, rank, dom, eff)
    outs = table_outputs(effect, rank, cod, eff)
    for combo in itertools.product(outs, repeat=len(ins)):
        yield dict(zip(ins, combo))


def _lifted_maps(effect: EffectKind, rank: int, dom: tuple, cod: tuple,
                 eff: tuple) -> Iterator[dict]:
    for m in _maps(effect, rank, dom, cod, eff):
        yield lift_mapping(effect, rank, m, eff)


def _pair_map(effect: EffectKind, left2: Mapping, right2: Mapping) -> dict:
    """Rank-2 mapping of a pair from its components' rank-2 mappings (the
    components must factor through the pair rank limit)."""
    if effect is EffectKind.EXCEPTIONS:
        out = {}
        for x, lv in left2.items():
            out[x] = ok((lv[1], right2[x][1])) if is_ok(x) else x
        return out
    return {(a, s): ((lv[0], right2[(a, s)][0]), s) for (a, s), lv in left2.items()}


def _bang_map(effect: EffectKind, dom: tuple, eff: tuple) -> dict:
    return lift_mapping(effect, 0, {a: UNIT for a in dom}, eff)


def _summary(**named_tables: Mapping) -> str:
    parts = []
    for name, m in named_tables.items():
        inside = ", ".join(f"{k!r}->{v!r}" for k, v in m.items())
        parts.append(f"{name} = {{{inside}}}")
    return "; ".join(parts)


Check = Callable[..., tuple[int, int, Optional[str]]]


@dataclass(frozen=True)
class _Scenario:
    rule: str
    description: str
    expectation: str
    roles: tuple[str, ...]
    run: Check


def _run_check(combos, conclusion, stop) -> tuple[int, int, Optional[str]]:
    """Count conclusion failures over the combos; with stop set, return at
    the first failure (used when one countermodel settles the question)."""
    checked = violations = 0
    example = None
    for named in combos:
        checked += 1
        if not conclusion(named):
            violations += 1
            if example is None:
                example = _summary(**named)
            if stop:
                break
    return checked, violations, example


def _sc_refl(effect, carriers, eff, stop=False):
    A, B = carriers["A"], carriers["B"]
    combos = ({"f": m} for r in (0, 1, 2) for m in _lifted_maps(effect, r, A, B, eff))
    return _run_check(combos, lambda n: n["f"] == n["f"], stop)


def _sc_sym_weak(effect, carriers, eff, stop=False):
    A, B = carriers["A"], carriers["B"]
    combos = ({"f1": f1, "f2": f2}
              for f1 in _lifted_maps(effect, 2, A, B, eff)
              for f2 in weak_variants(effect, f1, eff, B))
    return _run_check(combos, lambda n: weak_equal(effect, n["f2"], n["f1"]), stop)


def _sc_trans_weak(effect, carriers, eff, stop=False):
    A, B = carriers["A"], carriers["B"]
    combos = ({"f1": f1, "f2": f2, "f3": f3}
              for f1 in _lifted_maps(effect, 2, A, B, eff)
              for f2 in weak_variants(effect, f1, eff, B)
              for f3 in weak_variants(effect, f2, eff, B))
    return _run_check(combos, lambda n: weak_equal(effect, n["f1"], n["f3"]), stop)


def _sc_weak_to_strong_lowrank(effect, carriers, eff, stop=False):
    A, B = carriers["A"], carriers["B"]
    def combos():
        for f1 in _lifted_maps(effect, 1, A, B, eff):
            for f2 in weak_variants(effect, f1, eff, B):
                # keep only variants that still factor at rank 1
                if check_factoring(effect, 1, f2) is None:
                    yield {"f1": f1, "f2": f2}
    return _run_check(combos(), lambda n: n["f1"] == n["f2"], stop)


def _sc_weak_to_strong_rank2(effect, carriers, eff, stop=False):
    A, B = carriers["A"], carriers["B"]
    combos = ({"f1": f1, "f2": f2}
              for f1 in _lifted_maps(effect, 2, A, B, eff)
              for f2 in weak_variants(effect, f1, eff, B))
    return _run_check(combos, lambda n: n["f1"] == n["f2"], stop)


def _sc_subst_strong(effect, carriers, eff, stop=False):
    A, B, Z = carriers["A"], carriers["B"], carriers["Z"]
    combos = ({"f": f, "g": g}
              for f in _lifted_maps(effect, 2, A, B, eff)
              for rg in (0, 1, 2)
              for g in _lifted_maps(effect, rg, Z, A, eff))
    return _run_check(combos,
                      lambda n: compose_mappings(n["f"], n["g"])
                      == compose_mappings(n["f"], n["g"]), stop)


def _weak_subst_combos(effect, carriers, eff, g_ranks):
    A, B, Z = carriers["A"], carriers["B"], carriers["Z"]
    for f1 in _lifted_maps(effect, 2, A, B, eff):
        for f2 in weak_variants(effect, f1, eff, B):
            if f1 == f2:
                continue
            for rg in g_ranks:
                for g in _lifted_maps(effect, rg, Z, A, eff):
                    yield {"f1": f1, "f2": f2, "g": g}


def _sc_weak_subst(g_ranks):
    def run(effect, carriers, eff, stop=False):
        return _run_check(
            _weak_subst_combos(effect, carriers, eff, g_ranks),
            lambda n: weak_equal(effect,
                                 compose_mappings(n["f1"], n["g"]),
                                 compose_mappings(n["f2"], n["g"])), stop)
    return run


def _weak_repl_combos(effect, carriers, eff, h_ranks):
    A, B, C = carriers["A"], carriers["B"], carriers["C"]
    for f1 in _lifted_maps(effect, 2, A, B, eff):
        for f2 in weak_variants(effect, f1, eff, B):
            if f1 == f2:
                continue
            for rh in h_ranks:
                for h in _lifted_maps(effect, rh, B, C, eff):
                    yield {"f1": f1, "f2": f2, "h": h}


def _sc_weak_repl(h_ranks):
    def run(effect, carriers, eff, stop=False):
        return _run_check(
            _weak_repl_combos(effect, carriers, eff, h_ranks),
            lambda n: weak_equal(effect,
                                 compose_mappings(n["h"], n["f1"]),
                                 compose_mappings(n["h"], n["f2"])), stop)
    return run


def _component_ranks(effect):
    return tuple(range(PAIR_COMPONENT_RANK_LIMIT[effect] + 1))


def _sc_pair_proj(effect, carriers, eff, stop=False):
    A, B, C = carriers["A"], carriers["B"], carriers["C"]
    ranks = _component_ranks(effect)
    prod = tuple(itertools.product(B, C))
    p1 = lift_mapping(effect, 0, {p: p[0] for p in prod}, eff)
    p2 = lift_mapping(effect, 0, {p: p[1] for p in prod}, eff)
    combos = ({"f": f, "g": g}
              for rf in ranks for f in _lifted_maps(effect, rf, A, B, eff)
              for rg in ranks for g in _lifted_maps(effect, rg, A, C, eff))

    def conclusion(n):
        paired = _pair_map(effect, n["f"], n["g"])
        return (compose_mappings(p1, paired) == n["f"]
                and compose_mappings(p2, paired) == n["g"])
    return _run_check(combos, conclusion, stop)


def _sc_pair_cong(effect, carriers, eff, stop=False):
    A, B, C = carriers["A"], carriers["B"], carriers["C"]
    ranks = _component_ranks(effect)
    combos = ({"f": f, "g": g}
              for rf in ranks for f in _lifted_maps(effect, rf, A, B, eff)
              for rg in ranks for g in _lifted_maps(effect, rg, A, C, eff))
    return _run_check(combos,
                      lambda n: _pair_map(effect, n["f"], n["g"])
                      == _pair_map(effect, n["f"], n["g"]), stop)


def _sc_pair_comp(effect, carriers, eff, stop=False):
    A, B, C, Z = carriers["A"], carriers["B"], carriers["C"], carriers["Z"]
    ranks = _component_ranks(effect)
    combos = ({"f": f, "g": g, "w": w}
              for rf in ranks for f in _lifted_maps(effect, rf, A, B, eff)
              for rg in ranks for g in _lifted_maps(effect, rg, A, C, eff)
              for rw in ranks for w in _lifted_maps(effect, rw, Z, A, eff))

    def conclusion(n):
        lhs = compose_mappings(_pair_map(effect, n["f"], n["g"]), n["w"])
        rhs = _pair_map(effect,
                        compose_mappings(n["f"], n["w"]),
                        compose_mappings(n["g"], n["w"]))
        return lhs == rhs
    return _run_check(combos, conclusion, stop)


def _sc_unit(strength, ranks):
    def run(effect, carriers, eff, stop=False):
        A = carriers["A"]
        bang = _bang_map(effect, A, eff)
        combos = ({"f": f}
                  for r in ranks
                  for f in _lifted_maps(effect, r, A, (UNIT,), eff))
        if strength is Strength.STRONG:
            conclusion = lambda n: n["f"] == bang
        else:
            conclusion = lambda n: weak_equal(effect, n["f"], bang)
        return _run_check(combos, conclusion, stop)
    return run


def _scenarios(effect: EffectKind) -> tuple[_Scenario, ...]:
    out = [
        _Scenario(REFL, "a term equals itself", EXPECT_SOUND, ("A", "B"), _sc_refl),
        _Scenario(SYM, "weak equality is symmetric", EXPECT_SOUND, ("A", "B"),
                  _sc_sym_weak),
        _Scenario(TRANS_WEAK, "weak equality chains", EXPECT_SOUND, ("A", "B"),
                  _sc_trans_weak),
        _Scenario(WEAK_TO_STRONG_LOWRANK,
                  "weak agreement at rank <= 1 is already strong",
                  EXPECT_SOUND, ("A", "B"), _sc_weak_to_strong_lowrank),
        _Scenario(WEAK_TO_STRONG_LOWRANK,
                  "at rank 2 weak agreement is strictly weaker",
                  EXPECT_COUNTERMODEL, ("A", "B"), _sc_weak_to_strong_rank2),
        _Scenario(SUBST_STRONG, "strong equality precomposes", EXPECT_SOUND,
                  ("A", "B", "Z"), _sc_subst_strong),
        _Scenario(PAIR_PROJ, "projections undo pairing", EXPECT_SOUND,
                  ("A", "B", "C"), _sc_pair_proj),
        _Scenario(PAIR_CONG_STRONG, "pairing is a congruence", EXPECT_SOUND,
                  ("A", "B", "C"), _sc_pair_cong),
        _Scenario(PAIR_COMP_LOWRANK, "pairing distributes over composition",
                  EXPECT_SOUND, ("A", "B", "C", "Z"), _sc_pair_comp),
    ]
    if effect is EffectKind.STATES:
        out += [
            _Scenario(WEAK_SUBST, "any g precomposes with a weak equation",
                      EXPECT_SOUND, ("A", "B", "Z"), _sc_weak_subst((0, 1, 2))),
            _Scenario(WEAK_REPL, "pure h postcomposes with a weak equation",
                      EXPECT_SOUND, ("A", "B", "C"), _sc_weak_repl((0,))),
            _Scenario(WEAK_REPL, "an impure h distinguishes weakly equal terms",
                      EXPECT_COUNTERMODEL, ("A", "B", "C"), _sc_weak_repl((1, 2))),
            _Scenario(UNIT_STRONG_LOWRANK, "rank <= 1 terms into Unit are canonical",
                      EXPECT_SOUND, ("A",), _sc_unit(Strength.STRONG, (0, 1))),
            _Scenario(UNIT_STRONG_LOWRANK, "a modifier into Unit is not canonical",
                      EXPECT_COUNTERMODEL, ("A",), _sc_unit(Strength.STRONG, (2,))),
            _Scenario(UNIT_WEAK, "every term into Unit is weakly canonical",
                      EXPECT_SOUND, ("A",), _sc_unit(Strength.WEAK, (0, 1, 2))),
        ]
    else:
        out += [
            _Scenario(WEAK_SUBST, "pure g precomposes with a weak equation",
                      EXPECT_SOUND, ("A", "B", "Z"), _sc_weak_subst((0,))),
            _Scenario(WEAK_SUBST, "an impure g distinguishes weakly equal terms",
                      EXPECT_COUNTERMODEL, ("A", "B", "Z"), _sc_weak_subst((1, 2))),
            _Scenario(WEAK_REPL, "any h postcomposes with a weak equation",
                      EXPECT_SOUND, ("A", "B", "C"), _sc_weak_repl((0, 1, 2))),
            _Scenario(UNIT_STRONG_LOWRANK, "pure terms into Unit are canonical",
                      EXPECT_SOUND, ("A",), _sc_unit(Strength.STRONG, (0,))),
            _Scenario(UNIT_STRONG_LOWRANK, "a propagator into Unit may raise",
                      EXPECT_COUNTERMODEL, ("A",), _sc_unit(Strength.STRONG, (1,))),
            _Scenario(UNIT_WEAK, "pure terms into Unit are weakly canonical",
                      EXPECT_SOUND, ("A",), _sc_unit(Strength.WEAK, (0,))),
            _Scenario(UNIT_WEAK, "a propagator into Unit may raise even weakly",
                      EXPECT_COUNTERMODEL, ("A",), _sc_unit(Strength.WEAK, (1, 2))),
        ]
    return tuple(out)


def _run_scenario(effect: EffectKind, sc: _Scenario,
                  max_carrier: int) -> ScenarioResult:
    stop = sc.expectation == EXPECT_COUNTERMODEL
    checked = violations = 0
    example = None
    sizes = range(1, max_carrier + 1)
    for combo in itertools.product(sizes, repeat=len(sc.roles)):
        carriers = {role: tuple(range(n)) for role, n in zip(sc.roles, combo)}
        for eff_size in sizes:
            eff = tuple(range(eff_size))
            c, v, ex_here = sc.run(effect, carriers, eff, stop=stop)
            checked += c
            violations += v
            if example is None and ex_here is not None:
                sizes_str = ", ".join(f"|{r}|={n}" for r, n in zip(sc.roles, combo))
                example = f"{sizes_str}, effect carrier size {eff_size}: {ex_here}"
            if stop and violations:
                return ScenarioResult(sc.rule, effect, sc.description,
                                      sc.expectation, checked, violations, example)
    return ScenarioResult(sc.rule, effect, sc.description, sc.expectation,
                          checked, violations, example)


def validate_rules(effect: EffectKind, max_carrier: int = 2, *,
                   jobs: int = 1) -> ValidationReport:
    """Sweep every rule schema over all finite interpretations with carriers
    up to max_carrier.  Scenarios expecting soundness must show zero
    violations; scenarios for excluded instances must produce at least one
    countermodel.  The report is independent of jobs."""
    scenarios = _scenarios(effect)
    if jobs <= 1:
        results = [_run_scenario(effect, sc, max_carrier) for sc in scenarios]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda sc: _run_scenario(effect, sc, max_carrier), scenarios))
    return ValidationReport(effect, tuple(results))
