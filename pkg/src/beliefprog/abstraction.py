"""Program context, ground action universe, and type computation.

Types abstract the infinitely many initial models into finitely many
equivalence classes: a type fixes the truth of every context formula after
every ground action sequence up to the property horizon.  Objective context
formulas are evaluated by progressing a representative world under the real
action theory; subjective ones are evaluated against the progressed
knowledge base, which is the same for every representative.

Representatives are supplied by the user (or generated); completeness of
the representative set is the one soundness obligation the tool cannot
discharge itself, and every report restates that caveat.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BeliefProgError, InadmissiblePropertyError
from .kb import (EPSILON, FAILURE, action_likelihood, eval_fluent_formula,
                 eval_subjective, initial_kb, make_world, oi_alternatives,
                 progress_kb, progress_world, real_bat)
from .syntax import (And, BinOp, BoolConst, Cmp, FluentRef, GloballyOp, Neg,
                     Not, Num, Or, POp, ParamRef, Piecewise, Prim, Test,
                     Seq, Choice, Star, Nil, UntilOp, XOp, print_formula)

log = logging.getLogger(__name__)

BREAKDOWN = "belief-breakdown"


class RepresentativeError(BeliefProgError):
    pass


# ---------------------------------------------------------------------------
# program context

@dataclass(frozen=True)
class ContextFormula:
    formula: object
    provenance: str  # init | likelihood-context | test | property
    subjective: bool

    def __str__(self):
        return print_formula(self.formula)


def _instantiate(formula, bindings):
    """Substitute controllable parameters by ground values."""
    def go_expr(e):
        if isinstance(e, ParamRef):
            return Num(bindings[e.name])
        if isinstance(e, (Num, FluentRef)):
            return e
        if isinstance(e, Neg):
            return Neg(go_expr(e.operand))
        if isinstance(e, BinOp):
            return BinOp(e.op, go_expr(e.left), go_expr(e.right))
        if isinstance(e, Piecewise):
            return Piecewise(tuple((go(g), go_expr(v)) for g, v in e.cases),
                             go_expr(e.default))
        raise TypeError(e)

    def go(f):
        if isinstance(f, BoolConst):
            return f
        if isinstance(f, Cmp):
            return Cmp(f.op, go_expr(f.left), go_expr(f.right))
        if isinstance(f, Not):
            return Not(go(f.operand))
        if isinstance(f, And):
            return And(go(f.left), go(f.right))
        if isinstance(f, Or):
            return Or(go(f.left), go(f.right))
        raise TypeError(f)

    return go(formula)


def program_prims(delta):
    """Primitive programs in source order, deduplicated."""
    out = []

    def walk(p):
        if isinstance(p, Prim):
            key = (p.symbol, p.args)
            if key not in [(q.symbol, q.args) for q in out]:
                out.append(p)
        elif isinstance(p, Seq):
            walk(p.first), walk(p.second)
        elif isinstance(p, Choice):
            walk(p.left), walk(p.right)
        elif isinstance(p, Star):
            walk(p.body)
        elif isinstance(p, (Test, Nil)):
            pass
        else:
            raise TypeError(p)

    walk(delta)
    return out


def _tests_of(delta):
    out = []

    def walk(p):
        if isinstance(p, Test):
            if p.cond not in out:
                out.append(p.cond)
        elif isinstance(p, Seq):
            walk(p.first), walk(p.second)
        elif isinstance(p, Choice):
            walk(p.left), walk(p.right)
        elif isinstance(p, Star):
            walk(p.body)

    walk(delta)
    return out


def _subjective_leaves(phi, out):
    if isinstance(phi, POp):
        psi = phi.trace
        if isinstance(psi, XOp):
            _subjective_leaves(psi.arg, out)
        elif isinstance(psi, UntilOp):
            _subjective_leaves(psi.left, out)
            _subjective_leaves(psi.right, out)
        elif isinstance(psi, GloballyOp):
            _subjective_leaves(psi.arg, out)
    elif isinstance(phi, Not):
        _subjective_leaves(phi.operand, out)
    elif isinstance(phi, And):
        _subjective_leaves(phi.left, out)
        _subjective_leaves(phi.right, out)
    else:
        if phi not in out and phi != BoolConst(True) and phi != BoolConst(False):
            out.append(phi)


class ProgramContext:
    """The finite formula set whose truth along sequences fixes a type.

    Stores positive formulas only; closure under negation is implicit in
    the boolean entries of a type assignment.
    """

    def __init__(self, model, phi=None):
        self.formulas = []
        self._seen = {}
        # row selectors: (symbol, ctrl args) -> per explicit row, the index
        # of its instantiated context formula; None marks the default row
        self.row_contexts = {}

        for c in model.init.constraints:
            self._add(c, "init", subjective=False)

        prims = program_prims(model.program)
        for prim in prims:
            for bat_decl in (model.real_bat, model.believed_bat):
                table = bat_decl.likelihood_for(prim.symbol)
                decl = model.action_decl(prim.symbol)
                bindings = dict(zip(decl.ctrl, prim.args))
                selectors = []
                for row in table.rows:
                    if row.context is None:
                        selectors.append(None)
                        continue
                    inst = _instantiate(row.context, bindings)
                    idx = self._add(inst, "likelihood-context", subjective=False)
                    selectors.append(idx)
                if bat_decl is model.real_bat:
                    self.row_contexts[(prim.symbol, prim.args)] = selectors

        for cond in _tests_of(model.program):
            self._add(cond, "test", subjective=True)
        if phi is not None:
            leaves = []
            _subjective_leaves(phi, leaves)
            for leaf in leaves:
                self._add(leaf, "property", subjective=True)

    def _add(self, formula, provenance, subjective):
        if formula in self._seen:
            return self._seen[formula]
        idx = len(self.formulas)
        self.formulas.append(ContextFormula(formula, provenance, subjective))
        self._seen[formula] = idx
        return idx

    def objective_indices(self):
        return [i for i, f in enumerate(self.formulas) if not f.subjective]

    def subjective_indices(self):
        return [i for i, f in enumerate(self.formulas) if f.subjective]


# ---------------------------------------------------------------------------
# ground universe and horizon

def ground_action_universe(model):
    """Instantiations of every primitive program in the model, plus the
    reserved actions, in deterministic first-seen order.
    """
    out = []
    for prim in program_prims(model.program):
        for t in oi_alternatives(prim.symbol, prim.args, model):
            if t not in out:
                out.append(t)
    out.append(EPSILON)
    out.append(FAILURE)
    return out


def horizon_of(phi) -> int:
    """Step bound required by a bounded state formula.

    Raises InadmissiblePropertyError on unbounded until, globally, or a
    nested probability operator.
    """
    def state(f, inside_p):
        if isinstance(f, POp):
            if inside_p:
                raise InadmissiblePropertyError(
                    "nested probability operators are not checker-admissible")
            return trace(f.trace)
        if isinstance(f, Not):
            return state(f.operand, inside_p)
        if isinstance(f, And):
            return max(state(f.left, inside_p), state(f.right, inside_p))
        return 0  # subjective leaf

    def trace(psi):
        if isinstance(psi, XOp):
            state(psi.arg, True)
            return 1
        if isinstance(psi, GloballyOp):
            raise InadmissiblePropertyError(
                "unbounded globally is not checker-admissible")
        if isinstance(psi, UntilOp):
            if psi.bound is None:
                raise InadmissiblePropertyError(
                    "unbounded until is not checker-admissible")
            state(psi.left, True)
            state(psi.right, True)
            return psi.bound
        raise TypeError(psi)

    return state(phi, False)


# ---------------------------------------------------------------------------
# types

@dataclass
class TypeAssignment:
    witness: object  # representative World
    entries: dict  # (sequence tuple, context index) -> bool
    bitvec: tuple = field(default=())

    def truth(self, z, ctx_index):
        return self.entries[(z, ctx_index)]


@dataclass
class Abstraction:
    context: ProgramContext
    universe: list
    horizon: int
    sequences: list  # kept sequences (tuples of GroundAction), by tree order
    kb_of: dict  # sequence -> KnowledgeBase, or BREAKDOWN marker
    types: list  # TypeAssignment, deduplicated, sorted by bitvec
    pruned: int  # sequences dropped because no representative can reach them


def compute_types(model, k, reps, phi=None) -> Abstraction:
    """Partition representative initial worlds into types.

    reps: iterable of World over the model's fluents.  Every representative
    must satisfy the initial constraints; violators are reported.
    """
    reps = list(reps)
    if not reps:
        raise RepresentativeError("no representative initial worlds given")
    rejected = [w for w in reps
                if not all(eval_fluent_formula(c, w) for c in model.init.constraints)]
    if rejected:
        raise RepresentativeError(
            "representative world(s) violate the initial constraints: "
            + ", ".join(repr(w) for w in rejected))
    deduped = []
    for w in reps:
        if w not in deduped:
            deduped.append(w)
    reps = deduped

    context = ProgramContext(model, phi)
    universe = ground_action_universe(model)
    rbat = real_bat(model)
    kb0 = initial_kb(model)

    obj_idx = context.objective_indices()
    subj_idx = context.subjective_indices()

    # prefix tree over (A_P)^{<=k}; prune a branch once every representative
    # reaches it with likelihood 0
    sequences = []
    kb_of = {(): kb0}
    # per sequence: list of (world, likelihood) per representative
    worlds_of = {(): [(w, Fraction(1)) for w in reps]}
    pruned = 0
    frontier = [()]
    for _depth in range(k):
        new_frontier = []
        for z in frontier:
            for t in universe:
                z2 = z + (t,)
                cur = worlds_of[z]
                succ = []
                alive = False
                for w, like in cur:
                    if like == 0:
                        succ.append((w, like))
                        continue
                    step = like * action_likelihood(t, w, rbat)
                    succ.append((progress_world(w, t, rbat), step))
                    alive = alive or step != 0
                if not alive:
                    pruned += 1
                    continue
                worlds_of[z2] = succ
                kb_prev = kb_of[z]
                if kb_prev == BREAKDOWN:
                    kb_of[z2] = BREAKDOWN
                else:
                    try:
                        kb_of[z2] = progress_kb(kb_prev, t)
                    except BeliefProgError:
                        kb_of[z2] = BREAKDOWN
                new_frontier.append(z2)
        frontier = new_frontier
    sequences = sorted(worlds_of.keys(), key=lambda z: (len(z), [universe.index(t) for t in z]))

    # shared subjective entries
    subj_entries = {}
    for z in sequences:
        kb = kb_of[z]
        for idx in subj_idx:
            if kb == BREAKDOWN:
                subj_entries[(z, idx)] = False
            else:
                subj_entries[(z, idx)] = eval_subjective(kb, context.formulas[idx].formula)

    types = []
    seen = set()
    for rep_i, w0 in enumerate(reps):
        entries = dict(subj_entries)
        for z in sequences:
            w_z, _like = worlds_of[z][rep_i]
            for idx in obj_idx:
                entries[(z, idx)] = eval_fluent_formula(
                    context.formulas[idx].formula, w_z)
        key = tuple(entries[k2] for k2 in sorted(entries.keys(),
                                                 key=_entry_sort_key))
        if key in seen:
            continue
        seen.add(key)
        types.append(TypeAssignment(w0, entries, key))
    types.sort(key=lambda t: t.bitvec)

    if pruned:
        log.info("pruned %d action sequences unreachable from every "
                 "representative", pruned)
    return Abstraction(context, universe, k, sequences, kb_of, types, pruned)


def _entry_sort_key(key):
    z, idx = key
    return (len(z), tuple((t.symbol, t.ctrl, t.unctrl) for t in z), idx)


# ---------------------------------------------------------------------------
# representative world helpers

def reps_from_init(model):
    return [make_world(model, vals) for vals in model.init.worlds]


def reps_from_ranges(model, ranges):
    """Integer box per fluent, e.g. {"h": (-2, 0)}; fluents without a range
    stay at 0."""
    axes = []
    for f in model.fluents:
        if f.name in ranges:
            lo, hi = ranges[f.name]
            if lo > hi:
                raise RepresentativeError(f"empty range for {f.name!r}")
            axes.append([Fraction(v) for v in range(int(lo), int(hi) + 1)])
        else:
            axes.append([Fraction(0)])
    return [make_world(model, vals) for vals in itertools.product(*axes)]


def _constants_near(formula, fluent, out):
    if isinstance(formula, Cmp):
        for side, other in ((formula.left, formula.right),
                            (formula.right, formula.left)):
            if isinstance(side, FluentRef) and side.name == fluent \
                    and isinstance(other, Num):
                out.add(other.value)
    elif isinstance(formula, Not):
        _constants_near(formula.operand, fluent, out)
    elif isinstance(formula, (And, Or)):
        _constants_near(formula.left, fluent, out)
        _constants_near(formula.right, fluent, out)


def reps_auto(model, spread=2, cap=500):
    """Heuristic representatives: every constant compared against a fluent
    anywhere in the initial constraints or likelihood contexts, offset by
    -spread..+spread, filtered by the initial constraints.

    This covers one world inside and outside each mentioned range at desk
    scale; it is a heuristic, not a completeness proof.
    """
    interesting = {}
    sources = list(model.init.constraints)
    for bat_decl in (model.real_bat, model.believed_bat):
        for _name, table in bat_decl.likelihood:
            for row in table.rows:
                if row.context is not None:
                    sources.append(row.context)
    for f in model.fluents:
        consts = {Fraction(0)}
        for src in sources:
            _constants_near(src, f.name, consts)
        values = set()
        for c in consts:
            for d in range(-spread, spread + 1):
                values.add(c + d)
        interesting[f.name] = sorted(values)
    axes = [interesting[f.name] for f in model.fluents]
    worlds = []
    for vals in itertools.product(*axes):
        w = make_world(model, vals)
        if all(eval_fluent_formula(c, w) for c in model.init.constraints):
            worlds.append(w)
            if len(worlds) >= cap:
                log.warning("reps-auto capped at %d worlds", cap)
                break
    if not worlds:
        raise RepresentativeError(
            "reps-auto found no world satisfying the initial constraints")
    return worlds
