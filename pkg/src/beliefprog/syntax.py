"""Typed AST for model files plus the canonical pretty-printer.

All numeric literals are exact `fractions.Fraction` values; nothing in the
AST ever holds a float.  Formula nodes are shared between the two formula
sorts (fluent formulas and subjective formulas); the parser enforces the
sort discipline.
"""

from dataclasses import dataclass, field
from fractions import Fraction

RESERVED_FLUENTS = ("Final", "Fail")
EPSILON_NAME = "eps"
FAILURE_NAME = "fail"
RESERVED_ACTIONS = (EPSILON_NAME, FAILURE_NAME)


# ---------------------------------------------------------------------------
# arithmetic expressions

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class FluentRef:
    name: str
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class ParamRef:
    name: str
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Piecewise:
    """Guarded cases evaluated top to bottom, with a mandatory default."""

    cases: tuple  # of (formula, expr) pairs
    default: object


# belief-expression atoms (only valid inside subjective formulas)

@dataclass(frozen=True)
class Bel:
    formula: object  # a fluent formula


@dataclass(frozen=True)
class Expect:
    fluent: str


@dataclass(frozen=True)
class Conf:
    fluent: str
    radius: Fraction


# ---------------------------------------------------------------------------
# formulas (shared node shapes for both sorts)

@dataclass(frozen=True)
class BoolConst:
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


def conj(a, b):
    """Conjunction that folds boolean constants but does nothing smarter."""
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    if a == FALSE or b == FALSE:
        return FALSE
    return And(a, b)


def disj(a, b):
    if a == FALSE:
        return b
    if b == FALSE:
        return a
    if a == TRUE or b == TRUE:
        return TRUE
    return Or(a, b)


def neg(a):
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    return Not(a)


# ---------------------------------------------------------------------------
# program expressions

@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Prim:
    """Primitive program: an action with its controllable arguments only."""

    symbol: str
    args: tuple  # of Fraction
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class Test:
    cond: object  # subjective formula


@dataclass(frozen=True)
class Seq:
    first: object
    second: object


@dataclass(frozen=True)
class Choice:
    left: object
    right: object


@dataclass(frozen=True)
class Star:
    body: object


NIL = Nil()


def seq(a, b):
    """Sequence constructor with Nil units removed and chains right-associated
    (node canonicalization: one shape per program, however it was written)."""
    if isinstance(a, Nil):
        return b
    if isinstance(b, Nil):
        return a
    if isinstance(a, Seq):
        return seq(a.first, seq(a.second, b))
    return Seq(a, b)


# ---------------------------------------------------------------------------
# temporal properties

@dataclass(frozen=True)
class PropInterval:
    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def contains(self, x: Fraction) -> bool:
        if x < self.lo or (x == self.lo and self.lo_open):
            return False
        if x > self.hi or (x == self.hi and self.hi_open):
            return False
        return True

    def __str__(self):
        return "%s%s, %s%s" % ("(" if self.lo_open else "[", self.lo,
                               self.hi, ")" if self.hi_open else "]")


@dataclass(frozen=True)
class POp:
    """Probability-threshold state formula P_I[trace]."""

    interval: PropInterval
    trace: object


@dataclass(frozen=True)
class XOp:
    arg: object  # state formula


@dataclass(frozen=True)
class UntilOp:
    left: object
    right: object
    bound: object = None  # int step bound, or None for unbounded


@dataclass(frozen=True)
class GloballyOp:
    """Unbounded 'globally'; simulator-only, the checker rejects it."""

    arg: object


# ---------------------------------------------------------------------------
# declarations and the model file

@dataclass(frozen=True)
class FluentDecl:
    name: str
    role: str = "state"  # or "reserved"


@dataclass(frozen=True)
class ActionDecl:
    name: str
    kind: str  # "stochastic" | "sensing"
    ctrl: tuple  # controllable parameter names (empty for sensing)
    unctrl: tuple  # uncontrollable parameter names


@dataclass(frozen=True)
class LikelihoodRow:
    context: object  # fluent formula, or None for the default row
    weights: tuple  # one expr per declared outcome


@dataclass(frozen=True)
class LikelihoodTable:
    outcomes: tuple  # of tuples of exprs (uncontrollable values per outcome)
    rows: tuple  # of LikelihoodRow


@dataclass(frozen=True)
class SsaCase:
    action: str
    params: tuple  # case-local names bound to ctrl then unctrl arguments
    effect: object  # expr
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class SsaRule:
    fluent: str
    cases: tuple
    default: object  # expr, usually the fluent itself (frame)


@dataclass(frozen=True)
class BatDecl:
    ssa: tuple  # of SsaRule
    likelihood: tuple  # of (action name, LikelihoodTable)

    def ssa_for(self, fluent):
        for rule in self.ssa:
            if rule.fluent == fluent:
                return rule
        return None

    def likelihood_for(self, action):
        for name, table in self.likelihood:
            if name == action:
                return table
        return None


@dataclass(frozen=True)
class InitTheory:
    constraints: tuple  # fluent formulas
    worlds: tuple  # of valuation tuples over the declared fluents


@dataclass(frozen=True)
class ModelFile:
    fluents: tuple  # FluentDecl, user-declared only
    actions: tuple  # ActionDecl
    real_bat: BatDecl
    believed_bat: BatDecl
    init: InitTheory
    kb0: tuple  # of (valuation tuple, Fraction weight)
    program: object
    properties: tuple  # of (name, state formula)
    source: str = field(default="", compare=False)

    @property
    def fluent_order(self):
        return tuple(f.name for f in self.fluents) + RESERVED_FLUENTS

    def action_decl(self, name):
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def property_named(self, name):
        for pname, phi in self.properties:
            if pname == name:
                return phi
        return None


# ---------------------------------------------------------------------------
# pretty-printer
#
# print_model is a strict inverse modulo sugar: parsing its output yields an
# AST equal to the one printed (the parse/print fixed-point invariant).

def frac_str(x: Fraction) -> str:
    return str(x)  # Fraction prints as "p/q" or "p"


def print_expr(e) -> str:
    return _expr(e, 0)


_BINPREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _expr(e, prec):
    if isinstance(e, Num):
        s = frac_str(e.value)
        return f"({s})" if e.value < 0 and prec > 0 else s
    if isinstance(e, (FluentRef, ParamRef)):
        return e.name
    if isinstance(e, Neg):
        s = "-" + _expr(e.operand, 3)
        return f"({s})" if prec > 2 else s
    if isinstance(e, BinOp):
        p = _BINPREC[e.op]
        s = f"{_expr(e.left, p)} {e.op} {_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, Piecewise):
        cases = " ".join(f"case {print_formula(g)}: {_expr(v, 0)};"
                         for g, v in e.cases)
        return "{ %s default: %s }" % (cases, _expr(e.default, 0))
    if isinstance(e, Bel):
        return f"B({print_formula(e.formula)})"
    if isinstance(e, Expect):
        return f"Expect({e.fluent})"
    if isinstance(e, Conf):
        return f"Conf({e.fluent}, {frac_str(e.radius)})"
    raise TypeError(f"not an expression node: {e!r}")


def print_formula(f) -> str:
    return _formula(f, 0)


def _formula(f, prec):
    # precedence: | (0) < & (1) < ! (2)
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        return f"{_expr(f.left, 1)} {f.op} {_expr(f.right, 1)}"
    if isinstance(f, Not):
        if isinstance(f.operand, (Cmp, And, Or)):
            return "!(" + _formula(f.operand, 0) + ")"
        return "!" + _formula(f.operand, 2)
    if isinstance(f, And):
        s = f"{_formula(f.left, 1)} & {_formula(f.right, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(f, Or):
        s = f"{_formula(f.left, 0)} | {_formula(f.right, 1)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a formula node: {f!r}")


def print_program(p) -> str:
    return _prog(p, 0)


def _prog(p, prec):
    # precedence: | (0) < ; (1) < * (2)
    if isinstance(p, Nil):
        return "nil"
    if isinstance(p, Prim):
        if p.args:
            return "%s(%s)" % (p.symbol, ", ".join(frac_str(a) for a in p.args))
        return p.symbol
    if isinstance(p, Test):
        return f"({print_formula(p.cond)})?"
    if isinstance(p, Seq):
        s = f"{_prog(p.first, 1)}; {_prog(p.second, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(p, Choice):
        s = f"{_prog(p.left, 0)} | {_prog(p.right, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(p, Star):
        return _prog(p.body, 2) + "*" if isinstance(p.body, (Nil, Prim)) \
            else f"({_prog(p.body, 0)})*"
    raise TypeError(f"not a program node: {p!r}")


def print_state_formula(phi) -> str:
    if isinstance(phi, POp):
        iv = phi.interval
        lo = "(" if iv.lo_open else "["
        hi = ")" if iv.hi_open else "]"
        return f"P{lo}{frac_str(iv.lo)}, {frac_str(iv.hi)}{hi}({print_trace_formula(phi.trace)})"
    if isinstance(phi, Not):
        return "!" + _wrap_state(phi.operand)
    if isinstance(phi, And):
        return f"{_wrap_state(phi.left)} & {_wrap_state(phi.right)}"
    return print_formula(phi)


def _wrap_state(phi):
    if isinstance(phi, (And, Or)):
        return f"({print_state_formula(phi)})"
    return print_state_formula(phi)


def print_trace_formula(psi) -> str:
    if isinstance(psi, XOp):
        return f"X {_wrap_state(psi.arg)}"
    if isinstance(psi, UntilOp):
        bound = f"<={psi.bound}" if psi.bound is not None else ""
        if psi.left == TRUE:
            return f"F{bound} {_wrap_state(psi.right)}"
        return f"{_wrap_state(psi.left)} U{bound} {_wrap_state(psi.right)}"
    if isinstance(psi, GloballyOp):
        return f"G {_wrap_state(psi.arg)}"
    raise TypeError(f"not a trace formula: {psi!r}")


def _print_likelihood(table, indent):
    lines = []
    for row in table.rows:
        head = "default" if row.context is None else f"case {print_formula(row.context)}"
        weights = ", ".join(print_expr(w) for w in row.weights)
        lines.append(f"{indent}{head}: {weights};")
    return lines


def _print_ssa(rule):
    lines = [f"ssa {rule.fluent} {{"]
    for c in rule.cases:
        params = ", ".join(c.params)
        lines.append(f"  case {c.action}({params}): {print_expr(c.effect)};")
    lines.append(f"  default: {print_expr(rule.default)};")
    lines.append("}")
    return lines


def print_model(m: ModelFile) -> str:
    out = []
    out.append("fluents " + ", ".join(f.name for f in m.fluents) + ";")
    out.append("")
    for a in m.actions:
        table = m.real_bat.likelihood_for(a.name)
        if a.kind == "stochastic":
            sig = "stochastic(%s; %s)" % (", ".join(a.ctrl), ", ".join(a.unctrl))
            out.append(f"action {a.name} {sig} {{")
            outs = ", ".join("(%s)" % ", ".join(print_expr(v) for v in vec)
                             for vec in table.outcomes)
            out.append(f"  outcomes: {outs};")
        else:
            vals = ", ".join(
                print_expr(vec[0]) if len(vec) == 1
                else "(%s)" % ", ".join(print_expr(v) for v in vec)
                for vec in table.outcomes)
            out.append(f"action {a.name} sensing({vals}) {{")
        out.append("  likelihood:")
        out.extend(_print_likelihood(table, "    "))
        out.append("}")
        out.append("")
    for rule in m.real_bat.ssa:
        out.extend(_print_ssa(rule))
        out.append("")
    believed_parts = []
    for name, table in m.believed_bat.likelihood:
        if table != m.real_bat.likelihood_for(name):
            believed_parts.append((name, table))
    believed_ssa = [r for r in m.believed_bat.ssa
                    if r != m.real_bat.ssa_for(r.fluent)]
    if believed_parts or believed_ssa:
        out.append("believed {")
        for name, table in believed_parts:
            decl = next(a for a in m.actions if a.name == name)
            out.append(f"  action {name} {{")
            if decl.kind == "stochastic":
                outs = ", ".join("(%s)" % ", ".join(print_expr(v) for v in vec)
                                 for vec in table.outcomes)
                out.append(f"    outcomes: {outs};")
            out.append("    likelihood:")
            out.extend(_print_likelihood(table, "      "))
            out.append("  }")
        for rule in believed_ssa:
            out.extend("  " + line for line in _print_ssa(rule))
        out.append("}")
        out.append("")
    out.append("init {")
    if m.init.constraints:
        out.append("  constraints: " +
                   ", ".join(print_formula(c) for c in m.init.constraints) + ";")
    if m.init.worlds:
        out.append("  worlds: " +
                   ", ".join("(%s)" % ", ".join(frac_str(v) for v in w)
                             for w in m.init.worlds) + ";")
    out.append("}")
    out.append("")
    pairs = ", ".join("(%s): %s" % (", ".join(frac_str(v) for v in vals),
                                    frac_str(w))
                      for vals, w in m.kb0)
    out.append("belief { %s }" % pairs)
    out.append("")
    out.append("program {")
    out.append("  " + print_program(m.program))
    out.append("}")
    for name, phi in m.properties:
        out.append("")
        out.append(f"property {name} {{ {print_state_formula(phi)} }}")
    out.append("")
    return "\n".join(out)
