"""Catalog loading: binds the text format to exact jet objects.

`load_catalog` parses a catalog source and evaluates every statement of every
system block into engine objects: jet expressions (`jet_algebra.JetExpr`),
possibly-nonlocal values (`opalg.NonlocVal`), differential operators
(`opalg.DiffOp`) and 2x2 operator matrices (`opalg.OpMatrix`).  The result is
a `Catalog` of `LoadedSystem`s ready for the verification suites.

Two evaluation modes share the same code path:

* opaque mode (default): parameters stay symbolic constants, declared
  functions stay opaque atoms with exact chain-rule derivatives;
* instantiated mode (`Catalog.view(..., seed=...)`): free parameters are
  drawn as small non-zero rationals from a named, seeded stream, and every
  declared function is replaced by a dense random polynomial in its formal
  arguments, so all identities can be cross-checked on concrete data.

`Catalog.view` additionally accepts per-entry constant pins ("binds", for
example `c6 = 0`), which re-evaluate the whole system block under the pinned
values so that operators, densities and claims all see them consistently.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from . import dslparse as D
from .jet_algebra import (
    ZERO,
    JetExpr,
    atom_expr,
    const,
    const_gid,
    iter_jet_gens,
    jet,
    poly_substitute,
    rat,
    set_square_rule,
    var,
)
from .opalg import DiffOp, LocalOp, NonlocVal, OpMatrix, OpRegistry, apply_op

__all__ = [
    "CatalogError",
    "DanglingReference",
    "ConstraintViolation",
    "SymmetryEntry",
    "DensityEntry",
    "FlowEntry",
    "BracketCase",
    "ClaimEntry",
    "RootRule",
    "LoadedSystem",
    "Catalog",
    "load_catalog",
    "load_path",
    "load_default",
]


class CatalogError(ValueError):
    """A catalog statement could not be bound to engine objects."""


class DanglingReference(CatalogError):
    """A statement refers to a name that is not defined."""


class ConstraintViolation(CatalogError):
    """A declared constraint or non-degeneracy condition fails."""


class _NonzeroViolated(ConstraintViolation):
    """Internal: a nonzero guard vanished for one concrete draw (resample)."""


# --------------------------------------------------------------------------
# loaded entries
# --------------------------------------------------------------------------


@dataclass
class SymmetryEntry:
    name: str
    slots: dict  # coord -> JetExpr, coords among t z1 z2 z3 u v
    char_u: JetExpr
    char_v: JetExpr
    variational: str | None
    control: bool


@dataclass
class DensityEntry:
    name: str
    value: JetExpr | None
    pair: str | None
    pair_scale: JetExpr | None
    control: bool
    derive: str | None
    binds: tuple  # raw ((name, ast), ...): pins under which the entry holds


@dataclass
class FlowEntry:
    name: str
    vias: tuple  # ((opmat name, density name), ...)
    values: dict  # "u"/"v" -> NonlocVal
    combo: tuple  # ((JetExpr coeff, symmetry name), ...)
    witnesses: tuple  # ((inv name, NonlocVal), ...)
    defers: tuple  # ((dep name, inv name), ...)
    orients: tuple  # ((dep name, index), ...)
    control: bool
    binds: tuple  # raw ((name, ast), ...)
    tag: str


@dataclass
class BracketCase:
    left: str
    right: str
    zero: bool
    slots: dict  # coord -> JetExpr (expected bracket, when given slot-wise)
    combo: tuple  # ((JetExpr coeff, symmetry name), ...)
    corrected: bool
    control: bool


@dataclass
class ClaimEntry:
    name: str
    kind: str
    args: tuple
    expectfail: bool
    witnesses: tuple  # ((inv name, NonlocVal), ...)
    defers: tuple
    orients: tuple
    eqs: tuple  # ((name | None, JetExpr), ...)
    pivots: tuple
    lhs: NonlocVal | None
    rhs: NonlocVal | None
    onshell: bool
    binds: tuple  # raw ((name, ast), ...)
    forwards: tuple  # ((name, ast), ...) evaluated at check time
    backs: tuple  # ((name, ast), ...) evaluated at check time
    auxdeps: tuple


@dataclass
class RootRule:
    name: str
    square: JetExpr
    solved: str
    solution: JetExpr


# --------------------------------------------------------------------------
# random instantiation helpers
# --------------------------------------------------------------------------


def _draw_rat(rng: random.Random) -> Fraction:
    num = rng.choice([-4, -3, -2, -1, 1, 2, 3, 4])
    den = rng.choice([1, 1, 2, 3])
    return Fraction(num, den)


def _exponents(arity: int, degree: int):
    if arity == 0:
        yield ()
        return
    for head in range(degree + 1):
        for tail in _exponents(arity - 1, degree - head):
            yield (head,) + tail


class _AtomImpl:
    """A concrete polynomial standing in for one opaque function."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict):
        self.coeffs = coeffs  # exponent tuple -> Fraction

    @staticmethod
    def draw(rng: random.Random, arity: int, degree: int) -> "_AtomImpl":
        coeffs = {exps: _draw_rat(rng) for exps in _exponents(arity, degree)}
        return _AtomImpl(coeffs)

    def deriv(self, orders: tuple) -> "_AtomImpl":
        coeffs = self.coeffs
        for slot, n in enumerate(orders):
            for _ in range(n):
                nxt: dict = {}
                for exps, c in coeffs.items():
                    e = exps[slot]
                    if e == 0:
                        continue
                    low = exps[:slot] + (e - 1,) + exps[slot + 1 :]
                    nxt[low] = nxt.get(low, Fraction(0)) + c * e
                coeffs = nxt
        return _AtomImpl(coeffs)

    def value(self, args: list) -> JetExpr:
        acc = ZERO
        for exps, c in self.coeffs.items():
            term = rat(c)
            for a, e in zip(args, exps):
                term = term * a**e
            acc = acc + term
        return acc


# --------------------------------------------------------------------------
# expression and operator evaluation
# --------------------------------------------------------------------------

_COORDS = ("t", "z1", "z2", "z3")


def _jet_index(idx: tuple) -> tuple:
    return tuple(0 if i == "t" else i for i in idx)


def _as_local(v, what: str) -> JetExpr:
    if isinstance(v, JetExpr):
        return v
    if isinstance(v, NonlocVal):
        if v.is_local():
            return v.as_local()
        raise CatalogError(f"{what} must be a local expression")
    raise CatalogError(f"{what} is not an expression")


class _Evaluator:
    """Evaluates expression and operator syntax against one system scope."""

    def __init__(self, loader: "_Loader"):
        self.ld = loader

    # expressions ------------------------------------------------------

    def expr(self, node, extra: dict | None = None) -> NonlocVal:
        v = self._expr(node, extra or {})
        return v if isinstance(v, NonlocVal) else NonlocVal.of(v)

    def local(self, node, what: str, extra: dict | None = None) -> JetExpr:
        return _as_local(self._expr(node, extra or {}), what)

    def _expr(self, node, extra: dict):
        if isinstance(node, D.Num):
            return rat(node.value)
        if isinstance(node, D.Name):
            name = node.ident
            if name in extra:
                return extra[name]
            val = self.ld.env.get(name)
            if val is not None:
                return val
            if name in _COORDS:
                return var(name)
            raise DanglingReference(f"unknown name {name!r} in system {self.ld.name}")
        if isinstance(node, D.JetRef):
            return jet(node.dep, _jet_index(node.idx))
        if isinstance(node, D.AtomCall):
            return self._atom(node, extra)
        if isinstance(node, D.OpApply):
            arg = self.expr(node.arg, extra)
            if node.op in D._DIFFS:
                return arg.apply_local(LocalOp.diff(D._DIFFS[node.op]))
            op = self.ld.ops.get(node.op)
            if op is None:
                raise DanglingReference(
                    f"unknown operator {node.op!r} in system {self.ld.name}"
                )
            return apply_op(op, arg, self.ld.reg)
        if isinstance(node, D.DeferInv):
            if node.op not in self.ld.reg.defs:
                raise DanglingReference(
                    f"inv({node.op}) used before {node.op!r} is declared invertible"
                )
            return self.expr(node.arg, extra).defer(node.op)
        if isinstance(node, D.Neg):
            return -self.expr(node.arg, extra)
        if isinstance(node, D.Bin):
            return self._bin(node, extra)
        raise CatalogError(f"cannot evaluate expression node {node!r}")

    def _bin(self, node: D.Bin, extra: dict):
        if node.op == "^":
            base = self.local(node.lhs, "power base", extra)
            if not isinstance(node.rhs, D.Num):
                raise CatalogError("exponent must be an integer literal")
            return base ** node.rhs.value
        lhs = self.expr(node.lhs, extra)
        rhs = self.expr(node.rhs, extra)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            if lhs.is_local():
                return rhs.apply_local(LocalOp.mul(lhs.as_local()))
            if rhs.is_local():
                return lhs.apply_local(LocalOp.mul(rhs.as_local()))
            raise CatalogError("cannot multiply two nonlocal values")
        if node.op == "/":
            den = _as_local(rhs, "divisor")
            if den.is_zero():
                raise CatalogError("division by zero in catalog expression")
            if lhs.is_local():
                return NonlocVal.of(lhs.as_local() / den)
            return lhs.apply_local(LocalOp.mul(rat(1) / den))
        raise CatalogError(f"unknown operator {node.op!r}")

    def _atom(self, node: D.AtomCall, extra: dict) -> JetExpr:
        sig = self.ld.funcs.get(node.name)
        if sig is None:
            raise DanglingReference(
                f"call of undeclared function {node.name!r} in system {self.ld.name}"
            )
        if len(node.args) != len(sig):
            raise CatalogError(
                f"function {node.name!r} takes {len(sig)} arguments, got {len(node.args)}"
            )
        args = [self.local(a, f"argument of {node.name}", extra) for a in node.args]
        orders = node.orders if node.orders else (0,) * len(args)
        if len(orders) != len(args):
            raise CatalogError(f"function {node.name!r}: orders do not match arity")
        impl = self.ld.atom_impls.get(node.name)
        if impl is not None:
            return impl.deriv(tuple(orders)).value(args)
        return atom_expr(node.name, args, orders)

    # operators ----------------------------------------------------------

    def opexpr(self, node: D.OpSum) -> DiffOp:
        acc = DiffOp.zero()
        for term in node.terms:
            acc = acc + self._opterm(term)
        return acc

    def _opterm(self, term: D.OpTerm) -> DiffOp:
        acc = DiffOp.identity()
        for f in term.factors:
            acc = acc.compose(self._opfactor(f))
        if term.scalar is not None:
            acc = acc.scale(rat(term.scalar))
        if term.negated:
            acc = acc.scale(rat(-1))
        return acc

    def _opfactor(self, f) -> DiffOp:
        if isinstance(f, D.OpD):
            return DiffOp.diff(f.i)
        if isinstance(f, D.OpMul):
            return DiffOp.mul(self.local(f.coeff, "mul() coefficient"))
        if isinstance(f, D.OpInvRef):
            if f.name not in self.ld.reg.defs:
                raise DanglingReference(
                    f"inv({f.name}) used before {f.name!r} is declared invertible"
                )
            return DiffOp.inverse(f.name)
        if isinstance(f, D.OpName):
            op = self.ld.ops.get(f.name)
            if op is None:
                raise DanglingReference(
                    f"unknown operator {f.name!r} in system {self.ld.name}"
                )
            return op
        if isinstance(f, D.OpSum):
            return self.opexpr(f)
        raise CatalogError(f"cannot evaluate operator factor {f!r}")

    def opmatrix(self, node) -> OpMatrix:
        if isinstance(node, D.OpMatCompose):
            acc = None
            for factor in node.factors:
                m = self._opmat_factor(factor)
                acc = m if acc is None else acc.compose(m)
            return acc
        rows = tuple(tuple(self.opexpr(e) for e in row) for row in node.rows)
        return OpMatrix(rows)

    def _opmat_factor(self, factor: str) -> OpMatrix:
        if factor.startswith("adjoint(") and factor.endswith(")"):
            inner = factor[len("adjoint(") : -1]
            return self._named_opmat(inner).adjoint(self.ld.reg)
        return self._named_opmat(factor)

    def _named_opmat(self, name: str) -> OpMatrix:
        m = self.ld.opmats.get(name)
        if m is None:
            raise DanglingReference(f"unknown operator matrix {name!r}")
        return m


# --------------------------------------------------------------------------
# system loading
# --------------------------------------------------------------------------


class _Loader:
    def __init__(
        self,
        block: D.SystemBlock,
        param_values: dict | None = None,
        atom_impls: dict | None = None,
        extra_binds: tuple = (),
    ):
        self.block = block
        self.name = block.name
        self.param_values = param_values or {}
        self.atom_impls = atom_impls or {}
        self.extra_binds = extra_binds
        self.env: dict = {}
        self.params: list = []
        self.bound: dict = {}
        self.funcs: dict = {}
        self.ops: dict = {}
        self.opmats: dict = {}
        self.opmat_skew: set = set()
        self.reg = OpRegistry()
        self.roots: list = []
        self.nonzeros: list = []
        self.lets: dict = {}
        self.symmetries: dict = {}
        self.densities: dict = {}
        self.flows: dict = {}
        self.brackets: list = []
        self.claims: dict = {}
        self.ev = _Evaluator(self)
        self._extra_applied = False

    # -- helpers --------------------------------------------------------

    def _fresh(self, name: str, kind: str) -> None:
        if name in self.env or name in self.ops or name in self.opmats:
            raise CatalogError(f"{kind} {name!r} redefines an existing name")

    def _apply_extra_binds(self) -> None:
        for name, expr in self.extra_binds:
            self.env[name] = self.ev.local(expr, f"bind {name}")
            self.bound[name] = True
        self._extra_applied = True

    def _pinned(self, name: str) -> bool:
        return self._extra_applied and any(n == name for n, _ in self.extra_binds)

    # -- statement dispatch ----------------------------------------------

    def run(self) -> "LoadedSystem":
        for st in self.block.stmts:
            self._stmt(st)
        return LoadedSystem(self)

    def _stmt(self, st) -> None:
        if isinstance(st, D.Params):
            for p in st.names:
                self._fresh(p, "parameter")
                self.params.append(p)
                self.env[p] = (
                    rat(self.param_values[p]) if p in self.param_values else const(p)
                )
            self._apply_extra_binds()
        elif isinstance(st, D.Bind):
            if self._pinned(st.name):
                return
            if st.name not in self.params:
                raise DanglingReference(f"bind of undeclared parameter {st.name!r}")
            self.env[st.name] = self.ev.local(st.value, f"bind {st.name}")
            self.bound[st.name] = True
        elif isinstance(st, D.Root):
            self._root(st)
        elif isinstance(st, D.Constraint):
            val = self.ev.local(st.value, "constraint")
            if not val.is_zero():
                raise ConstraintViolation(
                    f"constraint does not vanish in system {self.name}: "
                    f"{D.print_expr(st.value)}"
                )
        elif isinstance(st, D.Nonzero):
            val = self.ev.local(st.value, "nonzero")
            if val.is_zero():
                exc = _NonzeroViolated if self.param_values else ConstraintViolation
                raise exc(
                    f"nonzero condition vanishes in system {self.name}: "
                    f"{D.print_expr(st.value)}"
                )
            self.nonzeros.append(val)
        elif isinstance(st, D.Let):
            self._fresh(st.name, "let")
            self.lets[st.name] = self.env[st.name] = self.ev.local(
                st.value, f"let {st.name}"
            )
        elif isinstance(st, D.Func):
            if st.name in self.funcs:
                raise CatalogError(f"function {st.name!r} declared twice")
            self.funcs[st.name] = tuple(st.args)
        elif isinstance(st, D.OpDef):
            self._fresh(st.name, "op")
            self.ops[st.name] = self.ev.opexpr(st.body)
        elif isinstance(st, D.Invertible):
            op = self.ops.get(st.name)
            if op is None:
                raise DanglingReference(f"invertible declares unknown op {st.name!r}")
            if not op.is_purely_local():
                raise CatalogError(f"invertible op {st.name!r} must be local")
            self.reg.define(st.name, op.local, st.skew)
        elif isinstance(st, D.OpMatDef):
            self._fresh(st.name, "opmat")
            self.opmats[st.name] = self.ev.opmatrix(st.body)
            if st.skew:
                self.opmat_skew.add(st.name)
        elif isinstance(st, D.Symmetry):
            self._symmetry(st)
        elif isinstance(st, D.Density):
            self._density(st)
        elif isinstance(st, D.Flow):
            self._flow(st)
        elif isinstance(st, D.BracketEntry):
            self._bracket(st)
        elif isinstance(st, D.Claim):
            self._claim(st)
        else:
            raise CatalogError(f"unknown statement {st!r}")

    # -- individual statements --------------------------------------------

    def _root(self, st: D.Root) -> None:
        if st.solved not in self.params:
            raise DanglingReference(f"root solves undeclared parameter {st.solved!r}")
        self._fresh(st.name, "root")
        if st.name in self.param_values:
            # concrete mode: the root symbol has a drawn value; solve for the
            # dependent parameter and never register a square rule.
            self.env[st.name] = rat(self.param_values[st.name])
            if not self._pinned(st.solved):
                self.env[st.solved] = self.ev.local(st.solution, "root solution")
            self.bound[st.solved] = True
            return
        self.env[st.name] = const(st.name)
        square = self.ev.local(st.square, "root square")
        solution = self.ev.local(st.solution, "root solution")
        # consistency: substituting the solved parameter back must recover
        # the square of the root symbol.
        mapping = {const_gid(st.solved): solution}
        back = poly_substitute(square.num, mapping) / poly_substitute(square.den, mapping)
        if back != const(st.name) * const(st.name):
            raise ConstraintViolation(
                f"root {st.name}: solving {st.solved} is inconsistent with its square"
            )
        set_square_rule(st.name, square)
        self.roots.append(RootRule(st.name, square, st.solved, solution))
        self.bound[st.solved] = True

    def _symmetry(self, st: D.Symmetry) -> None:
        if st.name in self.symmetries:
            raise CatalogError(f"symmetry {st.name!r} declared twice")
        q = self.lets.get("q")
        if q is None:
            raise CatalogError(
                f"system {self.name} must define q before its symmetries"
            )
        slots: dict = {}
        for coord, e in st.slots:
            val = self.ev.local(e, f"slot {coord} of {st.name}")
            for _, dep, idx in iter_jet_gens(val):
                if idx:
                    raise CatalogError(
                        f"symmetry {st.name}: slot {coord} depends on derivative "
                        f"{dep}[{idx}]; slots must be point functions"
                    )
            slots[coord] = val
        tau = slots.get("t", ZERO)
        eta_u = slots.get("u", ZERO)
        eta_v = slots.get("v", ZERO)
        char_u = eta_u - tau * jet("v")
        char_v = eta_v - tau * q
        for i in (1, 2, 3):
            xi = slots.get(f"z{i}")
            if xi is not None:
                char_u = char_u - xi * jet("u", (i,))
                char_v = char_v - xi * jet("v", (i,))
        for which, e in st.chars:
            declared = self.ev.local(e, f"char {which} of {st.name}")
            got = char_u if which == "u" else char_v
            if declared != got:
                raise CatalogError(
                    f"symmetry {st.name}: declared characteristic for {which} "
                    f"disagrees with its slots"
                )
        self.symmetries[st.name] = SymmetryEntry(
            st.name, slots, char_u, char_v, st.variational, st.control
        )

    def _density(self, st: D.Density) -> None:
        if st.name in self.densities:
            raise CatalogError(f"density {st.name!r} declared twice")
        value = self.ev.local(st.value, f"density {st.name}") if st.value is not None else None
        for ref in (st.pair, st.derive):
            if ref is not None and ref not in self.symmetries:
                raise DanglingReference(
                    f"density {st.name} refers to unknown symmetry {ref!r}"
                )
        scale = (
            self.ev.local(st.pair_scale, f"scale of {st.name}")
            if st.pair_scale is not None
            else None
        )
        if value is None and st.derive is None:
            raise CatalogError(f"density {st.name} has neither a value nor a derivation")
        self.densities[st.name] = DensityEntry(
            st.name, value, st.pair, scale, st.control, st.derive, st.binds
        )

    def _covering(self, defers: tuple) -> None:
        for d in defers:
            if d.inv not in self.reg.defs:
                raise DanglingReference(
                    f"defer {d.name}: {d.inv!r} is not declared invertible"
                )

    def _flow(self, st: D.Flow) -> None:
        if st.name in self.flows:
            raise CatalogError(f"flow {st.name!r} declared twice")
        for opn, dn in st.vias:
            if opn not in self.opmats:
                raise DanglingReference(f"flow {st.name} uses unknown opmat {opn!r}")
            if dn not in self.densities:
                raise DanglingReference(f"flow {st.name} uses unknown density {dn!r}")
        for _, sym in st.combo:
            if sym not in self.symmetries:
                raise DanglingReference(
                    f"flow {st.name} combines unknown symmetry {sym!r}"
                )
        self._covering(st.defers)
        values = {which: self.ev.expr(e) for which, e in st.values}
        combo = tuple(
            (self.ev.local(c, f"combo coefficient in {st.name}"), sym)
            for c, sym in st.combo
        )
        witnesses = tuple(
            (w.inv, self.ev.expr(w.value)) for w in st.witnesses
        )
        self.flows[st.name] = FlowEntry(
            st.name,
            st.vias,
            values,
            combo,
            witnesses,
            tuple((d.name, d.inv) for d in st.defers),
            tuple((o.inv, o.index) for o in st.orients),
            st.control,
            st.binds,
            st.tag,
        )

    def _bracket(self, st: D.BracketEntry) -> None:
        for ref in (st.left, st.right, *(sym for _, sym in st.combo)):
            if ref not in self.symmetries:
                raise DanglingReference(f"bracket refers to unknown symmetry {ref!r}")
        slots = {
            coord: self.ev.local(e, f"bracket slot {coord}") for coord, e in st.slots
        }
        combo = tuple(
            (self.ev.local(c, "bracket combo coefficient"), sym) for c, sym in st.combo
        )
        self.brackets.append(
            BracketCase(st.left, st.right, st.zero, slots, combo, st.corrected, st.control)
        )

    def _claim(self, st: D.Claim) -> None:
        if st.name in self.claims:
            raise CatalogError(f"claim {st.name!r} declared twice")
        self._covering(st.defers)
        self._check_claim_refs(st)
        eqs = tuple(
            (nm, self.ev.local(e, f"eq in claim {st.name}")) for nm, e in st.eqs
        )
        witnesses = tuple((w.inv, self.ev.expr(w.value)) for w in st.witnesses)
        lhs = self.ev.expr(st.lhs) if st.lhs is not None else None
        rhs = self.ev.expr(st.rhs) if st.rhs is not None else None
        self.claims[st.name] = ClaimEntry(
            st.name,
            st.kind,
            st.args,
            st.expectfail,
            witnesses,
            tuple((d.name, d.inv) for d in st.defers),
            tuple((o.inv, o.index) for o in st.orients),
            eqs,
            tuple((p.dep, _jet_index(p.idx)) for p in st.pivots),
            lhs,
            rhs,
            st.onshell,
            st.binds,
            st.forwards,
            st.backs,
            st.auxdeps,
        )

    def _check_claim_refs(self, st: D.Claim) -> None:
        def opmat_ref(a: str) -> str:
            return a[len("adjoint(") : -1] if a.startswith("adjoint(") else a

        if st.kind in ("leftinv", "invpair", "schur"):
            for a in st.args:
                if opmat_ref(a) not in self.opmats:
                    raise DanglingReference(
                        f"claim {st.name} uses unknown operator matrix {a!r}"
                    )
        elif st.kind == "step":
            opn, frm, to = st.args
            if opmat_ref(opn) not in self.opmats:
                raise DanglingReference(
                    f"claim {st.name} uses unknown operator matrix {opn!r}"
                )
            if frm not in self.densities:
                raise DanglingReference(
                    f"claim {st.name} starts from unknown density {frm!r}"
                )
            if to != "null" and to not in self.densities:
                raise DanglingReference(
                    f"claim {st.name} targets unknown density {to!r}"
                )
        elif st.kind == "stationary":
            if st.args[0] not in self.flows:
                raise DanglingReference(
                    f"claim {st.name} refers to unknown flow {st.args[0]!r}"
                )


class LoadedSystem:
    """One system of the catalog with every statement bound to engine objects."""

    def __init__(self, ld: _Loader):
        self.name = ld.name
        self.params = tuple(ld.params)
        self.bound = dict(ld.bound)
        self.funcs = dict(ld.funcs)
        self.lets = dict(ld.lets)
        self.ops = dict(ld.ops)
        self.opmats = dict(ld.opmats)
        self.opmat_skew = frozenset(ld.opmat_skew)
        self.reg = ld.reg
        self.roots = tuple(ld.roots)
        self.symmetries = dict(ld.symmetries)
        self.densities = dict(ld.densities)
        self.flows = dict(ld.flows)
        self.brackets = tuple(ld.brackets)
        self.claims = dict(ld.claims)
        self.instantiated = bool(ld.param_values)
        self._ld = ld
        q = ld.lets.get("q")
        self.q = q
        self.rhs = {"u": jet("v"), "v": q} if q is not None else {}

    def eval_ast(self, node, extra: dict | None = None) -> NonlocVal:
        """Evaluate a parsed expression in this system's scope.

        `extra` maps additional names (for example labelled residuals) to
        values visible during evaluation.
        """
        wrapped = None
        if extra:
            wrapped = {
                k: (v if isinstance(v, (JetExpr, NonlocVal)) else rat(v))
                for k, v in extra.items()
            }
        return self._ld.ev.expr(node, wrapped)

    def eval_text(self, text: str, extra: dict | None = None) -> NonlocVal:
        deps = {"u", "v"}
        for c in self.claims.values():
            deps.update(c.auxdeps)
            deps.update(n for n, _ in c.defers)
        for f in self.flows.values():
            deps.update(n for n, _ in f.defers)
        return self.eval_ast(D.parse_expr(text, deps), extra)


# --------------------------------------------------------------------------
# catalog container
# --------------------------------------------------------------------------


def _binds_key(binds: tuple) -> tuple:
    return tuple((n, D.print_expr(e)) for n, e in binds)


class Catalog:
    def __init__(self, cat: D.CatalogFile):
        self.ast = cat
        self._blocks = {}
        self.systems: dict = {}
        for block in cat.systems:
            if block.name in self._blocks:
                raise CatalogError(f"system {block.name!r} declared twice")
            self._blocks[block.name] = block
            self.systems[block.name] = _Loader(block).run()
        self.names = tuple(self.systems)
        self._views: dict = {}

    def view(
        self,
        name: str,
        binds: tuple = (),
        seed: int | None = None,
        degree: int = 2,
    ) -> LoadedSystem:
        """A (possibly pinned, possibly instantiated) view of one system."""
        if name not in self._blocks:
            raise DanglingReference(f"unknown system {name!r}")
        if not binds and seed is None:
            return self.systems[name]
        key = (name, _binds_key(binds), seed, degree)
        got = self._views.get(key)
        if got is None:
            block = self._blocks[name]
            if seed is None:
                got = _Loader(block, extra_binds=binds).run()
            else:
                got = self._instantiate(block, binds, seed, degree)
            self._views[key] = got
        return got

    def _instantiate(
        self, block: D.SystemBlock, binds: tuple, seed: int, degree: int
    ) -> LoadedSystem:
        rng = random.Random(f"{block.name}:{seed}")
        free, root_names, funcs = _draw_plan(block)
        for _ in range(64):
            values = {p: _draw_rat(rng) for p in free}
            values.update({r: _draw_rat(rng) for r in root_names})
            impls = {
                fn: _AtomImpl.draw(rng, arity, degree) for fn, arity in funcs
            }
            try:
                return _Loader(block, values, impls, binds).run()
            except _NonzeroViolated:
                continue
        raise CatalogError(
            f"could not draw parameters satisfying the nonzero conditions of "
            f"{block.name} (seed {seed})"
        )


def _draw_plan(block: D.SystemBlock):
    params: list = []
    solved: set = set()
    funcs: list = []
    roots: list = []
    for st in block.stmts:
        if isinstance(st, D.Params):
            params.extend(st.names)
        elif isinstance(st, D.Bind):
            solved.add(st.name)
        elif isinstance(st, D.Root):
            solved.add(st.solved)
            roots.append(st.name)
        elif isinstance(st, D.Func):
            funcs.append((st.name, len(st.args)))
    free = [p for p in params if p not in solved]
    return free, roots, funcs


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------


def load_catalog(text: str) -> Catalog:
    return Catalog(D.parse_catalog(text))


def load_path(path) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        return load_catalog(fh.read())


def load_default() -> Catalog:
    data = resources.files("heavenly").joinpath("data/systems.hvk").read_text("utf-8")
    return load_catalog(data)
