"""Parser and printer for the catalog text format (.hvk files).

The format is line-oriented with block statements terminated by `end`.  A file
is a sequence of `system <name>` sections; each section carries parameter
declarations, named scalar expressions, opaque function declarations, named
(matrix) operators, symmetries, densities, flows, commutator table entries and
claims.  Expressions may apply named operators (`W[u[1]]`), builtin total
derivatives (`D3[...]`) and deferred formal inverses (`inv(W; ...)`).

Parsing is exact recursive descent; every node and error carries a source
span.  The printer emits a canonical, fully re-parsable rendering such that
parse(print(parse(text))) == parse(text).
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


# --------------------------------------------------------------------------
# tokens
# --------------------------------------------------------------------------

_PUNCT = ("(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "+", "-", "*", "/", "^", ".")


@dataclass(frozen=True)
class Tok:
    kind: str  # ident | num | punct | prime | nl | eof
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    toks: list[Tok] = []
    line = 1
    col = 1
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            if toks and toks[-1].kind != "nl":
                toks.append(Tok("nl", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Tok("num", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Tok("ident", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i
            while j < n and src[j] == "'":
                j += 1
            toks.append(Tok("prime", src[i:j], line, col))
            col += j - i
            i = j
            continue
        matched = None
        for p in _PUNCT:
            if src.startswith(p, i):
                matched = p
                break
        if matched is None:
            raise ParseError(f"unexpected character {ch!r}", line, col)
        toks.append(Tok("punct", matched, line, col))
        i += len(matched)
        col += len(matched)
    toks.append(Tok("eof", "", line, col))
    return toks


# --------------------------------------------------------------------------
# expression AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class JetRef:
    dep: str
    idx: tuple  # entries: int 1..3 or "t"


@dataclass(frozen=True)
class AtomCall:
    name: str
    args: tuple
    orders: tuple


@dataclass(frozen=True)
class OpApply:
    op: str  # named operator, or D1/D2/D3/Dt
    arg: object


@dataclass(frozen=True)
class DeferInv:
    op: str
    arg: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    lhs: object
    rhs: object


# operator-expression AST


@dataclass(frozen=True)
class OpMul:
    coeff: object


@dataclass(frozen=True)
class OpD:
    i: int


@dataclass(frozen=True)
class OpInvRef:
    name: str


@dataclass(frozen=True)
class OpName:
    name: str


@dataclass(frozen=True)
class OpTerm:
    negated: bool
    scalar: int | None
    factors: tuple


@dataclass(frozen=True)
class OpSum:
    terms: tuple


@dataclass(frozen=True)
class OpMatExpr:
    rows: tuple  # 2x2 of OpSum


# --------------------------------------------------------------------------
# statement AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Params:
    names: tuple


@dataclass(frozen=True)
class Bind:
    name: str
    value: object


@dataclass(frozen=True)
class Constraint:
    value: object


@dataclass(frozen=True)
class Nonzero:
    value: object


@dataclass(frozen=True)
class Root:
    name: str
    square: object
    solved: str
    solution: object


@dataclass(frozen=True)
class Let:
    name: str
    value: object


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple


@dataclass(frozen=True)
class OpDef:
    name: str
    body: OpSum


@dataclass(frozen=True)
class Invertible:
    name: str
    skew: bool


@dataclass(frozen=True)
class OpMatCompose:
    factors: tuple  # entries: opmat name, or "adjoint(NAME)"


@dataclass(frozen=True)
class OpMatDef:
    name: str
    body: object  # OpMatExpr | OpMatCompose
    skew: bool = False


@dataclass(frozen=True)
class Symmetry:
    name: str
    slots: tuple  # ((coord, expr), ...)
    chars: tuple  # (("u"|...|"v", expr), ...)
    variational: str | None  # "yes" | "no" | None
    control: bool


@dataclass(frozen=True)
class Density:
    name: str
    value: object | None
    pair: str | None
    pair_scale: object | None
    control: bool
    derive: str | None = None
    binds: tuple = ()  # ((name, expr), ...) constants pinned for this density


@dataclass(frozen=True)
class Witness:
    inv: str
    value: object


@dataclass(frozen=True)
class DeferBind:
    name: str
    inv: str


@dataclass(frozen=True)
class Orient:
    inv: str
    index: int


@dataclass(frozen=True)
class Flow:
    name: str
    vias: tuple  # ((opname, densname), ...)
    values: tuple  # (("u"|"v", expr), ...)
    combo: tuple  # ((coeff expr, symname), ...)
    witnesses: tuple
    defers: tuple
    orients: tuple
    control: bool
    binds: tuple = ()  # ((name, expr), ...) constants pinned for this flow
    tag: str = "hierarchy"  # hierarchy | flows | biham


@dataclass(frozen=True)
class BracketEntry:
    left: str
    right: str
    zero: bool
    slots: tuple
    corrected: bool
    combo: tuple = ()  # ((coeff expr, symname), ...) result as a combination
    control: bool = False


@dataclass(frozen=True)
class Claim:
    name: str
    kind: str  # leftinv | invpair | schur | step | stationary | compat | identity
    args: tuple
    expectfail: bool
    # block payload
    witnesses: tuple = ()
    defers: tuple = ()
    orients: tuple = ()
    eqs: tuple = ()  # ((name|None, expr), ...)
    pivots: tuple = ()
    lhs: object | None = None
    rhs: object | None = None
    onshell: bool = False
    binds: tuple = ()  # ((name, expr), ...)
    forwards: tuple = ()  # ((name, expr), ...) claimed eq from derived residuals
    backs: tuple = ()  # ((name, expr), ...) derived residual from claimed eqs
    auxdeps: tuple = ()  # auxiliary dependent variables scoped to this claim


@dataclass(frozen=True)
class SystemBlock:
    name: str
    stmts: tuple


@dataclass(frozen=True)
class CatalogFile:
    systems: tuple


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_COORDS = {"t": "t", "z1": "z1", "z2": "z2", "z3": "z3"}
_DIFFS = {"D1": 1, "D2": 2, "D3": 3, "Dt": 0}


class _Parser:
    def __init__(self, toks: list[Tok], deps: set[str] | None = None):
        self.toks = toks
        self.pos = 0
        self.deps = set(deps or {"u", "v"})

    # -- token helpers ---------------------------------------------------

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def skip_nl(self) -> None:
        while self.peek().kind == "nl":
            self.next()

    def expect(self, kind: str, text: str | None = None) -> Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_ident(self, text: str | None = None) -> str:
        return self.expect("ident", text).text

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def eat_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.next()
            return True
        return False

    def end_line(self) -> None:
        t = self.peek()
        if t.kind not in ("nl", "eof"):
            raise ParseError(f"unexpected trailing token {t.text!r}", t.line, t.col)
        self.skip_nl()

    # -- expressions -------------------------------------------------------

    def expr(self):
        node = self.term()
        while self.at_punct("+") or self.at_punct("-"):
            op = self.next().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.at_punct("*") or self.at_punct("/"):
            op = self.next().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        if self.eat_punct("-"):
            return Neg(self.factor())
        return self.power()

    def power(self):
        node = self.primary()
        if self.at_punct("^"):
            self.next()
            e = self.expect("num")
            node = Bin("^", node, Num(int(e.text)))
        return node

    def primary(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Num(int(t.text))
        if self.eat_punct("("):
            node = self.expr()
            self.expect("punct", ")")
            return node
        if t.kind != "ident":
            raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col)
        name = self.next().text
        if name == "inv" and self.at_punct("("):
            self.next()
            op = self.expect_ident()
            self.expect("punct", ";")
            arg = self.expr()
            self.expect("punct", ")")
            return DeferInv(op, arg)
        if name in _COORDS and not (self.at_punct("[") or self.at_punct("(")):
            return Name(name)
        if self.at_punct("["):
            if name in self.deps:
                return self.jet_ref(name)
            self.next()
            arg = self.expr()
            self.expect("punct", "]")
            return OpApply(name, arg)
        orders = None
        if self.at_punct("{"):
            self.next()
            nums = [int(self.expect("num").text)]
            while self.eat_punct(","):
                nums.append(int(self.expect("num").text))
            self.expect("punct", "}")
            orders = tuple(nums)
        primes = 0
        if self.peek().kind == "prime":
            primes = len(self.next().text)
        if self.at_punct("("):
            self.next()
            args = [self.expr()]
            while self.eat_punct(","):
                args.append(self.expr())
            self.expect("punct", ")")
            if orders is None:
                orders = (primes,) + (0,) * (len(args) - 1)
            if len(orders) != len(args):
                raise ParseError(
                    f"{name}: {len(args)} arguments but {len(orders)} orders", t.line, t.col
                )
            return AtomCall(name, tuple(args), tuple(orders))
        if orders is not None or primes:
            raise ParseError(f"{name}: derivative marks need an argument list", t.line, t.col)
        return Name(name)

    def jet_ref(self, dep: str):
        self.expect("punct", "[")
        idx: list = []
        if not self.at_punct("]"):
            while True:
                t = self.next()
                if t.kind == "num":
                    idx.append(int(t.text))
                elif t.kind == "ident" and t.text == "t":
                    idx.append("t")
                else:
                    raise ParseError(f"bad jet index {t.text!r}", t.line, t.col)
                if not self.eat_punct(","):
                    break
        self.expect("punct", "]")
        return JetRef(dep, tuple(idx))

    # -- operator expressions ---------------------------------------------

    def opexpr(self) -> OpSum:
        terms = [self.opterm(False)]
        while self.at_punct("+") or self.at_punct("-"):
            neg = self.next().text == "-"
            terms.append(self.opterm(neg))
        return OpSum(tuple(terms))

    def opterm(self, negated: bool) -> OpTerm:
        if self.eat_punct("-"):
            negated = not negated
        scalar = None
        if self.peek().kind == "num":
            scalar = int(self.next().text)
            self.expect("punct", "*")
        factors = [self.opfactor()]
        while self.eat_punct("."):
            factors.append(self.opfactor())
        return OpTerm(negated, scalar, tuple(factors))

    def opfactor(self):
        t = self.peek()
        if self.eat_punct("("):
            inner = self.opexpr()
            self.expect("punct", ")")
            return inner
        if t.kind != "ident":
            raise ParseError(f"expected operator, found {t.text!r}", t.line, t.col)
        name = self.next().text
        if name == "mul":
            self.expect("punct", "(")
            coeff = self.expr()
            self.expect("punct", ")")
            return OpMul(coeff)
        if name == "inv":
            self.expect("punct", "(")
            inner = self.expect_ident()
            self.expect("punct", ")")
            return OpInvRef(inner)
        if name in _DIFFS:
            return OpD(_DIFFS[name])
        return OpName(name)

    def opmatrix(self) -> OpMatExpr:
        self.expect("punct", "[")
        self.expect("punct", "[")
        a = self.opexpr()
        self.expect("punct", ",")
        b = self.opexpr()
        self.expect("punct", "]")
        self.expect("punct", ",")
        self.expect("punct", "[")
        c = self.opexpr()
        self.expect("punct", ",")
        d = self.opexpr()
        self.expect("punct", "]")
        self.expect("punct", "]")
        return OpMatExpr(((a, b), (c, d)))

    # -- statements ----------------------------------------------------------

    def file(self) -> CatalogFile:
        systems = []
        self.skip_nl()
        while self.peek().kind != "eof":
            systems.append(self.system())
            self.skip_nl()
        return CatalogFile(tuple(systems))

    def system(self) -> SystemBlock:
        self.expect_ident("system")
        name = self.expect_ident()
        self.end_line()
        stmts = []
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "eof" or (t.kind == "ident" and t.text == "system"):
                break
            stmts.append(self.statement())
        return SystemBlock(name, tuple(stmts))

    def statement(self):
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected statement, found {t.text!r}", t.line, t.col)
        kw = t.text
        handler = getattr(self, f"stmt_{kw}", None)
        if handler is None:
            raise ParseError(f"unknown statement {kw!r}", t.line, t.col)
        return handler()

    def stmt_params(self):
        self.next()
        names = []
        while self.peek().kind == "ident":
            names.append(self.next().text)
        self.end_line()
        return Params(tuple(names))

    def stmt_bind(self):
        self.next()
        name = self.expect_ident()
        self.expect("punct", "=")
        value = self.expr()
        self.end_line()
        return Bind(name, value)

    def stmt_constraint(self):
        self.next()
        value = self.expr()
        self.end_line()
        return Constraint(value)

    def stmt_nonzero(self):
        self.next()
        value = self.expr()
        self.end_line()
        return Nonzero(value)

    def stmt_root(self):
        self.next()
        name = self.expect_ident()
        self.expect("punct", "=")
        square = self.expr()
        self.expect_ident("solving")
        solved = self.expect_ident()
        self.expect("punct", "=")
        solution = self.expr()
        self.end_line()
        return Root(name, square, solved, solution)

    def stmt_let(self):
        self.next()
        name = self.expect_ident()
        self.expect("punct", "=")
        value = self.expr()
        self.end_line()
        return Let(name, value)

    def stmt_func(self):
        self.next()
        name = self.expect_ident()
        self.expect("punct", "(")
        args = [self.expect_ident()]
        while self.eat_punct(","):
            args.append(self.expect_ident())
        self.expect("punct", ")")
        self.end_line()
        return Func(name, tuple(args))

    def stmt_op(self):
        self.next()
        name = self.expect_ident()
        self.expect("punct", "=")
        body = self.opexpr()
        self.end_line()
        return OpDef(name, body)

    def stmt_invertible(self):
        self.next()
        name = self.expect_ident()
        skew = False
        if self.peek().kind == "ident" and self.peek().text == "skew":
            self.next()
            skew = True
        self.end_line()
        return Invertible(name, skew)

    def stmt_opmat(self):
        self.next()
        name = self.expect_ident()
        skew = False
        if self.peek().kind == "ident" and self.peek().text == "skew":
            self.next()
            skew = True
        self.expect("punct", "=")
        if self.peek().kind == "ident" and self.peek().text == "compose":
            self.next()
            factors = [self._opmat_factor()]
            while self.eat_punct("."):
                factors.append(self._opmat_factor())
            self.end_line()
            return OpMatDef(name, OpMatCompose(tuple(factors)), skew)
        body = self.opmatrix()
        self.end_line()
        return OpMatDef(name, body, skew)

    def _opmat_factor(self) -> str:
        w = self.expect_ident()
        if w == "adjoint":
            self.expect("punct", "(")
            inner = self.expect_ident()
            self.expect("punct", ")")
            return f"adjoint({inner})"
        return w

    def stmt_symmetry(self):
        self.next()
        name = self.expect_ident()
        self.end_line()
        slots: list = []
        chars: list = []
        variational = None
        control = False
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "ident" and t.text == "end":
                self.next()
                self.end_line()
                break
            kw = self.expect_ident()
            if kw == "slot":
                coord = self.expect_ident()
                if coord not in ("t", "z1", "z2", "z3", "u", "v"):
                    raise ParseError(f"bad slot {coord!r}", t.line, t.col)
                self.expect("punct", "=")
                slots.append((coord, self.expr()))
            elif kw == "char":
                which = self.expect_ident()
                if which not in ("u", "v"):
                    raise ParseError(f"bad characteristic slot {which!r}", t.line, t.col)
                self.expect("punct", "=")
                chars.append((which, self.expr()))
            elif kw == "variational":
                variational = self.expect_ident()
                if variational not in ("yes", "no"):
                    raise ParseError("variational must be yes or no", t.line, t.col)
            elif kw == "control":
                control = True
            else:
                raise ParseError(f"unknown symmetry clause {kw!r}", t.line, t.col)
            self.end_line()
        return Symmetry(name, tuple(slots), tuple(chars), variational, control)

    def stmt_density(self):
        self.next()
        name = self.expect_ident()
        self.end_line()
        value = None
        pair = None
        pair_scale = None
        control = False
        derive = None
        binds: list = []
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "ident" and t.text == "end":
                self.next()
                self.end_line()
                break
            kw = self.expect_ident()
            if kw == "expr":
                self.expect("punct", "=")
                value = self.expr()
            elif kw == "pair":
                pair = self.expect_ident()
                if self.peek().kind == "ident" and self.peek().text == "scale":
                    self.next()
                    pair_scale = self.expr()
            elif kw == "derive":
                derive = self.expect_ident()
            elif kw == "bind":
                bn = self.expect_ident()
                self.expect("punct", "=")
                binds.append((bn, self.expr()))
            elif kw == "control":
                control = True
            else:
                raise ParseError(f"unknown density clause {kw!r}", t.line, t.col)
            self.end_line()
        if value is None and derive is None:
            raise ParseError(f"density {name} lacks expr", t.line, t.col)
        return Density(name, value, pair, pair_scale, control, derive, tuple(binds))

    def _witness_like(self, kw: str, t: Tok):
        if kw == "witness":
            inv = self.expect_ident()
            self.expect("punct", "=")
            return Witness(inv, self.expr())
        if kw == "defer":
            name = self.expect_ident()
            self.expect("punct", ":")
            inv = self.expect_ident()
            self.deps.add(name)
            return DeferBind(name, inv)
        if kw == "orient":
            inv = self.expect_ident()
            idx = int(self.expect("num").text)
            return Orient(inv, idx)
        raise ParseError(f"unknown clause {kw!r}", t.line, t.col)

    def stmt_flow(self):
        self.next()
        name = self.expect_ident()
        self.end_line()
        vias: list = []
        values: list = []
        combo: list = []
        witnesses: list = []
        defers: list = []
        orients: list = []
        binds: list = []
        control = False
        tag = "hierarchy"
        saved_deps = set(self.deps)
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "ident" and t.text == "end":
                self.next()
                self.end_line()
                break
            kw = self.expect_ident()
            if kw in ("via", "alsovia"):
                opn = self.expect_ident()
                dn = self.expect_ident()
                vias.append((opn, dn))
            elif kw in ("u", "v"):
                self.expect("punct", "=")
                values.append((kw, self.expr()))
            elif kw == "combo":
                while True:
                    coeff = self.expr()
                    sym = self.expect_ident()
                    combo.append((coeff, sym))
                    if not self.eat_punct(","):
                        break
            elif kw in ("witness", "defer", "orient"):
                node = self._witness_like(kw, t)
                (witnesses if kw == "witness" else defers if kw == "defer" else orients).append(node)
            elif kw == "bind":
                bn = self.expect_ident()
                self.expect("punct", "=")
                binds.append((bn, self.expr()))
            elif kw == "tag":
                tag = self.expect_ident()
                if tag not in ("hierarchy", "flows", "biham"):
                    raise ParseError(f"unknown flow tag {tag!r}", t.line, t.col)
            elif kw == "control":
                control = True
            else:
                raise ParseError(f"unknown flow clause {kw!r}", t.line, t.col)
            self.end_line()
        self.deps = saved_deps
        return Flow(
            name,
            tuple(vias),
            tuple(values),
            tuple(combo),
            tuple(witnesses),
            tuple(defers),
            tuple(orients),
            control,
            tuple(binds),
            tag,
        )

    def stmt_bracket(self):
        tok = self.next()
        left = self.expect_ident()
        right = self.expect_ident()
        if self.eat_punct("="):
            self.expect("num")
            corrected = False
            control = False
            while self.peek().kind == "ident":
                w = self.next().text
                if w == "corrected":
                    corrected = True
                elif w == "control":
                    control = True
                else:
                    raise ParseError(f"unknown bracket flag {w!r}", tok.line, tok.col)
            self.end_line()
            return BracketEntry(left, right, True, (), corrected, (), control)
        if self.peek().kind == "ident" and self.peek().text == "combo":
            self.next()
            combo: list = []
            while True:
                coeff = self.expr()
                sym = self.expect_ident()
                combo.append((coeff, sym))
                if not self.eat_punct(","):
                    break
            self.end_line()
            return BracketEntry(left, right, False, (), False, tuple(combo))
        self.end_line()
        slots: list = []
        corrected = False
        control = False
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "ident" and t.text == "end":
                self.next()
                self.end_line()
                break
            kw = self.expect_ident()
            if kw == "slot":
                coord = self.expect_ident()
                self.expect("punct", "=")
                slots.append((coord, self.expr()))
            elif kw == "corrected":
                corrected = True
            elif kw == "control":
                control = True
            else:
                raise ParseError(f"unknown bracket clause {kw!r}", t.line, t.col)
            self.end_line()
        return BracketEntry(left, right, False, tuple(slots), corrected, (), control)

    def stmt_claim(self):
        self.next()
        name = self.expect_ident()
        kind = self.expect_ident()
        one_line = {"leftinv", "invpair", "schur"}
        block = {"step", "stationary", "compat", "identity"}
        if kind not in one_line | block:
            t = self.peek()
            raise ParseError(f"unknown claim kind {kind!r}", t.line, t.col)
        args: list[str] = []
        expectfail = False
        while self.peek().kind == "ident":
            w = self.next().text
            if w == "expectfail":
                expectfail = True
            elif w == "adjoint" and self.at_punct("("):
                self.next()
                inner = self.expect_ident()
                self.expect("punct", ")")
                args.append(f"adjoint({inner})")
            else:
                args.append(w)
        self.end_line()
        if kind in one_line:
            return Claim(name, kind, tuple(args), expectfail)
        witnesses: list = []
        defers: list = []
        orients: list = []
        eqs: list = []
        pivots: list = []
        lhs = rhs = None
        onshell = False
        binds: list = []
        forwards: list = []
        backs: list = []
        auxdeps: list = []
        saved_deps = set(self.deps)
        while True:
            self.skip_nl()
            t = self.peek()
            if t.kind == "ident" and t.text == "end":
                self.next()
                self.end_line()
                break
            kw = self.expect_ident()
            if kw in ("witness", "defer", "orient"):
                node = self._witness_like(kw, t)
                (witnesses if kw == "witness" else defers if kw == "defer" else orients).append(node)
            elif kw == "eq":
                if (
                    self.peek().kind == "ident"
                    and self.peek(1).kind == "punct"
                    and self.peek(1).text == "="
                ):
                    en = self.next().text
                    self.next()
                    eqs.append((en, self.expr()))
                else:
                    eqs.append((None, self.expr()))
            elif kw in ("forward", "back"):
                en = self.expect_ident()
                self.expect("punct", "=")
                (forwards if kw == "forward" else backs).append((en, self.expr()))
            elif kw == "bind":
                bn = self.expect_ident()
                self.expect("punct", "=")
                binds.append((bn, self.expr()))
            elif kw == "aux":
                while self.peek().kind == "ident":
                    dep = self.next().text
                    auxdeps.append(dep)
                    self.deps.add(dep)
            elif kw == "pivot":
                while self.peek().kind == "ident":
                    pivots.append(self.jet_ref(self.next().text))
            elif kw == "lhs":
                self.expect("punct", "=")
                lhs = self.expr()
            elif kw == "rhs":
                self.expect("punct", "=")
                rhs = self.expr()
            elif kw == "onshell":
                onshell = True
            else:
                raise ParseError(f"unknown claim clause {kw!r}", t.line, t.col)
            self.end_line()
        self.deps = saved_deps
        return Claim(
            name,
            kind,
            tuple(args),
            expectfail,
            tuple(witnesses),
            tuple(defers),
            tuple(orients),
            tuple(eqs),
            tuple(pivots),
            lhs,
            rhs,
            onshell,
            tuple(binds),
            tuple(forwards),
            tuple(backs),
            tuple(auxdeps),
        )


def parse_catalog(text: str) -> CatalogFile:
    return _Parser(tokenize(text)).file()


def parse_expr(text: str, deps: set[str] | None = None):
    p = _Parser(tokenize(text), deps)
    node = p.expr()
    p.skip_nl()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected trailing token {t.text!r}", t.line, t.col)
    return node


# --------------------------------------------------------------------------
# printer
# --------------------------------------------------------------------------


def _pe(node) -> str:
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, JetRef):
        return f"{node.dep}[{','.join(str(i) for i in node.idx)}]"
    if isinstance(node, AtomCall):
        args = ", ".join(_pe(a) for a in node.args)
        if any(node.orders):
            mark = "{" + ",".join(str(o) for o in node.orders) + "}"
        else:
            mark = ""
        return f"{node.name}{mark}({args})"
    if isinstance(node, OpApply):
        return f"{node.op}[{_pe(node.arg)}]"
    if isinstance(node, DeferInv):
        return f"inv({node.op}; {_pe(node.arg)})"
    if isinstance(node, Neg):
        inner = _pe(node.arg)
        if isinstance(node.arg, (Bin, Neg)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        l = _pe(node.lhs)
        r = _pe(node.rhs)
        if node.op in "*/" and isinstance(node.lhs, Bin) and node.lhs.op in "+-":
            l = f"({l})"
        if node.op == "^" and not isinstance(node.lhs, (Num, Name, JetRef, AtomCall, OpApply)):
            l = f"({l})"
        if isinstance(node.rhs, Bin):
            r = f"({r})"
        return f"{l} {node.op} {r}" if node.op in "+-" else f"{l}{node.op}{r}"
    raise TypeError(f"cannot print {node!r}")


def print_expr(node) -> str:
    return _pe(node)


def _pof(f) -> str:
    if isinstance(f, OpMul):
        return f"mul({_pe(f.coeff)})"
    if isinstance(f, OpD):
        return "Dt" if f.i == 0 else f"D{f.i}"
    if isinstance(f, OpInvRef):
        return f"inv({f.name})"
    if isinstance(f, OpName):
        return f.name
    if isinstance(f, OpSum):
        return f"({print_opexpr(f)})"
    raise TypeError(f"cannot print operator factor {f!r}")


def print_opexpr(node: OpSum) -> str:
    parts = []
    for k, t in enumerate(node.terms):
        body = ".".join(_pof(f) for f in t.factors)
        if t.scalar is not None:
            body = f"{t.scalar}*{body}"
        if k == 0:
            parts.append(f"-{body}" if t.negated else body)
        else:
            parts.append(f"- {body}" if t.negated else f"+ {body}")
    return " ".join(parts)


def print_opmat(m: OpMatExpr) -> str:
    (a, b), (c, d) = m.rows
    return f"[[{print_opexpr(a)}, {print_opexpr(b)}], [{print_opexpr(c)}, {print_opexpr(d)}]]"


def _print_witness_like(w, out: list, indent: str) -> None:
    if isinstance(w, Witness):
        out.append(f"{indent}witness {w.inv} = {_pe(w.value)}")
    elif isinstance(w, DeferBind):
        out.append(f"{indent}defer {w.name} : {w.inv}")
    elif isinstance(w, Orient):
        out.append(f"{indent}orient {w.inv} {w.index}")


def print_catalog(cat: CatalogFile) -> str:
    out: list[str] = []
    for sys_block in cat.systems:
        out.append(f"system {sys_block.name}")
        for st in sys_block.stmts:
            _print_stmt(st, out)
        out.append("")
    return "\n".join(out) + "\n"


def _print_stmt(st, out: list[str]) -> None:
    ind = "  "
    if isinstance(st, Params):
        out.append(f"{ind}params {' '.join(st.names)}")
    elif isinstance(st, Bind):
        out.append(f"{ind}bind {st.name} = {_pe(st.value)}")
    elif isinstance(st, Constraint):
        out.append(f"{ind}constraint {_pe(st.value)}")
    elif isinstance(st, Nonzero):
        out.append(f"{ind}nonzero {_pe(st.value)}")
    elif isinstance(st, Root):
        out.append(
            f"{ind}root {st.name} = {_pe(st.square)} solving {st.solved} = {_pe(st.solution)}"
        )
    elif isinstance(st, Let):
        out.append(f"{ind}let {st.name} = {_pe(st.value)}")
    elif isinstance(st, Func):
        out.append(f"{ind}func {st.name}({', '.join(st.args)})")
    elif isinstance(st, OpDef):
        out.append(f"{ind}op {st.name} = {print_opexpr(st.body)}")
    elif isinstance(st, Invertible):
        out.append(f"{ind}invertible {st.name}{' skew' if st.skew else ''}")
    elif isinstance(st, OpMatDef):
        mark = " skew" if st.skew else ""
        if isinstance(st.body, OpMatCompose):
            out.append(f"{ind}opmat {st.name}{mark} = compose {' . '.join(st.body.factors)}")
        else:
            out.append(f"{ind}opmat {st.name}{mark} = {print_opmat(st.body)}")
    elif isinstance(st, Symmetry):
        out.append(f"{ind}symmetry {st.name}")
        for coord, e in st.slots:
            out.append(f"{ind}  slot {coord} = {_pe(e)}")
        for which, e in st.chars:
            out.append(f"{ind}  char {which} = {_pe(e)}")
        if st.variational is not None:
            out.append(f"{ind}  variational {st.variational}")
        if st.control:
            out.append(f"{ind}  control")
        out.append(f"{ind}end")
    elif isinstance(st, Density):
        out.append(f"{ind}density {st.name}")
        for bn, be in st.binds:
            out.append(f"{ind}  bind {bn} = {_pe(be)}")
        if st.value is not None:
            out.append(f"{ind}  expr = {_pe(st.value)}")
        if st.derive is not None:
            out.append(f"{ind}  derive {st.derive}")
        if st.pair is not None:
            line = f"{ind}  pair {st.pair}"
            if st.pair_scale is not None:
                line += f" scale {_pe(st.pair_scale)}"
            out.append(line)
        if st.control:
            out.append(f"{ind}  control")
        out.append(f"{ind}end")
    elif isinstance(st, Flow):
        out.append(f"{ind}flow {st.name}")
        if st.tag != "hierarchy":
            out.append(f"{ind}  tag {st.tag}")
        for bn, be in st.binds:
            out.append(f"{ind}  bind {bn} = {_pe(be)}")
        for opn, dn in st.vias:
            out.append(f"{ind}  via {opn} {dn}")
        for which, e in st.values:
            out.append(f"{ind}  {which} = {_pe(e)}")
        if st.combo:
            body = ", ".join(f"{_pe(c)} {s}" for c, s in st.combo)
            out.append(f"{ind}  combo {body}")
        for d in st.defers:
            _print_witness_like(d, out, ind + "  ")
        for w in st.witnesses:
            _print_witness_like(w, out, ind + "  ")
        for o in st.orients:
            _print_witness_like(o, out, ind + "  ")
        if st.control:
            out.append(f"{ind}  control")
        out.append(f"{ind}end")
    elif isinstance(st, BracketEntry):
        if st.zero:
            line = f"{ind}bracket {st.left} {st.right} = 0"
            if st.corrected:
                line += " corrected"
            if st.control:
                line += " control"
            out.append(line)
        elif st.combo:
            body = ", ".join(f"{_pe(c)} {s}" for c, s in st.combo)
            out.append(f"{ind}bracket {st.left} {st.right} combo {body}")
        else:
            out.append(f"{ind}bracket {st.left} {st.right}")
            for coord, e in st.slots:
                out.append(f"{ind}  slot {coord} = {_pe(e)}")
            if st.corrected:
                out.append(f"{ind}  corrected")
            if st.control:
                out.append(f"{ind}  control")
            out.append(f"{ind}end")
    elif isinstance(st, Claim):
        head = f"{ind}claim {st.name} {st.kind}"
        for a in st.args:
            head += f" {a}"
        if st.expectfail:
            head += " expectfail"
        out.append(head)
        if st.kind in ("step", "stationary", "compat", "identity"):
            if st.auxdeps:
                out.append(f"{ind}  aux " + " ".join(st.auxdeps))
            for bn, be in st.binds:
                out.append(f"{ind}  bind {bn} = {_pe(be)}")
            for d in st.defers:
                _print_witness_like(d, out, ind + "  ")
            for w in st.witnesses:
                _print_witness_like(w, out, ind + "  ")
            for o in st.orients:
                _print_witness_like(o, out, ind + "  ")
            for en, e in st.eqs:
                if en is None:
                    out.append(f"{ind}  eq {_pe(e)}")
                else:
                    out.append(f"{ind}  eq {en} = {_pe(e)}")
            for en, e in st.forwards:
                out.append(f"{ind}  forward {en} = {_pe(e)}")
            for en, e in st.backs:
                out.append(f"{ind}  back {en} = {_pe(e)}")
            if st.pivots:
                out.append(
                    f"{ind}  pivot " + " ".join(_pe(p) for p in st.pivots)
                )
            if st.lhs is not None:
                out.append(f"{ind}  lhs = {_pe(st.lhs)}")
            if st.rhs is not None:
                out.append(f"{ind}  rhs = {_pe(st.rhs)}")
            if st.onshell:
                out.append(f"{ind}  onshell")
            out.append(f"{ind}end")
    else:
        raise TypeError(f"cannot print statement {st!r}")
