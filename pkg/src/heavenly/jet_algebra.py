"""Exact jet-space algebra: differential polynomials and rational jet expressions.

Coordinates: independent variables t, z1, z2, z3 (indices 0..3); dependent
variables are named strings ('u', 'v', plus auxiliary unknowns introduced by
coverings).  A jet generator u[2,3] denotes the mixed partial of u by the
listed independent variables (a multiset, stored sorted; t appears as index 0).

Expressions are quotients of sparse polynomials over exact rationals in four
kinds of generators:

  atom   opaque function symbol with polynomial arguments and a per-argument
         derivative multi-index, e.g. a{1}(zeta)
  const  named parameter, optionally carrying an adjoined-square rewrite rule
  jet    u[], u[2,3], v[t,1], ...
  var    the independent coordinates themselves

Quotients are never gcd-normalized beyond cheap monomial-content cancellation;
equality is decided exactly through cross-multiplied subtraction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Iterator

Rat = Fraction

T, Z1, Z2, Z3 = 0, 1, 2, 3
INDEP_NAMES = ("t", "z1", "z2", "z3")
_INDEP_INDEX = {name: i for i, name in enumerate(INDEP_NAMES)}

# --------------------------------------------------------------------------
# generator interning
# --------------------------------------------------------------------------

_GEN_KEYS: list[tuple] = []
_GEN_IDS: dict[tuple, int] = {}
_ATOM_ARGS: dict[int, tuple] = {}


def _intern(key: tuple, atom_args: tuple | None = None) -> int:
    gid = _GEN_IDS.get(key)
    if gid is None:
        gid = len(_GEN_KEYS)
        _GEN_KEYS.append(key)
        _GEN_IDS[key] = gid
        if atom_args is not None:
            _ATOM_ARGS[gid] = atom_args
    return gid


def gen_key(gid: int) -> tuple:
    """The structural key of an interned generator."""
    return _GEN_KEYS[gid]


def atom_args_of(gid: int) -> tuple:
    """Argument polynomials of an atom generator."""
    return _ATOM_ARGS[gid]


# --------------------------------------------------------------------------
# monomials: sorted tuples of (generator id, exponent)
# --------------------------------------------------------------------------

_EMPTY_MONO: tuple = ()


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        g1, e1 = m1[i]
        g2, e2 = m2[j]
        if g1 == g2:
            out.append((g1, e1 + e2))
            i += 1
            j += 1
        elif g1 < g2:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def _mono_sort_key(mono: tuple):
    deg = sum(e for _, e in mono)
    return (deg, tuple(sorted(((_GEN_KEYS[g], e) for g, e in mono), reverse=True)))


def _mono_div(m: tuple, d: tuple) -> tuple | None:
    """m / d when d divides m, else None."""
    rem = dict(m)
    for g, e in d:
        ne = rem.get(g, 0) - e
        if ne < 0:
            return None
        if ne:
            rem[g] = ne
        else:
            del rem[g]
    return tuple(sorted(rem.items()))


# --------------------------------------------------------------------------
# adjoined-square rewrite rules (const**2 -> polynomial)
# --------------------------------------------------------------------------

_SQUARE: dict[int, "DiffPoly"] = {}


def set_square_rule(name: str, replacement: "JetExpr") -> None:
    """Declare const(name)**2 -> replacement for all subsequent arithmetic."""
    gid = _intern(("const", name))
    _SQUARE[gid] = replacement.as_poly()


def drop_square_rule(name: str) -> None:
    _SQUARE.pop(_GEN_IDS.get(("const", name)), None)


def _raw_mul_terms(t1: dict, t2: dict) -> dict:
    out: dict = {}
    for m1, c1 in t1.items():
        for m2, c2 in t2.items():
            m = _mono_mul(m1, m2)
            c = out.get(m)
            c = c1 * c2 if c is None else c + c1 * c2
            if c:
                out[m] = c
            elif m in out:
                del out[m]
    return out


def _reduced(terms: dict) -> dict:
    """Apply square rules until no ruled generator carries exponent >= 2."""
    if not _SQUARE:
        return {m: c for m, c in terms.items() if c}
    out: dict = {}
    stack = [(m, c) for m, c in terms.items() if c]
    while stack:
        mono, coeff = stack.pop()
        hit = None
        for j, (g, e) in enumerate(mono):
            if e >= 2 and g in _SQUARE:
                hit = (j, g, e)
                break
        if hit is None:
            c = out.get(mono)
            c = coeff if c is None else c + coeff
            if c:
                out[mono] = c
            elif mono in out:
                del out[mono]
            continue
        j, g, e = hit
        rest = mono[:j] + (((g, 1),) if e % 2 else ()) + mono[j + 1 :]
        prod = {rest: coeff}
        rule = _SQUARE[g].terms
        for _ in range(e // 2):
            prod = _raw_mul_terms(prod, rule)
        stack.extend(prod.items())
    return out


# --------------------------------------------------------------------------
# sparse polynomials
# --------------------------------------------------------------------------


class DiffPoly:
    """Sparse polynomial: monomial tuple -> nonzero Fraction coefficient."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict):
        self.terms = terms

    # -- predicates ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _EMPTY_MONO in self.terms)

    def const_value(self) -> Rat | None:
        if not self.terms:
            return Rat(0)
        if len(self.terms) == 1:
            c = self.terms.get(_EMPTY_MONO)
            if c is not None:
                return c
        return None

    def __eq__(self, other) -> bool:
        return isinstance(other, DiffPoly) and self.terms == other.terms

    def __hash__(self):
        raise TypeError("DiffPoly is not hashable; freeze it first")

    def __len__(self) -> int:
        return len(self.terms)

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            nc = out.get(m)
            nc = c if nc is None else nc + c
            if nc:
                out[m] = nc
            elif m in out:
                del out[m]
        return DiffPoly(out)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + (-other)

    def __mul__(self, other: "DiffPoly") -> "DiffPoly":
        if not self.terms or not other.terms:
            return _ZERO_POLY
        if len(self.terms) > len(other.terms):
            self, other = other, self
        out = _raw_mul_terms(self.terms, other.terms)
        return DiffPoly(_reduced(out)) if _SQUARE else DiffPoly(out)

    def scale(self, c: Rat) -> "DiffPoly":
        if not c:
            return _ZERO_POLY
        if c == 1:
            return self
        return DiffPoly({m: k * c for m, k in self.terms.items()})

    def pow(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        acc = _ONE_POLY
        for _ in range(n):
            acc = acc * self
        return acc

    # -- calculus ------------------------------------------------------

    def total(self, i: int) -> "DiffPoly":
        """Total derivative by independent variable i."""
        acc: dict = {}
        for mono, coeff in self.terms.items():
            for j, (g, e) in enumerate(mono):
                dfac = _gen_total(g, i)
                if dfac is None:
                    continue
                if e == 1:
                    base = mono[:j] + mono[j + 1 :]
                else:
                    base = mono[:j] + ((g, e - 1),) + mono[j + 1 :]
                k = coeff * e
                for m2, c2 in dfac.terms.items():
                    m = _mono_mul(base, m2)
                    c = acc.get(m)
                    c = k * c2 if c is None else c + k * c2
                    if c:
                        acc[m] = c
                    elif m in acc:
                        del acc[m]
        return DiffPoly(_reduced(acc)) if _SQUARE else DiffPoly(acc)

    def partial(self, gid: int) -> "DiffPoly":
        """Coordinate partial derivative by one generator (chain rule through atoms)."""
        acc: dict = {}
        for mono, coeff in self.terms.items():
            for j, (g, e) in enumerate(mono):
                if g == gid:
                    dfac = _ONE_POLY
                elif g in _ATOM_ARGS:
                    dfac = _atom_partial(g, gid)
                    if dfac is None:
                        continue
                else:
                    continue
                if e == 1:
                    base = mono[:j] + mono[j + 1 :]
                else:
                    base = mono[:j] + ((g, e - 1),) + mono[j + 1 :]
                k = coeff * e
                for m2, c2 in dfac.terms.items():
                    m = _mono_mul(base, m2)
                    c = acc.get(m)
                    c = k * c2 if c is None else c + k * c2
                    if c:
                        acc[m] = c
                    elif m in acc:
                        del acc[m]
        return DiffPoly(_reduced(acc)) if _SQUARE else DiffPoly(acc)

    def evaluate(self, lookup: Callable[[int], Rat]) -> Rat:
        total = Rat(0)
        for mono, coeff in self.terms.items():
            val = coeff
            for g, e in mono:
                val *= lookup(g) ** e
            total += val
        return total

    def gens(self) -> set[int]:
        out: set[int] = set()
        for mono in self.terms:
            for g, _ in mono:
                out.add(g)
        return out

    def freeze(self) -> tuple:
        return tuple(
            sorted(
                ((m, (c.numerator, c.denominator)) for m, c in self.terms.items()),
            )
        )

    def __repr__(self) -> str:
        return f"DiffPoly({fmt_poly(self)})"


_ZERO_POLY = DiffPoly({})
_ONE_POLY = DiffPoly({_EMPTY_MONO: Rat(1)})


def poly_const(c: Rat) -> DiffPoly:
    return DiffPoly({_EMPTY_MONO: c}) if c else _ZERO_POLY


def poly_gen(gid: int) -> DiffPoly:
    return DiffPoly({((gid, 1),): Rat(1)})


# -- generator derivative tables ------------------------------------------

_TOTAL_CACHE: dict[tuple[int, int], DiffPoly | None] = {}
_ATOM_PARTIAL_CACHE: dict[tuple[int, int], DiffPoly | None] = {}


def _gen_total(g: int, i: int) -> DiffPoly | None:
    key = (g, i)
    hit = _TOTAL_CACHE.get(key, _TOTAL_CACHE)
    if hit is not _TOTAL_CACHE:
        return hit
    k = _GEN_KEYS[g]
    tag = k[0]
    if tag == "var":
        out = _ONE_POLY if k[1] == i else None
    elif tag == "const":
        out = None
    elif tag == "jet":
        nidx = tuple(sorted(k[2] + (i,)))
        out = poly_gen(_intern(("jet", k[1], nidx)))
    else:  # atom: chain rule through the arguments
        name, args_key, orders = k[1], k[2], k[3]
        args = _ATOM_ARGS[g]
        acc = _ZERO_POLY
        for pos, argp in enumerate(args):
            darg = argp.total(i)
            if darg.is_zero():
                continue
            nord = orders[:pos] + (orders[pos] + 1,) + orders[pos + 1 :]
            dgen = _intern(("atom", name, args_key, nord), args)
            acc = acc + poly_gen(dgen) * darg
        out = None if acc.is_zero() else acc
    _TOTAL_CACHE[key] = out
    return out


def _atom_partial(g: int, gid: int) -> DiffPoly | None:
    key = (g, gid)
    hit = _ATOM_PARTIAL_CACHE.get(key, _ATOM_PARTIAL_CACHE)
    if hit is not _ATOM_PARTIAL_CACHE:
        return hit
    k = _GEN_KEYS[g]
    name, args_key, orders = k[1], k[2], k[3]
    args = _ATOM_ARGS[g]
    acc = _ZERO_POLY
    for pos, argp in enumerate(args):
        darg = argp.partial(gid)
        if darg.is_zero():
            continue
        nord = orders[:pos] + (orders[pos] + 1,) + orders[pos + 1 :]
        dgen = _intern(("atom", name, args_key, nord), args)
        acc = acc + poly_gen(dgen) * darg
    out = None if acc.is_zero() else acc
    _ATOM_PARTIAL_CACHE[key] = out
    return out


def poly_divide(a: DiffPoly, b: DiffPoly) -> DiffPoly | None:
    """Exact quotient a/b over the rationals, or None when b does not divide a.

    Keeps sums of quotients sharing a denominator base from compounding: when
    one denominator exactly divides the other, addition can stay over the
    larger one instead of multiplying them out.
    """
    if b.is_zero():
        return None
    if a.is_zero():
        return _ZERO_POLY
    bc = b.const_value()
    if bc is not None:
        return a.scale(1 / bc)
    gens = sorted({g for m in a.terms for g, _ in m} | {g for m in b.terms for g, _ in m})
    gi = {g: k for k, g in enumerate(gens)}

    def key(mono: tuple):
        vec = [0] * len(gens)
        for g, e in mono:
            vec[gi[g]] = e
        return (sum(vec), tuple(vec))

    bl = max(b.terms, key=key)
    blc = b.terms[bl]
    rem = dict(a.terms)
    out: dict = {}
    while rem:
        rl = max(rem, key=key)
        qm = _mono_div(rl, bl)
        if qm is None:
            return None
        qc = rem.pop(rl) / blc
        out[qm] = qc
        for m, c in b.terms.items():
            if m == bl:
                continue
            mm = _mono_mul(qm, m)
            if any(g in _SQUARE and e >= 2 for g, e in mm):
                return None  # would need square-rule reduction; fall back
            nc = rem.get(mm)
            nc = -qc * c if nc is None else nc - qc * c
            if nc:
                rem[mm] = nc
            else:
                rem.pop(mm, None)
    return DiffPoly(out)


# --------------------------------------------------------------------------
# rational jet expressions
# --------------------------------------------------------------------------


class JetExpr:
    """Quotient of two DiffPoly values, lightly normalized, never gcd-reduced."""

    __slots__ = ("num", "den")

    def __init__(self, num: DiffPoly, den: DiffPoly):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in jet expression")
        if num.is_zero():
            self.num = _ZERO_POLY
            self.den = _ONE_POLY
            return
        dc = den.const_value()
        if dc is None:
            num, den = _cancel_content(num, den)
            dc = den.const_value()
        if dc is not None:
            num = num.scale(1 / dc)
            den = _ONE_POLY
        else:
            lead = max(den.terms, key=_mono_sort_key)
            if den.terms[lead] < 0:
                num, den = -num, -den
        self.num = num
        self.den = den

    # -- predicates ---------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_local_poly(self) -> bool:
        return self.den.is_const()

    def as_poly(self) -> DiffPoly:
        if not self.den.is_const():
            raise ValueError(f"expression is not polynomial: {fmt(self)}")
        return self.num

    def const_value(self) -> Rat | None:
        if self.den.is_const():
            return self.num.const_value()
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetExpr):
            return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return (self.num * other.den) == (other.num * self.den)

    def __hash__(self):
        raise TypeError("JetExpr is not hashable")

    # -- field operations ----------------------------------------------

    def __add__(self, other: "JetExpr") -> "JetExpr":
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            return JetExpr(self.num + other.num, self.den)
        q = poly_divide(other.den, self.den)
        if q is not None:
            return JetExpr(self.num * q + other.num, other.den)
        q = poly_divide(self.den, other.den)
        if q is not None:
            return JetExpr(self.num + other.num * q, self.den)
        return JetExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> "JetExpr":
        return JetExpr(-self.num, self.den)

    def __sub__(self, other: "JetExpr") -> "JetExpr":
        return self + (-other)

    def __mul__(self, other: "JetExpr") -> "JetExpr":
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        return JetExpr(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "JetExpr") -> "JetExpr":
        if other.num.is_zero():
            raise ZeroDivisionError("division by zero jet expression")
        if self.num.is_zero():
            return ZERO
        return JetExpr(self.num * other.den, self.den * other.num)

    def __pow__(self, n: int) -> "JetExpr":
        if n == 0:
            return ONE
        if n < 0:
            return (ONE / self) ** (-n)
        acc = ONE
        for _ in range(n):
            acc = acc * self
        return acc

    def scale(self, c: Rat) -> "JetExpr":
        return JetExpr(self.num.scale(c), self.den)

    # -- calculus -------------------------------------------------------

    def total(self, i: int) -> "JetExpr":
        if self.den.is_const():
            return JetExpr(self.num.total(i), self.den)
        dn = self.num.total(i)
        dd = self.den.total(i)
        if dd.is_zero():
            return JetExpr(dn, self.den)
        return JetExpr(dn * self.den - self.num * dd, self.den * self.den)

    def partial(self, gid: int) -> "JetExpr":
        if self.den.is_const():
            return JetExpr(self.num.partial(gid), self.den)
        dn = self.num.partial(gid)
        dd = self.den.partial(gid)
        if dd.is_zero():
            return JetExpr(dn, self.den)
        return JetExpr(dn * self.den - self.num * dd, self.den * self.den)

    def substitute(self, mapping: dict[int, "JetExpr"]) -> "JetExpr":
        if not mapping:
            return self
        cache: dict[int, JetExpr] = {}
        n = poly_substitute(self.num, mapping, cache)
        if self.den.is_const():
            return n / rat(self.den.const_value())
        d = poly_substitute(self.den, mapping, cache)
        return n / d

    def evaluate(self, lookup: Callable[[int], Rat]) -> Rat:
        return self.num.evaluate(lookup) / self.den.evaluate(lookup)

    def gens(self) -> set[int]:
        return self.num.gens() | self.den.gens()

    def term_count(self) -> int:
        return len(self.num.terms) + len(self.den.terms)

    def __repr__(self) -> str:
        return f"JetExpr({fmt(self)})"


def _cancel_content(num: DiffPoly, den: DiffPoly) -> tuple[DiffPoly, DiffPoly]:
    """Divide out the common monomial content of numerator and denominator."""
    content: dict[int, int] | None = None
    for poly in (num, den):
        for mono in poly.terms:
            if content is None:
                content = dict(mono)
            else:
                for g in list(content):
                    e = 0
                    for g2, e2 in mono:
                        if g2 == g:
                            e = e2
                            break
                    if e < content[g]:
                        if e:
                            content[g] = e
                        else:
                            del content[g]
            if not content:
                return num, den
    if not content:
        return num, den

    def strip(poly: DiffPoly) -> DiffPoly:
        out = {}
        for mono, c in poly.terms.items():
            nm = tuple(
                (g, e - content.get(g, 0)) for g, e in mono if e - content.get(g, 0) > 0
            )
            out[nm] = c
        return DiffPoly(out)

    return strip(num), strip(den)


def poly_substitute(
    p: DiffPoly, mapping: dict[int, JetExpr], cache: dict[int, JetExpr] | None = None
) -> JetExpr:
    """Substitute generators by expressions (atom arguments are rebuilt too)."""
    if cache is None:
        cache = {}

    def gen_value(g: int) -> JetExpr:
        val = cache.get(g)
        if val is not None:
            return val
        val = mapping.get(g)
        if val is None:
            key = _GEN_KEYS[g]
            if key[0] == "atom" and g in _ATOM_ARGS:
                args = _ATOM_ARGS[g]
                new_args = [poly_substitute(a, mapping, cache) for a in args]
                if all(na.is_local_poly() and na.as_poly() == a for na, a in zip(new_args, args)):
                    val = expr_gen(g)
                else:
                    val = atom_expr(key[1], new_args, key[3])
            else:
                val = expr_gen(g)
        cache[g] = val
        return val

    acc = ZERO
    for mono, coeff in p.terms.items():
        term = rat(coeff)
        for g, e in mono:
            term = term * gen_value(g) ** e
        acc = acc + term
    return acc


# --------------------------------------------------------------------------
# public constructors
# --------------------------------------------------------------------------


def expr_gen(gid: int) -> JetExpr:
    return JetExpr(poly_gen(gid), _ONE_POLY)


def rat(x) -> JetExpr:
    return JetExpr(poly_const(Rat(x)), _ONE_POLY)


ZERO = JetExpr(_ZERO_POLY, _ONE_POLY)
ONE = JetExpr(_ONE_POLY, _ONE_POLY)


def jet(dep: str, idx: Iterable[int] = ()) -> JetExpr:
    return expr_gen(jet_gid(dep, idx))


def jet_gid(dep: str, idx: Iterable[int] = ()) -> int:
    return _intern(("jet", dep, tuple(sorted(idx))))


def var(which) -> JetExpr:
    return expr_gen(var_gid(which))


def var_gid(which) -> int:
    i = _INDEP_INDEX[which] if isinstance(which, str) else which
    return _intern(("var", i))


def const(name: str) -> JetExpr:
    return expr_gen(const_gid(name))


def const_gid(name: str) -> int:
    return _intern(("const", name))


def atom_expr(name: str, args: Iterable[JetExpr], orders: Iterable[int] | None = None) -> JetExpr:
    return expr_gen(atom_gid(name, args, orders))


def atom_gid(name: str, args: Iterable[JetExpr], orders: Iterable[int] | None = None) -> int:
    arg_polys = tuple(a.as_poly() for a in args)
    ordt = tuple(orders) if orders is not None else (0,) * len(arg_polys)
    if len(ordt) != len(arg_polys):
        raise ValueError(f"atom {name}: {len(arg_polys)} arguments, {len(ordt)} orders")
    args_key = tuple(a.freeze() for a in arg_polys)
    return _intern(("atom", name, args_key, ordt), arg_polys)


# --------------------------------------------------------------------------
# structure queries
# --------------------------------------------------------------------------


def iter_jet_gens(e: JetExpr, dep: str | None = None) -> Iterator[tuple[int, str, tuple]]:
    """Jet generators the expression depends on, including through atom arguments."""
    seen: set[int] = set()
    found: list[int] = []

    def scan(p: DiffPoly) -> None:
        for g in p.gens():
            if g in seen:
                continue
            seen.add(g)
            k = _GEN_KEYS[g]
            if k[0] == "jet":
                found.append(g)
            elif k[0] == "atom" and g in _ATOM_ARGS:
                for a in _ATOM_ARGS[g]:
                    scan(a)

    scan(e.num)
    scan(e.den)
    for g in sorted(found):
        k = _GEN_KEYS[g]
        if dep is None or k[1] == dep:
            yield g, k[1], k[2]


def depends_on_dep(e: JetExpr, dep: str) -> bool:
    """True when any jet of `dep` occurs, or any atom argument involves one."""
    seen: set[int] = set()

    def poly_hits(p: DiffPoly) -> bool:
        for g in p.gens():
            if g in seen:
                continue
            seen.add(g)
            k = _GEN_KEYS[g]
            if k[0] == "jet" and k[1] == dep:
                return True
            if k[0] == "atom":
                if any(poly_hits(a) for a in _ATOM_ARGS[g]):
                    return True
        return False

    return poly_hits(e.num) or poly_hits(e.den)


def has_t_jet(e: JetExpr) -> bool:
    for _, _, idx in iter_jet_gens(e):
        if T in idx:
            return True
    return False


# --------------------------------------------------------------------------
# formatting (diagnostics and canonical text)
# --------------------------------------------------------------------------


def fmt_gen(g: int) -> str:
    k = _GEN_KEYS[g]
    tag = k[0]
    if tag == "var":
        return INDEP_NAMES[k[1]]
    if tag == "const":
        return k[1]
    if tag == "jet":
        inner = ",".join("t" if i == T else str(i) for i in k[2])
        return f"{k[1]}[{inner}]"
    name, _, orders = k[1], k[2], k[3]
    args = ", ".join(fmt_poly(a) for a in _ATOM_ARGS[g])
    if any(orders):
        mark = "{" + ",".join(str(o) for o in orders) + "}"
    else:
        mark = ""
    return f"{name}{mark}({args})"


def fmt_poly(p: DiffPoly) -> str:
    if not p.terms:
        return "0"
    parts = []
    for mono in sorted(p.terms, key=_mono_sort_key, reverse=True):
        c = p.terms[mono]
        factors = [fmt_gen(g) + (f"^{e}" if e > 1 else "") for g, e in mono]
        body = "*".join(factors)
        if not body:
            parts.append(str(c))
        elif c == 1:
            parts.append(body)
        elif c == -1:
            parts.append(f"-{body}")
        else:
            parts.append(f"{c}*{body}")
    out = parts[0]
    for p_ in parts[1:]:
        out += f" - {p_[1:]}" if p_.startswith("-") else f" + {p_}"
    return out


def fmt(e: JetExpr) -> str:
    if e.den.is_const():
        return fmt_poly(e.num)
    return f"({fmt_poly(e.num)}) / ({fmt_poly(e.den)})"
