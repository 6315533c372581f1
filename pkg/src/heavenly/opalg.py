"""Linear (matrix) differential operators with formal inverses.

A LocalOp is a linear differential operator in normal form: a map from total
derivative multi-indices to rational coefficient expressions.  A DiffOp adds
formal inverses of registered named operators, kept as composition chains

    L0 . inv(N1) . L1 . inv(N2) . ... . inv(Nk) . Lk

(the rightmost factor acts first).  Normalization clears chains with exact,
verified rewrite moves: inverse/definition adjacency cancellations (full or
partial, leaving a remainder chain), merging of chains that differ in a single
segment, two-sided collapses where a middle segment splits as a combination of
the flanking definitions, and insertion merges that align a pair of chains
differing by one extra inverse by factoring a segment through that inverse's
definition.

Applying a DiffOp to an expression yields a NonlocVal: a local part plus a
list of deferred inverse applications, which verification code discharges by
supplying witnesses or by passing to a covering unknown.
"""

from __future__ import annotations

from itertools import product as _iproduct

from .jet_algebra import JetExpr, Rat, ZERO, ONE, fmt, rat
from .varcalc import nth_total


class OpRegistry:
    """Named invertible operators available to chain normalization."""

    def __init__(self):
        self.defs: dict[str, "LocalOp"] = {}
        self.skew: set[str] = set()

    def define(self, name: str, op: "LocalOp", skew: bool) -> None:
        self.defs[name] = op
        if skew:
            self.skew.add(name)


# --------------------------------------------------------------------------
# multiset helpers for Leibniz expansion
# --------------------------------------------------------------------------


def _merge_idx(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(a + b))


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def _sub_multisets(alpha: tuple):
    """Yield (chosen, remaining, multiplicity) over sub-multisets of alpha."""
    items: list[tuple[int, int]] = []
    for i in sorted(set(alpha)):
        items.append((i, alpha.count(i)))
    ranges = [range(c + 1) for _, c in items]
    for picks in _iproduct(*ranges):
        chosen: list[int] = []
        remaining: list[int] = []
        coeff = 1
        for (i, c), k in zip(items, picks):
            chosen.extend([i] * k)
            remaining.extend([i] * (c - k))
            coeff *= _binom(c, k)
        yield tuple(chosen), tuple(remaining), coeff


# --------------------------------------------------------------------------
# local operators in normal form
# --------------------------------------------------------------------------


class LocalOp:
    __slots__ = ("c",)

    def __init__(self, coeffs: dict[tuple, JetExpr] | None = None):
        self.c = {a: f for a, f in (coeffs or {}).items() if not f.is_zero()}

    # constructors ------------------------------------------------------

    @staticmethod
    def mul(f: JetExpr) -> "LocalOp":
        return LocalOp({(): f})

    @staticmethod
    def diff(i: int) -> "LocalOp":
        return LocalOp({(i,): ONE})

    @staticmethod
    def identity() -> "LocalOp":
        return LocalOp({(): ONE})

    # structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.c

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalOp):
            return NotImplemented
        if set(self.c) != set(other.c):
            return False
        return all(self.c[a] == other.c[a] for a in self.c)

    def __hash__(self):
        raise TypeError("LocalOp is not hashable")

    def __add__(self, other: "LocalOp") -> "LocalOp":
        out = dict(self.c)
        for a, f in other.c.items():
            out[a] = out[a] + f if a in out else f
        return LocalOp(out)

    def __neg__(self) -> "LocalOp":
        return LocalOp({a: -f for a, f in self.c.items()})

    def __sub__(self, other: "LocalOp") -> "LocalOp":
        return self + (-other)

    def scale(self, f: JetExpr) -> "LocalOp":
        return LocalOp({a: f * g for a, g in self.c.items()})

    def compose(self, other: "LocalOp") -> "LocalOp":
        out: dict[tuple, JetExpr] = {}
        for alpha, f in self.c.items():
            for beta, g in other.c.items():
                for chosen, remaining, coeff in _sub_multisets(alpha):
                    piece = f * nth_total(g, chosen)
                    if coeff != 1:
                        piece = piece.scale(Rat(coeff))
                    gamma = _merge_idx(remaining, beta)
                    out[gamma] = out[gamma] + piece if gamma in out else piece
        return LocalOp(out)

    def adjoint(self) -> "LocalOp":
        acc = LocalOp()
        for alpha, f in self.c.items():
            term = LocalOp({alpha: ONE}).compose(LocalOp.mul(f))
            if len(alpha) % 2:
                term = -term
            acc = acc + term
        return acc

    def apply(self, e: JetExpr) -> JetExpr:
        acc = ZERO
        for alpha, f in self.c.items():
            acc = acc + f * nth_total(e, alpha)
        return acc

    # analysis -----------------------------------------------------------

    def top_slot(self) -> tuple:
        return max(self.c, key=lambda a: (len(a), a))

    def support(self) -> set[tuple]:
        return set(self.c)

    def key(self) -> str:
        parts = []
        for a in sorted(self.c, key=lambda a: (len(a), a)):
            parts.append(f"D{list(a)}:{fmt(self.c[a])}")
        return ";".join(parts)

    def __repr__(self):
        return f"LocalOp({self.key() or '0'})"


# --------------------------------------------------------------------------
# chains and operators with formal inverses
# --------------------------------------------------------------------------


class Chain:
    """locals[0] . inv(invs[0]) . locals[1] . ... . inv(invs[-1]) . locals[-1]"""

    __slots__ = ("locals", "invs")

    def __init__(self, locals_: tuple, invs: tuple):
        assert len(locals_) == len(invs) + 1
        self.locals = locals_
        self.invs = invs

    def is_zero(self) -> bool:
        return any(l.is_zero() for l in self.locals)

    def key(self) -> str:
        segs = []
        for j, l in enumerate(self.locals):
            segs.append(l.key())
            if j < len(self.invs):
                segs.append(f"inv({self.invs[j]})")
        return " | ".join(segs)

    def __repr__(self):
        return f"Chain({self.key()})"


class DiffOp:
    __slots__ = ("local", "chains")

    def __init__(self, local: LocalOp | None = None, chains: tuple = ()):
        self.local = local if local is not None else LocalOp()
        self.chains = tuple(ch for ch in chains if not ch.is_zero())

    # constructors -------------------------------------------------------

    @staticmethod
    def mul(f: JetExpr) -> "DiffOp":
        return DiffOp(LocalOp.mul(f))

    @staticmethod
    def diff(i: int) -> "DiffOp":
        return DiffOp(LocalOp.diff(i))

    @staticmethod
    def identity() -> "DiffOp":
        return DiffOp(LocalOp.identity())

    @staticmethod
    def zero() -> "DiffOp":
        return DiffOp()

    @staticmethod
    def inverse(name: str) -> "DiffOp":
        return DiffOp(chains=(Chain((LocalOp.identity(), LocalOp.identity()), (name,)),))

    @staticmethod
    def from_local(l: LocalOp) -> "DiffOp":
        return DiffOp(l)

    # ring structure -------------------------------------------------------

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp(self.local + other.local, self.chains + other.chains)

    def __neg__(self) -> "DiffOp":
        chains = tuple(
            Chain(((-ch.locals[0]),) + ch.locals[1:], ch.invs) for ch in self.chains
        )
        return DiffOp(-self.local, chains)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, f: JetExpr) -> "DiffOp":
        return DiffOp.mul(f).compose(self)

    def compose(self, other: "DiffOp") -> "DiffOp":
        local = self.local.compose(other.local)
        chains: list[Chain] = []
        for ch in other.chains:  # self.local . ch
            if not self.local.is_zero():
                chains.append(
                    Chain((self.local.compose(ch.locals[0]),) + ch.locals[1:], ch.invs)
                )
        for ch in self.chains:  # ch . other.local
            if not other.local.is_zero():
                chains.append(
                    Chain(ch.locals[:-1] + (ch.locals[-1].compose(other.local),), ch.invs)
                )
        for ch1 in self.chains:
            for ch2 in other.chains:
                mid = ch1.locals[-1].compose(ch2.locals[0])
                chains.append(
                    Chain(ch1.locals[:-1] + (mid,) + ch2.locals[1:], ch1.invs + ch2.invs)
                )
        return DiffOp(local, tuple(chains))

    def adjoint(self, reg: OpRegistry) -> "DiffOp":
        local = self.local.adjoint()
        chains = []
        for ch in self.chains:
            for n in ch.invs:
                if n not in reg.skew:
                    raise ValueError(f"adjoint of inv({n}): operator not registered skew")
            locs = tuple(l.adjoint() for l in reversed(ch.locals))
            if len(ch.invs) % 2:
                locs = ((-locs[0]),) + locs[1:]
            chains.append(Chain(locs, tuple(reversed(ch.invs))))
        return DiffOp(local, tuple(chains))

    def is_purely_local(self) -> bool:
        return not self.chains

    def key(self) -> str:
        parts = [self.local.key()]
        parts.extend(sorted(ch.key() for ch in self.chains))
        return " ++ ".join(parts)

    def __repr__(self):
        return f"DiffOp({self.key() or '0'})"


# --------------------------------------------------------------------------
# exact clearing moves
# --------------------------------------------------------------------------


def _solve_def_then_mul(defop: LocalOp, target: LocalOp) -> JetExpr | None:
    """g with defop . mul(g) == target, or None."""
    if target.is_zero():
        return None
    beta = defop.top_slot()
    f = defop.c[beta]
    tb = target.c.get(beta)
    if tb is None:
        return None
    g = tb / f
    if defop.compose(LocalOp.mul(g)) == target:
        return g
    return None


def _solve_mul_then_def(defop: LocalOp, target: LocalOp) -> JetExpr | None:
    """g with mul(g) . defop == target, or None."""
    if target.is_zero():
        return None
    alpha = next(iter(defop.c))
    tb = target.c.get(alpha)
    if tb is None:
        return None
    g = tb / defop.c[alpha]
    if LocalOp.mul(g).compose(defop) == target:
        return g
    return None


def _const_only(e: JetExpr) -> bool:
    from .jet_algebra import gen_key

    return all(gen_key(g)[0] == "const" for g in e.gens())


def _as_const_expr(e: JetExpr) -> JetExpr | None:
    """e rewritten with constant num/den when e is constant, else None.

    Quotients are never gcd-reduced, so a constant ratio can arrive wearing
    matching variable factors on both sides.  Grade each monomial by its
    variable part; the ratio is constant iff numerator and denominator are
    proportional grade by grade over the constant coefficients.
    """
    if _const_only(e):
        return e
    from .jet_algebra import DiffPoly, gen_key

    def graded(p: "DiffPoly") -> dict:
        groups: dict[tuple, dict] = {}
        for mono, q in p.terms.items():
            cs, vs = [], []
            for g, n in mono:
                (cs if gen_key(g)[0] == "const" else vs).append((g, n))
            groups.setdefault(tuple(vs), {})[tuple(cs)] = q
        return groups

    gn, gd = graded(e.num), graded(e.den)
    if set(gn) != set(gd):
        return None
    j0 = min(gd)
    num, den = DiffPoly(dict(gn[j0])), DiffPoly(dict(gd[j0]))
    for j in gd:
        if not (DiffPoly(dict(gn[j])) * den - num * DiffPoly(dict(gd[j]))).is_zero():
            return None
    return JetExpr(num, den)


def _solve_sandwich(
    left_def: LocalOp, right_def: LocalOp, target: LocalOp
) -> tuple[JetExpr, JetExpr] | None:
    """(g, c) with target == mul(g) . right_def + c * left_def, c constant."""
    # direct slots where only one definition contributes
    slots = sorted(target.support() | left_def.support() | right_def.support())
    g = c = None
    for a in slots:
        lr, rr = left_def.c.get(a), right_def.c.get(a)
        ta = target.c.get(a, ZERO)
        if rr is not None and lr is None and g is None:
            g = ta / rr
        elif lr is not None and rr is None and c is None:
            c = ta / lr
    candidates = []
    if g is not None and c is not None:
        candidates.append((g, c))
    if g is not None:
        candidates.append((g, ZERO))
    if c is not None:
        candidates.append((ZERO, c))
    # 2x2 elimination over a pair of shared slots
    shared = [a for a in slots if a in left_def.c and a in right_def.c]
    for a1 in shared:
        for a2 in slots:
            if a2 == a1:
                continue
            l1, r1, t1 = left_def.c.get(a1, ZERO), right_def.c.get(a1, ZERO), target.c.get(a1, ZERO)
            l2, r2, t2 = left_def.c.get(a2, ZERO), right_def.c.get(a2, ZERO), target.c.get(a2, ZERO)
            det = r1 * l2 - r2 * l1
            if det.is_zero():
                continue
            cand_g = (t1 * l2 - t2 * l1) / det
            cand_c = (r1 * t2 - r2 * t1) / det
            candidates.append((cand_g, cand_c))
            break
    for cand_g, cand_c in candidates:
        if not _const_only(cand_c):
            continue
        lhs = LocalOp.mul(cand_g).compose(right_def) + left_def.scale(cand_c)
        if lhs == target:
            return cand_g, cand_c
    return None


def _solve_left_factor(target: LocalOp, right: LocalOp) -> LocalOp | None:
    """Y with Y . right == target, or None."""
    if right.is_zero():
        return None
    tau = right.top_slot()
    f = right.c[tau]
    y = LocalOp()
    rem = target
    guard = 0
    while not rem.is_zero():
        guard += 1
        if guard > 64:
            return None
        sigma = rem.top_slot()
        gamma = _multiset_diff(sigma, tau)
        if gamma is None:
            return None
        y = y + LocalOp({gamma: rem.c[sigma] / f})
        rem = target - y.compose(right)
    return y


def _multiset_diff(sigma: tuple, tau: tuple) -> tuple | None:
    out = list(sigma)
    for i in tau:
        if i not in out:
            return None
        out.remove(i)
    return tuple(out)


def _const_ratio(a: LocalOp, b: LocalOp) -> JetExpr | None:
    """Constant lam with b == lam * a, or None."""
    if a.is_zero() or b.is_zero() or set(a.c) != set(b.c):
        return None
    slot = a.top_slot()
    lam = _as_const_expr(b.c[slot] / a.c[slot])
    if lam is None:
        return None
    if a.scale(lam) == b:
        return lam
    return None


def _simplify_chain(ch: Chain, reg: OpRegistry) -> list[Chain] | None:
    """One rewrite step on a chain; None when no move applies."""
    locs, invs = list(ch.locals), list(ch.invs)
    k = len(invs)
    # inv(N) . L  ==>  mul(g)   when L == def(N) . mul(g)
    for j in range(1, k + 1):
        d = reg.defs.get(invs[j - 1])
        if d is None:
            continue
        g = _solve_def_then_mul(d, locs[j])
        if g is not None:
            nl = locs[: j - 1] + [locs[j - 1].compose(LocalOp.mul(g))] + locs[j + 1 :]
            return [Chain(tuple(nl), tuple(invs[: j - 1] + invs[j:]))]
    # L . inv(N)  ==>  mul(g)   when L == mul(g) . def(N)
    for j in range(1, k + 1):
        d = reg.defs.get(invs[j - 1])
        if d is None:
            continue
        g = _solve_mul_then_def(d, locs[j - 1])
        if g is not None:
            nl = locs[: j - 1] + [LocalOp.mul(g).compose(locs[j])] + locs[j + 1 :]
            return [Chain(tuple(nl), tuple(invs[: j - 1] + invs[j:]))]
    # inv(Nl) . L . inv(Nr) with L == mul(g).def(Nr) + c*def(Nl)
    #   ==>  inv(Nl).mul(g)  +  c * inv(Nr)
    for j in range(1, k):
        dl = reg.defs.get(invs[j - 1])
        dr = reg.defs.get(invs[j])
        if dl is None or dr is None:
            continue
        sol = _solve_sandwich(dl, dr, locs[j])
        if sol is None:
            continue
        g, c = sol
        out = []
        if not g.is_zero():
            nl = locs[: j - 1] + [locs[j - 1]] + [LocalOp.mul(g).compose(locs[j + 1])] + locs[j + 2 :]
            out.append(Chain(tuple(nl), tuple(invs[:j] + invs[j + 1 :])))
        if not c.is_zero():
            nl = locs[: j - 1] + [locs[j - 1].scale(c)] + locs[j + 1 :]
            out.append(Chain(tuple(nl), tuple(invs[: j - 1] + invs[j:])))
        return out
    # partial cancellations: split off the part of a segment that matches the
    # adjacent definition's leading slot, leaving a remainder chain.
    for j in range(1, k + 1):
        d = reg.defs.get(invs[j - 1])
        if d is None:
            continue
        beta = d.top_slot()
        # inv(N) . L  with  L == def(N).mul(g) + R  ==>  mul(g) + inv(N).R
        tb = locs[j].c.get(beta)
        if tb is not None:
            g = tb / d.c[beta]
            rem = locs[j] - d.compose(LocalOp.mul(g))
            cancelled = locs[: j - 1] + [locs[j - 1].compose(LocalOp.mul(g))] + locs[j + 1 :]
            out = [Chain(tuple(cancelled), tuple(invs[: j - 1] + invs[j:]))]
            if not rem.is_zero():
                out.append(Chain(tuple(locs[:j] + [rem] + locs[j + 1 :]), tuple(invs)))
            return out
        # L . inv(N)  with  L == mul(g).def(N) + R  ==>  mul(g) + R.inv(N)
        tb = locs[j - 1].c.get(beta)
        if tb is not None:
            g = tb / d.c[beta]
            rem = locs[j - 1] - d.scale(g)
            cancelled = locs[: j - 1] + [LocalOp.mul(g).compose(locs[j])] + locs[j + 1 :]
            out = [Chain(tuple(cancelled), tuple(invs[: j - 1] + invs[j:]))]
            if not rem.is_zero():
                out.append(Chain(tuple(locs[: j - 1] + [rem] + locs[j:]), tuple(invs)))
            return out
    return None


def _try_insert_merge(a: Chain, b: Chain, reg: OpRegistry) -> Chain | None:
    """Merge chains whose inverse lists differ by one insertion.

    With b = prefix . inv(B) . T2 . suffix and a = prefix' . S . suffix where
    prefix' == lam * prefix and S == Y . T2, the sum rewrites through
    S == Y . def(B) . inv(B) . T2 into a single chain carrying the segment
    Y . def(B) + lam^-1 * (b's middle segment).
    """
    if len(b.invs) != len(a.invs) + 1:
        return None
    for p in range(len(b.invs)):
        if b.invs[:p] + b.invs[p + 1 :] != a.invs:
            continue
        # aligned segments outside the window [p, p+1] must match; the leading
        # segment may differ by a constant factor which scales through.
        lam = ONE
        ok = True
        for i in range(p):
            if i == 0:
                r = _const_ratio(a.locals[0], b.locals[0])
                if r is None or r.is_zero():
                    ok = False
                    break
                lam = r
            elif not (a.locals[i] == b.locals[i]):
                ok = False
                break
        if not ok:
            continue
        for i in range(p + 1, len(a.locals)):
            if not (a.locals[i] == b.locals[i + 1]):
                ok = False
                break
        if not ok:
            continue
        d = reg.defs.get(b.invs[p])
        if d is None:
            continue
        t2 = b.locals[p + 1]
        y = _solve_left_factor(a.locals[p], t2)
        if y is None:
            continue
        if p == 0:
            window = y.compose(d) + b.locals[0]
            return Chain((window, t2) + b.locals[2:], b.invs)
        window = y.compose(d) + b.locals[p].scale(lam)
        # only worthwhile when the window then clears the inverse on its left
        left = reg.defs.get(b.invs[p - 1])
        if left is None or _solve_def_then_mul(left, window) is None:
            continue
        return Chain(a.locals[:p] + (window, t2) + b.locals[p + 2 :], b.invs)
    return None


def normalize(op: DiffOp, reg: OpRegistry) -> DiffOp:
    local = op.local
    chains = [ch for ch in op.chains if not ch.is_zero()]
    changed = True
    rounds = 0
    while changed:
        rounds += 1
        if rounds > 300:
            break
        changed = False
        # merge chains equal up to one local segment, or differing by one
        # inverse that a segment factors through; merging first keeps the
        # splitting moves below from shredding cancelling pairs
        i = 0
        while i < len(chains):
            j = i + 1
            while j < len(chains):
                m = _try_merge(chains[i], chains[j])
                if m is None:
                    m = _try_insert_merge(chains[i], chains[j], reg)
                if m is None:
                    m = _try_insert_merge(chains[j], chains[i], reg)
                if m is not None:
                    changed = True
                    if m.is_zero():
                        chains.pop(j)
                        chains.pop(i)
                        i -= 1
                        break
                    chains[i] = m
                    chains.pop(j)
                else:
                    j += 1
            i += 1
        chains = [ch for ch in chains if not ch.is_zero()]
        # chain rewriting
        out: list[Chain] = []
        for ch in chains:
            res = _simplify_chain(ch, reg)
            if res is None:
                out.append(ch)
            else:
                changed = True
                for nch in res:
                    if not nch.is_zero():
                        if nch.invs:
                            out.append(nch)
                        else:
                            local = local + nch.locals[0]
        chains = out
    return DiffOp(local, tuple(chains))


def _try_merge(a: Chain, b: Chain) -> Chain | None:
    if a.invs != b.invs:
        return None
    diff = [j for j in range(len(a.locals)) if not (a.locals[j] == b.locals[j])]
    if len(diff) > 1:
        # if every differing segment pair is off by a constant factor, the
        # chains are proportional overall: constants commute with every
        # operator here, so the ratios slide through the inverses and multiply
        rho = ONE
        for j in diff:
            r = _const_ratio(a.locals[j], b.locals[j])
            if r is None:
                rho = None
                break
            rho = rho * r
        if rho is not None:
            merged = a.locals[0].scale(ONE + rho)
            return Chain((merged,) + a.locals[1:], a.invs)
        # the leading segments may differ by a constant factor, which scales
        # through the inverses (constants commute with every operator here)
        if len(diff) == 2 and diff[0] == 0:
            lam = _const_ratio(a.locals[0], b.locals[0])
            if lam is None:
                return None
            j = diff[1]
            merged = a.locals[j] + b.locals[j].scale(lam)
            return Chain(a.locals[:j] + (merged,) + a.locals[j + 1 :], a.invs)
        return None
    j = diff[0] if diff else 0
    merged = a.locals[j] + b.locals[j]
    return Chain(a.locals[:j] + (merged,) + a.locals[j + 1 :], a.invs)


def op_equal(a: DiffOp, b: DiffOp, reg: OpRegistry) -> bool:
    d = normalize(a - b, reg)
    return d.local.is_zero() and not d.chains


def is_identity(op: DiffOp, reg: OpRegistry) -> bool:
    d = normalize(op, reg)
    return not d.chains and d.local == LocalOp.identity()


# --------------------------------------------------------------------------
# matrices of operators
# --------------------------------------------------------------------------


class OpMatrix:
    __slots__ = ("e",)

    def __init__(self, rows):
        self.e = [[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]]

    @staticmethod
    def identity() -> "OpMatrix":
        return OpMatrix(
            [[DiffOp.identity(), DiffOp.zero()], [DiffOp.zero(), DiffOp.identity()]]
        )

    def compose(self, other: "OpMatrix") -> "OpMatrix":
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                acc = DiffOp.zero()
                for k in range(2):
                    acc = acc + self.e[i][k].compose(other.e[k][j])
                row.append(acc)
            rows.append(row)
        return OpMatrix(rows)

    def __add__(self, other: "OpMatrix") -> "OpMatrix":
        return OpMatrix(
            [[self.e[i][j] + other.e[i][j] for j in range(2)] for i in range(2)]
        )

    def __sub__(self, other: "OpMatrix") -> "OpMatrix":
        return OpMatrix(
            [[self.e[i][j] - other.e[i][j] for j in range(2)] for i in range(2)]
        )

    def adjoint(self, reg: OpRegistry) -> "OpMatrix":
        return OpMatrix(
            [
                [self.e[0][0].adjoint(reg), self.e[1][0].adjoint(reg)],
                [self.e[0][1].adjoint(reg), self.e[1][1].adjoint(reg)],
            ]
        )

    def normalize(self, reg: OpRegistry) -> "OpMatrix":
        return OpMatrix(
            [[normalize(self.e[i][j], reg) for j in range(2)] for i in range(2)]
        )

    def is_identity(self, reg: OpRegistry) -> bool:
        return (
            is_identity(self.e[0][0], reg)
            and is_identity(self.e[1][1], reg)
            and op_equal(self.e[0][1], DiffOp.zero(), reg)
            and op_equal(self.e[1][0], DiffOp.zero(), reg)
        )

    def apply(self, vec, reg: OpRegistry):
        return (
            apply_op(self.e[0][0], vec[0], reg) + apply_op(self.e[0][1], vec[1], reg),
            apply_op(self.e[1][0], vec[0], reg) + apply_op(self.e[1][1], vec[1], reg),
        )


# --------------------------------------------------------------------------
# deferred inverse values
# --------------------------------------------------------------------------


class DeferredTerm:
    """outer . inv(name) applied to arg (arg itself may carry deferrals)."""

    __slots__ = ("outer", "inv", "arg")

    def __init__(self, outer: LocalOp, inv: str, arg: "NonlocVal"):
        self.outer = outer
        self.inv = inv
        self.arg = arg


class NonlocVal:
    """A value of the form  local + sum_k outer_k[ inv(N_k)[ arg_k ] ]."""

    __slots__ = ("local", "terms")

    def __init__(self, local: JetExpr = ZERO, terms: tuple = ()):
        self.local = local
        self.terms = tuple(t for t in terms if not t.outer.is_zero())

    @staticmethod
    def of(e: JetExpr) -> "NonlocVal":
        return NonlocVal(e, ())

    def is_local(self) -> bool:
        return not self.terms

    def as_local(self) -> JetExpr:
        if self.terms:
            raise ValueError(f"value retains unresolved inverses: {self!r}")
        return self.local

    def __add__(self, other: "NonlocVal") -> "NonlocVal":
        return NonlocVal(self.local + other.local, self.terms + other.terms).combined()

    def __neg__(self) -> "NonlocVal":
        return NonlocVal(
            -self.local, tuple(DeferredTerm(-t.outer, t.inv, t.arg) for t in self.terms)
        )

    def __sub__(self, other: "NonlocVal") -> "NonlocVal":
        return self + (-other)

    def apply_local(self, l: LocalOp) -> "NonlocVal":
        return NonlocVal(
            l.apply(self.local),
            tuple(DeferredTerm(l.compose(t.outer), t.inv, t.arg) for t in self.terms),
        )

    def defer(self, inv: str) -> "NonlocVal":
        if self.local.is_zero() and not self.terms:
            return NonlocVal()
        return NonlocVal(ZERO, (DeferredTerm(LocalOp.identity(), inv, self),))

    def combined(self) -> "NonlocVal":
        terms = list(self.terms)
        while True:
            n = len(terms)
            # same inverse, same argument: add the outer operators
            grouped: list[DeferredTerm] = []
            for t in terms:
                for i, s in enumerate(grouped):
                    if s.inv == t.inv and _nv_equal(s.arg, t.arg):
                        grouped[i] = DeferredTerm(s.outer + t.outer, s.inv, s.arg)
                        break
                else:
                    grouped.append(t)
            # same inverse, same outer: add the arguments (linearity)
            terms = []
            for t in grouped:
                if t.outer.is_zero() or _nv_is_zero(t.arg):
                    continue
                for i, s in enumerate(terms):
                    if s.inv == t.inv and s.outer == t.outer:
                        terms[i] = DeferredTerm(s.outer, s.inv, s.arg + t.arg)
                        break
                else:
                    terms.append(t)
            terms = [t for t in terms if not _nv_is_zero(t.arg)]
            if len(terms) == n:
                break
        return NonlocVal(self.local, tuple(terms))

    def __repr__(self):
        parts = [fmt(self.local)]
        for t in self.terms:
            parts.append(f"[{t.outer.key()}]·inv({t.inv})[{t.arg!r}]")
        return " + ".join(parts)


def _nv_is_zero(a: NonlocVal) -> bool:
    return a.local.is_zero() and not a.terms


def _nv_equal(a: NonlocVal, b: NonlocVal) -> bool:
    if not (a.local == b.local) or len(a.terms) != len(b.terms):
        return False
    used: set[int] = set()
    for t in a.terms:
        for i, s in enumerate(b.terms):
            if i in used:
                continue
            if t.inv == s.inv and t.outer == s.outer and _nv_equal(t.arg, s.arg):
                used.add(i)
                break
        else:
            return False
    return True


def nv_equal(a: NonlocVal, b: NonlocVal) -> bool:
    d = a - b
    if not d.local.is_zero():
        return False
    return not d.combined().terms


def apply_op(op: DiffOp, e, reg: OpRegistry) -> NonlocVal:
    """Apply op to a JetExpr or a NonlocVal."""
    v = e if isinstance(e, NonlocVal) else NonlocVal.of(e)
    val = v.apply_local(op.local)
    for ch in op.chains:
        cur = v.apply_local(ch.locals[-1])
        for j in range(len(ch.invs) - 1, -1, -1):
            cur = cur.defer(ch.invs[j]).apply_local(ch.locals[j])
        val = val + cur
    return val.combined()


# --------------------------------------------------------------------------
# block (Schur-style) inversion of 2x2 operator matrices
# --------------------------------------------------------------------------


def _invert_factorable(op: DiffOp, reg: OpRegistry) -> DiffOp | None:
    """Invert an operator that is mul/inv-factorable or matches g*def(N)."""
    op = normalize(op, reg)
    if op.is_purely_local():
        l = op.local
        if set(l.c) == {()}:  # mul(g)
            return DiffOp.mul(ONE / l.c[()])
        # mul(g) . def(N) for a registered invertible N
        for name, d in reg.defs.items():
            g = _solve_mul_then_def(d, l)
            if g is not None:
                return DiffOp.inverse(name).compose(DiffOp.mul(ONE / g))
            g = _solve_def_then_mul(d, l)
            if g is not None:
                return DiffOp.mul(ONE / g).compose(DiffOp.inverse(name))
        return None
    if not op.local.is_zero() or len(op.chains) != 1:
        return None
    ch = op.chains[0]
    # invert segment-wise: every local must be a pure mul
    factors: list[DiffOp] = []
    for j, l in enumerate(ch.locals):
        if not l.is_zero():
            if set(l.c) != {()}:
                return None
            factors.append(DiffOp.mul(ONE / l.c[()]))
        else:
            return None
        if j < len(ch.invs):
            d = reg.defs.get(ch.invs[j])
            if d is None:
                return None
            factors.append(DiffOp.from_local(d))
    # the inverse composes the segment inverses in reversed order:
    # (L0 . inv0 . L1)^-1 = L1^-1 . def0 . L0^-1
    inv = DiffOp.identity()
    for f in factors:
        inv = f.compose(inv)
    return inv


def schur_inverse(m: OpMatrix, reg: OpRegistry) -> OpMatrix:
    """Inverse of [[a, b], [c, d]] through the top-right corner.

    With the complement S = c - d b^-1 a pivoting on b,
      [[a,b],[c,d]]^-1 = [[e,f],[g,h]],   f = S^-1,   e = -f d b^-1,
      g = b^-1 + b^-1 a f d b^-1,         h = -b^-1 a f,
    so only b and S need inversion.
    """
    a, b = m.e[0][0], m.e[0][1]
    c, d = m.e[1][0], m.e[1][1]
    b_inv = _invert_factorable(b, reg)
    if b_inv is None:
        raise ValueError("top-right corner is not invertible by factorization")
    # Normalizing after each composition keeps exact inverse-pair cancellations
    # ahead of the distribution products they would otherwise be buried in.
    db = normalize(d.compose(b_inv), reg)
    inner = normalize(c - normalize(db.compose(a), reg), reg)
    f = _invert_factorable(inner, reg)
    if f is None:
        raise ValueError(f"Schur complement is not factorable: {inner!r}")
    fdb = normalize(f.compose(db), reg)
    ba = normalize(b_inv.compose(a), reg)
    e = normalize(-fdb, reg)
    g = normalize(b_inv + normalize(normalize(ba.compose(f), reg).compose(db), reg), reg)
    h = normalize(-ba.compose(f), reg)
    return OpMatrix([[e, normalize(f, reg)], [g, h]])
