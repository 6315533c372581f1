"""Independent cross-checking implementations used only by the test suite."""

from heavenly.jet_algebra import (
    DiffPoly,
    JetExpr,
    Rat,
    const_gid,
    expr_gen,
    iter_jet_gens,
    set_square_rule,
    ZERO,
)
from heavenly.varcalc import nth_total

_EPS = "#eps"


def frechet_dual(e: JetExpr, chars: dict[str, JetExpr]) -> JetExpr:
    """Directional derivative computed with dual numbers (eps**2 == 0).

    Perturbs every jet of the listed unknowns by eps times the prolonged
    direction, then extracts the eps-linear part of the perturbed quotient.
    """
    set_square_rule(_EPS, ZERO)
    eps_gid = const_gid(_EPS)
    eps = expr_gen(eps_gid)
    mapping = {}
    for gid, dep, idx in iter_jet_gens(e):
        if dep in chars:
            mapping[gid] = expr_gen(gid) + eps * nth_total(chars[dep], idx)
    pert = e.substitute(mapping)

    def split(p: DiffPoly):
        plain, linear = {}, {}
        for mono, c in p.terms.items():
            stripped = tuple((g, x) for g, x in mono if g != eps_gid)
            if stripped == mono:
                plain[mono] = c
            else:
                linear[stripped] = c
        return DiffPoly(plain), DiffPoly(linear)

    n0, n1 = split(pert.num)
    d0, d1 = split(pert.den)
    return JetExpr(n1 * d0 - n0 * d1, d0 * d0)
