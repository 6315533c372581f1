"""Variational calculus on jet expressions: Euler operators, linearizations,
on-shell reduction, divergence tests and homotopy reconstruction of densities."""

from __future__ import annotations

from .jet_algebra import (
    JetExpr,
    Rat,
    T,
    ZERO,
    DiffPoly,
    const_gid,
    expr_gen,
    fmt,
    gen_key,
    iter_jet_gens,
    jet,
    poly_gen,
)


class NonPolynomialDependence(ValueError):
    """Raised when an operation needs polynomial jet dependence and lacks it."""


class NotExact(ValueError):
    """Raised when an expression claimed to be a variational gradient is not."""


def total_derivative(e: JetExpr, i: int) -> JetExpr:
    return e.total(i)


def nth_total(e: JetExpr, idx) -> JetExpr:
    for i in idx:
        e = e.total(i)
    return e


def euler(e: JetExpr, dep: str) -> JetExpr:
    """Variational derivative with respect to one dependent variable.

    Accepts rational jet dependence; partials are exact quotient-rule partials.
    """
    acc = ZERO
    for gid, _, idx in iter_jet_gens(e, dep):
        term = e.partial(gid)
        if term.is_zero():
            continue
        for i in idx:
            term = term.total(i)
        if len(idx) % 2:
            term = -term
        acc = acc + term
    return acc


def frechet(e: JetExpr, chars: dict[str, JetExpr]) -> JetExpr:
    """Directional (Frechet) derivative of e along the characteristic vector."""
    acc = ZERO
    for gid, dep, idx in iter_jet_gens(e):
        direction = chars.get(dep)
        if direction is None:
            continue
        p = e.partial(gid)
        if p.is_zero():
            continue
        acc = acc + p * nth_total(direction, idx)
    return acc


def on_shell(e: JetExpr, rhs: dict[str, JetExpr]) -> JetExpr:
    """Eliminate all t-jets of the listed unknowns using their evolution laws.

    rhs maps a dependent name to its t-derivative as an expression free of
    t-jets of that same map's unknowns; repeated passes strip nested t-indices.
    """
    while True:
        mapping: dict[int, JetExpr] = {}
        for gid, dep, idx in iter_jet_gens(e):
            if dep in rhs and T in idx:
                rest = list(idx)
                rest.remove(T)
                mapping[gid] = nth_total(rhs[dep], rest)
        if not mapping:
            return e
        e = e.substitute(mapping)


def is_divergence(e: JetExpr, deps=("u", "v")) -> bool:
    """True iff the Euler operators of all listed unknowns annihilate e."""
    return all(euler(e, dep).is_zero() for dep in deps)


def scale_dep(e: JetExpr, dep: str, factor: JetExpr) -> JetExpr:
    """Substitute every jet of dep by factor times itself."""
    mapping = {gid: factor * expr_gen(gid) for gid, _, _ in iter_jet_gens(e, dep)}
    return e.substitute(mapping)


_LAM = "#hom"


def homotopy_reconstruct(g: JetExpr, dep: str = "u") -> JetExpr:
    """A density h with euler(h, dep) == g, by the straight-line homotopy.

    Requires g to be polynomial in the jets of dep (other unknowns act as
    parameters); raises NotExact when the candidate fails verification.
    """
    for gid in g.den.gens():
        k = gen_key(gid)
        if k[0] == "jet" and k[1] == dep:
            raise NonPolynomialDependence(
                f"gradient is not polynomial in the jets of {dep}: {fmt(g)}"
            )
    lam = expr_gen(const_gid(_LAM))
    scaled = scale_dep(g, dep, lam) * jet(dep)
    if not scaled.den.gens().isdisjoint({const_gid(_LAM)}):
        raise NonPolynomialDependence("homotopy integrand is not polynomial in the scale")
    lam_gid = const_gid(_LAM)
    out: dict = {}
    for mono, c in scaled.num.terms.items():
        m = 0
        rest = []
        for gg, e in mono:
            if gg == lam_gid:
                m = e
            else:
                rest.append((gg, e))
        nm = tuple(rest)
        nc = out.get(nm, Rat(0)) + c / (m + 1)
        if nc:
            out[nm] = nc
        elif nm in out:
            del out[nm]
    h = JetExpr(DiffPoly(out), scaled.den)
    if euler(h, dep) != g:
        raise NotExact(f"not a variational gradient in {dep}: {fmt(g)}")
    return h
