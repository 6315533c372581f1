"""Euler operators, linearization, on-shell reduction, homotopy reconstruction."""

import pytest

from heavenly.jet_algebra import ONE, Z1, Z2, Z3, T, const, jet, rat, var
from heavenly.varcalc import (
    NonPolynomialDependence,
    NotExact,
    euler,
    frechet,
    homotopy_reconstruct,
    is_divergence,
    on_shell,
)
from oracles import frechet_dual

u = lambda *i: jet("u", i)
v = lambda *i: jet("v", i)


def test_euler_simple_hand_values():
    assert euler(u(1) * u(1) / rat(2), "u") == -u(1, 1)
    assert euler(u() * u(1, 2), "u") == rat(2) * u(1, 2)
    assert euler(u() * v(), "v") == u()


def test_euler_rational_dependence():
    e = v(1) / u(2, 3)
    assert euler(e, "v") == u(1, 2, 3) / (u(2, 3) * u(2, 3))


def test_euler_kills_total_derivatives():
    f = u(1) ** 2 * v(3) + v() * u(2, 2)
    e = f.total(Z2) + (v() * u(1)).total(Z3)
    assert euler(e, "u").is_zero()
    assert euler(e, "v").is_zero()
    assert is_divergence(e)


def test_not_a_divergence_detected():
    assert not is_divergence(u(1) * v(2))


def test_frechet_hand_value():
    phi, psi = u(2) * v(), u(1) + v(3)
    e = u(1) * v(2)
    got = frechet(e, {"u": phi, "v": psi})
    want = phi.total(Z1) * v(2) + u(1) * psi.total(Z2)
    assert got == want


def test_frechet_matches_dual_number_oracle():
    c4, c5 = const("c4"), const("c5")
    q = (
        v(2) * v(3)
        - c4 * (u(2, 3) * v(1) - u(1, 3) * v(2))
        - c5 * (u(2, 3) * v(2) - u(2, 2) * v(3))
    ) / u(2, 3)
    chars = {"u": u(2) * v() + rat(3), "v": u(1) * u(1) - v(3)}
    assert frechet(q, chars) == frechet_dual(q, chars)


def test_frechet_dual_oracle_on_polynomial():
    e = u(1) ** 3 * v(2) + v() * u(2, 3)
    chars = {"u": v(1), "v": u(3)}
    assert frechet(e, chars) == frechet_dual(e, chars)


def test_on_shell_strips_time_jets():
    rhs = {"u": v(), "v": u(1, 1)}
    assert on_shell(jet("u", (T, T)), rhs) == u(1, 1)
    assert on_shell(jet("u", (T, 1)) * jet("v", (T,)), rhs) == v(1) * u(1, 1)
    assert on_shell(u(2, 3), rhs) == u(2, 3)


def test_homotopy_reconstruction_hand_value():
    g = -u(1, 1)
    h = homotopy_reconstruct(g, "u")
    assert h == -u() * u(1, 1) / rat(2)
    assert euler(h, "u") == g


def test_homotopy_roundtrip_on_catalog_style_density():
    dens = u(1) ** 2 * u(2, 3) / rat(2) + v() * v() * u(1, 1)
    g = euler(dens, "u")
    h = homotopy_reconstruct(g, "u")
    assert euler(h, "u") == g


def test_homotopy_rejects_non_gradient():
    with pytest.raises(NotExact):
        homotopy_reconstruct(u(1), "u")


def test_homotopy_rejects_rational_gradient():
    with pytest.raises(NonPolynomialDependence):
        homotopy_reconstruct(ONE / u(1), "u")
