"""Operator normal forms, adjoints, chain clearing, block inversion."""

from heavenly.jet_algebra import ONE, ZERO, jet, rat, var
from heavenly.opalg import (
    Chain,
    DiffOp,
    LocalOp,
    OpMatrix,
    OpRegistry,
    apply_op,
    is_identity,
    normalize,
    nv_equal,
    op_equal,
    schur_inverse,
)

u = lambda *i: jet("u", i)
v = lambda *i: jet("v", i)


def L123() -> LocalOp:
    # u23 D1 - u13 D2
    return LocalOp({(1,): u(2, 3), (2,): -u(1, 3)})


def L232() -> LocalOp:
    # u23 D2 - u22 D3
    return LocalOp({(2,): u(2, 3), (3,): -u(2, 2)})


def registry() -> OpRegistry:
    reg = OpRegistry()
    reg.define("A", L123(), skew=True)
    reg.define("B", L232(), skew=True)
    return reg


def test_compose_leibniz():
    got = LocalOp.diff(1).compose(LocalOp.mul(u(2)))
    assert got == LocalOp({(1,): u(2), (): u(1, 2)})


def test_compose_second_order_leibniz():
    d11 = LocalOp({(1, 1): ONE})
    got = d11.compose(LocalOp.mul(v()))
    # D1D1 (v f) =  v D11 f + 2 v1 D1 f + v11 f
    assert got == LocalOp({(1, 1): v(), (1,): rat(2) * v(1), (): v(1, 1)})


def test_adjoint_first_order():
    a = LocalOp.mul(u(2)).compose(LocalOp.diff(1))
    # (u2 D1)+ = -D1 . u2 = -u2 D1 - u12
    assert a.adjoint() == LocalOp({(1,): -u(2), (): -u(1, 2)})


def test_adjoint_involution():
    a = LocalOp({(1, 2): u(2, 3), (3,): v(1), (): u() * v()})
    assert a.adjoint().adjoint() == a


def test_skewness_of_cross_operator():
    l = L123()
    assert l.adjoint() == -l


def test_apply_local():
    assert L123().apply(v()) == u(2, 3) * v(1) - u(1, 3) * v(2)


def test_cancel_inverse_then_definition():
    reg = registry()
    op = DiffOp.inverse("A").compose(DiffOp.from_local(L123()).scale(rat(3)))
    n = normalize(op, reg)
    assert n.is_purely_local() and n.local == LocalOp.mul(rat(3))


def test_cancel_definition_then_inverse():
    reg = registry()
    op = DiffOp.from_local(L123()).compose(DiffOp.inverse("A"))
    assert is_identity(op, reg)


def test_cancel_with_mul_factor():
    reg = registry()
    rhs = DiffOp.from_local(L123().compose(LocalOp.mul(u(2))))
    op = DiffOp.inverse("A").compose(rhs)
    n = normalize(op, reg)
    assert n.is_purely_local() and n.local == LocalOp.mul(u(2))


def test_merge_then_cancel():
    reg = registry()
    part1 = DiffOp(LocalOp({(1,): u(2, 3)}))
    part2 = DiffOp(LocalOp({(2,): -u(1, 3)}))
    op = DiffOp.inverse("A").compose(part1) + DiffOp.inverse("A").compose(part2)
    assert is_identity(op, reg)


def test_sandwich_split():
    reg = registry()
    mid = DiffOp.mul(v()).compose(DiffOp.from_local(L232())) + DiffOp.from_local(
        L123()
    ).scale(rat(2))
    op = DiffOp.inverse("A").compose(mid).compose(DiffOp.inverse("B"))
    n = normalize(op, reg)
    # expect inv(A).mul(v) + 2*inv(B)
    want = DiffOp.inverse("A").compose(DiffOp.mul(v())) + DiffOp.inverse("B").scale(
        rat(2)
    )
    assert op_equal(n, want, reg)


def test_apply_with_deferred_inverse():
    reg = registry()
    op = DiffOp.diff(3).compose(DiffOp.inverse("A"))
    val = apply_op(op, v(), reg)
    assert val.local.is_zero()
    assert len(val.terms) == 1
    t = val.terms[0]
    assert t.inv == "A" and t.outer == LocalOp.diff(3) and t.arg.as_local() == v()


def test_apply_inverse_of_zero_vanishes():
    reg = registry()
    op = DiffOp.inverse("A")
    assert apply_op(op, ZERO, reg).is_local()


def test_deferred_terms_combine():
    reg = registry()
    x = apply_op(DiffOp.inverse("A"), v(), reg)
    two_x = x + x
    assert nv_equal(two_x, x.apply_local(LocalOp.mul(rat(2))))


def test_matrix_identity_composition():
    reg = registry()
    m = OpMatrix([[DiffOp.diff(1), DiffOp.mul(u(2))], [DiffOp.mul(ONE), DiffOp.zero()]])
    assert m.compose(OpMatrix.identity()).is_identity(reg) is False
    assert OpMatrix.identity().compose(OpMatrix.identity()).is_identity(reg)


def test_schur_inverse_hand_case():
    reg = registry()
    m = OpMatrix(
        [[DiffOp.diff(1), DiffOp.mul(ONE)], [DiffOp.mul(ONE), DiffOp.zero()]]
    )
    inv = schur_inverse(m, reg)
    assert m.compose(inv).is_identity(reg)
    assert inv.compose(m).is_identity(reg)
    # hand inverse: [[0, 1], [1, -D1]]
    assert op_equal(inv.e[0][0], DiffOp.zero(), reg)
    assert op_equal(inv.e[0][1], DiffOp.mul(ONE), reg)
    assert op_equal(inv.e[1][0], DiffOp.mul(ONE), reg)
    assert op_equal(inv.e[1][1], -DiffOp.diff(1), reg)


def test_schur_inverse_with_named_corner():
    reg = registry()
    m = OpMatrix(
        [
            [DiffOp.from_local(L232()), DiffOp.mul(v()).compose(DiffOp.from_local(L123()))],
            [DiffOp.mul(ONE), DiffOp.zero()],
        ]
    )
    inv = schur_inverse(m, reg)
    assert m.compose(inv).is_identity(reg)
    assert inv.compose(m).is_identity(reg)


def test_factorable_inverse_roundtrip():
    reg = registry()
    op = DiffOp.mul(v()).compose(DiffOp.from_local(L123()))
    from heavenly.opalg import _invert_factorable

    inv = _invert_factorable(op, reg)
    assert inv is not None
    assert is_identity(inv.compose(op), reg)
    assert is_identity(op.compose(inv), reg)


def test_partial_cancel_with_remainder():
    reg = registry()
    # inv(A).(A + v3 D2) == 1 + inv(A).(v3 D2)
    seg = DiffOp.from_local(L123() + LocalOp({(2,): v(3)}))
    op = DiffOp.inverse("A").compose(seg)
    want = DiffOp.identity() + DiffOp.inverse("A").compose(
        DiffOp(LocalOp({(2,): v(3)}))
    )
    assert op_equal(op, want, reg)


def test_partial_cancel_merges_across_chains():
    reg = registry()
    # inv(A).(A - v2 D3) + inv(A).(v2 D3) == 1
    op = DiffOp.inverse("A").compose(
        DiffOp.from_local(L123() - LocalOp({(3,): v(2)}))
    ) + DiffOp.inverse("A").compose(DiffOp(LocalOp({(3,): v(2)})))
    assert is_identity(op, reg)


def test_left_factor_solver():
    from heavenly.opalg import _solve_left_factor

    t2 = LocalOp({(1,): v(2) / v(1), (2,): -ONE})
    s = LocalOp({(1,): u(1) * v(2) / v(1), (2,): -u(1)})
    y = _solve_left_factor(s, t2)
    assert y is not None and y == LocalOp.mul(u(1))
    assert y.compose(t2) == s


def test_insertion_merge_collapses_pair():
    reg = registry()
    # With W := u1*B - u2*A registered, the pair
    #   inv(W).mul(u1*v)  +  inv(W).(-u2*A).inv(B).mul(v)
    # factors the first segment through def(B).inv(B) and merges the window
    # into def(W), collapsing to inv(B).mul(v).
    w = LocalOp.mul(u(1)).compose(L232()) - LocalOp.mul(u(2)).compose(L123())
    reg.define("W", w, skew=False)
    tail = LocalOp.mul(v())
    a_chain = Chain((LocalOp.identity(), LocalOp.mul(u(1) * v())), ("W",))
    b_chain = Chain(
        (LocalOp.identity(), (-LocalOp.mul(u(2))).compose(L123()), tail), ("W", "B")
    )
    op = DiffOp(chains=(a_chain, b_chain))
    want = DiffOp.inverse("B").compose(DiffOp.from_local(tail))
    assert op_equal(op, want, reg)


def test_combined_groups_by_outer_adds_arguments():
    reg = registry()
    x = apply_op(DiffOp.inverse("A"), u(1), reg)
    y = apply_op(DiffOp.inverse("A"), v(1), reg)
    z = (x + y).combined()
    assert len(z.terms) == 1
    assert z.terms[0].arg.as_local() == u(1) + v(1)


def test_apply_op_to_nonlocal_value():
    reg = registry()
    inner = apply_op(DiffOp.inverse("A"), v(), reg)
    outer = apply_op(DiffOp.diff(2), inner, reg)
    assert len(outer.terms) == 1
    t = outer.terms[0]
    assert t.inv == "A" and t.outer == LocalOp.diff(2) and t.arg.as_local() == v()
