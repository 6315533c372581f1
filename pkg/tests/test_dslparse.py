"""Catalog text format: tokenizing, parsing, spans, canonical printing."""

import pytest

from heavenly.dslparse import (
    AtomCall,
    Bin,
    BracketEntry,
    Claim,
    DeferInv,
    Density,
    Flow,
    JetRef,
    Name,
    Neg,
    Num,
    OpApply,
    ParseError,
    Symmetry,
    parse_catalog,
    parse_expr,
    print_catalog,
    print_expr,
)


def test_expr_precedence():
    e = parse_expr("a + b*c^2")
    assert e == Bin("+", Name("a"), Bin("*", Name("b"), Bin("^", Name("c"), Num(2))))


def test_jet_and_opapply_disambiguation():
    assert parse_expr("u[2,3]") == JetRef("u", (2, 3))
    assert parse_expr("u[]") == JetRef("u", ())
    assert parse_expr("u[t,1]") == JetRef("u", ("t", 1))
    assert parse_expr("W[u[1]]") == OpApply("W", JetRef("u", (1,)))


def test_atom_calls_with_primes_and_orders():
    assert parse_expr("a'(zeta)") == AtomCall("a", (Name("zeta"),), (1,))
    assert parse_expr("b{1,0}(z1, v[])") == AtomCall(
        "b", (Name("z1"), JetRef("v", ())), (1, 0)
    )
    assert parse_expr("a(zeta)") == AtomCall("a", (Name("zeta"),), (0,))


def test_deferred_inverse_expression():
    e = parse_expr("inv(W; u[1] + v[])")
    assert e == DeferInv("W", Bin("+", JetRef("u", (1,)), JetRef("v", ())))


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as ei:
        parse_expr("u[1] + %")
    assert "line 1" in str(ei.value)


def test_unbalanced_parens_rejected():
    with pytest.raises(ParseError):
        parse_expr("(u[1] + v[]")


_SAMPLE = """
# a small sample catalog
system I
  params c4 c5 c8 c9 c10
  bind c10 = c5*c9/c8
  constraint c8*c10 - c5*c9
  nonzero c8
  root s = c4^2 - 4*c9 solving c9 = (c4^2 - s^2)/4
  let zeta = c5*z1 - c8*z2
  func a(z3)
  func e(zeta)
  op L123 = mul(u[2,3]).D1 - mul(u[1,3]).D2
  invertible L123 skew
  op W = mul(c8).L123 + 2*D3
  opmat J0 = [[mul(1/u[2,3]), mul(0)], [mul(0), mul(u[])]]
  symmetry X1
    slot z1 = 1
    char u = -u[1]
    char v = -v[1]
    variational no
  end
  density H1
    expr = v[]^2*u[2,3]/2 + u[]*W[u[1]]
    pair X3 scale -1
  end
  flow tau2
    tag biham
    bind c6 = 0
    via J0 H1
    u = c9*u[1] + inv(W; L123[v[]])
    v = -v[2]
    combo -c9 X1, 2 X3
    defer xiW : W
    witness W = xiW[2] + v[]
    orient W 2
  end
  bracket X1 X3 = 0
  bracket X2 X3 combo -1 X3, c5 X1
  bracket X1 Xce
    slot z2 = c5*e'(zeta)
    corrected
  end
  bracket X3 Xce
    slot z2 = 0
    control
  end
  density nvX1
    derive X1
    control
  end
  claim kj leftinv K J0
  claim st step adjoint(R) H1 H2 expectfail
    witness W = u[1]
  end
  claim stat stationary tau2
    eq C1 = W[v[]] - L123[u[1]]
    eq W[v[]]
    forward C1 = c9 * D1
    back D1 = C1/c9
    pivot v[1] u[1,1]
  end
  claim cmp compat
    aux w
    bind c6 = 0
    eq E1 = v[3]*w[2] - v[2]*w[3]
    eq E2 = w[1]*v[]
    orient w 3
  end
  claim idq identity
    lhs = u[1]*v[2]
    rhs = v[2]*u[1]
    onshell
  end
"""


def test_parse_sample_catalog_structure():
    cat = parse_catalog(_SAMPLE)
    assert len(cat.systems) == 1
    sys_block = cat.systems[0]
    assert sys_block.name == "I"
    kinds = [type(s).__name__ for s in sys_block.stmts]
    assert kinds.count("Claim") == 5
    syms = [s for s in sys_block.stmts if isinstance(s, Symmetry)]
    assert syms[0].name == "X1" and syms[0].variational == "no"
    flows = [s for s in sys_block.stmts if isinstance(s, Flow)]
    assert flows[0].vias == (("J0", "H1"),)
    assert flows[0].combo[0][1] == "X1"
    assert flows[0].defers[0].name == "xiW"
    assert flows[0].tag == "biham" and flows[0].binds[0][0] == "c6"
    brackets = [s for s in sys_block.stmts if isinstance(s, BracketEntry)]
    assert brackets[0].zero and brackets[1].combo[1][1] == "X1"
    assert not brackets[2].zero and brackets[2].corrected
    assert brackets[3].control
    dens = [s for s in sys_block.stmts if isinstance(s, Density)]
    assert dens[1].derive == "X1" and dens[1].control and dens[1].value is None
    claims = [s for s in sys_block.stmts if isinstance(s, Claim)]
    assert claims[1].args == ("adjoint(R)", "H1", "H2") and claims[1].expectfail
    stat = claims[2]
    assert stat.eqs[0][0] == "C1" and stat.eqs[1][0] is None
    assert stat.forwards[0][0] == "C1" and stat.backs[0][0] == "D1"
    assert stat.pivots == (JetRef("v", (1,)), JetRef("u", (1, 1)))
    cmp_claim = claims[3]
    assert cmp_claim.auxdeps == ("w",) and cmp_claim.binds == (("c6", Num(0)),)
    assert cmp_claim.orients[0].inv == "w" and cmp_claim.orients[0].index == 3
    assert claims[4].onshell


def test_print_parse_roundtrip_on_sample():
    cat = parse_catalog(_SAMPLE)
    text = print_catalog(cat)
    again = parse_catalog(text)
    assert again == cat
    # printing is a fixed point after one round
    assert print_catalog(again) == text


def test_expr_print_roundtrip_tricky_cases():
    cases = [
        "-(u[1] + v[])",
        "(a + b)*c",
        "a - (b - c)",
        "a/b/c",
        "a/(b*c)",
        "-u[1]^2",
        "(c4 - c8)^2*u[1]",
        "inv(W; -L123[v[]]/u[2,3])",
        "Phihat{1,0}(sigma, zeta)*u[2]",
    ]
    for text in cases:
        ast = parse_expr(text)
        assert parse_expr(print_expr(ast)) == ast, text
