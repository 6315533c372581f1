"""Loader semantics: catalog text -> bound engine objects, both modes."""

import pytest

from heavenly import dslparse as D
from heavenly.catalog import (
    Catalog,
    CatalogError,
    ConstraintViolation,
    DanglingReference,
    load_catalog,
)
from heavenly.jet_algebra import jet, rat
from heavenly.opalg import op_equal

TOY = """
system toy
  params k1 k2
  bind k2 = k1 + 1
  nonzero k1
  constraint k2 - k1 - 1
  func f(w)
  let q = v[1] * f(u[])
  op A = mul(u[1]) . D2 - mul(u[2]) . D1
  invertible A skew
  opmat M = [[A, mul(0)], [mul(0), A]]
  opmat MM = compose M . M
  symmetry S1
    slot z1 = 1
    char u = -u[1]
    char v = -v[1]
  end
  density H1
    expr = u[1] * v[]
    pair S1
  end
  density H2
    bind k1 = 3
    expr = k1 * u[2]
  end
"""

ROOTY = """
system rooty
  params a b
  root s = a*a - 4*b solving b = (a*a - s*s)/4
  let q = v[1]
"""


def toy() -> Catalog:
    return load_catalog(TOY)


def test_loads_params_binds_lets():
    sys = toy().view("toy")
    assert sys.params == ("k1", "k2")
    assert sys.bound == {"k2": True}
    assert sys.eval_text("k2 - k1 - 1").as_local().is_zero()
    assert sys.q == sys.lets["q"]


def test_symmetry_characteristics_derived_from_slots():
    sys = toy().view("toy")
    s1 = sys.symmetries["S1"]
    assert s1.char_u == -jet("u", (1,))
    assert s1.char_v == -jet("v", (1,))
    assert s1.slots["z1"] == rat(1)


def test_opmat_compose_matches_manual_composition():
    sys = toy().view("toy")
    a = sys.ops["A"]
    mm = sys.opmats["MM"]
    assert op_equal(mm.e[0][0], a.compose(a), sys.reg)
    assert op_equal(mm.e[0][1], a.compose(a).scale(rat(0)), sys.reg)


def test_density_binds_are_kept_raw():
    sys = toy().view("toy")
    h2 = sys.densities["H2"]
    assert len(h2.binds) == 1 and h2.binds[0][0] == "k1"


def test_view_with_binds_pins_parameters():
    cat = toy()
    pinned = cat.view("toy", binds=(("k1", D.parse_expr("3")),))
    assert pinned.eval_text("k1 - 3").as_local().is_zero()
    assert pinned.eval_text("k2 - 4").as_local().is_zero()
    # the unpinned view is untouched
    assert not cat.view("toy").eval_text("k1 - 3").as_local().is_zero()


def test_view_cache_returns_same_object():
    cat = toy()
    assert cat.view("toy", seed=2) is cat.view("toy", seed=2)
    assert cat.view("toy", seed=2) is not cat.view("toy", seed=3)


def test_instantiation_is_deterministic_across_loads():
    a = load_catalog(TOY).view("toy", seed=5)
    b = load_catalog(TOY).view("toy", seed=5)
    assert a.eval_text("k1").as_local() == b.eval_text("k1").as_local()
    assert a.eval_text("f(u[])").as_local() == b.eval_text("f(u[])").as_local()
    c = load_catalog(TOY).view("toy", seed=6)
    assert (
        a.eval_text("k1").as_local() != c.eval_text("k1").as_local()
        or a.eval_text("f(u[])").as_local() != c.eval_text("f(u[])").as_local()
    )


def test_instantiated_atoms_obey_chain_rule():
    sys = toy().view("toy", seed=1)
    got = sys.eval_text("D2[f(u[])]").as_local()
    want = sys.eval_text("f'(u[]) * u[2]").as_local()
    assert got == want


def test_root_registers_square_rule_opaque():
    sys = load_catalog(ROOTY).view("rooty")
    assert sys.eval_text("s*s - (a*a - 4*b)").as_local().is_zero()


def test_root_solves_parameter_instantiated():
    sys = load_catalog(ROOTY).view("rooty", seed=7)
    assert sys.eval_text("s*s - (a*a - 4*b)").as_local().is_zero()


def test_root_inconsistent_solution_rejected():
    bad = ROOTY.replace("(a*a - s*s)/4", "a - s")
    with pytest.raises(ConstraintViolation):
        load_catalog(bad)


def test_constraint_violation():
    bad = TOY.replace("constraint k2 - k1 - 1", "constraint k2 - k1")
    with pytest.raises(ConstraintViolation):
        load_catalog(bad)


def test_nonzero_must_not_vanish_identically():
    bad = TOY.replace("nonzero k1", "nonzero k1 - k1")
    with pytest.raises(ConstraintViolation):
        load_catalog(bad)


def test_dangling_name():
    bad = TOY.replace("let q = v[1] * f(u[])", "let q = v[1] * nosuch")
    with pytest.raises(DanglingReference):
        load_catalog(bad)


def test_undeclared_function_call():
    bad = TOY.replace("func f(w)\n", "")
    with pytest.raises(DanglingReference):
        load_catalog(bad)


def test_invertible_requires_known_op():
    bad = TOY.replace("invertible A skew", "invertible B skew")
    with pytest.raises(DanglingReference):
        load_catalog(bad)


def test_symmetry_requires_q():
    bad = TOY.replace("let q = v[1] * f(u[])", "let p = v[1] * f(u[])")
    with pytest.raises(CatalogError):
        load_catalog(bad)


def test_symmetry_slots_must_be_point_functions():
    bad = TOY.replace("slot z1 = 1", "slot z1 = u[1]")
    with pytest.raises(CatalogError):
        load_catalog(bad)


def test_symmetry_char_mismatch():
    bad = TOY.replace("char u = -u[1]", "char u = u[1]")
    with pytest.raises(CatalogError):
        load_catalog(bad)


def test_density_pair_must_exist():
    bad = TOY.replace("pair S1", "pair S9")
    with pytest.raises(DanglingReference):
        load_catalog(bad)


def test_duplicate_system_rejected():
    with pytest.raises(CatalogError):
        load_catalog(TOY + TOY)


def test_unknown_system_view():
    with pytest.raises(DanglingReference):
        toy().view("nope")


def test_empty_catalog():
    cat = load_catalog("")
    assert cat.names == ()
