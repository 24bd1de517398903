import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2kernels.errors import DomainError
from g2kernels.invariants import (
    ModuleSpec,
    audit,
    classify,
    closed_pair,
    cross_family_quadratic,
    diagonal_value,
    format_module,
    ke_test,
    parse_module,
    signature,
)
from g2kernels.kernels import DetCurvature, eval_kernel
from g2kernels.automorphisms import symmetrize

W = "WeightedPower"
D = "DetCurvature"


def test_parse_and_format():
    m = parse_module("w:l=2,nu=1")
    assert m == ModuleSpec(W, 2.0, 1.0)
    assert parse_module(format_module(m)) == m
    assert parse_module("d:l=1") == ModuleSpec(D, 1.0, 0.0)
    assert parse_module("DetCurvature:lambda=1.5,nu=2") == ModuleSpec(D, 1.5, 2.0)


@pytest.mark.parametrize("bad", ["x:l=1", "w:nu=1", "w:l=1,k=2", "w:l", "w:l=-1", "w:l=1,nu=0", "d:l=1,nu=-1"])
def test_parse_rejects(bad):
    with pytest.raises(DomainError):
        parse_module(bad)


def test_closed_pairs():
    assert closed_pair(ModuleSpec(W, 2.0, 1.0)) == (3.0, 2.0)
    assert closed_pair(ModuleSpec(W, 1.0, 2.0)) == (4.0, 2.0)
    assert closed_pair(ModuleSpec(D, 1.0, 0.0)) == (4.0, 4.0)


def test_classify_example_witness():
    res = classify(parse_module("w:l=2,nu=1"), parse_module("w:l=1,nu=2"))
    assert res.verdict == "inequivalent"
    assert res.witness == "nu(lambda+1): 3 vs 4"


def test_classify_second_component_witness():
    # equal nu(lambda+1) = 4, different nu*lambda
    res = classify(ModuleSpec(W, 1.0, 2.0), ModuleSpec(W, 3.0, 1.0))
    assert res.verdict == "inequivalent"
    assert res.witness.startswith("nu*lambda")


def test_classify_cross_family():
    res = classify(ModuleSpec(W, 1.0, 4.0), ModuleSpec(D, 1.0, 0.0))
    assert res.verdict == "inequivalent"
    assert "quadratic" in res.witness


GRID = [0.25 * k for k in range(1, 21)]


def test_grid_injectivity():
    for fam in (W, D):
        nus = [0.0] + GRID[:-1] if fam == D else GRID
        mods = [ModuleSpec(fam, lam, nu) for lam in GRID for nu in nus]
        pairs = {closed_pair(m): m for m in mods}
        assert len(pairs) == len(mods)


def test_classify_grid_iff():
    mods = [ModuleSpec(W, lam, nu) for lam in GRID[::3] for nu in GRID[::3]]
    for a, b in itertools.product(mods, repeat=2):
        same = (a.lam, a.nu) == (b.lam, b.nu)
        assert (classify(a, b).verdict == "equivalent") == same


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from([W, D]),
    st.floats(0.1, 5),
    st.floats(0.1, 5),
    st.floats(0.1, 5),
    st.floats(0.1, 5),
)
def test_classify_symmetric_reflexive(fam, l1, n1, l2, n2):
    a, b = ModuleSpec(fam, l1, n1), ModuleSpec(fam, l2, n2)
    assert classify(a, a).verdict == "equivalent"
    assert classify(a, b).verdict == classify(b, a).verdict


def test_quadratic_examples():
    q = cross_family_quadratic(1.0)
    assert q.coefficients == (1.0, 1.0, 58.0)
    assert q.discriminant == -231.0
    assert not q.has_positive_root
    assert cross_family_quadratic(0.5).discriminant == -84.0
    q0 = cross_family_quadratic(0.0)
    assert q0.roots == (-7 + 0j,)
    assert not q0.has_positive_root
    with pytest.raises(DomainError):
        cross_family_quadratic(-1.0)


def test_quadratic_discriminant_formula():
    for nu in np.linspace(0, 10, 37):
        a, b, c = cross_family_quadratic(nu).coefficients
        assert cross_family_quadratic(nu).discriminant == pytest.approx(b * b - 4 * a * c, abs=1e-9)


def test_quadratic_no_positive_roots():
    assert not any(cross_family_quadratic(nu).has_positive_root for nu in np.linspace(0, 10, 200))


@pytest.mark.parametrize("lam,nu", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)])
def test_weighted_power_exponent(lam, nu):
    s = signature(ModuleSpec(W, lam, nu))
    assert s.numeric_diagonal_exponent == pytest.approx(2 * nu * (lam + 1), abs=1e-3)
    assert s.reference_exponents["closed"] == 2 * nu * (lam + 1)


def test_det_family_exponent():
    s = signature(ModuleSpec(D, 1.0, 0.0))
    assert s.reference_exponents == {"closed": 22.0, "published": 24.0}
    assert s.numeric_diagonal_exponent == pytest.approx(22.0, abs=0.05)


def test_det_diagonal_value_matches_kernel():
    z = 0.4 + 0.2j
    u = symmetrize(z, z)
    direct = eval_kernel(DetCurvature(1.0, 0.5), u, u).real
    assert diagonal_value(ModuleSpec(D, 1.0, 0.5), z) == pytest.approx(direct, rel=1e-8)


def test_det_diagonal_at_origin():
    # B^(1)(0, 0) = 1/2 and det curv = 2
    assert diagonal_value(ModuleSpec(D, 1.0, 0.0), 0.0) == pytest.approx(2 * 0.5 ** 4, rel=1e-13)


PTS = [(0.2, 0.0), (0.6, 0.0)]


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_ke_not_einstein(lam):
    rep = ke_test(lam, PTS)
    assert rep.verdict == "not_einstein"
    assert rep.max_ratio_spread > 0.01


@pytest.mark.parametrize("c", [1.0, 2.5])
def test_ke_control(c):
    rep = ke_test(1.0, PTS + [(0.1 + 0.2j, 0.05j)], control_exponent=c)
    assert rep.verdict == "einstein_consistent"
    assert rep.max_ratio_spread <= 1e-6
    for _, rho in rep.c_estimates:
        assert np.allclose(rho, c, rtol=1e-6)


def test_ke_needs_two_points():
    with pytest.raises(DomainError):
        ke_test(1.0, PTS[:1])


def _rows(lam, grid, nu=0.0):
    return {(r.formula, r.r): r for r in audit(lam, grid, nu)}


def test_audit_origin_lambda1():
    rows = _rows(1.0, [0.0])
    a = rows[("detcurv_as_stated", 0.0)]
    assert a.paper_value == pytest.approx(1.0, rel=1e-6)
    assert a.oracle_value == pytest.approx(2.0, rel=1e-14)
    assert a.relative_gap == pytest.approx(0.5, rel=1e-5)
    assert rows[("detcurv_statement", 0.0)].paper_value == pytest.approx(3.0, rel=1e-6)
    rd = rows[("resdetcurv", 0.0)]
    assert rd.paper_value == pytest.approx(3 / 16, rel=1e-14)
    assert rd.oracle_value == pytest.approx(1 / 8, rel=1e-12)
    assert rows[("resBerg", 0.0)].relative_gap < 1e-12


def test_audit_grid():
    grid = [0.0, 0.2, 0.4, 0.6, 0.8]
    rows = audit(1.0, grid)
    for row in rows:
        if row.formula in ("prop_curv", "detcurv_proof", "resBerg", "H_leading"):
            assert row.relative_gap <= 1e-5, row
        if row.formula == "prop_curv":
            assert row.relative_gap <= 1e-10
    assert {r.r for r in rows if r.formula == "prop_curv"} == set(grid[1:])


def test_audit_general_lambda():
    rows = audit(2.0, [0.3])
    gaps = {r.formula: r.relative_gap for r in rows}
    assert gaps["prop_curv"] <= 1e-5
    assert gaps["detcurv_proof"] <= 1e-5
    assert gaps["detcurv_as_stated"] > 1e-2


def test_audit_domain():
    with pytest.raises(DomainError):
        audit(1.0, [0.95])
