import math
from fractions import Fraction

import mpmath
import pytest

from helpers import jpoly, problem, reduction, rf
from landaunf.adapted import (
    AdaptError,
    adapt,
    classify_resonances,
    diagonal_solve,
    identity_adapt,
    numeric_jordan,
)
from landaunf.homological import apply_L, quadratic_data, solve_homological


def ex2_basis():
    bp = problem("ex2")
    data = quadratic_data(bp.potential, bp.mib)
    return bp, data, adapt(data.Q, bp.adapt_matrix(), bp.field, bp.mib)


def test_example2_conjugation_is_diagonal():
    bp, data, basis = ex2_basis()
    g, b = rf(bp, "(c1 + c2)/c3"), rf(bp, "b")
    two_c3 = rf(bp, "2*c3")
    want = [two_c3 * g, two_c3 * (g - b), two_c3 * (g + b)]
    zero = bp.field.zero
    assert basis.P == [[want[i] if i == j else zero for j in range(3)] for i in range(3)]
    assert basis.semisimple
    assert basis.eigenvalues == want


def test_example2_eigen_action():
    bp, data, basis = ex2_basis()
    zs = basis.z_definitions()
    for lam, z in zip(basis.eigenvalues, zs):
        assert apply_L(z, data) == z.scale(lam)
    # products carry the summed weight
    for i in range(3):
        for j in range(i, 3):
            prod = bp.mib.mul(zs[i], zs[j])
            lam = basis.eigenvalues[i] + basis.eigenvalues[j]
            assert apply_L(prod, data) == prod.scale(lam)


def test_example2_change_of_basis_round_trip():
    bp, data, basis = ex2_basis()
    q = jpoly(bp, "k1*J1^2 + k3*J3^2 + k4*J1*J3 + J2*J3")
    assert basis.to_j(basis.to_z(q)) == bp.mib.normalize(q)


def test_diagonal_solve_matches_the_direct_solve():
    bp, data, basis = ex2_basis()
    step = next(s for s in reduction("ex2").steps if s.order == 2)
    psi = step.homological.psi
    sol = diagonal_solve(psi, basis)
    assert sol.retained.is_zero()
    assert apply_L(sol.chi_j, data) == psi
    # the target-free solve on the same input must give the same generator
    h = solve_homological(psi, data, bp.mib, 2)
    assert h.chi == sol.chi_j


def test_numeric_eigenvalues_example2():
    bp = problem("ex2")
    data = quadratic_data(bp.potential, bp.mib)
    params = {"c1": Fraction(1), "c2": Fraction(2), "c3": Fraction(1)}
    with pytest.raises(AdaptError):
        identity_adapt(data)
    basis = numeric_jordan(data.Q, params, bp.field, bp.mib)
    assert not basis.exact
    got = sorted(float(mpmath.re(e)) for e in basis.eigenvalues)
    want = sorted([6.0, 6 - 2 * math.sqrt(2), 6 + 2 * math.sqrt(2)])
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-12
    assert all(abs(float(mpmath.im(e))) < 1e-12 for e in basis.eigenvalues)


def test_numeric_path_is_exact_when_rational():
    bp = problem("ex2")
    data = quadratic_data(bp.potential, bp.mib)
    basis = numeric_jordan(data.Q, {"c1": 1, "c2": 1, "c3": 0}, bp.field, bp.mib)
    assert basis.exact
    assert sorted(int(str(e)) for e in basis.eigenvalues) == [4, 4, 4]


def test_non_jordan_matrix_is_rejected():
    bp = problem("ex2")
    data = quadratic_data(bp.potential, bp.mib)
    f = bp.field
    with pytest.raises(AdaptError):
        adapt(data.Q, [[f.one, f.one, f.zero], [f.zero, f.one, f.zero], [f.zero, f.zero, f.one]], f, bp.mib)


def test_singular_matrix_is_rejected():
    bp = problem("ex1")
    data = quadratic_data(bp.potential, bp.mib)
    f = bp.field
    with pytest.raises(AdaptError):
        adapt(data.Q, [[f.one, f.one], [f.one, f.one]], f, bp.mib)


def table(name, degree):
    bp = problem(name)
    data = quadratic_data(bp.potential, bp.mib)
    basis = identity_adapt(data)
    return bp, {rc.label: rc for rc in classify_resonances(basis, bp.mib, degree)}


def test_example1_resonances():
    bp, t4 = table("ex1", 4)
    assert t4["J1*J2"].verdict == "conditional"
    assert [str(f) for f in t4["J1*J2"].factors] == ["c1 + c2"]
    assert t4["J1^2"].verdict == "nonresonant"
    assert t4["J2^2"].verdict == "nonresonant"


@pytest.mark.parametrize("name,top", [("ex3", 6), ("ex5", 12), ("ex6", 12)])
def test_scalar_resonances(name, top):
    bp = problem(name)
    for d in range(3, top + 1):
        _, t = table(name, d)
        for label, rc in t.items():
            if rc.k[0] == 0:
                assert rc.verdict == "resonant", label
            else:
                assert rc.verdict == "nonresonant", label
                assert rc.weight == rf(bp, f"4*c1*{rc.k[0]}")


def test_example5_resonant_monomials_match_the_reduction():
    bp = problem("ex5")
    kept = set()
    for d in range(4, 12, 2):
        _, t = table("ex5", d)
        kept |= {lab for lab, rc in t.items() if rc.verdict == "resonant"}
    got = {str(bp.mib.jring.monomial(e)) for e in reduction("ex5").reduced.terms if bp.mib.jring.wdeg(e) < 12}
    assert got - {"J1"} == kept
