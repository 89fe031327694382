import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from helpers import jpoly, problem, reduction, rf, xpoly
from landaunf.orbit import (
    NumericGradient,
    QuadraticRoot,
    Radical,
    SearchConfig,
    critical_points,
    finite_difference_gradient,
    orbit_gradient_system,
    singular_locus,
    transport_critical_points,
    verify_equivalence,
)


def ex1_reduced_x():
    bp = problem("ex1_reduced")
    return bp, bp.mib.expand(bp.potential)


def find(points, target, tol=1e-10):
    return [p for p in points if max(abs(a - b) for a, b in zip(p.x, target)) <= tol]


def test_example1_critical_points():
    bp, pot = ex1_reduced_x()
    pts = critical_points(pot, {"c1": -3, "c2": 1}, mib=bp.mib, group=bp.group, generator_labels=bp.generator_labels)
    xs = sorted(tuple(round(v, 8) for v in p.x) for p in pts)
    assert xs == [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]
    for s in (1, -1):
        (p,) = find(pts, (s, 0.0))
        assert max(abs(a - b) for a, b in zip(sorted(p.hessian_eigenvalues), [8.0, 24.0])) <= 1e-8
        assert p.stability == "minimum"
        assert p.isotropy == ["gy"] and p.stabilizer_order == 2
        assert p.J_values == pytest.approx([1.0, 0.0])
    (o,) = find(pts, (0.0, 0.0))
    assert o.stability == "saddle" and o.stabilizer_order == 4


def test_critical_points_are_deterministic():
    _, pot = ex1_reduced_x()
    a = critical_points(pot, {"c1": -2, "c2": -1})
    b = critical_points(pot, {"c1": -2, "c2": -1})
    assert [p.x for p in a] == [p.x for p in b]


def test_missing_parameter_is_reported():
    _, pot = ex1_reduced_x()
    with pytest.raises(KeyError):
        critical_points(pot, {"c1": -2})


def sampled_pairs(n=20, seed=7):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        c1 = Fraction(rng.randint(-40, 40), 10)
        c2 = Fraction(rng.randint(-40, 40), 10)
        # stay off the region boundaries
        if min(abs(c1), abs(c2), abs(c1 - c2)) >= Fraction(3, 10):
            out.append((c1, c2))
    return out


def expected_verdict(eigs):
    if all(e > 0 for e in eigs):
        return "minimum"
    if all(e < 0 for e in eigs):
        return "maximum"
    return "saddle"


@pytest.mark.parametrize("c1,c2", sampled_pairs())
def test_stability_regions(c1, c2):
    _, pot = ex1_reduced_x()
    pts = critical_points(pot, {"c1": c1, "c2": c2})
    (o,) = find(pts, (0.0, 0.0))
    assert o.stability == expected_verdict([2 * c1, 2 * c2])
    if c1 < 0:
        a = float(-c1 / 3) ** 0.25
        for s in (1, -1):
            (p,) = find(pts, (s * a, 0.0), 1e-9)
            eigs = sorted([float(-8 * c1), float(2 * (c2 - c1))])
            assert p.hessian_eigenvalues == pytest.approx(eigs, abs=1e-8)
            # stable exactly when c2 > c1
            assert p.stability == ("minimum" if c2 > c1 else "saddle")
    else:
        assert not [p for p in pts if abs(p.x[1]) < 1e-12 and abs(p.x[0]) > 1e-6]
    if c2 < 0:
        b = float(-c2 / 3) ** 0.25
        (q,) = find(pts, (0.0, b), 1e-9)
        assert q.stability == ("minimum" if c1 > c2 else "saddle")


def signed_permutation_orders(x, tol=1e-8):
    n = 0
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            y = [signs[i] * x[perm[i]] for i in range(3)]
            if max(abs(a - b) for a, b in zip(y, x)) <= tol * (1 + max(abs(t) for t in x)):
                n += 1
    return n


def test_example5_isotropy_against_brute_force():
    bp = problem("ex5")
    red = reduction("ex5").reduced
    pot = bp.mib.expand(red)
    params = {k: Fraction(0) for k in (f"k{i}" for i in range(1, 22))}
    params.update(c1=Fraction(-1), k2=Fraction(1, 5), k5=Fraction(-1, 3), k9=Fraction(1, 10), k20=Fraction(1, 10), k21=Fraction(1, 10))
    pts = critical_points(pot, params, SearchConfig(grid=7, box=1.5), mib=bp.mib, group=bp.group)
    assert len(pts) > 1
    orders = {p.stabilizer_order for p in pts}
    assert 48 in orders  # the origin
    for p in pts:
        assert p.stabilizer_order == signed_permutation_orders(p.x)


def test_orbit_gradient_example5():
    bp = problem("ex5")
    sysm = orbit_gradient_system(reduction("ex5").reduced)
    sol = sysm.solution_for("J1")
    (branch,) = sol.branches
    assert isinstance(branch, Radical) and branch.n == 5
    assert branch.base == rf(bp, "-c1/6")
    assert str(branch) == "(-c1/6)^(1/5)"
    assert {str(p.ring.names[i]) for p in sysm.unsolved for e in p.terms for i, k in enumerate(e) if k} == {"J2", "J3"}


def test_orbit_gradient_example3_linear_subsystem():
    bp = problem("ex3")
    # syzygy-free form used for the orbit-space analysis
    psi = jpoly(bp, "c1*J1 + k1*J2 + k2*J3 + k3*J2^2 + k4*J3^2 + k5*J2*J3 + J1^3")
    sysm = orbit_gradient_system(psi)
    j1 = sysm.solution_for("J1").branches
    assert all(isinstance(b, Radical) and b.n == 2 and b.base == rf(bp, "-c1/3") for b in j1)
    assert sorted(b.sign for b in j1) == [-1, 1]
    den = "(k5^2 - 4*k3*k4)"
    assert sysm.solution_for("J2").branches == [rf(bp, f"(2*k1*k4 - k2*k5)/{den}")]
    assert sysm.solution_for("J3").branches == [rf(bp, f"(2*k2*k3 - k1*k5)/{den}")]


def test_orbit_gradient_quadratic_and_inconsistent():
    bp = problem("ex1")
    sysm = orbit_gradient_system(jpoly(bp, "c1*J1 + k1*J2 + k2*J2^2 + k3*J2^3"))
    assert sysm.inconsistent == [rf(bp, "c1")]
    roots = sysm.solution_for("J2").branches
    assert all(isinstance(r, QuadraticRoot) for r in roots)
    vals = {"k1": -1, "k2": 0, "k3": Fraction(1, 3)}
    assert sorted(r.evaluate(vals) for r in roots) == pytest.approx([-1.0, 1.0])


def test_singular_locus_example5():
    bp = problem("ex5")
    loc = singular_locus(bp.mib)
    assert loc.determinant == xpoly(bp, "8*x*y*z*(x^2 - y^2)*(y^2 - z^2)*(x^2 - z^2)")
    content, facs = loc.factorizations[0]
    assert content == 8 and len(facs) == 9 and all(k == 1 for _, k in facs)


def test_singular_locus_small_examples():
    b1 = problem("ex1")
    assert singular_locus(b1.mib).describe() == ["4*x*y"]
    b3 = problem("ex3")
    loc = singular_locus(b3.mib)
    assert len(loc.minors) == 3
    # J1, J2 minor: 2x*(-6xy) - 2y*(3x^2 - 3y^2)
    assert loc.minors[0] == xpoly(b3, "6*y*(y^2 - 3*x^2)")


def gradient_rank(B, pt):
    grads = [[float(inv.definition.derivative(j).evaluate(pt, {})) for j in range(3)] for inv in B.invariants]
    return np.linalg.matrix_rank(np.array(grads), tol=1e-9)


def test_rank_drops_exactly_on_the_singular_set():
    B = problem("ex5").mib
    rng = random.Random(3)
    for _ in range(10):
        a, b = rng.uniform(0.2, 1), rng.uniform(0.2, 1)
        assert gradient_rank(B, [a, a, b]) < 3
        assert gradient_rank(B, [a, b, 0.0]) < 3
        c = rng.uniform(1.1, 1.5)
        assert gradient_rank(B, [a * 0.5, b * 0.9 + 0.05, c]) == 3


@pytest.mark.parametrize("name", ["ex1", "ex3"])
def test_gradients_match_finite_differences(name):
    bp = problem(name)
    pot = bp.mib.expand(bp.potential)
    rng = np.random.default_rng(0)
    vals = {n: Fraction(rng.integers(-9, 10), 7) for n in pot.free_symbols()}
    ng = NumericGradient(pot, vals)
    for _ in range(10):
        x = rng.uniform(-1, 1, size=bp.xring.nvars)
        exact = ng.gradient(x[None, :])[0]
        fd = finite_difference_gradient(pot, vals, x)
        assert np.abs(exact - fd).max() <= 1e-6


def test_verify_detects_a_wrong_reduced_potential():
    r = reduction("ex1")
    B = r.problem.mib
    bp = problem("ex1")
    wrong = B.expand(r.reduced + jpoly(bp, "J1^2"), r.problem.degree)
    rep = verify_equivalence(r.original_x(), wrong, r.inverse_map, trials=20, ledger=list(r.ledger), quadratic=["c1", "c2"])
    assert not rep.symbolic_ok and not rep.numeric_ok


def test_verify_example1():
    r = reduction("ex1")
    rep = verify_equivalence(r.original_x(), r.reduced_x(), r.inverse_map, ledger=list(r.ledger), quadratic=["c1", "c2"])
    assert rep.ok and rep.numeric_trials == 100 and rep.numeric_worst_ratio <= 1


def test_transport_is_exact_at_the_normal_form():
    bp = problem("ex1")
    r = reduction("ex1")
    params = {n: Fraction(0) for n in ("k1", "k2", "k3")}
    params.update(c1=Fraction(-3), c2=Fraction(1), k4=Fraction(1), k5=Fraction(3), k6=Fraction(3), k7=Fraction(1))
    out = transport_critical_points(r.original_x(), r.reduced_x(), r.inverse_map, params)
    assert len(out) == 3
    for t in out:
        assert t["residual"] <= 1e-8
        assert t["displacement"] <= 1e-12


def test_transport_polish_example1():
    bp = problem("ex1")
    r = reduction("ex1")
    params = bp.numeric_params({})
    out = transport_critical_points(r.original_x(), r.reduced_x(), r.inverse_map, params)
    assert len(out) == 3
    for t in out:
        assert t["polished_residual"] <= 1e-8
        # truncation error only moves the point a little
        assert t["displacement"] <= 0.1
    mins = [t for t in out if t["stability"] == "minimum"]
    assert len(mins) == 2
    assert math.isclose(abs(mins[0]["polished"][0]), abs(mins[1]["polished"][0]), rel_tol=1e-9)
