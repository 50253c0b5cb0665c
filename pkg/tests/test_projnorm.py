from fractions import Fraction

import mpmath
import pytest
import sympy
from mpmath import mp

from specnorm.numerics import PrecisionPolicy, agreement_digits
from specnorm.projnorm import (
    UnsupportedParity,
    applicable_upper_bound,
    bilinear_norm,
    cross_moments,
    lower_bound,
    norm_sweep,
    norm_value,
    projection_norm,
    quadrature_norm_oracle,
    upper_bound_hermite_even,
    upper_bound_laguerre,
)
from specnorm.weights import Angle, GammaBeta, PolyExp, SectorViolation, hermite, laguerre

POLICY = PrecisionPolicy(target_digits=25)


def pi_angle(x):
    return Angle(Fraction(x), pi_units=True)


def test_hermite_n2_closed_form_symbolic():
    # |p_2(e^{i t} x)|^2 e^{-x^2 cos 2t} integrated over the real line
    x, t = sympy.symbols("x t", real=True)
    c = sympy.symbols("c", positive=True)
    z2 = sympy.exp(2 * sympy.I * t)
    p2 = (4 * z2 * x**2 - 2) / (2 * sympy.sqrt(2) * sympy.pi ** sympy.Rational(1, 4))
    mod2 = sympy.expand(p2 * sympy.conjugate(p2))
    mod2 = sympy.simplify(mod2.rewrite(sympy.cos).subs(sympy.cos(2 * t), c))
    integral = sympy.integrate(mod2 * sympy.exp(-c * x**2), (x, -sympy.oo, sympy.oo))
    closed = (3 * c ** sympy.Rational(-5, 2) - c ** sympy.Rational(-1, 2)) / 2
    assert sympy.simplify(integral - closed) == 0


@pytest.mark.parametrize("spec", [hermite(), laguerre(), GammaBeta(Fraction(1, 2), 3, 1), PolyExp((1, 0, 0, 1))])
@pytest.mark.parametrize("n", [0, 3, 8])
def test_identity_at_theta_zero(spec, n):
    cv = norm_value(spec, n, 0, POLICY)
    with mp.workprec(cv.precision_used):
        assert agreement_digits(cv.value, 1, 60) >= 25


def test_closed_forms():
    with mp.workdps(60):
        for x in ("0.05", "0.15"):
            a = pi_angle(x)
            c = mpmath.cos(2 * a.radians())
            assert agreement_digits(norm_value(hermite(), 0, a, POLICY).value, c ** -0.5, 60) >= 25
            h2 = norm_value(hermite(), 2, a, POLICY).value
            assert agreement_digits(h2, (3 * c ** -2.5 - c ** -0.5) / 2, 60) >= 25
        th = Angle(Fraction(4, 5))
        assert agreement_digits(norm_value(laguerre(), 0, th, POLICY).value, 1 / mpmath.cos(th.radians()), 60) >= 25


def test_lower_bound_is_sharp_at_n0():
    for spec, theta in ((hermite(), pi_angle("0.1")), (laguerre(), Angle(Fraction(1)))):
        r = projection_norm(spec, 0, theta, POLICY)
        with mp.workprec(r.norm.precision_used):
            assert agreement_digits(r.value, r.lower, 60) >= 25


def test_cross_moments_table():
    with mp.workdps(40):
        tab = cross_moments(laguerre(), Angle(Fraction(1, 2)), 6)
        sec = 1 / mpmath.cos(mpmath.mpf(1) / 2)
        for k, m in enumerate(tab.entries):
            assert agreement_digits(m, mpmath.factorial(k) * sec ** (k + 1), 40) >= 35
    certified = cross_moments(hermite(), pi_angle("0.1"), 10, POLICY)
    assert certified.entries[1] == 0
    assert all(m > 0 for m in certified.entries[::2])
    with pytest.raises(SectorViolation):
        cross_moments(laguerre(), pi_angle("0.5"), 2)


def test_bilinear_norm_tracks_magnitude():
    with mp.workdps(30):
        s = bilinear_norm([1, -1], [1, 1, 1], mp.zero)
        assert s.value == 0 and s.magnitude == 4


def test_modulus_invariance():
    for spec, theta in ((hermite(), pi_angle("0.1")), (laguerre(), Angle(Fraction(2, 5))),
                        (GammaBeta(Fraction(1, 2), 3, 1), pi_angle("0.1"))):
        for n in (0, 4, 10):
            v = norm_value(spec, n, theta, POLICY)
            for r in (Fraction(1, 2), 1, 3):
                q = quadrature_norm_oracle(spec, n, theta, POLICY, modulus=r)
                with mp.workdps(60):
                    assert agreement_digits(v.value, q.value, 60) >= 20


def test_oracle_examples():
    q = quadrature_norm_oracle(hermite(), 2, pi_angle("0.1"), POLICY)
    with mp.workdps(60):
        c = mpmath.cos(mp.pi / 5)
        assert agreement_digits(q.value, (3 * c ** -2.5 - c ** -0.5) / 2, 60) >= 20
    theta = Angle(Fraction(2, 5))
    q = quadrature_norm_oracle(laguerre(), 5, theta, POLICY)
    v = norm_value(laguerre(), 5, theta, POLICY)
    with mp.workdps(60):
        assert agreement_digits(q.value, v.value, 60) >= 20


def test_conjugation_symmetry():
    for spec, theta in ((hermite(), pi_angle("0.12")), (PolyExp((1, 0, 0, 1)), pi_angle("0.05"))):
        for n in (1, 6):
            a = norm_value(spec, n, theta, POLICY)
            b = norm_value(spec, n, -theta, POLICY)
            with mp.workdps(60):
                assert agreement_digits(a.value, b.value, 60) >= min(a.certified_digits, b.certified_digits)


def test_norm_at_least_one_and_monotone_on_grid():
    # comparisons allow the certified relative slack
    for spec, top in ((hermite(), Fraction(24, 100)), (laguerre(), Fraction(48, 100))):
        for n in (1, 5, 12):
            cvs = [norm_value(spec, n, pi_angle(top * k / 12), POLICY) for k in range(13)]
            with mp.workdps(60):
                slack = [1 - mpmath.mpf(10) ** -cv.certified_digits for cv in cvs]
                assert all(cv.value >= sl for cv, sl in zip(cvs, slack))
                assert all(cv.value > 1 for cv in cvs[1:])
                assert all(a.value * sl <= b.value for a, b, sl in zip(cvs, cvs[1:], slack))


def test_sandwich_gammabeta_and_polyexp_lower():
    for spec, theta in ((GammaBeta(Fraction(1, 2), 3, 1), pi_angle("0.12")),
                        (PolyExp((1, 0, 0, 1)), pi_angle(Fraction(1, 16)))):
        for n in (0, 5, 15):
            r = projection_norm(spec, n, theta, POLICY)
            assert r.lower_ok
            assert r.upper is None and r.upper_ok is None


def test_hermite_odd_has_no_upper_bound():
    r = projection_norm(hermite(), 7, pi_angle("0.1"), POLICY)
    assert r.upper is None and r.upper_ok is None and r.lower_ok
    with pytest.raises(UnsupportedParity):
        upper_bound_hermite_even(pi_angle("0.1"), 7)


def test_bound_examples():
    with mp.workdps(40):
        assert upper_bound_laguerre(0, 0) == 4
        third = pi_angle(Fraction(1, 3))
        for n in (0, 3):
            ref = mpmath.mpf(2) ** (2 * n + 1) * mpmath.mpf(2) ** (4 * n + 2)
            assert agreement_digits(upper_bound_laguerre(third, n), ref, 40) >= 35
        assert agreement_digits(upper_bound_hermite_even(0, 0), 4 * mp.pi, 40) >= 39
        assert lower_bound(hermite(), 0, 17) == 1
        a = pi_angle("0.1")
        sec = 1 / mpmath.cos(2 * a.radians())
        assert mpmath.nstr(sec, 4) == "1.236"
        assert agreement_digits(lower_bound(hermite(), a, 9), sec ** 9.5, 40) >= 35
        lag = Angle(Fraction(3, 10))
        assert agreement_digits(lower_bound(laguerre(), lag, 4), (1 / mpmath.cos(lag.radians())) ** 9, 40) >= 35
        assert applicable_upper_bound(PolyExp((1, 1)), pi_angle("0.1"), 4) is None
    with pytest.raises(SectorViolation):
        upper_bound_laguerre(pi_angle("0.5"), 1)


def test_upper_bound_per_index_limit():
    with mp.workdps(40):
        a = pi_angle("0.1")
        target = mpmath.log(4 / mpmath.cos(2 * a.radians()))
        m = 20000
        rate = mpmath.log(upper_bound_hermite_even(a, m)) / m
        assert abs(rate - target) < mpmath.mpf("1e-3")


def test_sandwich_at_large_degree():
    r = projection_norm(hermite(), 200, pi_angle("0.2"), POLICY)
    assert r.lower_ok and r.upper_ok
    r = projection_norm(laguerre(), 10, Angle(Fraction(3, 10)), POLICY)
    assert r.lower_ok and r.upper_ok


def test_sweep_matches_single_calls_and_parallel():
    ns = [0, 2, 4, 6]
    serial = norm_sweep(hermite(), ns, pi_angle("0.1"), POLICY)
    parallel = norm_sweep(hermite(), ns, pi_angle("0.1"), POLICY, workers=2)
    assert [r.n for r in serial] == ns
    assert serial == parallel


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        norm_value(hermite(), -1, 0)
