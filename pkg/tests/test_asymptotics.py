"""Branch constructors, model eigenvalues, and corner corrections."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from truncspec.airy import ai_zero, model_nu
from truncspec.asymptotics import (
    branch_1d,
    branch_1d_perturbed,
    branch_cone,
    branch_pt2,
    branch_radial,
    branch_strong_coupling,
    corner_window_expansion,
    first_correction,
    model_nu_kappa,
)
from truncspec.expr import parse, to_string

NU1 = model_nu(1, math.pi / 2).value


def test_decomposition_is_exact_by_construction():
    """base_leading must equal scale*nu_eff + shift with no float slack."""
    branches = [
        branch_1d(parse("x^3"), 1, orientation="left"),
        branch_1d(parse("x^3"), 2, orientation="right"),
        branch_1d(parse("x"), 1, orientation="right", bc="neumann"),
        branch_radial(parse("r^2", variable="r"), 3, 1, 1),
        branch_strong_coupling(3.15, NU1, lambda g: 1j * g, conjugated=True),
    ]
    for br in branches:
        for p in (2.0, 5.0, 17.0, 60.0):
            assert br.base_leading(p) == br.scale(p) * br.nu_eff + br.shift(p)


def test_branch_1d_values():
    br = branch_1d(parse("x^3"), 1, orientation="left")
    # U'(5)^{2/3} nu_1 - i*125 with U'(5) = 75
    want = 75.0 ** (2.0 / 3.0) * NU1 - 125j
    assert br.leading(5.0) == pytest.approx(20.790996483607366 - 88.9889377504062j, rel=1e-14)
    assert br.leading(5.0) == pytest.approx(want, rel=1e-14)
    assert br.remainder_exponent == pytest.approx(-5.0 / 3.0)
    assert br.provenance == "1d-corner-left"
    assert not br.conjugated

    right = branch_1d(parse("x^3"), 1, orientation="right")
    assert right.conjugated
    assert right.leading(5.0) == pytest.approx(75.0 ** (2.0 / 3.0) * NU1.conjugate() + 125j, rel=1e-14)


def test_branch_1d_remainder_exponents():
    assert branch_1d(parse("x"), 1).remainder_exponent == pytest.approx(-1.0)
    assert branch_1d(parse("2*x"), 1).remainder_exponent == pytest.approx(-1.0)
    assert branch_1d(parse("abs(x)^1.5"), 1).remainder_exponent == pytest.approx(-3.5 / 3.0)
    assert math.isnan(branch_1d(parse("exp(x)"), 1).remainder_exponent)


def test_branch_1d_rejects_bad_profiles():
    br = branch_1d(parse("x^2 - 100"), 1)  # U' fine, but try a negative-slope point
    with pytest.raises(ValueError):
        branch_1d(parse("0 - x"), 1).scale(2.0)  # U'(s) < 0
    with pytest.raises(ValueError):
        branch_1d(parse("i*x"), 1).scale(2.0)  # U'(s) not real
    with pytest.raises(ValueError):
        branch_1d(parse("x^3"), 1, orientation="up")
    assert br.scale(2.0) == pytest.approx(4.0 ** (2.0 / 3.0))


def test_conjugate_pair_mirrors_exactly():
    br = branch_1d(parse("x^3"), 1, orientation="left")
    mirror = br.conjugate_pair()
    for s in (2.0, 3.5, 7.0):
        assert mirror.leading(s) == br.leading(s).conjugate()
    assert mirror.conjugated != br.conjugated


def test_branch_1d_perturbed_shift():
    U, U1 = parse("x^3"), parse("x")
    br = branch_1d_perturbed(U, U1, 1, orientation="left")
    plain = branch_1d(U, 1, orientation="left")
    for s in (3.0, 6.0):
        assert br.leading(s) == pytest.approx(plain.leading(s) - s, rel=1e-14)
    assert br.provenance == "1d-corner-left-perturbed"


def test_branch_1d_perturbed_warns_on_non_decaying_ratio():
    with pytest.warns(UserWarning):
        branch_1d_perturbed(parse("x"), parse("x^2"), 1)  # U1' grows against U'


def test_branch_radial_value():
    # d=3, l=1, U=r^2, s=5: (2s)^{2/3} conj(nu_1) + i s^2 - 2/s^2
    br = branch_radial(parse("r^2", variable="r"), 3, 1, 1)
    got = br.leading(5.0)
    want = 10.0 ** (2.0 / 3.0) * NU1.conjugate() + 25j - 2.0 / 25.0
    assert got == pytest.approx(want, rel=1e-14)
    assert got == pytest.approx(5.346266624088674 + 15.601430511663171j, rel=1e-13)
    assert br.remainder_exponent == pytest.approx(-4.0 / 3.0)
    assert br.provenance == "radial-d3-l1"
    with pytest.raises(ValueError):
        branch_radial(parse("r^2", variable="r"), 1, 0, 1)


def test_branch_cone_reduces_to_1d():
    """The cone constructor fed 1D corner data reproduces branch_1d exactly."""
    U = parse("x^3")
    left = branch_1d(U, 1, orientation="left")
    cone = branch_cone(
        q_at_corner=lambda s: -1j * s**3,
        grad_at_corner=lambda s: 3.0 * s**2,
        nu_k=NU1,
        k=1,
    )
    for s in (2.0, 4.0, 9.0):
        assert cone.leading(s) == left.leading(s)
    assert math.isnan(cone.remainder_exponent)


def test_strong_coupling_scale_and_remainders():
    br = branch_strong_coupling(3.15, NU1, lambda g: 1j * g, conjugated=True, h0_beta_order=3.15)
    g = 100.0
    assert br.scale(g) == pytest.approx(g ** (2.0 / 5.15), rel=1e-14)
    assert br.leading(g) == pytest.approx(g ** (2.0 / 5.15) * NU1.conjugate() + 1j * g, rel=1e-14)
    # beta equalization at h0 order kappa: -kappa/(2(2+kappa))
    assert br.remainder_exponent == pytest.approx(-3.15 / (2.0 * 5.15))
    assert br.remainder_exponent == pytest.approx(-0.3058252427184466)
    # no h0 order given: the beta -> 0 limit min(2, kappa)/(2+kappa)
    assert branch_strong_coupling(4.5, NU1).remainder_exponent == pytest.approx(-2.0 / 6.5)
    assert branch_strong_coupling(1.0, NU1).remainder_exponent == pytest.approx(-1.0 / 3.0)
    # equalization against order-2 confinement, kappa = 3: -6/25
    br2 = branch_strong_coupling(3.0, NU1, h0_beta_order=2.0)
    assert br2.remainder_exponent == pytest.approx(-0.24)
    # explicit override wins
    br3 = branch_strong_coupling(3.0, NU1, remainder_override=-0.125)
    assert br3.remainder_exponent == pytest.approx(-0.125)
    # default shift is zero
    assert branch_strong_coupling(2.0, NU1).shift(10.0) == 0.0


def test_pt2_x3_and_x2_formulas():
    g = 8.0
    br = branch_pt2(2, "x3", 0)
    want = math.sqrt(1.5) * g ** (1.0 / 3.0) * cmath.exp(1j * math.pi / 6) + 0.75 * cmath.exp(
        1j * 5 * math.pi / 3
    ) * g ** (4.0 / 3.0)
    assert br.leading(g) == pytest.approx(want, rel=1e-14)
    assert br.remainder_exponent == pytest.approx(-1.0 / 6.0)
    mirror = branch_pt2(2, "x2", 0)
    assert mirror.leading(g) == pytest.approx(want.conjugate(), rel=1e-14)
    # the k dependence is the odd-integer ladder 2k+1
    k1 = branch_pt2(2, "x3", 1)
    ratio = (k1.leading(g) - br.shift(g)) / (br.leading(g) - br.shift(g))
    assert ratio == pytest.approx(3.0, rel=1e-12)


def test_pt2_x0_uses_signed_model():
    br = branch_pt2(4, "x0", 1)
    g = 32.0
    mu14 = model_nu_kappa(3.0, 1, signed=True)
    want = g ** (-0.4) * (1.0 / 3.0) ** 0.4 * mu14
    assert br.leading(g) == pytest.approx(want, rel=1e-10)
    assert br.remainder_exponent == pytest.approx(-0.4)


def test_pt2_rejections():
    with pytest.raises(ValueError):
        branch_pt2(2, "x0", 1)  # interior family needs M >= 4
    with pytest.raises(ValueError):
        branch_pt2(3, "x3", 0)  # M must be even
    with pytest.raises(ValueError):
        branch_pt2(4, "x3", 0)  # stationary-pair family is M = 2 only
    with pytest.raises(ValueError):
        branch_pt2(2, "x1", 0)


def test_model_nu_kappa_closed_form():
    # kappa = 2 unsigned: e^{i pi/4} (2k-1), no solver involved
    for k in (1, 2, 5):
        want = cmath.exp(1j * math.pi / 4) * (2 * k - 1)
        assert model_nu_kappa(2.0, k) == pytest.approx(want, rel=1e-14)


def test_model_nu_kappa_solver_continuity_at_two():
    # solver path a hair away from kappa=2 must land on the closed form
    got = model_nu_kappa(2.0000001, 1)
    want = cmath.exp(1j * math.pi / 4)
    assert abs(got - want) < 1e-5


def test_model_nu_kappa_signed_cubic_matches_galerkin_oracle():
    # frozen from scripts/oracle_hermite_galerkin.py (sgn(x)|x|^3, basis 160)
    oracle = [1.156267071988, 4.109228752809, 7.562273854980, 11.314421820211]
    for k, want in enumerate(oracle, start=1):
        got = model_nu_kappa(3.0, k, signed=True)
        assert got == pytest.approx(want + 0j, abs=5e-8)
        assert abs(got.imag) < 5e-8  # PT-real spectrum


def test_model_nu_kappa_fractional_matches_galerkin_oracle():
    # frozen from scripts/oracle_hermite_galerkin.py (|x|^3.15, basis 160)
    got1 = model_nu_kappa(3.15, 1)
    assert abs(got1 - (0.842581382841 + 0.588918585550j)) < 2e-5
    got2 = model_nu_kappa(3.15, 2)
    assert abs(got2 - (2.875259693404 + 2.009650232255j)) < 2e-5


def test_model_nu_kappa_validation():
    with pytest.raises(ValueError):
        model_nu_kappa(2.0, 0)
    with pytest.raises(ValueError):
        model_nu_kappa(3.15, 9)  # self-oracle is documented for k <= 8
    with pytest.raises(ValueError):
        model_nu_kappa(2.0, 1, signed=True)  # signed needs odd integer kappa
    with pytest.raises(ValueError):
        model_nu_kappa(3.5, 1, signed=True)


def test_corner_window_expansion_structure():
    w = corner_window_expansion(parse("x^3"))
    assert to_string(w) == (
        "i*(3*s^2)^(-0.6666666666666666)*(s^3 - (s - (3*s^2)^(-0.3333333333333333)*x)^3) - i*x"
    )
    # hand-expanded polynomial form: i(-3 s sigma^2 x^2 + sigma^3 x^3)/U'(s)^{2/3} cancellation
    s, x = 4.0, 1.7
    sig = (3 * s * s) ** (-1.0 / 3.0)
    want = 1j * ((3 * s * s) ** (-2.0 / 3.0) * (s**3 - (s - sig * x) ** 3) - x)
    assert w(x, s=s) == pytest.approx(want, rel=1e-13)
    with pytest.raises(ValueError):
        corner_window_expansion(parse("x^3"), param_name="x")


def test_first_correction_zero_defect():
    zero = parse("0*x")
    assert first_correction(1, zero) == 0
    assert first_correction(2, zero, bc="neumann") == 0


def test_first_correction_cubic_matches_quadrature_oracle():
    # frozen from scripts/oracle_first_correction.py (mpmath adaptive quad)
    w = corner_window_expansion(parse("x^3"))
    cases = {
        2.5: -0.332782599991442 - 0.219494621614491j,
        5.0: -0.115045880200661 - 0.0691364735277018j,
        10.0: -0.0372517222458378 - 0.0217766245782628j,
    }
    for s, want in cases.items():
        got = first_correction(1, w, params={"s": s})
        assert abs(got - want) < 5e-10


def test_first_correction_decays_with_s():
    w = corner_window_expansion(parse("x^3"))
    mags = [abs(first_correction(1, w, params={"s": s})) for s in (2.5, 5.0, 10.0)]
    assert mags[0] > mags[1] > mags[2]


def test_with_correction_adds_scaled_term():
    br = branch_1d(parse("x^3"), 1, orientation="left")
    corr = br.with_correction(lambda s: 0.5 + 0.25j)
    s = 3.0
    assert corr.leading(s) == pytest.approx(br.leading(s) + br.scale(s) * (0.5 + 0.25j), rel=1e-14)
    assert corr.base_leading(s) == br.base_leading(s)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.5, 40.0, allow_nan=False), st.integers(1, 4))
def test_conjugation_coherence_property(s, k):
    """Left and right corner branches of an odd real profile are conjugates."""
    U = parse("x^3")
    left = branch_1d(U, k, orientation="left")
    right = branch_1d(U, k, orientation="right")
    assert right.leading(s) == left.leading(s).conjugate()


def test_nu_matches_airy_zero_magnitude():
    for k in (1, 2, 3):
        br = branch_1d(parse("x"), k)
        assert abs(br.nu) == pytest.approx(abs(ai_zero(k)), rel=1e-13)
