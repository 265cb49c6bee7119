import math
import random

import mpmath
import pytest

from fracburgers.fractional import (
    GammaPoleError,
    LatticeError,
    LatticeExponent,
    caputo_power,
    gamma,
    lagrange_multiplier,
    mittag_leffler,
    rl_integral_power,
)

SQRT_PI = 1.7724538509055160273  # high-precision sqrt(pi), independent constant


class TestGamma:
    def test_one(self):
        assert gamma(1.0) == 1.0

    def test_factorial(self):
        assert gamma(5.0) == 24.0

    def test_half(self):
        assert gamma(0.5) == pytest.approx(SQRT_PI, rel=1e-12)

    @pytest.mark.parametrize("z", [0.0, -1.0, -2.0, -17.0])
    def test_poles(self, z):
        with pytest.raises(GammaPoleError):
            gamma(z)

    def test_negative_non_integer_reflection(self):
        # Gamma(-0.5) = -2*sqrt(pi)
        assert gamma(-0.5) == pytest.approx(-2.0 * SQRT_PI, rel=1e-12)

    def test_recurrence(self):
        rng = random.Random(11)
        for _ in range(200):
            z = rng.uniform(0.1, 50.0)
            err = abs(gamma(z + 1.0) - z * gamma(z)) / gamma(z + 1.0)
            assert err <= 1e-12

    def test_overflow(self):
        with pytest.raises(OverflowError):
            gamma(200.0)


class TestLatticeExponent:
    def test_value(self):
        assert LatticeExponent(2, 3).value(0.5) == pytest.approx(3.5)

    def test_addition(self):
        assert LatticeExponent(1, 2) + LatticeExponent(0, 1) == LatticeExponent(1, 3)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            LatticeExponent(-1, 0)

    def test_non_integer_rejected(self):
        with pytest.raises(TypeError):
            LatticeExponent(0.5, 0)


class TestRlIntegralPower:
    def test_constant_half_order(self):
        term = rl_integral_power(LatticeExponent(0, 0), 0.5)
        assert term.coeff == pytest.approx(1.0 / gamma(1.5), rel=1e-14)
        assert term.coeff == pytest.approx(1.1283791671, rel=1e-9)
        assert term.exponent == LatticeExponent(0, 1)

    def test_classical_antiderivative(self):
        # alpha=1 gives Gamma(m+1)/Gamma(m+2) = 1/(m+1)
        for i in range(5):
            term = rl_integral_power(LatticeExponent(i, 0), 1.0)
            assert term.coeff == pytest.approx(1.0 / (i + 1), rel=1e-14)
            assert term.exponent == LatticeExponent(i, 1)

    def test_two_alpha_chain(self):
        alpha = 0.7
        term = rl_integral_power(LatticeExponent(0, 2), alpha)
        expected = gamma(1 + 2 * alpha) / gamma(1 + 3 * alpha)
        assert term.coeff == pytest.approx(expected, rel=1e-14)
        assert term.exponent == LatticeExponent(0, 3)

    def test_semigroup_coefficient_identity(self):
        rng = random.Random(23)
        for _ in range(100):
            mu = rng.uniform(0.0, 3.0)
            a = rng.uniform(0.05, 3.0)
            b = rng.uniform(0.05, 3.0)
            two_steps = (gamma(mu + 1) / gamma(mu + 1 + a)) * (
                gamma(mu + a + 1) / gamma(mu + a + 1 + b)
            )
            one_step = gamma(mu + 1) / gamma(mu + 1 + a + b)
            assert abs(two_steps - one_step) <= 1e-10 * abs(one_step)


class TestCaputoPower:
    def test_constant_annihilated(self):
        assert caputo_power(LatticeExponent(0, 0), 0.8) is None

    def test_linear_annihilated_for_wave_orders(self):
        assert caputo_power(LatticeExponent(1, 0), 2.0) is None
        assert caputo_power(LatticeExponent(1, 0), 1.5) is None

    def test_linear_survives_for_diffusion_orders(self):
        term = caputo_power(LatticeExponent(1, 0), 1.0)
        assert term.coeff == pytest.approx(1.0)
        assert term.exponent == LatticeExponent(0, 0)

    def test_t_alpha_maps_to_constant(self):
        for alpha in (0.3, 0.6, 1.0):
            term = caputo_power(LatticeExponent(0, 1), alpha)
            assert term.coeff == pytest.approx(gamma(alpha + 1.0), rel=1e-14)
            assert term.exponent == LatticeExponent(0, 0)

    def test_left_inverse_of_integration(self):
        rng = random.Random(5)
        for _ in range(100):
            alpha = rng.uniform(0.05, 2.0)
            mu = LatticeExponent(rng.randint(0, 3), rng.randint(0, 3))
            integrated = rl_integral_power(mu, alpha)
            back = caputo_power(integrated.exponent, alpha)
            assert back is not None
            assert back.exponent == mu
            assert abs(integrated.coeff * back.coeff - 1.0) <= 1e-10

    def test_off_lattice_rejected(self):
        with pytest.raises(LatticeError):
            caputo_power(LatticeExponent(2, 0), 0.5)


class TestLagrangeMultiplier:
    def test_classical_diffusion_endpoint_exact(self):
        rng = random.Random(1)
        for _ in range(100):
            t = rng.uniform(0.1, 2.0)
            tau = rng.uniform(0.0, t * 0.999)
            assert lagrange_multiplier(1.0, t, tau) == -1.0

    def test_classical_wave_endpoint_exact(self):
        rng = random.Random(2)
        for _ in range(100):
            t = rng.uniform(0.1, 2.0)
            tau = rng.uniform(0.0, t * 0.999)
            assert lagrange_multiplier(2.0, t, tau) == tau - t

    def test_half_order_value(self):
        value = lagrange_multiplier(0.5, 1.0, 0.75)
        assert value == pytest.approx(-((0.25) ** -0.5) / gamma(0.5), rel=1e-14)
        assert value == pytest.approx(-1.1283791671, rel=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            lagrange_multiplier(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            lagrange_multiplier(0.5, 1.0, -0.1)


class TestMittagLeffler:
    def test_order_one_is_exp(self):
        value, last = mittag_leffler(1.0, -1.0, 30)
        assert value == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert last < 1e-30

    def test_zero_argument(self):
        for alpha in (0.2, 1.0, 1.7):
            assert mittag_leffler(alpha, 0.0, 10).value == 1.0

    def test_half_order_against_extended_precision(self):
        # independent oracle: same truncation summed at 50 digits
        mpmath.mp.dps = 50
        expected = float(
            sum(
                mpmath.mpf(-1) ** k / mpmath.gamma(1 + mpmath.mpf("0.5") * k)
                for k in range(60)
            )
        )
        value, _ = mittag_leffler(0.5, -1.0, 60)
        assert value == pytest.approx(expected, abs=1e-8)

    def test_matches_taylor_polynomial_exactly(self):
        # at alpha=1 each term is z^k / k! with the same floating values
        for z in (-1.0, 0.5, 2.0):
            for n in (1, 5, 12):
                taylor = sum(z**k / float(math.factorial(k)) for k in range(n))
                assert mittag_leffler(1.0, z, n).value == taylor

    def test_overflow(self):
        with pytest.raises(OverflowError):
            mittag_leffler(0.1, 1e10, 100)

    def test_invalid_nterms(self):
        with pytest.raises(ValueError):
            mittag_leffler(0.5, 0.0, 0)
