"""
theta 函数服务测试

测试 θ 的求值、导数、准周期性和参数校验。
"""

import mpmath
import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from apps.theta.schemas import EllipticParams
from apps.theta.services import ThetaService
from utils.exceptions import ThetaAccuracyError, ThetaConvergenceError


def mpmath_theta(u: complex, tau: complex) -> complex:
    """高精度 ϑ₁ 归一化值"""
    with mpmath.workdps(40):
        q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(tau))
        value = mpmath.jtheta(1, mpmath.pi * mpmath.mpc(u), q) / (
            mpmath.pi * mpmath.jtheta(1, 0, q, 1)
        )
        return complex(value)


class ThetaServiceTest(SimpleTestCase):
    """theta 服务测试类"""

    def setUp(self):
        """测试前的准备工作"""
        self.params = EllipticParams(tau=complex(0, 1.1))
        self.skew = EllipticParams(tau=complex(0.2, 0.9))
        self.rng = np.random.default_rng(7)

    def random_points(self, count, params):
        half = params.tau.imag / 2
        return self.rng.uniform(-0.5, 0.5, count) + 1j * self.rng.uniform(-half, half, count)

    def test_theta_vanishes_at_zero(self):
        """测试 θ(0) = 0"""
        self.assertEqual(ThetaService.theta(0, self.params), 0)

    def test_finite_difference_slope_at_zero(self):
        """测试 θ'(0) = 1 的差分近似"""
        eps = 1e-6
        slope = (ThetaService.theta(eps, self.params) - ThetaService.theta(-eps, self.params)) / (2 * eps)
        self.assertLess(abs(slope - 1), 1e-6)

    def test_real_period(self):
        """测试 θ(u+1) = −θ(u)"""
        u = complex(0.31, 0.17)
        total = ThetaService.theta(u + 1, self.params) + ThetaService.theta(u, self.params)
        self.assertLess(abs(total), 1e-12)

    def test_against_high_precision_oracle(self):
        """测试与 mpmath 高精度值一致"""
        params = EllipticParams(tau=1j)
        self.assertLess(abs(ThetaService.theta(0.5, params) - mpmath_theta(0.5, 1j)), 1e-13)

        u = complex(0.31, 0.17)
        expected = mpmath_theta(u, self.skew.tau)
        self.assertLess(abs(ThetaService.theta(u, self.skew) - expected), 1e-12 * (1 + abs(expected)))

    def test_far_argument_uses_reduction(self):
        """测试远离基本胞腔的点与高精度值一致"""
        u = complex(2.3, 1.7)
        expected = mpmath_theta(u, self.params.tau)
        actual = ThetaService.theta(u, self.params)
        self.assertLess(abs(actual - expected), 1e-10 * (1 + abs(expected)))

    def test_oddness(self):
        """测试 θ(−u) = −θ(u)"""
        for u in self.random_points(100, self.params):
            value = ThetaService.theta(u, self.params)
            residual = abs(value + ThetaService.theta(-u, self.params)) / (1 + abs(value))
            self.assertLess(residual, 1e-12)

    def test_derivative_orders(self):
        """测试导数的基本取值"""
        u = complex(0.21, -0.13)
        self.assertEqual(ThetaService.theta_deriv(0, u, self.params), ThetaService.theta(u, self.params))
        self.assertLess(abs(ThetaService.theta_deriv(1, 0, self.params) - 1), 1e-12)
        self.assertLess(abs(ThetaService.theta_deriv(2, 0, self.params)), 1e-14)

    def test_derivative_matches_finite_difference(self):
        """测试一阶、二阶导数与中心差分一致"""
        h = 1e-5
        for u in self.random_points(10, self.params):
            for order in (1, 2):
                lower = ThetaService.theta_deriv(order - 1, u - h, self.params)
                upper = ThetaService.theta_deriv(order - 1, u + h, self.params)
                fd = (upper - lower) / (2 * h)
                exact = ThetaService.theta_deriv(order, u, self.params)
                self.assertLess(abs(fd - exact) / (1 + abs(exact)), 1e-6)

    def test_derivative_order_limit(self):
        """测试导数阶数上限"""
        with self.assertRaises(ValidationError):
            ThetaService.theta_deriv(5, 0.1, self.params)
        with self.assertRaises(ValidationError):
            ThetaService.theta_deriv(-1, 0.1, self.params)

    def test_quasi_periodicity_residual(self):
        """测试 τ 方向准周期性残差"""
        report = ThetaService.theta_quasi_periodicity_residual(8, self.params, rng_seed=1)
        self.assertTrue(report.passed)
        self.assertLess(report.max_rel, 1e-10)
        self.assertEqual(report.samples_used, 8)

        skew = ThetaService.theta_quasi_periodicity_residual(8, self.skew, rng_seed=2)
        self.assertLess(skew.max_rel, 1e-10)

    def test_quasi_periodicity_at_zero(self):
        """测试 u = 0 处 θ(τ) = 0"""
        report = ThetaService.theta_quasi_periodicity_residual(1, self.params, rng_seed=1, points=[0j])
        self.assertLess(report.max_abs, 1e-10)

    def test_truncation_is_monotone(self):
        """测试收紧截断阈值不会显著增大残差"""
        loose = EllipticParams(tau=self.params.tau, series_tol=1e-12)
        tight = EllipticParams(tau=self.params.tau, series_tol=5e-13)
        r_loose = ThetaService.theta_quasi_periodicity_residual(8, loose, rng_seed=3).max_rel
        r_tight = ThetaService.theta_quasi_periodicity_residual(8, tight, rng_seed=3).max_rel
        self.assertLessEqual(r_tight, 2 * r_loose + 1e-15)

    def test_invalid_modulus(self):
        """测试模参数校验"""
        with self.assertRaises(ThetaConvergenceError):
            EllipticParams(tau=complex(0, -1))
        with self.assertRaises(ThetaConvergenceError):
            EllipticParams(tau=complex(0, 0.001))

    def test_accuracy_error_carries_last_term(self):
        """测试项数不足时抛出精度异常"""
        params = EllipticParams(tau=self.params.tau, max_terms=1)
        with self.assertRaises(ThetaAccuracyError) as cm:
            ThetaService.theta(0.3, params)
        self.assertGreater(cm.exception.last_term, 0)

    def test_complex_literal_modulus(self):
        """测试模参数接受 i 后缀字面量"""
        params = EllipticParams(tau='0+1.1i')
        self.assertEqual(params.tau, complex(0, 1.1))
