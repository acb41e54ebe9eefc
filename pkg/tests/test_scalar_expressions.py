"""
系数表达式测试

测试表达式的求值、微分、平移、不透明矩阵和数值判等。
"""

import numpy as np
from django.core.exceptions import ValidationError

from apps.scalar.expressions import (
    U, V, Z, Const, Var, exp, lam, theta, theta_ratio,
)
from apps.scalar.schemas import SamplingPolicy
from apps.scalar.services import ScalarService
from apps.theta.services import ThetaService
from tests.base import EngineTestCase
from utils.exceptions import CapabilityError, SamplingExhaustedError, SingularPointError


class ScalarExpressionTest(EngineTestCase):
    """系数表达式测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.u = Var(U)
        self.v = Var(V)
        self.lam1 = Var(lam(1))
        self.ctx01 = self.make_ctx(hbar=0.1)

    def test_eval_constant(self):
        """测试常数求值"""
        self.assertEqual(ScalarService.eval(Const(3 + 1j), {}, self.ctx), 3 + 1j)

    def test_eval_ratio_of_same_theta(self):
        """测试 θ(u)/θ(u) = 1"""
        e = theta(self.u) / theta(self.u)
        self.assertClose(ScalarService.eval(e, {U: 0.3}, self.ctx), 1)

    def test_eval_r_matrix_coefficient(self):
        """测试 θ(u+ħ)/θ(u) 与直接计算一致"""
        e = theta(self.u + 0.1) / theta(self.u)
        expected = ThetaService.theta(0.35, self.params) / ThetaService.theta(0.25, self.params)
        self.assertClose(ScalarService.eval(e, {U: 0.25}, self.ctx01), expected)

    def test_unassigned_variable(self):
        """测试未赋值变量报错"""
        with self.assertRaises(ValidationError):
            ScalarService.eval(theta(self.u), {}, self.ctx)

    def test_singular_denominator(self):
        """测试分母接近零时抛出奇点异常"""
        e = Const(1) / theta(self.u)
        with self.assertRaises(SingularPointError):
            ScalarService.eval(e, {U: 0.001}, self.ctx)

    def test_differentiate_theta(self):
        """测试 d/du θ(u) 在 0 处为 1"""
        d = ScalarService.differentiate(theta(self.u), U)
        self.assertClose(ScalarService.eval(d, {U: 0}, self.ctx), 1)

    def test_differentiate_unrelated_variable(self):
        """测试对无关变量求导得到零"""
        d = ScalarService.differentiate(theta(self.u) * exp(self.u), lam(1))
        self.assertTrue(d.is_zero())

    def test_differentiate_log_derivative(self):
        """测试 d/du [θ'(u)/θ(u)] 与中心差分一致"""
        e = theta_ratio(self.u)
        d = ScalarService.differentiate(e, U)
        u0, h = complex(0.3, 0.1), 1e-5
        fd = (e.evaluate({U: u0 + h}, self.ctx) - e.evaluate({U: u0 - h}, self.ctx)) / (2 * h)
        exact = d.evaluate({U: u0}, self.ctx)
        self.assertLess(abs(fd - exact) / (1 + abs(exact)), 1e-6)

    def test_product_and_quotient_rules(self):
        """测试乘积和商的求导法则"""
        e = theta(self.u - self.lam1) * exp(2 * self.u) / theta(self.u + self.lam1 + 0.3)
        e = e + theta(self.lam1, 1) ** 2 - 3 * self.u
        point = {U: complex(0.12, 0.05), lam(1): complex(-0.21, 0.07)}
        h = 1e-5
        for var in (U, lam(1)):
            d = e.differentiate(var)
            up = dict(point)
            down = dict(point)
            up[var] += h
            down[var] -= h
            fd = (e.evaluate(up, self.ctx) - e.evaluate(down, self.ctx)) / (2 * h)
            exact = d.evaluate(point, self.ctx)
            self.assertLess(abs(fd - exact) / (1 + abs(exact)), 1e-6)

    def test_shift_of_constant(self):
        """测试常数平移不变"""
        c = Const(2)
        self.assertIs(ScalarService.substitute_shift(c, U, 3, self.ctx), c)

    def test_shift_theta(self):
        """测试平移 θ(u) 后等于 θ(u+ħ)"""
        shifted = ScalarService.substitute_shift(theta(self.u), U, 1, self.ctx)
        u0 = complex(0.2, -0.1)
        expected = ThetaService.theta(u0 + self.ctx.hbar, self.params)
        self.assertClose(shifted.evaluate({U: u0}, self.ctx), expected)

    def test_shift_power_zero(self):
        """测试零次平移返回原表达式"""
        e = theta(self.u) * self.v
        self.assertIs(ScalarService.substitute_shift(e, U, 0, self.ctx), e)

    def test_shift_commutes_with_eval(self):
        """测试平移与求值可交换"""
        e = theta_ratio(self.u - self.lam1) * theta(self.u + self.v)
        shifted = e.substitute_shift(lam(1), -2, self.ctx)
        point = {U: 0.11 + 0.02j, V: -0.3 + 0.1j, lam(1): 0.05 - 0.2j}
        moved = dict(point)
        moved[lam(1)] -= 2 * self.ctx.hbar
        self.assertClose(shifted.evaluate(point, self.ctx), e.evaluate(moved, self.ctx))

    def test_multiplicative_shift(self):
        """测试乘法型变量平移 z → z·q²"""
        z = Var(Z)
        shifted = z.substitute_shift(Z, 1, self.ctx)
        self.assertClose(shifted.evaluate({Z: 0.7}, self.ctx), 0.7 * self.ctx.q ** 2)

    def test_opaque_identity(self):
        """测试恒等回调的不透明矩阵"""
        entries = ScalarService.opaque_matrix_fn(3, lambda point: np.eye(3), [U], name='eye')
        values = [[e.evaluate({U: 0.1}, self.ctx) for e in row] for row in entries]
        self.assertClose(values, np.eye(3))

    def test_opaque_inverse(self):
        """测试不透明逆矩阵与原矩阵之积为单位阵"""
        def matrix(x):
            return np.array([[np.exp(x), x], [1, 2 + x * x]])

        entries = ScalarService.opaque_matrix_fn(
            2, lambda point: np.linalg.inv(matrix(point[lam(1)])), [lam(1)], name='inv'
        )
        x = complex(0.3, -0.2)
        inverse = np.array([[e.evaluate({lam(1): x}, self.ctx) for e in row] for row in entries])
        self.assertClose(inverse @ matrix(x), np.eye(2))

        shifted = [[e.substitute_shift(lam(1), 1, self.ctx) for e in row] for row in entries]
        at_shifted = np.array([[e.evaluate({lam(1): x}, self.ctx) for e in row] for row in shifted])
        self.assertClose(at_shifted, np.linalg.inv(matrix(x + self.ctx.hbar)))

    def test_opaque_single_evaluation_per_point(self):
        """测试同一点只调用一次回调"""
        entries = ScalarService.opaque_matrix_fn(2, lambda point: np.eye(2) * point[U], [U])
        matrix = entries[0][0].matrix
        entries[0][0].evaluate({U: 0.5}, self.ctx)
        entries[1][1].evaluate({U: 0.5}, self.ctx)
        self.assertEqual(matrix.calls, 1)
        entries[1][1].evaluate({U: 0.6}, self.ctx)
        self.assertEqual(matrix.calls, 2)

    def test_opaque_not_differentiable(self):
        """测试不透明节点不可微"""
        entries = ScalarService.opaque_matrix_fn(1, lambda point: np.eye(1), [U])
        with self.assertRaises(CapabilityError):
            ScalarService.differentiate(entries[0][0] * theta(self.u), U)
        self.assertTrue(ScalarService.differentiate(entries[0][0], V).is_zero())

    def test_opaque_failure_is_singular(self):
        """测试回调失败转为奇点异常"""
        entries = ScalarService.opaque_matrix_fn(
            2, lambda point: np.linalg.inv(np.zeros((2, 2))), [U], name='singular'
        )
        with self.assertRaises(SingularPointError):
            entries[0][0].evaluate({U: 0.2}, self.ctx)

    def test_equal_numeric_identical(self):
        """测试同一表达式残差为零"""
        e = theta(self.u) * theta(self.v, 1)
        report = ScalarService.expr_equal_numeric(e, e, self.sampling, self.ctx)
        self.assertEqual(report.max_rel, 0)

    def test_equal_numeric_period(self):
        """测试 θ(u+1) 与 −θ(u) 数值相等"""
        report = ScalarService.expr_equal_numeric(theta(self.u + 1), -theta(self.u), self.sampling, self.ctx)
        self.assertResidualBelow(report, 1e-10)

    def test_equal_numeric_commutative(self):
        """测试系数乘法可交换"""
        a = theta(self.u) * theta(self.v, 1)
        b = theta(self.v, 1) * theta(self.u)
        report = ScalarService.expr_equal_numeric(a, b, self.sampling, self.ctx, tol=1e-12)
        self.assertResidualBelow(report, 1e-12)

    def test_sampling_exhausted(self):
        """测试连续奇点导致采样耗尽"""
        ctx = self.make_ctx(denominator_guard=1e6)
        e = Const(1) / theta(self.u)
        policy = SamplingPolicy(samples=2, seed=1, max_retries=20)
        with self.assertRaises(SamplingExhaustedError):
            ScalarService.expr_equal_numeric(e, e, policy, ctx)
