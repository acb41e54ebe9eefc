"""
R 矩阵服务测试

测试 Felder R 矩阵的各项恒等式、经典极限与三角退化。
"""

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from apps.felder.schemas import RMatrixSpec
from apps.felder.services import FelderService
from apps.scalar.expressions import U, lam
from tests.base import EngineTestCase


class FelderRMatrixTest(EngineTestCase):
    """n = 2 的 R 矩阵恒等式测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.spec = RMatrixSpec(n=self.n)

    def test_numeric_matrix_shape(self):
        """测试在数值点上得到 n²×n² 矩阵"""
        point = {U: 0.23 + 0.11j, lam(1): 0.31 - 0.04j, lam(2): -0.12 + 0.09j}
        matrix = FelderService.felder_R(self.spec, self.ctx, point)
        self.assertEqual(matrix.shape, (4, 4))

    def test_weight_zero_pattern(self):
        """测试 R 只把 e_a⊗e_b 映到 e_a⊗e_b 和 e_b⊗e_a"""
        point = {U: 0.23 + 0.11j, lam(1): 0.31 - 0.04j, lam(2): -0.12 + 0.09j}
        matrix = FelderService.felder_R(self.spec, self.ctx, point)
        # 基向量顺序 (11, 12, 21, 22)
        self.assertClose(matrix[0, 1:], 0)
        self.assertClose(matrix[1, [0, 3]], 0)
        self.assertClose(matrix[3, :3], 0)

    def test_rejects_other_kind(self):
        """测试类型不符时报错"""
        with self.assertRaises(ValidationError):
            FelderService.felder_R(RMatrixSpec(n=2, kind='classical_r'), self.ctx)

    def test_dybe(self):
        """测试动力学 Yang-Baxter 方程"""
        report = FelderService.dybe_residual(self.spec, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-9)
        self.assertTrue(report.passed)

    def test_unitarity(self):
        """测试 R₂₁(−u)R₁₂(u) = 1"""
        self.assertResidualBelow(FelderService.unitarity_residual(self.spec, self.ctx, self.sampling), 1e-9)

    def test_weight_zero(self):
        """测试 R 与 E_kk⊗1 + 1⊗E_kk 交换"""
        self.assertResidualBelow(FelderService.weight_zero_residual(self.spec, self.ctx, self.sampling), 1e-10)

    def test_d_commute(self):
        """测试 R 与 D̂ 的交换关系"""
        self.assertResidualBelow(FelderService.dcommute_residual(self.spec, self.ctx, self.sampling), 1e-9)

    def test_r_at_minus_hbar(self):
        """测试 R(−ħ) 的分解"""
        self.assertResidualBelow(FelderService.r_minus_hbar_residual(self.spec, self.ctx, self.sampling), 1e-10)

    def test_unattainable_tolerance_fails(self):
        """测试容差过小时报告不通过"""
        report = FelderService.dybe_residual(self.spec, self.ctx, self.sampling, tol=1e-30)
        self.assertFalse(report.passed)
        self.assertEqual(report.status, 'ok')


class ClassicalRMatrixTest(EngineTestCase):
    """经典 r 矩阵测试类"""

    def test_classical_limit(self):
        """测试 R = 1 + ħr + O(ħ²)"""
        report = FelderService.classical_limit_residual(self.n, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-5)

    def test_symmetric_part(self):
        """测试 r 的对称部分"""
        self.assertResidualBelow(FelderService.r_symmetric_part_residual(self.n, self.ctx, self.sampling), 1e-9)

    def test_cdybe(self):
        """测试经典动力学 Yang-Baxter 方程"""
        self.assertResidualBelow(FelderService.cdybe_residual(self.n, self.ctx, self.sampling), 1e-9)

    def test_classical_twist(self):
        """测试 r̃ 与 r 的扭变关系"""
        self.assertResidualBelow(FelderService.classical_twist_residuals(self.n, self.ctx, self.sampling), 1e-9)


class TrigonometricLimitTest(EngineTestCase):
    """三角退化测试类"""

    def test_trig_limit(self):
        """测试 Im τ → ∞ 时趋于三角动力学 R 矩阵"""
        report = FelderService.trig_limit_residual(self.n, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-6)

    def test_nondynamical_limit(self):
        """测试 λ → i∞ 时趋于非动力学三角 R 矩阵"""
        report = FelderService.nondynamical_limit_residual(self.n, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-4)

    def test_twist_conjugation(self):
        """测试 G R̃ G = R"""
        report = FelderService.twist_conjugation_residual(self.n, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-12)

    def test_trig_manin(self):
        """测试三角 L 算子给出 Manin 矩阵"""
        report = FelderService.trig_manin_residuals(self.n, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-9)

    def test_twist_diagonal(self):
        """测试零权向量上的 G 为单位阵"""
        g = FelderService.trig_twist_G(2, [0.0, 0.0], self.ctx.q)
        np.testing.assert_allclose(g, np.eye(2), atol=1e-14)


@pytest.mark.slow
class FelderRankThreeTest(EngineTestCase):
    """n = 3 的 R 矩阵恒等式测试类"""

    n = 3

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.spec = RMatrixSpec(n=3)

    def test_dybe(self):
        """测试 n = 3 的动力学 Yang-Baxter 方程"""
        self.assertResidualBelow(FelderService.dybe_residual(self.spec, self.ctx, self.sampling), 1e-9)

    def test_unitarity(self):
        """测试 n = 3 的幺正性"""
        self.assertResidualBelow(FelderService.unitarity_residual(self.spec, self.ctx, self.sampling), 1e-9)

    def test_cdybe(self):
        """测试 n = 3 的经典动力学 Yang-Baxter 方程"""
        self.assertResidualBelow(FelderService.cdybe_residual(3, self.ctx, self.sampling), 1e-9)
