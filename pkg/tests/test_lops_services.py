"""
L 算子服务测试

测试 L 算子的构造与融合、RLL 关系、Manin 性质、交换族与特征多项式、量子幂和 Newton 恒等式。
"""

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from apps.lops.operators import DynamicalLOperator
from apps.lops.services import LOperatorService, aux_labels
from apps.scalar.expressions import U, lam
from apps.verification.registry import REGISTRY
from tests.base import EngineTestCase


class LOperatorConstructionTest(EngineTestCase):
    """L 算子构造测试类"""

    def test_single_site_space(self):
        """测试单站点 L 算子的空间"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        self.assertEqual(l.space.labels, ('a', 's1'))
        self.assertEqual(l.space.dims, (2, 2))

    def test_fused_space(self):
        """测试两个站点融合后的空间"""
        l = LOperatorService.lop_from_sites(self.ctx, [0.1, 0.45])
        self.assertEqual(l.space.labels, ('a', 's1', 's2'))
        self.assertEqual(l.cartan_labels, ('s1', 's2'))

    def test_unknown_role(self):
        """测试未知构造方式报错"""
        with self.assertRaises(ValidationError):
            LOperatorService.lop_from_R(self.ctx, 0.1, role='transpose')

    def test_fuse_rejects_common_legs(self):
        """测试量子空间有公共腿时拒绝融合"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        with self.assertRaises(ValidationError):
            LOperatorService.fuse(l, l)

    def test_trivial_is_identity(self):
        """测试平凡 L 算子为单位阵"""
        l = DynamicalLOperator.trivial(2)
        value = l.coefficient().evaluate({}, self.ctx)
        np.testing.assert_allclose(value, np.eye(2), atol=1e-15)

    def test_cartan_on_site(self):
        """测试站点上的 Cartan 元"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        h = l.cartan(0, l.quantum)
        np.testing.assert_allclose(h, np.diag([1, 0]), atol=1e-15)

    def test_t_zero_is_identity(self):
        """测试 t₀ = 1"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        t0 = LOperatorService.t_m(l, 0)
        np.testing.assert_allclose(t0.evaluate({}, self.ctx)[()], np.eye(2), atol=1e-15)

    def test_t_m_range(self):
        """测试 m 超出 0..n 时报错"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        with self.assertRaises(ValidationError):
            LOperatorService.t_m(l, 3)

    def test_t_one_is_trace(self):
        """测试 t₁(u) 在 e^{−ħ∂λ_k} 上的系数为 L(u;λ−ħe_k) 的 (k,k) 分块"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        t1 = LOperatorService.t_m(l, 1)
        point = {U: 0.37 + 0.08j, lam(1): 0.21 - 0.06j, lam(2): -0.14 + 0.11j}
        values = t1.evaluate(point, self.ctx)
        hbar = self.ctx.hbar
        for k in (1, 2):
            moved = dict(point)
            moved[lam(k)] = point[lam(k)] - hbar
            coef = l.coefficient().evaluate(moved, self.ctx).reshape(2, 2, 2, 2)
            np.testing.assert_allclose(values[((lam(k), -1),)], coef[k - 1, :, k - 1, :], atol=1e-12)

    def test_aux_labels(self):
        """测试辅助腿标签"""
        self.assertEqual(aux_labels(1, 3), ['a2', 'a3'])


class RLLRelationTest(EngineTestCase):
    """RLL 关系测试类"""

    def test_single_site(self):
        """测试单站点 L 算子满足动力学 RLL 关系"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        self.assertResidualBelow(LOperatorService.rll_residual(l, self.ctx, self.sampling), 1e-9)

    def test_fused(self):
        """测试融合 L 算子满足动力学 RLL 关系"""
        l = LOperatorService.lop_from_sites(self.ctx, [0.1, 0.45])
        self.assertResidualBelow(LOperatorService.rll_residual(l, self.ctx, self.sampling), 1e-9)

    def test_inverse_role(self):
        """测试由 R⁽²¹⁾⁻¹ 构造的 L 算子满足 RLL 关系"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1, role='inverse')
        self.assertResidualBelow(LOperatorService.rll_residual(l, self.ctx, self.sampling), 1e-8)

    def test_symmetric_form(self):
        """测试 L_D 形式的 RLL 关系"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        self.assertResidualBelow(LOperatorService.rll_sym_residual(l, self.ctx, self.sampling), 1e-9)

    def test_weight_zero(self):
        """测试 L 与 E_kk + h_k 交换"""
        l = LOperatorService.lop_from_sites(self.ctx, [0.1, 0.45])
        self.assertResidualBelow(LOperatorService.ehl_residual(l, self.ctx, self.sampling), 1e-10)

    def test_fused_rll(self):
        """测试融合后的 RLL 关系"""
        l = LOperatorService.lop_from_R(self.ctx, 0.1)
        self.assertResidualBelow(LOperatorService.fused_rll_residual(l, self.ctx, self.sampling, 1, 2), 1e-9)

    def test_fused_R_ordering(self):
        """测试融合 R 矩阵两种排列方式一致"""
        report = LOperatorService.ordering_residual(self.ctx, self.sampling, 2, 4)
        self.assertResidualBelow(report, 1e-9)
        self.assertEqual(report.identity_id, 'RprRi_RprRj:m=2,N=4')

    def test_factor_orders(self):
        """测试 m 或 N−m 为 1 时两种排列相同，m = 2、N = 4 时不同"""
        for m, s in ((1, 2), (2, 1), (1, 3), (3, 1)):
            self.assertEqual(LOperatorService.factor_order(m, s, 'left'),
                             LOperatorService.factor_order(m, s, 'right'))
        left = LOperatorService.factor_order(2, 2, 'left')
        right = LOperatorService.factor_order(2, 2, 'right')
        self.assertNotEqual(left, right)
        self.assertEqual(sorted(left), sorted(right))

    def test_ordering_with_identical_orders(self):
        """测试 m = 1、N = 3 时两种排列逐项相同，残差为零"""
        report = LOperatorService.ordering_residual(self.ctx, self.sampling, 1, 3)
        self.assertEqual(report.max_abs, 0.0)

    def test_registered_ordering_is_nontrivial(self):
        """测试登记的排列检查使用因子顺序不同的 m、N"""
        ids = [i for i in REGISTRY if i.startswith('RprRi_RprRj')]
        self.assertEqual(ids, ['RprRi_RprRj:m=2,N=4'])

    def test_range_check(self):
        """测试辅助腿总数超过上限时报错"""
        with self.assertRaises(ValidationError):
            LOperatorService.ordering_residual(self.ctx, self.sampling, 1, 5)


class ManinPropertyTest(EngineTestCase):
    """Manin 性质测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = LOperatorService.lop_from_R(self.ctx, 0.1)

    def test_single_site(self):
        """测试 e^{−ħD̂}L e^{ħ∂u} 是 Manin 矩阵"""
        self.assertResidualBelow(LOperatorService.manin_residual(self.l, self.ctx, self.sampling), 1e-9)

    def test_fused(self):
        """测试融合 L 算子给出 Manin 矩阵"""
        l = LOperatorService.lop_from_sites(self.ctx, [0.1, 0.45])
        self.assertResidualBelow(LOperatorService.manin_residual(l, self.ctx, self.sampling), 1e-9)

    def test_inverse(self):
        """测试 M⁻¹ 是 M 的逆且为 Manin 矩阵"""
        self.assertResidualBelow(LOperatorService.inverse_manin_residuals(self.l, self.ctx, self.sampling), 1e-8)

    def test_staircase_sandwich(self):
        """测试阶梯点上 A𝕃 = A𝕃A"""
        report = LOperatorService.staircase_sandwich_residual(self.l, self.ctx, self.sampling, 0, 2)
        self.assertResidualBelow(report, 1e-9)

    def test_fused_R_sandwich(self):
        """测试阶梯点上 Aℝ = AℝA"""
        report = LOperatorService.fused_R_sandwich_residual(self.ctx, self.sampling, 1, 2)
        self.assertResidualBelow(report, 1e-8)

    @pytest.mark.slow
    def test_staircase_sandwich_four_legs(self):
        """测试 N = 4 时阶梯乘积的反对称化子夹心"""
        report = LOperatorService.staircase_sandwich_residual(self.l, self.ctx, self.sampling, 2, 4)
        self.assertResidualBelow(report, 1e-9)
        self.assertEqual(report.identity_id, 'ALLL_ALLLA:m=2,N=4')

    @pytest.mark.slow
    def test_fused_R_sandwich_four_legs(self):
        """测试 N = 4 时融合 R 矩阵两组辅助腿上的夹心"""
        report = LOperatorService.fused_R_sandwich_residual(self.ctx, self.sampling, 2, 4)
        self.assertResidualBelow(report, 1e-8)
        self.assertEqual(report.identity_id, 'AR_ARA:m=2,N=4')

    def test_det_equals_antisymmetrized_trace(self):
        """测试列行列式等于反对称化迹"""
        self.assertResidualBelow(LOperatorService.det_tr_residual(self.l, self.ctx, self.sampling), 1e-9)


class CommutingFamilyTest(EngineTestCase):
    """交换族与特征多项式测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = LOperatorService.lop_from_R(self.ctx, 0.1)

    def test_char_poly_coefficients(self):
        """测试 det(1 − M) 的系数为 (−1)^m t_m"""
        self.assertResidualBelow(LOperatorService.char_poly_residual(self.l, self.ctx, self.sampling), 1e-8)

    def test_char_poly_degree(self):
        """测试特征多项式的平移次数为 0..n"""
        grouped = LOperatorService.char_poly(self.l)
        self.assertEqual(sorted(grouped), [0, 1, 2])

    def test_char_poly_prune_stability(self):
        """测试两组剪枝采样点给出相同的特征多项式"""
        report = LOperatorService.char_poly_stability_residual(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-10)

    def test_cartan_commutes_with_t(self):
        """测试 h_k 与 t_m 交换"""
        self.assertResidualBelow(LOperatorService.cartan_trace_residual(self.l, self.ctx, self.sampling), 1e-10)

    def test_trace_exchange(self):
        """测试 m = s = 1 的迹交换恒等式"""
        report = LOperatorService.trace_exchange_residual(self.l, self.ctx, self.sampling, 1, 1)
        self.assertResidualBelow(report, 1e-8)
        self.assertEqual(report.identity_id, 'tt_tt0:m=1,s=1')

    def test_trace_exchange_without_second_block(self):
        """测试 s = 0 时两侧相同"""
        report = LOperatorService.trace_exchange_residual(self.l, self.ctx, self.sampling, 1, 0)
        self.assertResidualBelow(report, 1e-12)

    def test_trace_exchange_arguments(self):
        """测试 m < 1 时报错"""
        with self.assertRaises(ValidationError):
            LOperatorService.trace_exchange_residual(self.l, self.ctx, self.sampling, 0, 1)

    @pytest.mark.slow
    def test_trace_exchange_larger_blocks(self):
        """测试 (m, s) = (1, 2) 与 (2, 1) 的迹交换恒等式"""
        for m, s in ((1, 2), (2, 1)):
            report = LOperatorService.trace_exchange_residual(self.l, self.ctx, self.sampling, m, s)
            self.assertResidualBelow(report, 1e-8, f"m={m}, s={s}")


class NewtonIdentityTest(EngineTestCase):
    """量子幂与 Newton 恒等式测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = LOperatorService.lop_from_R(self.ctx, 0.1)

    def test_quantum_powers(self):
        """测试 M^k = L_D^{[k]} e^{kħ∂u}"""
        for k in (1, 2, 3):
            report = LOperatorService.quantum_power_residual(self.l, self.ctx, self.sampling, k)
            self.assertResidualBelow(report, 1e-9, f"k={k}")

    def test_newton(self):
        """测试 Manin 矩阵的 Newton 恒等式"""
        self.assertResidualBelow(LOperatorService.newton_residual(self.l, self.ctx, self.sampling), 1e-9)

    def test_newton_range(self):
        """测试 up_to 超过 n+1 时报错"""
        with self.assertRaises(ValidationError):
            LOperatorService.newton_residual(self.l, self.ctx, self.sampling, up_to=4)
