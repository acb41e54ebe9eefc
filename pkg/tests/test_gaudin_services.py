"""
Gaudin 模型服务测试

测试站点表示、半流、经典 rLL 关系、s_m 的交换性、扭变形式、𝔰𝔩₂ 生成函数和经典量子幂。
"""

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from apps.gaudin.operators import AUX, representation, site_space
from apps.gaudin.schemas import GaudinSiteSpec
from apps.gaudin.services import RESIDUE_RADII, GaudinService
from apps.opalg.operators import OperatorElem
from apps.opalg.services import OperatorService
from apps.scalar.expressions import U, lam
from apps.scalar.schemas import SamplingPolicy
from tests.base import EngineTestCase
from utils.exceptions import InapplicableCheckError, SamplingExhaustedError


def sites(text):
    return GaudinSiteSpec.parse_list(text)


class GaudinSiteTest(EngineTestCase):
    """站点描述与表示测试类"""

    def test_parse_list(self):
        """测试解析站点列表"""
        parsed = sites('defining@0.1, dual@0.45')
        self.assertEqual([s.rep for s in parsed], ['defining', 'dual'])
        self.assertEqual(parsed[1].eval_point, complex(0.45))

    def test_parse_alias(self):
        """测试 dual_defining 视为 dual"""
        self.assertEqual(GaudinSiteSpec.parse('dual_defining@0.2').rep, 'dual')

    def test_parse_missing_separator(self):
        """测试缺少 '@' 时报错"""
        with self.assertRaises(ValueError):
            GaudinSiteSpec.parse('defining')

    def test_label_round_trip(self):
        """测试 label 可被 parse 回读"""
        site = GaudinSiteSpec(rep='dual', eval_point=complex(0.3, -0.2))
        self.assertEqual(GaudinSiteSpec.parse(site.label()), site)

    def test_dual_representation(self):
        """测试对偶表示 e_ij ↦ −E_ji 保持交换子"""
        n = 3
        def rho(i, j):
            return representation('dual', n, i, j)
        # [e_01, e_10] = e_00 − e_11
        commutator = rho(0, 1) @ rho(1, 0) - rho(1, 0) @ rho(0, 1)
        np.testing.assert_allclose(commutator, rho(0, 0) - rho(1, 1), atol=1e-15)

    def test_traceless_representation(self):
        """测试无迹投影后 Σ_l e_ll 的像为零"""
        for rep in ('defining', 'dual'):
            total = sum(representation(rep, 3, l, l, traceless=True) for l in range(3))
            np.testing.assert_allclose(total, 0, atol=1e-15)

    def test_unknown_representation(self):
        """测试未知表示报错"""
        with self.assertRaises(ValidationError):
            representation('adjoint', 2, 0, 1)

    def test_site_space_weights(self):
        """测试定义表示与对偶表示的权"""
        space = site_space(2, sites('defining@0.1,dual@0.45'))
        self.assertEqual(space.labels, ('s1', 's2'))
        projector = GaudinService.zero_weight_projector(space)
        self.assertAlmostEqual(np.trace(projector).real, 2)

    def test_duplicate_points(self):
        """测试求值点重复时报错"""
        with self.assertRaises(ValidationError):
            GaudinService.gaudin_L(2, sites('defining@0.1,dual@0.1'))


class GaudinLOperatorTest(EngineTestCase):
    """Gaudin L 算子测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = GaudinService.gaudin_L(2, sites('defining@0.1,dual@0.45'))

    def test_half_current_index_check(self):
        """测试半流下标越界时报错"""
        with self.assertRaises(ValidationError):
            GaudinService.half_currents(self.l, 0, 2)

    def test_half_current_residue(self):
        """测试半流在 v_k 处的留数为 Π_k(e_ij)"""
        report = GaudinService.residue_residual(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-6)
        self.assertEqual(report.samples_used, self.sampling.samples)

    def test_residue_radii_below_guard(self):
        """测试外推半径小于分母保护阈值时仍能求值"""
        self.assertLess(max(RESIDUE_RADII), self.ctx.denominator_guard)
        ctx = self.make_ctx(denominator_guard=0.2)
        self.assertResidualBelow(GaudinService.residue_residual(self.l, ctx, self.sampling), 1e-6)

    def test_residue_keeps_dynamical_guard(self):
        """测试 λ₁ = λ₂ 时仍触发重新采样"""
        sampling = SamplingPolicy(samples=2, seed=1, max_retries=3, fixed={'lam1': 0.2, 'lam2': 0.2})
        with self.assertRaises(SamplingExhaustedError):
            GaudinService.residue_residual(self.l, self.ctx, sampling)

    def test_residue_without_sites(self):
        """测试没有站点时留数检查不适用"""
        with self.assertRaises(InapplicableCheckError):
            GaudinService.residue_residual(GaudinService.gaudin_L(2), self.ctx, self.sampling)

    def test_classical_limit(self):
        """测试量子 L 算子的一阶项为 Gaudin L 算子"""
        report = GaudinService.classical_limit_residual(self.ctx, self.sampling, (0.1,))
        self.assertResidualBelow(report, 1e-5)
        self.assertLess(report.details['stability'], 1e-5)

    def test_classical_limit_two_sites(self):
        """测试两个融合站点的经典极限，加倍步长的外推差也在容差内"""
        report = GaudinService.classical_limit_residual(self.ctx, self.sampling, (0.1, 0.45))
        self.assertResidualBelow(report, 1e-5)
        self.assertLess(report.details['stability'], 1e-5)

    def test_drll(self):
        """测试动力学经典 rLL 关系"""
        self.assertResidualBelow(GaudinService.drll_residual(self.l, self.ctx, self.sampling), 1e-9)

    def test_drll_two_defining_sites(self):
        """测试两个定义表示站点的 rLL 关系"""
        l = GaudinService.gaudin_L(2, sites('defining@0.1,defining@0.45'))
        self.assertResidualBelow(GaudinService.drll_residual(l, self.ctx, self.sampling), 1e-9)

    def test_weight_zero(self):
        """测试 𝓛 与 E_kk + h_k 交换"""
        self.assertResidualBelow(GaudinService.ehl_classical_residual(self.l, self.ctx, self.sampling), 1e-10)

    def test_manin(self):
        """测试 ∂u − D̂ + 𝓛 是 Manin 矩阵"""
        self.assertResidualBelow(GaudinService.manin_residual(self.l, self.ctx, self.sampling), 1e-9)

    @pytest.mark.slow
    def test_drll_rank_three(self):
        """测试 n = 3 的 rLL 关系"""
        l = GaudinService.gaudin_L(3, sites('defining@0.1,dual@0.45'))
        ctx = self.make_ctx(n=3)
        self.assertResidualBelow(GaudinService.drll_residual(l, ctx, self.sampling), 1e-9)


class GaudinHamiltonianTest(EngineTestCase):
    """s_m(u) 测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = GaudinService.gaudin_L(2, sites('defining@0.1,dual@0.45'))

    def test_char_poly_keys(self):
        """测试 s_m 的个数为 n+1"""
        s = GaudinService.char_poly_classical(self.l)
        self.assertEqual(sorted(s), [0, 1, 2])

    def test_leading_coefficient_is_one(self):
        """测试 s₀ = 1"""
        s = GaudinService.char_poly_classical(self.l)
        point = {U: 0.27 + 0.05j, lam(1): 0.21 - 0.06j, lam(2): -0.14 + 0.11j}
        values = s[0].evaluate(point, self.ctx)
        zero = np.zeros((self.l.quantum.dim, self.l.quantum.dim))
        np.testing.assert_allclose(values.get((), zero), np.eye(self.l.quantum.dim), atol=1e-12)
        for mono, value in values.items():
            if mono != ():
                np.testing.assert_allclose(value, 0, atol=1e-12)

    def test_cartan_commutes(self):
        """测试 h_k 与 s_m 交换"""
        self.assertResidualBelow(GaudinService.cartan_residual_s(self.l, self.ctx, self.sampling), 1e-10)

    def test_weight_blocks(self):
        """测试 s_m 保持权子空间"""
        self.assertResidualBelow(GaudinService.weight_block_residual(self.l, self.ctx, self.sampling), 1e-10)

    def test_commutativity_on_zero_weight(self):
        """测试 [s_m(u), s_l(v)] 在零权子空间上为零"""
        report = GaudinService.commutativity_on_zero_weight(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-8)

    def test_commutativity_traceless(self):
        """测试无迹投影后的交换性"""
        l = GaudinService.gaudin_L(2, sites('defining@0.1,dual@0.45'), traceless=True)
        report = GaudinService.commutativity_on_zero_weight(l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-8)

    @pytest.mark.slow
    def test_commutativity_rank_three_traceless(self):
        """测试 n = 3、三个定义表示站点无迹投影后的交换性"""
        l = GaudinService.gaudin_L(3, sites('defining@0.1,defining@0.45,defining@-0.3'), traceless=True)
        ctx = self.make_ctx(n=3)
        for seed in (2, 3, 4, 5):
            with self.subTest(seed=seed):
                report = GaudinService.commutativity_on_zero_weight(l, ctx, self.sampling.with_seed(seed))
                self.assertResidualBelow(report, 1e-8)

    @pytest.mark.slow
    def test_commutativity_rank_three_mixed_sites(self):
        """测试 n = 3 定义表示与对偶表示站点的交换性"""
        l = GaudinService.gaudin_L(3, sites('defining@0.1,dual@0.45'), traceless=True)
        ctx = self.make_ctx(n=3)
        for seed in (2, 4, 5):
            with self.subTest(seed=seed):
                report = GaudinService.commutativity_on_zero_weight(l, ctx, self.sampling.with_seed(seed))
                self.assertResidualBelow(report, 1e-8)

    def test_empty_zero_weight_subspace(self):
        """测试零权子空间为空时检查不适用"""
        l = GaudinService.gaudin_L(2, sites('defining@0.1'))
        with self.assertRaises(InapplicableCheckError):
            GaudinService.commutativity_on_zero_weight(l, self.ctx, self.sampling)

    def test_twisted_form(self):
        """测试扭变形式给出同一个 Q(u,∂u)"""
        self.assertResidualBelow(GaudinService.twisted_gaudin_residual(self.l, self.ctx, self.sampling), 1e-8)

    def test_twisted_form_without_correction(self):
        """测试 n = 2 时省略 Cartan 修正项在零权子空间上不改变 Q(u,∂u)"""
        report = GaudinService.uncorrected_twist_residual(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-8)

    def test_correction_required_for_rank_three(self):
        """测试 n = 3 时省略修正项的检查不适用"""
        l = GaudinService.gaudin_L(3, sites('defining@0.1,dual@0.45'))
        with self.assertRaises(InapplicableCheckError):
            GaudinService.uncorrected_twist_residual(l, self.make_ctx(n=3), self.sampling)

    @pytest.mark.slow
    def test_correction_matters_for_rank_three(self):
        """测试 n = 3 时省略修正项会改变零权子空间上的 Q(u,∂u)"""
        l = GaudinService.gaudin_L(3, sites('defining@0.1,dual@0.45'))
        ctx = self.make_ctx(n=3)
        space = l.space
        bare = (OperatorElem.diff_op(space, U) - OperatorService.d_hat(space, AUX)
                + GaudinService.twisted_L(l, corrected=False))
        lhs = OperatorService.column_det(OperatorService.entries(l.manin(), AUX))
        rhs = OperatorService.column_det(OperatorService.entries(bare, AUX))
        report = OperatorService.operator_residual(lhs, rhs, ctx, self.sampling, 1e-8,
                                                   projector=GaudinService.zero_weight_projector(l.quantum))
        self.assertEqual(report.status, 'ok')
        self.assertGreater(report.max_rel, 1e-6)


class Sl2GaudinTest(EngineTestCase):
    """𝔰𝔩₂ 生成函数测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = GaudinService.gaudin_L(2, sites('defining@0.1,defining@0.45'), traceless=True)

    def test_requires_traceless(self):
        """测试没有无迹投影时报错"""
        l = GaudinService.gaudin_L(2, sites('defining@0.1,defining@0.45'))
        with self.assertRaises(ValidationError):
            GaudinService.sl2_generating_function(l)

    def test_unknown_form(self):
        """测试未知生成函数形式报错"""
        with self.assertRaises(ValidationError):
            GaudinService.sl2_generating_function(self.l, form='other')

    def test_forms_agree(self):
        """测试两种写法在零权子空间上一致"""
        self.assertResidualBelow(GaudinService.sl2_forms_residual(self.l, self.ctx, self.sampling), 1e-9)

    def test_commuting(self):
        """测试 [S(u), S(v)] 在零权子空间上为零"""
        self.assertResidualBelow(GaudinService.sl2_commutator_residual(self.l, self.ctx, self.sampling), 1e-8)

    def test_crosscheck(self):
        """测试一般的列行列式与 𝔰𝔩₂ 形式一致"""
        self.assertResidualBelow(GaudinService.sl2_crosscheck(self.l, self.ctx, self.sampling), 1e-8)


class ClassicalQuantumPowerTest(EngineTestCase):
    """经典量子幂测试类"""

    def setUp(self):
        """测试前的准备工作"""
        super().setUp()
        self.l = GaudinService.gaudin_L(2, sites('defining@0.1,dual@0.45'))

    def test_power_zero_is_identity(self):
        """测试 𝓛_D^{[0]} = 1"""
        powers = GaudinService.classical_quantum_power(self.l, 0)
        self.assertEqual(len(powers), 1)
        np.testing.assert_allclose(powers[0].evaluate({}, self.ctx)[()], np.eye(self.l.space.dim), atol=1e-15)

    def test_negative_power(self):
        """测试负次数报错"""
        with self.assertRaises(ValidationError):
            GaudinService.classical_quantum_power(self.l, -1)

    def test_recursion(self):
        """测试 𝓜^k 按量子幂展开"""
        report = GaudinService.quantum_power_recursion_residual(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-9)

    def test_newton(self):
        """测试由量子幂的迹重建 s_m"""
        self.assertResidualBelow(GaudinService.classical_newton_residual(self.l, self.ctx, self.sampling), 1e-8)

    def test_traced_powers_commute(self):
        """测试量子幂的迹在零权子空间上交换"""
        report = GaudinService.traced_power_commutativity(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-8)

    def test_second_power(self):
        """测试 tr 𝓛_D² 与 s_m 交换"""
        report = GaudinService.second_power_commutativity(self.l, self.ctx, self.sampling)
        self.assertResidualBelow(report, 1e-8)
