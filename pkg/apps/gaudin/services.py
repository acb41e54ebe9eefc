"""
Gaudin 模型业务逻辑服务

经典极限 ħ→0：由站点构造 Gaudin L 算子，计算特征多项式 Q(u,∂_u) 的系数 s_m(u)，
在零权子空间上验证交换性，以及扭变形式、𝔰𝔩₂ 生成函数和经典量子幂。
"""

import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from apps.felder.builders import classical_r_matrix, lam_diff
from apps.felder.services import FelderService
from apps.gaudin.operators import AUX, ClassicalLOperator
from apps.gaudin.schemas import GaudinSiteSpec
from apps.lops.operators import DynamicalLOperator
from apps.lops.services import LOperatorService
from apps.opalg.coefficients import MatrixExpr, mprod, msum, scaled, tensor
from apps.opalg.operators import OperatorElem
from apps.opalg.services import OperatorService
from apps.opalg.spaces import Space
from apps.scalar.context import EngineContext
from apps.scalar.expressions import Const, U, V, Var, VarId, lam, theta, theta_ratio
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport
from utils.exceptions import InapplicableCheckError, SingularPointError
from utils.helpers import richardson_extrapolate

# 配置日志
logger = logging.getLogger(__name__)

# 𝔰𝔩₂ 情形的单个动力学变量 λ = λ₁ − λ₂
LAM = VarId('lam')

# 留数外推使用的半径
RESIDUE_RADII = (1e-3, 5e-4, 2.5e-4)

# 经典极限外推使用的 ħ 步长
LIMIT_HBARS = (1e-3, 5e-4, 2.5e-4)


class GaudinService:
    """
    Gaudin 模型服务类

    所有 Gaudin 算子都属于 diff 型环，谱参数 u、v 只作为系数变量出现。
    """

    # 构造

    @staticmethod
    def gaudin_L(n: int, sites: Sequence[GaudinSiteSpec] = (), traceless: bool = False) -> ClassicalLOperator:
        """
        站点表示对应的椭圆 Gaudin L 算子

        𝓛_ij = e⁺_ji，𝓛_ii = e⁺_ii + Σ_{k≠i} θ'(λ_ik)/θ(λ_ik) h_k。

        Args:
            n: 秩
            sites: 站点描述
            traceless: 是否减去 (1/n)Σ_l e_ll

        Returns:
            ClassicalLOperator: 经典 L 算子
        """
        l = ClassicalLOperator(n, sites, traceless)
        logger.debug(f"构造 Gaudin L 算子: {l}")
        return l

    @staticmethod
    def half_currents(l: ClassicalLOperator, i: int, j: int, var: VarId = U) -> MatrixExpr:
        """半流 e⁺_ij(u;λ)，作为量子空间上的系数"""
        if not (0 <= i < l.n and 0 <= j < l.n):
            raise ValidationError(f"半流下标越界: ({i}, {j})，n={l.n}")
        return l.half_current(i, j, var)

    @staticmethod
    def classical_manin(l: ClassicalLOperator, var: VarId = U) -> OperatorElem:
        """𝓜 = ∂_u − D̂_λ + 𝓛(u;λ)"""
        return l.manin(var)

    @staticmethod
    def char_poly_classical(l: ClassicalLOperator, var: VarId = U) -> Dict[int, OperatorElem]:
        """
        Q(u,∂_u) = det 𝓜 = Σ_m s_m(u) ∂_u^{n−m}

        Returns:
            dict: m 到 s_m(u) 的映射，m = 0..n，缺项为零
        """
        det = OperatorService.column_det(OperatorService.entries(l.manin(var), AUX))
        grouped = det.group_by(var)
        extra = [p for p in grouped if p > l.n]
        if extra:
            raise ValidationError(f"特征多项式出现超过 n 次的 ∂_u: {extra}")
        return {m: grouped.get(l.n - m, OperatorElem.zero(l.quantum, 'diff')) for m in range(l.n + 1)}

    @staticmethod
    def zero_weight_projector(space: Space, labels: Sequence[str] = None) -> np.ndarray:
        """
        联合零权子空间 ∩_k ker h_k 上的正交投影

        h_k 取所列腿（默认全部）上的权；没有零权向量时返回零矩阵。
        """
        labels = space.labels if labels is None else labels
        for weights, projector in space.weight_blocks(labels):
            if all(abs(w) < 1e-12 for w in weights):
                return projector
        return np.zeros((space.dim, space.dim), dtype=complex)

    @staticmethod
    def _require_zero_weight(l: ClassicalLOperator) -> np.ndarray:
        projector = GaudinService.zero_weight_projector(l.quantum)
        rank = int(round(np.trace(projector).real))
        if rank == 0:
            raise InapplicableCheckError(f"{l} 的零权子空间为空")
        logger.debug(f"零权子空间维数 {rank}")
        return projector

    # 经典量子幂

    @staticmethod
    def classical_quantum_power(l: ClassicalLOperator, k: int, var: VarId = U) -> List[OperatorElem]:
        """
        经典量子幂 𝓛_D^{[0]}, ..., 𝓛_D^{[k]}

        𝓛_D^{[i+1]} = 𝓛_D 𝓛_D^{[i]} + ∂_u 𝓛_D^{[i]}，𝓛_D^{[0]} = 1。
        """
        if k < 0:
            raise ValidationError(f"量子幂次数不能为负: {k}")
        l_d = l.l_d(var)
        powers = [OperatorElem.identity(l.space, 'diff')]
        for _ in range(k):
            previous = powers[-1]
            powers.append(l_d * previous + previous.derivative_in(var))
        return powers

    @staticmethod
    def simplified_power(l: ClassicalLOperator, k: int, var: VarId = U) -> OperatorElem:
        """简化量子幂 𝓛_D 𝓛_D^{[k−1]}，k = 2 时为 𝓛_D²"""
        if k < 1:
            raise ValidationError(f"简化量子幂需要 k ≥ 1: {k}")
        return l.l_d(var) * GaudinService.classical_quantum_power(l, k - 1, var)[-1]

    # 残差

    @staticmethod
    def residue_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                         radii: Sequence[float] = RESIDUE_RADII, tol: float = 1e-6,
                         identity_id: str = 'half_current_residue', anchor: str = 'hc_eij_N') -> ResidualReport:
        """(u−v_k) e⁺_ij(u;λ) 在 u → v_k 时趋于 Π_k(e_ij)，沿若干半径外推"""
        if not l.sites:
            raise InapplicableCheckError("没有站点时半流为零，没有留数")
        currents = {(i, j): l.half_current(i, j) for i in range(l.n) for j in range(l.n)}
        variables = [lam(k + 1) for k in range(l.n)]
        dynamical = [theta(lam_diff(i, j)) for i in range(l.n) for j in range(i + 1, l.n)]
        # 奇点保护只作用于 λ 因子，u → v_k 的极点由半径控制
        near = ctx.model_copy(update={'denominator_guard': min(radii) / 10})

        def measure(point):
            for factor in dynamical:
                magnitude = abs(factor.evaluate(point, ctx))
                if magnitude < ctx.denominator_guard:
                    raise SingularPointError(f"动力学因子过小: |{factor}| = {magnitude:.3e}", magnitude)
            pairs = []
            for k, site in enumerate(l.sites):
                v = complex(site.eval_point)
                for (i, j), current in currents.items():
                    values = [r * current.evaluate({**point, U: v + r}, near) for r in radii]
                    pairs.append((richardson_extrapolate(radii, values), l.site_matrix(k, i, j)))
            return pairs

        return OperatorService.pointwise_residual(measure, variables, sampling, tol, identity_id, anchor)

    @staticmethod
    def classical_limit_residual(ctx: EngineContext, sampling: SamplingPolicy, points: Sequence[complex] = (0.1,),
                                 role: str = 'second_space', n: int = None,
                                 hbars: Sequence[float] = LIMIT_HBARS, tol: float = 1e-5,
                                 identity_id: str = 'classical_limit_L', anchor: str = 'LqLc') -> ResidualReport:
        """
        L(u;λ) = 1 + ħ𝓛(u;λ) + o(ħ)

        量子 L 算子由定义表示站点上的 R 矩阵融合而成，经典 L 算子取同样的站点。
        """
        n = ctx.n if n is None else n
        sites = [GaudinSiteSpec(rep='defining', eval_point=p) for p in points]
        classical = ClassicalLOperator(n, sites)

        def quantum(c: EngineContext) -> MatrixExpr:
            if not points:
                return DynamicalLOperator.trivial(n).coefficient(U)
            return LOperatorService.lop_from_sites(c.model_copy(update={'n': n}), points, role).coefficient(U)

        return FelderService.first_order_residual(
            quantum, classical.coefficient(U), ctx, sampling, hbars, tol, identity_id, anchor,
        )

    @staticmethod
    def drll_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                      tol: float = 1e-9, identity_id: str = 'DrLL', anchor: str = 'DrLL') -> ResidualReport:
        """
        动力学经典 rLL 关系

        [𝓛¹(u)−D̂¹, 𝓛²(v)−D̂²] − Σ_k h_k ∂_{λ_k} r¹²(u−v;λ) = [𝓛¹(u)+𝓛²(v), r¹²(u−v;λ)]
        """
        space = OperatorService.aux_space(l.n, ['1', '2'], l.quantum)
        l1 = l.operator(U).relabel({AUX: '1'}).embed(space)
        l2 = l.operator(V).relabel({AUX: '2'}).embed(space)
        r = OperatorElem.from_coefficient(space, classical_r_matrix(space, ('1', '2'), Var(U) - Var(V)), 'diff')
        dynamical = OperatorElem.zero(space, 'diff')
        for k in range(l.n):
            dynamical = dynamical + r.derivative_in(lam(k + 1)).left_matrix(l.cartan(k, space))
        lhs = (l1 - OperatorService.d_hat(space, '1')).commutator(l2 - OperatorService.d_hat(space, '2')) - dynamical
        rhs = (l1 + l2).commutator(r)
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def ehl_classical_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                               tol: float = 1e-10, identity_id: str = 'EhL_LEh_G',
                               anchor: str = 'EhL_LEh_G') -> ResidualReport:
        """(E_ii + h_i)𝓛(u;λ) = 𝓛(u;λ)(E_ii + h_i)"""
        op = l.operator()
        lefts, rights = [], []
        for i in range(l.n):
            total = l.space.elementary(AUX, i, i) + l.cartan(i, l.space)
            lefts.append(op.left_matrix(total))
            rights.append(op.right_matrix(total))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def manin_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                       tol: float = 1e-9, identity_id: str = 'classical_manin',
                       anchor: str = 'chpolGaudin') -> ResidualReport:
        """𝓜 = ∂_u − D̂_λ + 𝓛(u;λ) 是 Manin 矩阵"""
        return OperatorService.manin_check(l.manin(), AUX, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def cartan_residual_s(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                          ms: Sequence[int] = None, tol: float = 1e-10, identity_id: str = 'hs_sh',
                          anchor: str = 'hs_sh') -> ResidualReport:
        """h_k s_m(u) = s_m(u) h_k"""
        s = GaudinService.char_poly_classical(l)
        ms = range(1, l.n + 1) if ms is None else ms
        lefts, rights = [], []
        for m in ms:
            for k in range(l.n):
                h = l.cartan(k)
                lefts.append(s[m].left_matrix(h))
                rights.append(s[m].right_matrix(h))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def weight_block_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                              tol: float = 1e-10, identity_id: str = 'weight_blocks',
                              anchor: str = 'hs_sh') -> ResidualReport:
        """s_m(u) 保持各权子空间：s_m = Σ_w P_w s_m P_w"""
        s = GaudinService.char_poly_classical(l)
        blocks = [projector for _, projector in l.quantum.weight_blocks(l.site_labels)]
        lefts, rights = [], []
        for m in range(1, l.n + 1):
            diagonal = OperatorElem.zero(l.quantum, 'diff')
            for projector in blocks:
                diagonal = diagonal + s[m].left_matrix(projector).right_matrix(projector)
            lefts.append(s[m])
            rights.append(diagonal)
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def commutativity_on_zero_weight(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                     pairs: Sequence[Tuple[int, int]] = None, tol: float = 1e-8,
                                     identity_id: str = 'ss_ss', anchor: str = 'ss_ss') -> ResidualReport:
        """
        s_m(u) s_l(v) = s_l(v) s_m(u) mod 𝒜h

        比较 s_m(u)s_l(v) 与 s_l(v)s_m(u) 右乘 P_W 后的每个 ∂_λ 单项式系数，
        P_W 为联合零权子空间上的投影；相对残差以乘积的模为尺度。

        Raises:
            InapplicableCheckError: 零权子空间为空时抛出
        """
        projector = GaudinService._require_zero_weight(l)
        if pairs is None:
            pairs = [(m, k) for m in range(1, l.n + 1) for k in range(m, l.n + 1)]
        s_u = GaudinService.char_poly_classical(l, U)
        s_v = GaudinService.char_poly_classical(l, V)
        lefts, rights = [], []
        for m, k in pairs:
            lefts.append(s_u[m] * s_v[k])
            rights.append(s_v[k] * s_u[m])
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor,
                                                 projector=projector)

    @staticmethod
    def twisted_L(l: ClassicalLOperator, var: VarId = U, corrected: bool = True) -> OperatorElem:
        """
        扭变后的 L 算子，corrected 时加上 Cartan 修正

        𝓛̃ 由 r̃ 的核 θ(u−v_k−λ_ij)/(θ(u−v_k)θ(−λ_ij)) 给出，修正项为 Σ_{i≠j} E_ii θ'(λ_ij)/θ(λ_ij) h_j。
        """
        space = l.space
        terms = []
        for k, site in enumerate(l.sites):
            x = Var(var) - Const(complex(site.eval_point))
            for i in range(l.n):
                for j in range(l.n):
                    matrix = space.elementary(AUX, i, j) @ l.site_matrix(k, j, i, space)
                    if i == j:
                        kernel = theta_ratio(x)
                    else:
                        lij = lam_diff(i, j)
                        kernel = theta(x - lij) / (theta(x) * theta(-lij))
                    terms.append(tensor(kernel, matrix, space.dims))
        for i in range(l.n):
            for j in range(l.n):
                if corrected and i != j:
                    matrix = space.elementary(AUX, i, i) @ l.cartan(j, space)
                    terms.append(tensor(theta_ratio(lam_diff(i, j)), matrix, space.dims))
        return OperatorElem.from_coefficient(space, msum(terms, space.dims), 'diff')

    @staticmethod
    def twisted_gaudin_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                tol: float = 1e-9, identity_id: str = 'Q_Ltilde',
                                anchor: str = 'Q_Ltilde') -> ResidualReport:
        """det(∂_u − D̂_λ + 𝓛) = det(∂_u − D̂_λ + 𝓛̃ + Σ_{i≠j} E_ii θ'(λ_ij)/θ(λ_ij) h_j)"""
        space = l.space
        twisted = (OperatorElem.diff_op(space, U) - OperatorService.d_hat(space, AUX)
                   + GaudinService.twisted_L(l))
        lhs = OperatorService.column_det(OperatorService.entries(l.manin(), AUX))
        rhs = OperatorService.column_det(OperatorService.entries(twisted, AUX))
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def uncorrected_twist_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                   tol: float = 1e-8, identity_id: str = 'Q_Ltilde_mod_h',
                                   anchor: str = 'Q_Ltilde') -> ResidualReport:
        """
        n ≤ 2 时 det(∂_u − D̂_λ + 𝓛̃) = Q(u,∂_u) mod 𝒜h

        两侧右乘零权投影 P_W。n ≥ 3 时修正项不能省略，检查不适用。
        """
        if l.n >= 3:
            raise InapplicableCheckError(f"n={l.n} 时 Cartan 修正项不能省略")
        projector = GaudinService._require_zero_weight(l)
        space = l.space
        bare = (OperatorElem.diff_op(space, U) - OperatorService.d_hat(space, AUX)
                + GaudinService.twisted_L(l, corrected=False))
        lhs = OperatorService.column_det(OperatorService.entries(l.manin(), AUX))
        rhs = OperatorService.column_det(OperatorService.entries(bare, AUX))
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor,
                                                 projector=projector)

    # 𝔰𝔩₂

    @staticmethod
    def _require_sl2(l: ClassicalLOperator):
        if l.n != 2 or not l.traceless:
            raise ValidationError("𝔰𝔩₂ 生成函数需要 n = 2 且做无迹投影")

    @staticmethod
    def sl2_currents(l: ClassicalLOperator, var: VarId = U) -> Tuple[MatrixExpr, MatrixExpr, MatrixExpr]:
        """h⁺(u) = e⁺₁₁ − e⁺₂₂，e⁺_λ(u) = e⁺₁₂，f⁺_λ(u) = e⁺₂₁，λ₁₂ 取单个变量 λ"""
        GaudinService._require_sl2(l)
        x = Var(LAM)
        h = msum([l.half_current(0, 0, var), scaled(-1, l.half_current(1, 1, var))], l.quantum.dims)
        return h, l.half_current(0, 1, var, lij=x), l.half_current(1, 0, var, lij=-x)

    @staticmethod
    def sl2_generating_function(l: ClassicalLOperator, var: VarId = U, form: str = 'product') -> OperatorElem:
        """
        𝔰𝔩₂ 椭圆 Gaudin 哈密顿量的生成函数 S_λ(u)

        product:   (∂_λ − h⁺/2)² + ∂_u h⁺/2 + e⁺f⁺
        symmetric: (∂_λ − h⁺/2)² + (e⁺f⁺ + f⁺e⁺)/2
        两者相差 𝒜h 中的元素。
        """
        if form not in ('product', 'symmetric'):
            raise ValidationError(f"未知的生成函数形式: {form}")
        q = l.quantum
        h, e, f = GaudinService.sl2_currents(l, var)
        half_h = OperatorElem.from_coefficient(q, h, 'diff').scale(0.5)
        shifted = OperatorElem.diff_op(q, LAM) - half_h
        if form == 'product':
            extra = half_h.derivative_in(var) + OperatorElem.from_coefficient(q, mprod([e, f]), 'diff')
        else:
            both = OperatorElem.from_coefficient(q, msum([mprod([e, f]), mprod([f, e])], q.dims), 'diff')
            extra = both.scale(0.5)
        return shifted * shifted + extra

    @staticmethod
    def sl2_forms_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                           tol: float = 1e-9, identity_id: str = 'sl2_forms',
                           anchor: str = 'sl2_S') -> ResidualReport:
        """S_λ(u) 的两种写法在零权子空间上一致"""
        projector = GaudinService._require_zero_weight(l)
        product = GaudinService.sl2_generating_function(l, U, 'product')
        symmetric = GaudinService.sl2_generating_function(l, U, 'symmetric')
        return OperatorService.operator_residual(product, symmetric, ctx, sampling, tol, identity_id, anchor,
                                                 projector=projector)

    @staticmethod
    def sl2_commutator_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                tol: float = 1e-8, identity_id: str = 'sl2_SS',
                                anchor: str = 'sl2_S') -> ResidualReport:
        """[S_λ(u), S_λ(v)] = 0 mod 𝒜h"""
        projector = GaudinService._require_zero_weight(l)
        s_u = GaudinService.sl2_generating_function(l, U)
        s_v = GaudinService.sl2_generating_function(l, V)
        return OperatorService.operator_residual(
            s_u.commutator(s_v), OperatorElem.zero(l.quantum, 'diff'), ctx, sampling, tol, identity_id, anchor,
            projector=projector,
        )

    @staticmethod
    def sl2_reference(l: ClassicalLOperator) -> OperatorElem:
        """Q = ∂_u² − θ'(λ)/θ(λ) h ∂_u − S_λ(u)，h = h₁ − h₂"""
        q = l.quantum
        h = l.cartan(0) - l.cartan(1)
        drift = OperatorElem.from_coefficient(q, tensor(theta_ratio(Var(LAM)), h, q.dims), 'diff')
        return (OperatorElem.diff_op(q, U, 2) - drift * OperatorElem.diff_op(q, U)
                - GaudinService.sl2_generating_function(l, U))

    @staticmethod
    def sl2_crosscheck(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                       tol: float = 1e-8, identity_id: str = 'sl2_crosscheck',
                       anchor: str = 'sl2_det') -> ResidualReport:
        """
        一般的 n = 2 列行列式限制到 λ = λ₁ − λ₂ 后与 𝔰𝔩₂ 形式一致

        ∂_λ₁ ↦ ∂_λ，∂_λ₂ ↦ −∂_λ，系数在 λ₁ = λ、λ₂ = 0 处求值，两侧都右乘 P_W。
        """
        projector = GaudinService._require_zero_weight(l)
        det = OperatorService.column_det(OperatorService.entries(l.manin(U), AUX))
        general = det.substitute_monomials({lam(1): (LAM, 1), lam(2): (LAM, -1)})
        reference = GaudinService.sl2_reference(l)
        zero = np.zeros((l.quantum.dim, l.quantum.dim), dtype=complex)

        def measure(point):
            restricted = {lam(1): point[LAM], lam(2): 0j, U: point[U]}
            left = general.evaluate(restricted, ctx)
            right = reference.evaluate(point, ctx)
            return [(left.get(mono, zero) @ projector, right.get(mono, zero) @ projector)
                    for mono in set(left) | set(right)]

        return OperatorService.pointwise_residual(measure, [LAM, U], sampling, tol, identity_id, anchor)

    # 经典量子幂残差

    @staticmethod
    def _manin_power_expansion(l: ClassicalLOperator, k: int, powers: List[OperatorElem],
                               space: Space, trace: bool = False) -> OperatorElem:
        # 𝓜^k = Σ_i C(k,i) 𝓛_D^{[i]} ∂_u^{k−i}
        total = OperatorElem.zero(space, 'diff')
        for i in range(k + 1):
            term = powers[i].partial_trace([AUX]) if trace else powers[i]
            total = total + (term * OperatorElem.diff_op(space, U, k - i)).scale(math.comb(k, i))
        return total

    @staticmethod
    def quantum_power_recursion_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                         max_power: int = 3, tol: float = 1e-9,
                                         identity_id: str = 'classical_quantum_powers',
                                         anchor: str = 'quantum_powers_G') -> ResidualReport:
        """𝓜^k = Σ_i C(k,i) 𝓛_D^{[i]}(u) ∂_u^{k−i}，k = 1..max_power"""
        powers = GaudinService.classical_quantum_power(l, max_power)
        m_op = l.manin()
        lefts, rights = [], []
        for k in range(1, max_power + 1):
            lefts.append(m_op.power(k))
            rights.append(GaudinService._manin_power_expansion(l, k, powers, l.space))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def classical_newton_residual(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                  tol: float = 1e-8, identity_id: str = 'newton_G',
                                  anchor: str = 'newton_G') -> ResidualReport:
        """
        由量子幂的迹经 Newton 恒等式重建 s_m

        tr 𝓜^j 用 Σ_i C(j,i) tr 𝓛_D^{[i]} ∂_u^{j−i} 表示，q_n 与 det 𝓜 比较。
        """
        m_op = l.manin()
        powers = GaudinService.classical_quantum_power(l, l.n)
        traces = {
            j: GaudinService._manin_power_expansion(l, j, powers, l.quantum, trace=True)
            for j in range(1, l.n + 1)
        }
        lefts, rights = OperatorService.newton_relations(m_op, AUX, l.n, traces)
        newton = OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, 'newton_traces', anchor)
        det = OperatorService.column_det(OperatorService.entries(m_op, AUX))
        top = OperatorService.operator_residual(
            OperatorService.antisymmetrized_trace(m_op, AUX, l.n), det, ctx, sampling, tol, 'q_n_det', anchor,
        )
        return OperatorService.combine_reports([newton, top], identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def traced_power_commutativity(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                   max_power: int = 2, tol: float = 1e-8,
                                   identity_id: str = 'traced_powers', anchor: str = 'quantum_powers_G') -> ResidualReport:
        """[tr 𝓛_D^{[k]}(u), tr 𝓛_D^{[m]}(v)] = 0 mod 𝒜h，k, m ≤ max_power"""
        projector = GaudinService._require_zero_weight(l)
        at_u = [p.partial_trace([AUX]) for p in GaudinService.classical_quantum_power(l, max_power, U)]
        at_v = [p.partial_trace([AUX]) for p in GaudinService.classical_quantum_power(l, max_power, V)]
        lefts, rights = [], []
        for k in range(1, max_power + 1):
            for m in range(1, max_power + 1):
                lefts.append(at_u[k].commutator(at_v[m]))
                rights.append(OperatorElem.zero(l.quantum, 'diff'))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor,
                                                 projector=projector)

    @staticmethod
    def second_power_commutativity(l: ClassicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                   tol: float = 1e-8, identity_id: str = 'trace_L_D_squared',
                                   anchor: str = 'quantum_powers_G') -> ResidualReport:
        """tr(𝓛_D(u)²) 与全部 s_m(v) 在零权子空间上交换"""
        projector = GaudinService._require_zero_weight(l)
        square = GaudinService.simplified_power(l, 2, U).partial_trace([AUX])
        s_v = GaudinService.char_poly_classical(l, V)
        lefts = [square.commutator(s_v[m]) for m in range(1, l.n + 1)]
        rights = [OperatorElem.zero(l.quantum, 'diff') for _ in lefts]
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor,
                                                 projector=projector)
