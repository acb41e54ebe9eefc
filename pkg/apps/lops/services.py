"""
L 算子业务逻辑服务

由 Felder R 矩阵构造动力学 L 算子并做融合，构造 Manin 矩阵、阶梯乘积 𝕃、
融合 R 矩阵 ℝ、交换族 t_m(u)、特征多项式和量子幂，并计算相应恒等式的残差。
"""

import logging
from typing import Dict, List, Sequence, Tuple

from django.core.exceptions import ValidationError

from apps.felder.builders import felder_r_matrix
from apps.lops.operators import AUX, DynamicalLOperator
from apps.opalg.operators import OperatorElem
from apps.opalg.services import OperatorService
from apps.opalg.spaces import Leg, Space
from apps.scalar.context import EngineContext
from apps.scalar.expressions import Const, ScalarExpr, U, V, Var, VarId, coerce, spectral
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport
from utils.helpers import derive_seed

# 配置日志
logger = logging.getLogger(__name__)

# 融合辅助腿总数上限
MAX_FUSED_LEGS = 4


def aux_labels(start: int, stop: int) -> List[str]:
    """第 start+1 到第 stop 条辅助腿的标签"""
    return [f'{AUX}{i}' for i in range(start + 1, stop + 1)]


def staircase(ctx: EngineContext, var: VarId, count: int) -> List[ScalarExpr]:
    """阶梯点 var, var+ħ, ..., var+(count−1)ħ"""
    return [Var(var) + Const(ctx.hbar * i) if i else Var(var) for i in range(count)]


def _check_range(m: int, total: int):
    if m < 0 or total < m or total > MAX_FUSED_LEGS:
        raise ValidationError(f"辅助腿范围无效: m={m}, N={total}，N 不能超过 {MAX_FUSED_LEGS}")


class LOperatorService:
    """
    L 算子服务类

    所有算子都按构造时的上下文取 ħ，残差方法应使用同一个上下文。
    """

    # 构造

    @staticmethod
    def lop_from_R(ctx: EngineContext, point: complex = 0.1, role: str = 'second_space',
                   label: str = 's1', n: int = None) -> DynamicalLOperator:
        """
        由 Felder R 矩阵构造 L 算子

        second_space 时 L(u) = R(u−v;λ)；inverse 时 L(u) = R⁽²¹⁾(v−u;λ)⁻¹，逐点数值求逆。
        量子空间为 v 处的一个定义表示站点，h_k = E⁽²⁾_kk。

        Args:
            ctx: 引擎上下文
            point: 站点的求值点 v
            role: 'second_space' 或 'inverse'
            label: 站点腿标签
            n: 秩，默认取 ctx.n

        Returns:
            DynamicalLOperator: L 算子

        Raises:
            ValidationError: role 未知时抛出
        """
        n = ctx.n if n is None else n
        if role not in ('second_space', 'inverse'):
            raise ValidationError(f"未知的 L 算子构造方式: {role}")
        v = complex(point)
        quantum = Space([Leg.defining(label, n, eval_point=v)])
        space = Space([Leg.aux(AUX, n)]).concat(quantum)

        if role == 'second_space':
            def builder(var):
                return felder_r_matrix(ctx, space, (AUX, label), Var(var) - Const(v))
        else:
            def builder(var):
                r21 = felder_r_matrix(ctx, space, (label, AUX), Const(v) - Var(var))
                return OperatorService.opaque_inverse(r21, ctx, name=f'R21[{label}]^-1')

        logger.debug(f"构造 L 算子: {role}, n={n}, 站点 {label}@{v}")
        name = f'R[{label}]' if role == 'second_space' else f'R21[{label}]^-1'
        return DynamicalLOperator(n, quantum, builder, name=name)

    @staticmethod
    def fuse(l2: DynamicalLOperator, l1: DynamicalLOperator) -> DynamicalLOperator:
        """
        融合两个 L 算子：L(u;λ) = L₂(u;λ) L₁(u;λ+ħh²)

        Cartan 元 h = h¹ + h²，量子空间为两者的张量积。

        Raises:
            ValidationError: 秩不同或量子空间有公共腿时抛出
        """
        if l1.n != l2.n:
            raise ValidationError(f"L 算子的秩不同: {l1.n} 与 {l2.n}")
        common = set(l1.quantum.labels) & set(l2.quantum.labels)
        if common:
            raise ValidationError(f"量子空间有公共腿: {sorted(common)}")
        quantum = l1.quantum.concat(l2.quantum)
        space = Space([Leg.aux(AUX, l1.n)]).concat(quantum)

        def builder(var):
            second = l2.operator(var).embed(space)
            first = l1.operator(var).embed(space).weight_shifted(l2.cartan_labels)
            return (second * first).coefficient()

        return DynamicalLOperator(l1.n, quantum, builder, name=f'{l2.name}*{l1.name}')

    @staticmethod
    def lop_from_sites(ctx: EngineContext, points: Sequence[complex], role: str = 'second_space') -> DynamicalLOperator:
        """在若干定义表示站点上逐个融合，L = L_N(λ) ⋯ L₁(λ + ħΣ_{l>1} h^l)"""
        result = DynamicalLOperator.trivial(ctx.n)
        for k, point in enumerate(points, start=1):
            site = LOperatorService.lop_from_R(ctx, point, role, label=f's{k}')
            result = site if k == 1 else LOperatorService.fuse(site, result)
        return result

    @staticmethod
    def fused_R_row(ctx: EngineContext, space: Space, u_labels: Sequence[str], v_labels: Sequence[str],
                    u_points: Sequence, v_points: Sequence, orientation: str = 'left') -> OperatorElem:
        """
        融合 R 矩阵 ℝ^{[m,N]}({u_i};{v_j};λ)

        每个因子为 R⁽ⁱʲ⁾(u_i − v_j; λ + ħΣ_{l>i} E⁽ˡ⁾ + ħΣ_{l>j} E⁽ˡ⁾)。
        left 按 i 从左到右、j 从右到左排列，right 则先按 j 再按 i。

        Args:
            space: 所在空间
            u_labels: 前 m 条辅助腿
            v_labels: 后 N−m 条辅助腿
            u_points: 各 u_i 的表达式
            v_points: 各 v_j 的表达式
            orientation: 'left' 或 'right'

        Returns:
            OperatorElem: 只含常数单项式的 shift 型算子，没有因子时为单位元
        """
        m, s = len(u_labels), len(v_labels)
        if len(u_points) != m or len(v_points) != s:
            raise ValidationError("谱参数个数与辅助腿个数不一致")

        def factor(i, j):
            argument = coerce(u_points[i]) - coerce(v_points[j])
            coef = felder_r_matrix(ctx, space, (u_labels[i], v_labels[j]), argument)
            later = list(u_labels[i + 1:]) + list(v_labels[j + 1:])
            return OperatorElem.from_coefficient(space, coef).weight_shifted(later)

        result = OperatorElem.identity(space)
        for i, j in LOperatorService.factor_order(m, s, orientation):
            result = result * factor(i, j)
        return result

    @staticmethod
    def factor_order(m: int, s: int, orientation: str = 'left') -> List[Tuple[int, int]]:
        """融合 R 矩阵的因子 (i, j) 从左到右的顺序"""
        if orientation == 'left':
            return [(i, j) for i in range(m) for j in reversed(range(s))]
        if orientation == 'right':
            return [(i, j) for j in reversed(range(s)) for i in range(m)]
        raise ValidationError(f"未知的乘积方向: {orientation}")

    @staticmethod
    def staircase_R(ctx: EngineContext, space: Space, u_labels: Sequence[str], v_labels: Sequence[str],
                    u_var: VarId = U, v_var: VarId = V) -> OperatorElem:
        """阶梯点 u_i = u+ħ(i−1)、v_j = v+ħ(j−m−1) 处的 ℝ^{[m,N]}(u;v;λ)"""
        return LOperatorService.fused_R_row(
            ctx, space, u_labels, v_labels,
            staircase(ctx, u_var, len(u_labels)), staircase(ctx, v_var, len(v_labels)),
        )

    @staticmethod
    def l_d(l: DynamicalLOperator, var: VarId = U, offset: int = 0) -> OperatorElem:
        """L_D(u) = e^{−ħD̂_λ} L(u;λ)"""
        return OperatorService.exp_d_hat(l.space, AUX, -1) * l.operator(var, offset)

    @staticmethod
    def manin_from_lop(l: DynamicalLOperator, var: VarId = U) -> OperatorElem:
        """M = e^{−ħD̂_λ} L(u;λ) e^{ħ∂_u}"""
        return LOperatorService.l_d(l, var) * OperatorElem.shift_op(l.space, var, 1)

    @staticmethod
    def manin_inverse_from_lop(l: DynamicalLOperator, ctx: EngineContext, var: VarId = U) -> OperatorElem:
        """M⁻¹ = e^{−ħ∂_u} L(u;λ)⁻¹ e^{ħD̂_λ}，L⁻¹ 逐点数值求逆"""
        inverse = OperatorService.opaque_inverse(l.coefficient(var), ctx, name=f'{l.name}^-1')
        return (OperatorElem.shift_op(l.space, var, -1)
                * OperatorElem.from_coefficient(l.space, inverse)
                * OperatorService.exp_d_hat(l.space, AUX, 1))

    @staticmethod
    def L_block(l: DynamicalLOperator, labels: Sequence[str], target: Space, var: VarId = U) -> OperatorElem:
        """
        阶梯乘积 𝕃 = e^{−ħD̂⁽¹⁾}L⁽¹⁾(u) e^{−ħD̂⁽²⁾}L⁽²⁾(u+ħ) ⋯

        labels 依次取谱参数 u, u+ħ, ...；没有腿时为单位元。
        """
        result = OperatorElem.identity(target)
        for offset, label in enumerate(labels):
            result = result * OperatorService.exp_d_hat(target, label, -1) * l.at(label, target, var, offset)
        return result

    @staticmethod
    def t_m(l: DynamicalLOperator, m: int) -> OperatorElem:
        """
        t_m(u) = tr(A^{[0,m]} 𝕃^{[0,m]}(u;λ))，t₀ = 1

        Raises:
            ValidationError: m 不在 0..n 内时抛出
        """
        if not 0 <= m <= l.n:
            raise ValidationError(f"t_m 需要 0 ≤ m ≤ {l.n}，收到 {m}")
        if m == 0:
            return OperatorElem.identity(l.quantum)
        labels = aux_labels(0, m)
        space = OperatorService.aux_space(l.n, labels, l.quantum)
        block = LOperatorService.L_block(l, labels, space)
        return (OperatorService.antisymmetrizer_on(space, labels) * block).partial_trace(labels)

    @staticmethod
    def char_poly(l: DynamicalLOperator) -> Dict[int, OperatorElem]:
        """det(1 − M) 按 e^{mħ∂_u} 的次数 m 分组"""
        m = LOperatorService.manin_from_lop(l)
        det = OperatorService.column_det(OperatorService.entries(OperatorElem.identity(l.space) - m, AUX))
        return det.group_by(U)

    @staticmethod
    def quantum_power(l: DynamicalLOperator, k: int) -> OperatorElem:
        """L_D^{[k]}(u) = L_D(u) L_D(u+ħ) ⋯ L_D(u+(k−1)ħ)，k = 0 时为 1"""
        result = OperatorElem.identity(l.space)
        for i in range(k):
            result = result * LOperatorService.l_d(l, U, i)
        return result

    # 残差

    @staticmethod
    def _two_copies(l: DynamicalLOperator):
        space = OperatorService.aux_space(l.n, ['1', '2'], l.quantum)
        return space, l.at('1', space, U), l.at('2', space, V)

    @staticmethod
    def _exchange_R(ctx: EngineContext, space: Space) -> OperatorElem:
        return OperatorElem.from_coefficient(space, felder_r_matrix(ctx, space, ('1', '2'), Var(U) - Var(V)))

    @staticmethod
    def rll_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                     tol: float = 1e-9, identity_id: str = 'DRLL', anchor: str = 'DRLL') -> ResidualReport:
        """
        动力学 RLL 关系

        R¹²(u−v;λ) L⁽¹⁾(u;λ+ħE⁽²⁾) L⁽²⁾(v;λ) = L⁽²⁾(v;λ+ħE⁽¹⁾) L⁽¹⁾(u;λ) R¹²(u−v;λ+ħh)
        """
        space, l1, l2 = LOperatorService._two_copies(l)
        r = LOperatorService._exchange_R(ctx, space)
        lhs = r * l1.weight_shifted(['2']) * l2
        rhs = l2.weight_shifted(['1']) * l1 * r.weight_shifted(l.cartan_labels)
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def rll_sym_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                         tol: float = 1e-9, identity_id: str = 'RLLSym', anchor: str = 'RLLSym') -> ResidualReport:
        """R¹²(u−v;λ) L_D⁽¹⁾(u) L_D⁽²⁾(v) = L_D⁽²⁾(v) L_D⁽¹⁾(u) R¹²(u−v;λ+ħh)"""
        space, l1, l2 = LOperatorService._two_copies(l)
        r = LOperatorService._exchange_R(ctx, space)
        ld1 = OperatorService.exp_d_hat(space, '1', -1) * l1
        ld2 = OperatorService.exp_d_hat(space, '2', -1) * l2
        lhs = r * ld1 * ld2
        rhs = ld2 * ld1 * r.weight_shifted(l.cartan_labels)
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def ehl_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                     tol: float = 1e-10, identity_id: str = 'EhL_LEh', anchor: str = 'EhL_LEh') -> ResidualReport:
        """(E_ii + h_i) L = L (E_ii + h_i)，逐个 i 比较"""
        op = l.operator()
        lefts, rights = [], []
        for i in range(l.n):
            total = l.space.elementary(AUX, i, i) + l.cartan(i)
            lefts.append(op.left_matrix(total))
            rights.append(op.right_matrix(total))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def fused_rll_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                           m: int = 1, total: int = 2, tol: float = 1e-9, identity_id: str = None,
                           anchor: str = 'DReLLeLL') -> ResidualReport:
        """
        阶梯乘积的交换关系

        ℝ(u;v;λ − ħΣ_l E⁽ˡ⁾) 𝕃^{[0,m]}(u) 𝕃^{[m,N]}(v) = 𝕃^{[m,N]}(v) 𝕃^{[0,m]}(u) ℝ(u;v;λ+ħh)
        """
        _check_range(m, total)
        identity_id = identity_id or f'DReLLeLL:m={m},N={total}'
        first, second = aux_labels(0, m), aux_labels(m, total)
        space = OperatorService.aux_space(l.n, first + second, l.quantum)
        row = LOperatorService.staircase_R(ctx, space, first, second)
        block_u = LOperatorService.L_block(l, first, space, U)
        block_v = LOperatorService.L_block(l, second, space, V)
        lhs = row.weight_shifted(first + second, factor=-1.0) * block_u * block_v
        rhs = block_v * block_u * row.weight_shifted(l.cartan_labels)
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def ordering_residual(ctx: EngineContext, sampling: SamplingPolicy, m: int = 2, total: int = 4,
                          n: int = None, tol: float = 1e-9, identity_id: str = None,
                          anchor: str = 'RprRj') -> ResidualReport:
        """
        两种排列方式给出的 ℝ^{[m,N]}({u_i};{v_j};λ) 相等，谱参数互相独立

        m 或 N−m 不超过 1 时两种排列的因子顺序相同，残差恒为零。
        """
        _check_range(m, total)
        n = ctx.n if n is None else n
        identity_id = identity_id or f'RprRi_RprRj:m={m},N={total}'
        first, second = aux_labels(0, m), aux_labels(m, total)
        space = OperatorService.aux_space(n, first + second)
        u_points = [Var(spectral(f'u{i}')) for i in range(1, m + 1)]
        v_points = [Var(spectral(f'v{j}')) for j in range(m + 1, total + 1)]
        left = LOperatorService.fused_R_row(ctx, space, first, second, u_points, v_points, 'left')
        right = LOperatorService.fused_R_row(ctx, space, first, second, u_points, v_points, 'right')
        return OperatorService.operator_residual(left, right, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def staircase_sandwich_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                    m: int = 0, total: int = 2, tol: float = 1e-9, identity_id: str = None,
                                    anchor: str = 'ALLL_ALLLA') -> ResidualReport:
        """
        阶梯乘积的反对称化子夹心

        A^{[m,N]} 𝕃^{[m,N]}(u) = A^{[m,N]} 𝕃^{[m,N]}(u) A^{[m,N]}，以及
        A^{[m,N]} ←∏_j L⁽ʲ⁾(v+ħ(j−m−1); λ+ħΣ_{l>j}E⁽ˡ⁾)⁻¹ 的同样关系。
        """
        _check_range(m, total)
        identity_id = identity_id or f'ALLL_ALLLA:m={m},N={total}'
        labels = aux_labels(m, total)
        space = OperatorService.aux_space(l.n, labels, l.quantum)
        block = LOperatorService.L_block(l, labels, space, U)

        inverse = OperatorElem.identity(space)
        for index in reversed(range(len(labels))):
            factor = l.at(labels[index], space, V, index)
            leaf = OperatorService.opaque_inverse(factor.coefficient(), ctx, name=f'{l.name}[{labels[index]}]^-1')
            inverse = inverse * OperatorElem.from_coefficient(space, leaf).weight_shifted(labels[index + 1:])

        reports = [
            OperatorService.sandwich_identity(block, labels, ctx, sampling, tol, 'ALLL_ALLLA', anchor),
            OperatorService.sandwich_identity(inverse, labels, ctx, sampling, tol, 'ALLL_ALLLA_inv_Nm', anchor),
        ]
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def fused_R_sandwich_residual(ctx: EngineContext, sampling: SamplingPolicy, m: int = 1, total: int = 2,
                                  n: int = None, tol: float = 1e-9, identity_id: str = None,
                                  anchor: str = 'AR_ARA_m') -> ResidualReport:
        """阶梯点处 A^{[0,m]}ℝ = A^{[0,m]}ℝA^{[0,m]}、A^{[m,N]}ℝ = A^{[m,N]}ℝA^{[m,N]} 及 ℝ⁻¹ 的同样关系"""
        _check_range(m, total)
        n = ctx.n if n is None else n
        identity_id = identity_id or f'AR_ARA:m={m},N={total}'
        first, second = aux_labels(0, m), aux_labels(m, total)
        space = OperatorService.aux_space(n, first + second)
        row = LOperatorService.staircase_R(ctx, space, first, second)
        inverse = OperatorElem.from_coefficient(
            space, OperatorService.opaque_inverse(row.coefficient(), ctx, name='R_fused^-1'))
        reports = []
        for name, op in (('AR_ARA', row), ('AR_ARA_inv', inverse)):
            reports.append(OperatorService.sandwich_identity(op, first, ctx, sampling, tol, f'{name}_m', anchor))
            reports.append(OperatorService.sandwich_identity(op, second, ctx, sampling, tol, f'{name}_N', anchor))
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def manin_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                       tol: float = 1e-9, identity_id: str = 'MDLop', anchor: str = 'MDLop') -> ResidualReport:
        """M = e^{−ħD̂_λ} L e^{ħ∂_u} 是 Manin 矩阵"""
        m = LOperatorService.manin_from_lop(l)
        return OperatorService.manin_check(m, AUX, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def inverse_manin_residuals(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                tol: float = 1e-9, identity_id: str = 'MDLopIn',
                                anchor: str = 'MDLopIn') -> ResidualReport:
        """M·M⁻¹ = M⁻¹·M = 1，且 M⁻¹ 是 Manin 矩阵"""
        m = LOperatorService.manin_from_lop(l)
        inverse = LOperatorService.manin_inverse_from_lop(l, ctx)
        one = OperatorElem.identity(l.space)
        reports = [
            OperatorService.operator_residual(m * inverse, one, ctx, sampling, tol, 'M_Minv', anchor),
            OperatorService.operator_residual(inverse * m, one, ctx, sampling, tol, 'Minv_M', anchor),
            OperatorService.manin_check(inverse, AUX, ctx, sampling, tol, 'manin_inverse', 'M_inv'),
        ]
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def char_poly_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                           tol: float = 1e-8, identity_id: str = 'det_gener',
                           anchor: str = 'det_gener') -> ResidualReport:
        """det(1 − M) 中 e^{mħ∂_u} 的系数等于 (−1)^m t_m(u)，m = 0..n"""
        grouped = LOperatorService.char_poly(l)
        extra = [p for p in grouped if p > l.n]
        if extra:
            logger.warning(f"特征多项式出现超过 n 次的平移: {extra}")
        lefts, rights = [], []
        for m in range(max([l.n] + extra) + 1):
            lefts.append(grouped.get(m, OperatorElem.zero(l.quantum)))
            if m <= l.n:
                rights.append(LOperatorService.t_m(l, m).scale((-1) ** m))
            else:
                rights.append(OperatorElem.zero(l.quantum))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def char_poly_stability_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                     tol: float = 1e-10, identity_id: str = 'det_gener_prune',
                                     anchor: str = 'det_gener') -> ResidualReport:
        """用两组独立的剪枝采样点分别剪除零项，特征多项式的系数不变"""
        grouped = LOperatorService.char_poly(l)
        other = sampling.with_seed(derive_seed(sampling.seed, identity_id))
        lefts, rights = [], []
        for power in sorted(grouped):
            lefts.append(OperatorService.prune(grouped[power], ctx, sampling))
            rights.append(OperatorService.prune(grouped[power], ctx, other))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def det_tr_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                        tol: float = 1e-9, identity_id: str = 'det_trA', anchor: str = 'det_trA') -> ResidualReport:
        """列行列式 det M 等于 tr(A^{[0,n]} M⁽¹⁾ ⋯ M⁽ⁿ⁾)"""
        m = LOperatorService.manin_from_lop(l)
        det = OperatorService.column_det(OperatorService.entries(m, AUX))
        trace = OperatorService.antisymmetrized_trace(m, AUX, l.n)
        return OperatorService.operator_residual(det, trace, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def cartan_trace_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                              tol: float = 1e-10, identity_id: str = 'ht_th',
                              anchor: str = 'ht_th') -> ResidualReport:
        """h_k t_m(u) = t_m(u) h_k，m = 1..n，k = 1..n"""
        lefts, rights = [], []
        for m in range(1, l.n + 1):
            t = LOperatorService.t_m(l, m)
            for k in range(l.n):
                h = l.quantum.cartan(k)
                lefts.append(t.left_matrix(h))
                rights.append(t.right_matrix(h))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def trace_exchange_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                                m: int = 1, s: int = 1, tol: float = 1e-8, identity_id: str = None,
                                anchor: str = 'tt_tt0') -> ResidualReport:
        """
        迹交换恒等式

        tr(A^{[0,m]}A^{[m,N]} 𝕃^{[0,m]}(u) 𝕃^{[m,N]}(v))
            = tr(A^{[0,m]}A^{[m,N]} 𝕃^{[m,N]}(v) 𝕃^{[0,m]}(u) ℝ(u;v;λ+ħh) ℝ(u;v;λ)⁻¹)

        N = m + s，迹取遍全部 N 条辅助腿，ℝ⁻¹ 逐点数值求逆。
        """
        total = m + s
        if m < 1 or s < 0:
            raise ValidationError(f"迹交换恒等式需要 m ≥ 1、s ≥ 0: m={m}, s={s}")
        _check_range(m, total)
        identity_id = identity_id or f'tt_tt0:m={m},s={s}'
        first, second = aux_labels(0, m), aux_labels(m, total)
        labels = first + second
        space = OperatorService.aux_space(l.n, labels, l.quantum)
        a = OperatorService.antisymmetrizer_on(space, first) * OperatorService.antisymmetrizer_on(space, second)
        block_u = LOperatorService.L_block(l, first, space, U)
        block_v = LOperatorService.L_block(l, second, space, V)
        lhs = (a * block_u * block_v).partial_trace(labels)
        swapped = a * block_v * block_u
        if s:
            row = LOperatorService.staircase_R(ctx, space, first, second)
            inverse = OperatorService.opaque_inverse(row.coefficient(), ctx, name='R_fused^-1')
            swapped = swapped * row.weight_shifted(l.cartan_labels) * OperatorElem.from_coefficient(space, inverse)
        rhs = swapped.partial_trace(labels)
        logger.debug(f"迹交换恒等式构造完成: m={m}, s={s}, 左侧 {len(lhs.terms)} 项，右侧 {len(rhs.terms)} 项")
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def quantum_power_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                               k: int = 2, tol: float = 1e-9, identity_id: str = None,
                               anchor: str = 'quantum_powers') -> ResidualReport:
        """M^k = L_D^{[k]}(u) e^{kħ∂_u}"""
        identity_id = identity_id or f'quantum_power:k={k}'
        m = LOperatorService.manin_from_lop(l)
        rhs = LOperatorService.quantum_power(l, k) * OperatorElem.shift_op(l.space, U, k)
        return OperatorService.operator_residual(m.power(k), rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def newton_residual(l: DynamicalLOperator, ctx: EngineContext, sampling: SamplingPolicy,
                        up_to: int = None, tol: float = 1e-9, identity_id: str = 'newton',
                        anchor: str = 'newton') -> ResidualReport:
        """
        Manin 矩阵 M 的 Newton 恒等式

        m·q_m = Σ_{k<m} (−1)^{m+k+1} q_k tr(M^{m−k})，q_m = tr(A^{[0,m]}M⁽¹⁾⋯M⁽ᵐ⁾)，
        m 取 1..up_to（默认 n+1，包括 q_{n+1} = 0 的情形）。
        """
        up_to = l.n + 1 if up_to is None else up_to
        if up_to < 1 or up_to > l.n + 1:
            raise ValidationError(f"Newton 恒等式需要 1 ≤ up_to ≤ {l.n + 1}")
        m_op = LOperatorService.manin_from_lop(l)
        lefts, rights = OperatorService.newton_relations(m_op, AUX, up_to)
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)
