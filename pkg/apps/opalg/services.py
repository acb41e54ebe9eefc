"""
算子环业务逻辑服务

提供环乘法、腿嵌入、反对称化子、偏迹、列行列式、权平移、
Manin 性质检查以及算子恒等式的残差计算。
"""

import itertools
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from django.conf import settings
from django.core.exceptions import ValidationError

from apps.opalg.coefficients import EvaluationSession, MatrixExpr, OpaqueLeaf, constant
from apps.opalg.operators import OperatorElem
from apps.opalg.spaces import Leg, Space, embed_matrix
from apps.scalar.context import EngineContext
from apps.scalar.expressions import OpaqueMatrix, lam
from apps.scalar.sampling import PointSampler, ResidualCollector
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport
from utils.exceptions import SingularPointError

# 配置日志
logger = logging.getLogger(__name__)

OperatorPairs = Union[OperatorElem, Sequence[OperatorElem]]


def permutation_sign(perm: Sequence[int]) -> int:
    """置换的符号"""
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def permutation_matrix(perm: Sequence[int], n: int) -> np.ndarray:
    """π(σ)：把第 k 个张量因子送到第 σ(k) 个位置"""
    m = len(perm)
    size = n ** m
    identity = np.eye(size, dtype=complex).reshape([n] * m + [size])
    inverse = [0] * m
    for k, target in enumerate(perm):
        inverse[target] = k
    return identity.transpose(inverse + [m]).reshape(size, size)


class OperatorService:
    """
    算子环服务类

    所有方法都是纯函数，输入的算子元素不会被修改。
    """

    # 环运算

    @staticmethod
    def ring_mul(a: OperatorElem, b: OperatorElem) -> OperatorElem:
        """
        正规序乘积

        Raises:
            CapabilityError: 类型不一致，或 diff 型乘法需要对不透明系数求导时抛出
        """
        return a.ring_mul(b)

    @staticmethod
    def embed_legs(t: OperatorElem, target: Space, mapping: Optional[Dict[str, str]] = None) -> OperatorElem:
        """
        把算子嵌入更大的空间

        Args:
            t: 算子
            target: 目标空间
            mapping: 先把 t 的腿按此映射改名，目标腿的顺序不必递增

        Raises:
            ValidationError: 目标腿重复或不存在时抛出
        """
        if mapping:
            targets = [mapping.get(label, label) for label in t.space.labels]
            if len(set(targets)) != len(targets):
                raise ValidationError(f"目标腿重复: {targets}")
            t = t.relabel(mapping)
        return t.embed(target)

    @staticmethod
    def copies(m: OperatorElem, aux: str, labels: Sequence[str]) -> Tuple[Space, List[OperatorElem]]:
        """
        把单辅助腿算子复制到多条辅助腿上

        Returns:
            tuple: (辅助腿 labels 加原量子腿的空间, 各副本)
        """
        leg = m.space.leg(aux)
        rest = m.space.without([aux])
        space = Space([leg.renamed(label) for label in labels]).concat(rest)
        return space, [m.relabel({aux: label}).embed(space) for label in labels]

    # 反对称化子

    @staticmethod
    def antisymmetrizer(m: int, n: int) -> np.ndarray:
        """
        A_m = (1/m!) Σ_σ (−1)^σ π(σ)，作用在 (Cⁿ)^{⊗m} 上

        m = 0 时为 1×1 单位阵。
        """
        if m < 0 or n < 1:
            raise ValidationError(f"反对称化子参数无效: m={m}, n={n}")
        size = n ** m
        result = np.zeros((size, size), dtype=complex)
        for perm in itertools.permutations(range(m)):
            result += permutation_sign(perm) * permutation_matrix(perm, n)
        return result / math.factorial(m)

    @staticmethod
    def antisymmetrizer_recursive(m: int, n: int) -> np.ndarray:
        """由 A_k = (1/k)(A_{k−1} − (k−1)A_{k−1}P_{k−1,k}A_{k−1}) 递推"""
        if m < 0 or n < 1:
            raise ValidationError(f"反对称化子参数无效: m={m}, n={n}")
        current = np.eye(1, dtype=complex)
        for k in range(1, m + 1):
            lifted = np.kron(current, np.eye(n, dtype=complex))
            if k == 1:
                current = lifted
                continue
            swap = list(range(k))
            swap[k - 2], swap[k - 1] = swap[k - 1], swap[k - 2]
            flip = permutation_matrix(swap, n)
            current = (lifted - (k - 1) * lifted @ flip @ lifted) / k
        return current

    @staticmethod
    def antisymmetrizer_on(space: Space, labels: Sequence[str], flavor: str = 'shift') -> OperatorElem:
        """所列辅助腿上的反对称化子 A^{[k,m]}"""
        if not labels:
            return OperatorElem.identity(space, flavor)
        n = space.leg(labels[0]).dim
        matrix = OperatorService.antisymmetrizer(len(labels), n)
        return OperatorElem.from_matrix(space, space.embed(matrix, labels), flavor)

    @staticmethod
    def partial_trace(t: OperatorElem, labels: Sequence[str]) -> OperatorElem:
        """
        对所列腿求偏迹

        Raises:
            ValidationError: 腿不存在时抛出
        """
        return t.partial_trace(labels)

    # 行列式

    @staticmethod
    def column_det(entries: Sequence[Sequence[OperatorElem]]) -> OperatorElem:
        """
        列行列式 Σ_σ (−1)^σ M_{σ(1),1} M_{σ(2),2} ⋯ M_{σ(n),n}

        因子按列顺序从左到右相乘。

        Raises:
            ValidationError: 矩阵不是方阵时抛出
            CapabilityError: 矩阵元类型不一致时抛出
        """
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise ValidationError("列行列式需要非空方阵")
        total = OperatorElem.zero(entries[0][0].space, entries[0][0].flavor)
        for perm in itertools.permutations(range(n)):
            product = entries[perm[0]][0]
            for column in range(1, n):
                product = product * entries[perm[column]][column]
            total = total + product.scale(permutation_sign(perm))
        logger.debug(f"列行列式展开完成，{n}×{n}，共 {len(total.terms)} 个单项式")
        return total

    @staticmethod
    def entries(m: OperatorElem, aux: str) -> List[List[OperatorElem]]:
        """辅助腿上的矩阵元"""
        n = m.space.leg(aux).dim
        return [[m.block(aux, i, j) for j in range(n)] for i in range(n)]

    @staticmethod
    def antisymmetrized_trace(m: OperatorElem, aux: str, k: int) -> OperatorElem:
        """tr(A^{[0,k]} M^{(1)} ⋯ M^{(k)})，k = 0 时为 1"""
        rest = m.space.without([aux])
        if k == 0:
            return OperatorElem.identity(rest, m.flavor)
        labels = [f'{aux}{i}' for i in range(1, k + 1)]
        space, factors = OperatorService.copies(m, aux, labels)
        product = OperatorService.antisymmetrizer_on(space, labels, m.flavor)
        for factor in factors:
            product = product * factor
        return product.partial_trace(labels)

    @staticmethod
    def newton_relations(m: OperatorElem, aux: str, up_to: int,
                         traces: Optional[Dict[int, OperatorElem]] = None) -> Tuple[List[OperatorElem], List[OperatorElem]]:
        """
        Newton 恒等式 m·q_m = Σ_{k<m} (−1)^{m+k+1} q_k tr(M^{m−k})，m = 1..up_to

        q_k = tr(A^{[0,k]} M⁽¹⁾⋯M⁽ᵏ⁾)。traces 给出 tr(M^j) 的另一种写法时用它代替直接计算。

        Returns:
            tuple: (左侧列表, 右侧列表)
        """
        q = [OperatorService.antisymmetrized_trace(m, aux, k) for k in range(up_to + 1)]
        if traces is None:
            traces = {j: m.power(j).partial_trace([aux]) for j in range(1, up_to + 1)}
        rest = m.space.without([aux])
        lefts, rights = [], []
        for order in range(1, up_to + 1):
            total = OperatorElem.zero(rest, m.flavor)
            for k in range(order):
                total = total + (q[k] * traces[order - k]).scale((-1) ** (order + k + 1))
            lefts.append(q[order].scale(order))
            rights.append(total)
        return lefts, rights

    # 权平移与基本算子

    @staticmethod
    def weight_shift_substitute(t: OperatorElem, labels: Sequence[str], factor: float = 1.0) -> OperatorElem:
        """
        F(λ + factor·ħh)，h_k 为所列腿上的权

        在每个联合权子空间上精确地平移 λ_k，投影矩阵放在系数右侧。
        """
        return t.weight_shifted(labels, factor)

    @staticmethod
    def exp_d_hat(space: Space, aux: str, sign: int = -1) -> OperatorElem:
        """e^{sign·ħD̂_λ} = Σ_k E_kk^{(aux)} e^{sign·ħ∂_{λ_k}}"""
        n = space.leg(aux).dim
        terms = {}
        for k in range(n):
            terms[((lam(k + 1), sign),)] = constant(space.elementary(aux, k, k), space.dims)
        return OperatorElem(space, terms, 'shift')

    @staticmethod
    def d_hat(space: Space, aux: str) -> OperatorElem:
        """D̂_λ = Σ_k E_kk^{(aux)} ∂_{λ_k}"""
        n = space.leg(aux).dim
        terms = {}
        for k in range(n):
            terms[((lam(k + 1), 1),)] = constant(space.elementary(aux, k, k), space.dims)
        return OperatorElem(space, terms, 'diff')

    # 残差

    @staticmethod
    def operator_residual(lhs: OperatorPairs, rhs: OperatorPairs, ctx: EngineContext,
                          sampling: SamplingPolicy, tol: float = 1e-9,
                          identity_id: str = 'operator_identity', anchor: str = '',
                          projector: Optional[np.ndarray] = None, variables=()) -> ResidualReport:
        """
        算子恒等式的残差

        在每个采样点、每个单项式上计算 |l−r| / (1 + max(|l|,|r|))（最大模），
        可选地先右乘投影矩阵。lhs 和 rhs 也可以是等长的算子列表，逐对比较。

        Args:
            lhs: 左侧算子或算子列表
            rhs: 右侧算子或算子列表
            ctx: 引擎上下文
            sampling: 采样策略
            tol: 容差
            identity_id: 报告标识
            anchor: 公式标签
            projector: 右乘的常数投影矩阵
            variables: 额外的采样变量

        Returns:
            ResidualReport: 残差报告

        Raises:
            SamplingExhaustedError: 连续重采样耗尽时抛出
        """
        lefts = [lhs] if isinstance(lhs, OperatorElem) else list(lhs)
        rights = [rhs] if isinstance(rhs, OperatorElem) else list(rhs)
        if len(lefts) != len(rights):
            raise ValidationError("恒等式两侧的算子个数不一致")
        for a, b in zip(lefts, rights):
            a._check_compatible(b)

        free = set(variables)
        for op in lefts + rights:
            free |= op.free_vars()

        def measure(point):
            session = EvaluationSession(point, ctx)
            pairs = []
            for a, b in zip(lefts, rights):
                left = a.evaluate(point, ctx, session)
                right = b.evaluate(point, ctx, session)
                zero = np.zeros((a.space.dim, a.space.dim), dtype=complex)
                for mono in set(left) | set(right):
                    lv = left.get(mono, zero)
                    rv = right.get(mono, zero)
                    if projector is not None:
                        lv = lv @ projector
                        rv = rv @ projector
                    pairs.append((lv, rv))
            return pairs

        return OperatorService.pointwise_residual(measure, free, sampling, tol, identity_id, anchor)

    @staticmethod
    def pointwise_residual(measure: Callable[[Dict], Sequence[Tuple[object, object]]], variables,
                           sampling: SamplingPolicy, tol: float, identity_id: str,
                           anchor: str = '') -> ResidualReport:
        """
        逐点残差的通用循环

        measure(point) 返回 (左值, 右值) 对的列表，抛出 SingularPointError 时重新采样。
        """
        collector = ResidualCollector(identity_id, anchor, tol, sampling.seed)
        sampler = PointSampler(variables, sampling)
        for _, pairs in sampler.run(measure):
            for lv, rv in pairs:
                collector.add(lv, rv)
            collector.count_point()
        collector.details['resamples'] = sampler.resamples
        return collector.report()

    @staticmethod
    def opaque_inverse(coef: MatrixExpr, ctx: EngineContext, name: str = 'inverse') -> MatrixExpr:
        """
        系数矩阵的逐点逆，作为不透明叶子

        条件数超过 ctx.condition_guard 的点视为奇点。
        """
        variables = sorted(coef.free_vars())
        identity = np.eye(coef.dim, dtype=complex)

        def evaluator(point):
            matrix = coef.evaluate(point, ctx)
            condition = float(np.linalg.cond(matrix))
            if not np.isfinite(condition) or condition > ctx.condition_guard:
                raise SingularPointError(f"{name} 求逆时条件数过大: {condition:.3e}", condition)
            return scipy.linalg.lu_solve(scipy.linalg.lu_factor(matrix), identity)

        return OpaqueLeaf(OpaqueMatrix(coef.dim, evaluator, variables, name), coef.dims)

    @staticmethod
    def combine_reports(reports: Sequence[ResidualReport], identity_id: str, anchor: str,
                        tol: float, seed: int) -> ResidualReport:
        """合并子检查，残差取最大值，子检查残差写入 details"""
        collector = ResidualCollector(identity_id, anchor, tol, seed)
        for report in reports:
            collector.add_values(report.max_abs, report.max_rel)
            collector.details[report.identity_id] = report.max_rel
        collector.count_point(max((r.samples_used for r in reports), default=0))
        return collector.report()

    @staticmethod
    def sandwich_identity(x: OperatorElem, labels: Sequence[str], ctx: EngineContext,
                          sampling: SamplingPolicy, tol: float = 1e-9,
                          identity_id: str = 'sandwich', anchor: str = '') -> ResidualReport:
        """A·X = A·X·A，A 为所列腿上的反对称化子"""
        a = OperatorService.antisymmetrizer_on(x.space, labels, x.flavor)
        left = a * x
        return OperatorService.operator_residual(left, left * a, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def sandwich_residual(m: OperatorElem, aux: str, copies: int, ctx: EngineContext,
                          sampling: SamplingPolicy, reverse: bool = False, tol: float = 1e-9,
                          identity_id: str = 'AMMM_AMMMA', anchor: str = 'AMMM_AMMMA') -> ResidualReport:
        """
        A M⁽¹⁾⋯M⁽ᵏ⁾ = A M⁽¹⁾⋯M⁽ᵏ⁾ A，reverse 时乘积顺序相反
        """
        labels = [f'{aux}{i}' for i in range(1, copies + 1)]
        space, factors = OperatorService.copies(m, aux, labels)
        if reverse:
            factors = factors[::-1]
        product = OperatorElem.identity(space, m.flavor)
        for factor in factors:
            product = product * factor
        return OperatorService.sandwich_identity(product, labels, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def manin_relations(m: OperatorElem, aux: str) -> Tuple[List[OperatorElem], List[OperatorElem]]:
        """
        逐个 2×2 子矩阵的 Manin 关系

        Returns:
            tuple: (左侧列表, 右侧列表)，包括列内交换 [M_ij, M_kj] = 0
            和交叉关系 [M_ij, M_kl] = [M_kj, M_il]
        """
        e = OperatorService.entries(m, aux)
        n = len(e)
        lefts, rights = [], []
        for i, k in itertools.combinations(range(n), 2):
            for j in range(n):
                lefts.append(e[i][j].commutator(e[k][j]))
                rights.append(OperatorElem.zero(lefts[-1].space, m.flavor))
            for j, l in itertools.combinations(range(n), 2):
                lefts.append(e[i][j].commutator(e[k][l]))
                rights.append(e[k][j].commutator(e[i][l]))
        return lefts, rights

    @staticmethod
    def manin_check(m: OperatorElem, aux: str, ctx: EngineContext, sampling: SamplingPolicy,
                    tol: float = 1e-9, identity_id: str = 'manin', anchor: str = 'AMM_AMMA',
                    form: str = 'both') -> ResidualReport:
        """
        Manin 性质检查

        sandwich 形式：A⁽¹²⁾M⁽¹⁾M⁽²⁾ = A⁽¹²⁾M⁽¹⁾M⁽²⁾A⁽¹²⁾；
        relations 形式：列内交换和交叉关系。两种形式的残差分别写入 details。

        Args:
            m: 单辅助腿的算子矩阵
            aux: 辅助腿标签
            form: 'sandwich'、'relations' 或 'both'

        Returns:
            ResidualReport: 残差报告
        """
        if form not in ('sandwich', 'relations', 'both'):
            raise ValidationError(f"未知的 Manin 检查形式: {form}")
        reports = []
        if form in ('sandwich', 'both'):
            reports.append(OperatorService.sandwich_residual(
                m, aux, 2, ctx, sampling, tol=tol, identity_id='sandwich', anchor=anchor,
            ))
        if form in ('relations', 'both') and m.space.leg(aux).dim > 1:
            lefts, rights = OperatorService.manin_relations(m, aux)
            reports.append(OperatorService.operator_residual(
                lefts, rights, ctx, sampling, tol, identity_id='relations', anchor='MMdef',
            ))
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def prune(op: OperatorElem, ctx: EngineContext, sampling: SamplingPolicy,
              threshold: Optional[float] = None, samples: Optional[int] = None) -> OperatorElem:
        """
        去掉数值上为零的项

        若某项系数在全部采样点上都小于 threshold·(1 + 最大项范数)，则删除该项。
        """
        options = settings.VERIFICATION
        threshold = options['PRUNE_THRESHOLD'] if threshold is None else threshold
        samples = options['PRUNE_SAMPLES'] if samples is None else samples
        if op.is_zero():
            return op
        sampler = PointSampler(op.free_vars(), sampling.with_samples(samples))
        sizes: Dict[tuple, float] = {mono: 0.0 for mono in op.terms}
        for _, values in sampler.run(lambda point: op.evaluate(point, ctx)):
            for mono, value in values.items():
                sizes[mono] = max(sizes[mono], float(np.max(np.abs(value))))
        scale = 1.0 + max(sizes.values())
        keep = [mono for mono, size in sizes.items() if size >= threshold * scale]
        if len(keep) < len(sizes):
            logger.debug(f"剪除 {len(sizes) - len(keep)} 个数值为零的单项式")
        return op.prune_monomials(keep)

    @staticmethod
    def aux_space(n: int, labels: Sequence[str], quantum: Space = Space()) -> Space:
        """辅助腿 labels 与量子空间拼接"""
        return Space([Leg.aux(label, n) for label in labels]).concat(quantum)

    @staticmethod
    def embed_constant(space: Space, matrix: np.ndarray, labels: Sequence[str]) -> np.ndarray:
        """常数矩阵嵌入空间"""
        return embed_matrix(matrix, space.positions(labels), space.dims)
