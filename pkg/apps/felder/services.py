"""
R 矩阵业务逻辑服务

构造 Felder R 矩阵及其经典、三角退化，并计算 DYBE、幺正性、权零性、
D 交换、R(−ħ) 分解、CDYBE、经典扭变、三角极限和扭变共轭等恒等式的残差。
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from apps.felder.builders import (
    b_matrix, classical_r_matrix, classical_twist_matrix, felder_r_matrix, r_matrix,
    trig_r_matrix, twist_f_matrix, twist_g_diagonal, twist_g_matrix,
)
from apps.felder.schemas import RMatrixSpec
from apps.opalg.coefficients import MatrixExpr, mprod, constant
from apps.opalg.operators import OperatorElem
from apps.opalg.services import OperatorService
from apps.opalg.spaces import Leg, Space
from apps.scalar.context import EngineContext
from apps.scalar.expressions import Const, U, V, Var, VarId, W, X, Z, lam, spectral, theta
from apps.scalar.sampling import ResidualCollector
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport
from utils.helpers import make_rng, richardson_extrapolate

# 配置日志
logger = logging.getLogger(__name__)

Z3 = spectral('z3')

# 经典极限外推默认步长
DEFAULT_HBARS = (1e-2, 5e-3, 2.5e-3)


def _spectral_vars(spec: RMatrixSpec) -> Tuple[VarId, VarId, VarId]:
    if spec.is_trigonometric:
        return Z, W, Z3
    return U, V, X


def _lambda_vars(n: int):
    return [lam(k) for k in range(1, n + 1)]


class FelderService:
    """
    R 矩阵服务类

    残差方法都接受 (ctx, sampling, tol, identity_id, anchor)，返回 ResidualReport。
    """

    # 构造

    @staticmethod
    def two_leg_space(n: int) -> Space:
        """辅助腿 1、2 组成的空间"""
        return OperatorService.aux_space(n, ['1', '2'])

    @staticmethod
    def felder_R(spec: RMatrixSpec, ctx: EngineContext, point=None):
        """
        Felder 动力学 R 矩阵

        Args:
            spec: R 矩阵描述，kind 必须为 elliptic_dynamical
            ctx: 引擎上下文
            point: 给定时返回该点上的 n²×n² 数值矩阵，变量为 u 和 λ₁..λₙ

        Returns:
            MatrixExpr 或 np.ndarray

        Raises:
            ValidationError: 类型不符时抛出
            SingularPointError: 数值点落在奇点附近时抛出
        """
        if spec.kind != 'elliptic_dynamical':
            raise ValidationError(f"felder_R 需要 elliptic_dynamical 类型，收到 {spec.kind}")
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        coef = felder_r_matrix(ctx, space, ('1', '2'), Var(U))
        if point is None:
            return coef
        return coef.evaluate(point, ctx)

    @staticmethod
    def classical_r(n: int, ctx: Optional[EngineContext] = None, point=None, twisted: bool = False):
        """经典 r 矩阵，变量为 u 和 λ；twisted 时返回 r̃"""
        coef = classical_r_matrix(FelderService.two_leg_space(n), ('1', '2'), Var(U), twisted)
        if point is None:
            return coef
        return coef.evaluate(point, ctx)

    @staticmethod
    def trig_R(kind: str, n: int, ctx: EngineContext, point=None):
        """三角 R 矩阵，变量为 z、w（以及动力学情形的 λ）"""
        coef = trig_r_matrix(kind, ctx, FelderService.two_leg_space(n), ('1', '2'), Var(Z), Var(W))
        if point is None:
            return coef
        return coef.evaluate(point, ctx)

    @staticmethod
    def trig_twist_G(n: int, weights: Sequence[float], q: complex) -> np.ndarray:
        """给定权向量上的扭变矩阵 G（n×n 对角阵）"""
        return twist_g_diagonal(n, weights, q)

    @staticmethod
    def r_at_minus_hbar(spec: RMatrixSpec, ctx: EngineContext) -> Tuple[MatrixExpr, MatrixExpr]:
        """R(−ħ;λ) 与 B(λ)"""
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        r = felder_r_matrix(ctx, space, ('1', '2'), Const(-ctx.hbar))
        return r, b_matrix(ctx, space, ('1', '2'))

    # 残差

    @staticmethod
    def dybe_residual(spec: RMatrixSpec, ctx: EngineContext, sampling: SamplingPolicy,
                      tol: float = 1e-9, identity_id: str = 'DYBE', anchor: str = 'DYBE') -> ResidualReport:
        """
        动力学 Yang–Baxter 方程

        R¹²(u₁−u₂;λ) R¹³(u₁−u₃;λ+ħE⁽²⁾) R²³(u₂−u₃;λ)
            = R²³(u₂−u₃;λ+ħE⁽¹⁾) R¹³(u₁−u₃;λ) R¹²(u₁−u₂;λ+ħE⁽³⁾)
        """
        if spec.kind == 'classical_r':
            raise ValidationError("经典 r 矩阵请使用 cdybe_residual")
        ctx = spec.context(ctx)
        space = OperatorService.aux_space(spec.n, ['1', '2', '3'])
        first, second, third = (Var(v) for v in _spectral_vars(spec))

        def op(legs, a, b):
            return OperatorElem.from_coefficient(space, r_matrix(spec, ctx, space, legs, a, b))

        r12 = op(('1', '2'), first, second)
        r13 = op(('1', '3'), first, third)
        r23 = op(('2', '3'), second, third)
        lhs = r12 * r13.weight_shifted(['2']) * r23
        rhs = r23.weight_shifted(['1']) * r13 * r12.weight_shifted(['3'])
        logger.debug(f"DYBE 两侧构造完成: {spec.kind}, n={spec.n}")
        return OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def unitarity_residual(spec: RMatrixSpec, ctx: EngineContext, sampling: SamplingPolicy,
                           tol: float = 1e-9, identity_id: str = 'R21R12',
                           anchor: str = 'R21R12') -> ResidualReport:
        """R²¹(−u;λ)R¹²(u;λ) = θ(u+ħ)θ(u−ħ)/θ(u)²"""
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        r12 = OperatorElem.from_coefficient(space, felder_r_matrix(ctx, space, ('1', '2'), Var(U) - Var(V)))
        r21 = OperatorElem.from_coefficient(space, felder_r_matrix(ctx, space, ('2', '1'), Var(V) - Var(U)))
        u = Var(U) - Var(V)
        hbar = Const(ctx.hbar)
        scalar = theta(u + hbar) * theta(u - hbar) / (theta(u) * theta(u))
        rhs = OperatorElem.from_scalar(space, scalar)
        return OperatorService.operator_residual(r21 * r12, rhs, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def weight_zero_residual(spec: RMatrixSpec, ctx: EngineContext, sampling: SamplingPolicy,
                             tol: float = 1e-10, identity_id: str = 'EER_REE',
                             anchor: str = 'EER_REE') -> ResidualReport:
        """(E⁽¹⁾_ii + E⁽²⁾_ii)R = R(E⁽¹⁾_ii + E⁽²⁾_ii)，逐个 i 比较"""
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        first, second, _ = (Var(v) for v in _spectral_vars(spec))
        r = OperatorElem.from_coefficient(space, r_matrix(spec, ctx, space, ('1', '2'), first, second))
        lefts, rights = [], []
        for i in range(spec.n):
            total = space.elementary('1', i, i) + space.elementary('2', i, i)
            lefts.append(r.left_matrix(total))
            rights.append(r.right_matrix(total))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def dcommute_residual(spec: RMatrixSpec, ctx: EngineContext, sampling: SamplingPolicy,
                          tol: float = 1e-9, identity_id: str = 'DR_RD',
                          anchor: str = 'DR_RD') -> ResidualReport:
        """(D̂⁽¹⁾ + D̂⁽²⁾)R = R(D̂⁽¹⁾ + D̂⁽²⁾)，在微分型算子环中比较"""
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        first, second, _ = (Var(v) for v in _spectral_vars(spec))
        coef = r_matrix(spec, ctx, space, ('1', '2'), first, second)
        r = OperatorElem.from_coefficient(space, coef, 'diff')
        d = OperatorService.d_hat(space, '1') + OperatorService.d_hat(space, '2')
        return OperatorService.operator_residual(d * r, r * d, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def r_minus_hbar_residual(spec: RMatrixSpec, ctx: EngineContext, sampling: SamplingPolicy,
                              tol: float = 1e-10, identity_id: str = 'R_mhbar',
                              anchor: str = 'R_mhbar') -> ResidualReport:
        """
        R(−ħ;λ) 的分解

        检查 B(λ)R(−ħ;λ) = A⁽¹²⁾ 与 R(−ħ;λ)A⁽¹²⁾ = R(−ħ;λ)，两项残差写入 details。
        """
        ctx = spec.context(ctx)
        space = FelderService.two_leg_space(spec.n)
        r, b = FelderService.r_at_minus_hbar(spec, ctx)
        a = OperatorService.antisymmetrizer_on(space, ['1', '2'])
        r_op = OperatorElem.from_coefficient(space, r)
        b_op = OperatorElem.from_coefficient(space, b)
        reports = [
            OperatorService.operator_residual(b_op * r_op, a, ctx, sampling, tol, 'B_R', anchor,
                                              variables=ctx.lambda_vars),
            OperatorService.operator_residual(r_op * a, r_op, ctx, sampling, tol, 'R_A', anchor,
                                              variables=ctx.lambda_vars),
        ]
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def first_order_residual(quantum: Callable[[EngineContext], MatrixExpr], classical: MatrixExpr,
                             ctx: EngineContext, sampling: SamplingPolicy,
                             hbars: Sequence[float] = DEFAULT_HBARS, tol: float = 1e-5,
                             identity_id: str = 'classical_limit', anchor: str = 'cderm') -> ResidualReport:
        """
        一阶系数 (X(ħ) − 1)/ħ 的 Richardson 外推与经典对象比较

        同时用加倍的步长再外推一次，两次外推之差也计入残差。

        Args:
            quantum: 由上下文构造量子系数的函数
            classical: 经典系数
            hbars: 外推步长
        """
        hbars = [float(h) for h in hbars]
        doubled = [2 * h for h in hbars]
        builds = {h: (ctx.with_hbar(h), quantum(ctx.with_hbar(h))) for h in sorted(set(hbars + doubled))}
        identity = np.eye(classical.dim, dtype=complex)
        variables = set(classical.free_vars())
        for _, coef in builds.values():
            variables |= coef.free_vars()
        stability = []

        def measure(point):
            first = {h: (coef.evaluate(point, c) - identity) / h for h, (c, coef) in builds.items()}
            target = classical.evaluate(point, ctx)
            extrapolated = richardson_extrapolate(hbars, [first[h] for h in hbars])
            again = richardson_extrapolate(doubled, [first[h] for h in doubled])
            stability.append(float(np.max(np.abs(extrapolated - again))))
            return [(extrapolated, target), (again, extrapolated)]

        report = OperatorService.pointwise_residual(measure, variables, sampling, tol, identity_id, anchor)
        report.details['stability'] = max(stability, default=0.0)
        return report

    @staticmethod
    def classical_limit_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                                 hbars: Sequence[float] = DEFAULT_HBARS, tol: float = 1e-5,
                                 identity_id: str = 'classical_limit_R',
                                 anchor: str = 'cderm') -> ResidualReport:
        """(R(u;λ;ħ) − 1)/ħ → r(u;λ)，λ 固定"""
        space = FelderService.two_leg_space(n)
        legs = ('1', '2')
        target = classical_r_matrix(space, legs, Var(U))
        return FelderService.first_order_residual(
            lambda c: felder_r_matrix(c, space, legs, Var(U)), target, ctx, sampling, hbars, tol,
            identity_id, anchor,
        )

    @staticmethod
    def r_symmetric_part_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                                  tol: float = 1e-9, identity_id: str = 'r_invariant',
                                  anchor: str = 'cderm') -> ResidualReport:
        """[r¹²(u;λ) + r²¹(−u;λ), x⊗1 + 1⊗x] = 0，x 取随机对角阵"""
        space = FelderService.two_leg_space(n)
        r12 = classical_r_matrix(space, ('1', '2'), Var(U) - Var(V))
        r21 = classical_r_matrix(space, ('2', '1'), Var(V) - Var(U))
        total = OperatorElem.from_coefficient(space, r12) + OperatorElem.from_coefficient(space, r21)
        rng = make_rng(sampling.seed)
        lefts, rights = [], []
        for _ in range(3):
            x = np.diag(rng.normal(size=n) + 1j * rng.normal(size=n))
            coproduct = space.embed(x, ['1']) + space.embed(x, ['2'])
            lefts.append(total.right_matrix(coproduct))
            rights.append(total.left_matrix(coproduct))
        return OperatorService.operator_residual(lefts, rights, ctx, sampling, tol, identity_id, anchor)

    @staticmethod
    def _three_leg_classical(n: int, builder) -> Tuple[Space, dict]:
        """三腿表示 π_u⊗π_v⊗π_x 中的 a¹²、a¹³、a²³"""
        space = OperatorService.aux_space(n, ['1', '2', '3'])
        points = {'1': Var(U), '2': Var(V), '3': Var(X)}
        ops = {}
        for legs in (('1', '2'), ('1', '3'), ('2', '3')):
            arg = points[legs[0]] - points[legs[1]]
            ops[legs] = OperatorElem.from_coefficient(space, builder(space, legs, arg), 'diff')
        return space, ops

    @staticmethod
    def _double_bracket(a: dict, b: dict) -> OperatorElem:
        """[[a,b]] = [a¹², b¹³] + [a¹², b²³] + [a¹³, b²³]"""
        return (a[('1', '2')].commutator(b[('1', '3')])
                + a[('1', '2')].commutator(b[('2', '3')])
                + a[('1', '3')].commutator(b[('2', '3')]))

    @staticmethod
    def _dynamical_term(space: Space, n: int, a: dict) -> OperatorElem:
        """𝒟(a) = −Σ h⁽¹⁾_i ∂_i a²³ + Σ h⁽²⁾_i ∂_i a¹³ − Σ h⁽³⁾_i ∂_i a¹²"""
        total = OperatorElem.zero(space, 'diff')
        for label, legs, sign in (('1', ('2', '3'), -1), ('2', ('1', '3'), 1), ('3', ('1', '2'), -1)):
            for i in range(n):
                term = a[legs].derivative_in(lam(i + 1)).left_matrix(space.elementary(label, i, i))
                total = total + term.scale(sign)
        return total

    @staticmethod
    def cdybe_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy, tol: float = 1e-9,
                       identity_id: str = 'CDYBE', anchor: str = 'CDYBE') -> ResidualReport:
        """[[r, r]] + 𝒟_λ(r) = 0，在三腿表示中检查"""
        space, r = FelderService._three_leg_classical(n, classical_r_matrix)
        lhs = FelderService._double_bracket(r, r) + FelderService._dynamical_term(space, n, r)
        return OperatorService.operator_residual(lhs, OperatorElem.zero(space, 'diff'), ctx, sampling, tol,
                                                 identity_id, anchor, variables=[U, V, X] + _lambda_vars(n))

    @staticmethod
    def classical_twist_residuals(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                                  tol: float = 1e-9, identity_id: str = 'cdtwist',
                                  anchor: str = 'lem_cdtwist') -> ResidualReport:
        """
        经典动力学扭变的条件

        [[𝔣,𝔣]] = 0、[[r̃,𝔣]] + [[𝔣,r̃]] = 0、𝒟_λ(𝔣) = 0，以及 r̃ = r − 𝔣。
        """
        variables = [U, V, X] + _lambda_vars(n)
        space, f = FelderService._three_leg_classical(n, lambda s, legs, arg: classical_twist_matrix(s, legs))
        _, r_tilde = FelderService._three_leg_classical(
            n, lambda s, legs, arg: classical_r_matrix(s, legs, arg, twisted=True))
        _, r = FelderService._three_leg_classical(n, classical_r_matrix)
        zero = OperatorElem.zero(space, 'diff')
        checks = [
            ('ff', FelderService._double_bracket(f, f), zero),
            ('rf_fr', FelderService._double_bracket(r_tilde, f) + FelderService._double_bracket(f, r_tilde), zero),
            ('D_f', FelderService._dynamical_term(space, n, f), zero),
            ('r_tilde', r_tilde[('1', '2')], r[('1', '2')] - f[('1', '2')]),
        ]
        reports = [
            OperatorService.operator_residual(lhs, rhs, ctx, sampling, tol, name, anchor, variables=variables)
            for name, lhs, rhs in checks
        ]
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)

    @staticmethod
    def trig_limit_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                            im_taus: Sequence[float] = (6.0, 8.0), tol: float = 1e-6,
                            identity_id: str = 'trig_limit', anchor: str = 'RtrigD') -> ResidualReport:
        """
        τ → i∞ 极限：felder_R(u,λ;τ) 与 R_trig(z,w,μ) 比较

        在每个 Im τ 上分别计算残差，报告最大 Im τ 处的残差；残差不随 Im τ 减小时不通过。
        """
        space = FelderService.two_leg_space(n)
        legs = ('1', '2')
        elliptic = felder_r_matrix(ctx, space, legs, Var(U) - Var(V))
        trig = trig_r_matrix('trig_dynamical', ctx, space, legs, Var(Z), Var(W))
        variables = [U, V] + _lambda_vars(n)
        trend = {}
        for im_tau in sorted(im_taus):
            limit_ctx = ctx.with_tau(complex(0, im_tau))

            def measure(point):
                trig_point = dict(point)
                trig_point[Z] = complex(np.exp(2j * np.pi * point[U]))
                trig_point[W] = complex(np.exp(2j * np.pi * point[V]))
                return [(elliptic.evaluate(point, limit_ctx), trig.evaluate(trig_point, ctx))]

            report = OperatorService.pointwise_residual(measure, variables, sampling, tol, identity_id, anchor)
            trend[im_tau] = report.max_rel
        values = [trend[t] for t in sorted(trend)]
        monotone = all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))
        collector = ResidualCollector(identity_id, anchor, tol, sampling.seed)
        collector.add_values(report.max_abs, values[-1] if monotone else max(values[-1], tol))
        collector.count_point(report.samples_used)
        collector.details['trend'] = {str(t): r for t, r in sorted(trend.items())}
        collector.details['monotone'] = monotone
        if not monotone:
            logger.warning(f"三角极限残差未随 Im τ 减小: {trend}")
        return collector.report()

    @staticmethod
    def nondynamical_limit_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                                    depth: float = 6.0, tol: float = 1e-4,
                                    identity_id: str = 'nondynamical_limit',
                                    anchor: str = 'Rtrig') -> ResidualReport:
        """Im λ_{k,k+1} = −depth 处 R_trig(z,w,μ) 与非动力学 R_trig(z,w) 比较"""
        space = FelderService.two_leg_space(n)
        legs = ('1', '2')
        dynamical = trig_r_matrix('trig_dynamical', ctx, space, legs, Var(Z), Var(W))
        plain = trig_r_matrix('trig_nondynamical', ctx, space, legs, Var(Z), Var(W))
        variables = [Z, W] + _lambda_vars(n)

        def measure(point):
            deep = dict(point)
            for k in range(n):
                deep[lam(k + 1)] = point[lam(k + 1)] + 1j * depth * k
            return [(dynamical.evaluate(deep, ctx), plain.evaluate(point, ctx))]

        return OperatorService.pointwise_residual(measure, variables, sampling, tol, identity_id, anchor)

    @staticmethod
    def twist_conjugation_residual(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                                   tol: float = 1e-12, identity_id: str = 'Rtildetrig',
                                   anchor: str = 'Rtildetrig') -> ResidualReport:
        """F⁽²¹⁾ R_trig(z,w) F⁻¹ = R̃_trig(z,w)"""
        space = FelderService.two_leg_space(n)
        legs = ('1', '2')
        plain = trig_r_matrix('trig_nondynamical', ctx, space, legs, Var(Z), Var(W))
        tilde = trig_r_matrix('trig_tilde', ctx, space, legs, Var(Z), Var(W))
        f = twist_f_matrix(n, ctx)
        swap = OperatorService.embed_constant(space, f, ['2', '1'])
        inverse = np.linalg.inv(f)

        def measure(point):
            return [(swap @ plain.evaluate(point, ctx) @ inverse, tilde.evaluate(point, ctx))]

        return OperatorService.pointwise_residual(measure, [Z, W], sampling, tol, identity_id, anchor)

    @staticmethod
    def trig_manin_residuals(n: int, ctx: EngineContext, sampling: SamplingPolicy,
                             site_point: complex = 0.1, tol: float = 1e-9,
                             identity_id: str = 'trig_manin', anchor: str = 'Rtrig') -> ResidualReport:
        """
        三角 L 算子的 Manin 性质

        L(z) = R_trig(z, w₀) 时 M = L(z)q^{2z∂_z} 是 Manin 矩阵；
        L̃(z) = R̃_trig(z, w₀) 时 G L̃ G = R_trig，M = G L̃(z) G q^{2z∂_z} 也是 Manin 矩阵。
        """
        space = Space([Leg.aux('a', n), Leg.defining('s', n)])
        legs = ('a', 's')
        w0 = Const(np.exp(2j * np.pi * complex(site_point)))
        plain = trig_r_matrix('trig_nondynamical', ctx, space, legs, Var(Z), w0)
        tilde = trig_r_matrix('trig_tilde', ctx, space, legs, Var(Z), w0)
        g = constant(twist_g_matrix(ctx, space, 'a', ['s']), space.dims)
        twisted = mprod([g, tilde, g])
        shift = OperatorElem.shift_op(space, Z, 1)
        m_plain = OperatorElem.from_coefficient(space, plain) * shift
        m_twisted = OperatorElem.from_coefficient(space, twisted) * shift
        reports = [
            OperatorService.manin_check(m_plain, 'a', ctx, sampling, tol, 'manin_plain', anchor),
            OperatorService.manin_check(m_twisted, 'a', ctx, sampling, tol, 'manin_twisted', anchor),
            OperatorService.operator_residual(
                OperatorElem.from_coefficient(space, twisted), OperatorElem.from_coefficient(space, plain),
                ctx, sampling, tol, 'GLG', anchor,
            ),
        ]
        return OperatorService.combine_reports(reports, identity_id, anchor, tol, sampling.seed)
