"""
R 矩阵构造

在给定空间的两条腿上构造 Felder 动力学椭圆 R 矩阵、经典 r 矩阵、
三角退化以及扭变矩阵。所有构造返回整个空间上的 MatrixExpr，
系数只依赖谱参数表达式和 λ₁..λₙ。
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from apps.opalg.coefficients import MatrixExpr, msum, tensor
from apps.opalg.spaces import Space
from apps.scalar.expressions import Const, ScalarExpr, Var, coerce, exp, lam, theta, theta_ratio

# 配置日志
logger = logging.getLogger(__name__)

Legs = Tuple[str, str]


def lam_diff(i: int, j: int) -> ScalarExpr:
    """λ_ij = λ_i − λ_j，i、j 从 0 开始"""
    return Var(lam(i + 1)) - Var(lam(j + 1))


def unit(n: int, i: int, j: int) -> np.ndarray:
    """n×n 矩阵单位 E_ij"""
    matrix = np.zeros((n, n), dtype=complex)
    matrix[i, j] = 1
    return matrix


def pair_matrix(space: Space, legs: Sequence[str], a: int, b: int, c: int, d: int) -> np.ndarray:
    """E_ab ⊗ E_cd 作用在两条腿上"""
    n = space.leg(legs[0]).dim
    m = space.leg(legs[1]).dim
    return space.embed(np.kron(unit(n, a, b), unit(m, c, d)), legs)


def _rank(space: Space, legs: Sequence[str]) -> int:
    if len(legs) != 2 or legs[0] == legs[1]:
        raise ValidationError(f"R 矩阵需要两条不同的腿: {list(legs)}")
    n = space.leg(legs[0]).dim
    if space.leg(legs[1]).dim != n:
        raise ValidationError(f"腿 {legs[0]} 与 {legs[1]} 维数不同")
    return n


def _diagonal(space: Space, legs: Sequence[str], n: int) -> np.ndarray:
    return sum(pair_matrix(space, legs, i, i, i, i) for i in range(n))


def felder_r_matrix(ctx, space: Space, legs: Legs, argument) -> MatrixExpr:
    """
    Felder 动力学 R 矩阵 R(u;λ)

    R = θ(u+ħ)/θ(u) Σ E_ii⊗E_ii
        + Σ_{i≠j} [θ(λ_ij+ħ)/θ(λ_ij) E_ii⊗E_jj + θ(u−λ_ij)θ(ħ)/(θ(u)θ(−λ_ij)) E_ij⊗E_ji]

    Args:
        ctx: 引擎上下文，提供 ħ
        space: 所在空间
        legs: 两条腿的标签
        argument: 谱参数 u 的表达式

    Returns:
        MatrixExpr: 整个空间上的系数
    """
    n = _rank(space, legs)
    u = coerce(argument)
    hbar = Const(ctx.hbar)
    terms = [tensor(theta(u + hbar) / theta(u), _diagonal(space, legs, n), space.dims)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lij = lam_diff(i, j)
            terms.append(tensor(theta(lij + hbar) / theta(lij), pair_matrix(space, legs, i, i, j, j), space.dims))
            exchange = theta(u - lij) * theta(hbar) / (theta(u) * theta(-lij))
            terms.append(tensor(exchange, pair_matrix(space, legs, i, j, j, i), space.dims))
    return msum(terms, space.dims)


def b_matrix(ctx, space: Space, legs: Legs) -> MatrixExpr:
    """B(λ) = ½ Σ_{i≠j} θ(λ_ij)/θ(λ_ij+ħ) E_ii⊗E_jj，满足 B(λ)R(−ħ;λ) = A⁽¹²⁾"""
    n = _rank(space, legs)
    hbar = Const(ctx.hbar)
    terms = []
    for i in range(n):
        for j in range(n):
            if i != j:
                lij = lam_diff(i, j)
                terms.append(tensor(0.5 * theta(lij) / theta(lij + hbar),
                                    pair_matrix(space, legs, i, i, j, j), space.dims))
    return msum(terms, space.dims)


def classical_r_matrix(space: Space, legs: Legs, argument, twisted: bool = False) -> MatrixExpr:
    """
    动力学经典椭圆 r 矩阵

    r = θ'(u)/θ(u) Σ E_ii⊗E_ii
        + Σ_{i≠j} [θ'(λ_ij)/θ(λ_ij) E_ii⊗E_jj + θ(u−λ_ij)/(θ(u)θ(−λ_ij)) E_ij⊗E_ji]

    twisted 时去掉 E_ii⊗E_jj 项，得到扭变后的 r̃ = r − 𝔣。
    """
    n = _rank(space, legs)
    u = coerce(argument)
    terms = [tensor(theta_ratio(u), _diagonal(space, legs, n), space.dims)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lij = lam_diff(i, j)
            if not twisted:
                terms.append(tensor(theta_ratio(lij), pair_matrix(space, legs, i, i, j, j), space.dims))
            exchange = theta(u - lij) / (theta(u) * theta(-lij))
            terms.append(tensor(exchange, pair_matrix(space, legs, i, j, j, i), space.dims))
    return msum(terms, space.dims)


def classical_twist_matrix(space: Space, legs: Legs) -> MatrixExpr:
    """经典动力学扭变 𝔣(λ) = Σ_{i≠j} θ'(λ_ij)/θ(λ_ij) e_ii⊗e_jj"""
    n = _rank(space, legs)
    terms = [
        tensor(theta_ratio(lam_diff(i, j)), pair_matrix(space, legs, i, i, j, j), space.dims)
        for i in range(n) for j in range(n) if i != j
    ]
    return msum(terms, space.dims)


def trig_r_matrix(kind: str, ctx, space: Space, legs: Legs, z, w) -> MatrixExpr:
    """
    三角 R 矩阵

    kind 为 trig_dynamical（μ_ij = e^{2πiλ_ij}）、trig_nondynamical 或 trig_tilde，
    z、w 为乘法型谱参数的表达式，q = e^{iπħ}。
    """
    n = _rank(space, legs)
    z, w = coerce(z), coerce(w)
    q = Const(ctx.q)
    gap = q - 1 / ctx.q
    terms = [tensor((z * q - w / ctx.q) / (z - w), _diagonal(space, legs, n), space.dims)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if kind == 'trig_dynamical':
                mu = exp(2j * np.pi * lam_diff(i, j))
                diagonal = (mu * q - 1 / ctx.q) / (mu - 1)
                exchange = gap * (z - w * mu) / ((z - w) * (1 - mu))
            elif kind in ('trig_nondynamical', 'trig_tilde'):
                if kind == 'trig_tilde':
                    diagonal = Const(1)
                else:
                    diagonal = q if i < j else Const(1 / ctx.q)
                exchange = gap * (w if i < j else z) / (z - w)
            else:
                raise ValidationError(f"未知的三角 R 矩阵类型: {kind}")
            terms.append(tensor(diagonal, pair_matrix(space, legs, i, i, j, j), space.dims))
            terms.append(tensor(exchange, pair_matrix(space, legs, i, j, j, i), space.dims))
    return msum(terms, space.dims)


def r_matrix(spec, ctx, space: Space, legs: Legs, first, second) -> MatrixExpr:
    """
    按描述构造 R 矩阵

    椭圆类型取 u = first − second，三角类型取 z = first、w = second。
    """
    if spec.kind == 'elliptic_dynamical':
        return felder_r_matrix(ctx, space, legs, coerce(first) - coerce(second))
    if spec.kind == 'classical_r':
        return classical_r_matrix(space, legs, coerce(first) - coerce(second))
    return trig_r_matrix(spec.kind, ctx, space, legs, first, second)


def q_power(ctx, exponent: float) -> complex:
    """q^{exponent} = e^{iπħ·exponent}"""
    return complex(np.exp(1j * np.pi * ctx.hbar * exponent))


def twist_f_matrix(n: int, ctx) -> np.ndarray:
    """F = Σ E_ii⊗E_ii + Σ_{i<j} (q^{½} E_ii⊗E_jj + q^{−½} E_jj⊗E_ii)"""
    diagonal = np.ones(n * n, dtype=complex)
    for i in range(n):
        for k in range(n):
            diagonal[i * n + k] = q_power(ctx, 0.5 * np.sign(k - i))
    return np.diag(diagonal)


def twist_g_diagonal(n: int, weights: Sequence[float], q: complex) -> np.ndarray:
    """
    G 在一个权子空间上的取值 Σ_i q^{½(Σ_{j>i} h_j − Σ_{j<i} h_j)} E_ii

    q 的分数次幂取 e^{x·log q} 的主支。
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,):
        raise ValidationError(f"权向量长度应为 {n}: {weights.tolist()}")
    log_q = np.log(complex(q))
    entries = [np.exp(log_q * 0.5 * (weights[i + 1:].sum() - weights[:i].sum())) for i in range(n)]
    return np.diag(np.asarray(entries, dtype=complex))


def twist_g_matrix(ctx, space: Space, aux: str, labels: Sequence[str]) -> np.ndarray:
    """
    整个空间上的 G，h_k 取 labels 所列量子腿上的权

    在每个联合权子空间上 G 为辅助腿上的常数对角阵。
    """
    n = space.leg(aux).dim
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for weights, projector in space.weight_blocks(labels):
        exponents = np.asarray(weights, dtype=float)
        entries = [q_power(ctx, 0.5 * (exponents[i + 1:].sum() - exponents[:i].sum())) for i in range(n)]
        total += space.embed(np.diag(entries), [aux]) @ projector
    return total
