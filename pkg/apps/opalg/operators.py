"""
算子环元素

OperatorElem 是 Σ_α f_α ⊗ X^α 形式的有限和：f_α 是空间上的矩阵值系数，
X^α 是平移单项式 e^{ħ·α·∂}（shift 型）或微分单项式 ∂^α（diff 型）。
单项式总在系数右侧（正规序），乘积按平移规则或 Leibniz 规则重新排序。
"""

import itertools
import logging
from collections import defaultdict
from numbers import Number
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError
from scipy.special import comb

from apps.opalg.coefficients import (
    EvaluationSession, MatrixExpr, ZeroMatrix, block, constant, embedded, mprod, msum,
    partial_trace, scaled, shifted, tensor,
)
from apps.opalg.spaces import Space
from apps.scalar.expressions import ScalarExpr, VarId, coerce, lam, merge_shifts
from utils.exceptions import CapabilityError

# 配置日志
logger = logging.getLogger(__name__)

Monomial = Tuple[Tuple[VarId, int], ...]
FLAVORS = ('shift', 'diff')


def monomial_power(mono: Monomial, var: VarId) -> int:
    """单项式中 var 的次数"""
    for v, p in mono:
        if v == var:
            return p
    return 0


def drop_var(mono: Monomial, var: VarId) -> Monomial:
    return tuple((v, p) for v, p in mono if v != var)


def _sub_multi_indices(mono: Monomial):
    """枚举 γ ≤ α 的全部多重指标"""
    variables = [v for v, _ in mono]
    ranges = [range(p + 1) for _, p in mono]
    for powers in itertools.product(*ranges):
        yield tuple((v, g) for v, g in zip(variables, powers) if g)


class OperatorElem:
    """
    算子环元素

    Attributes:
        space: 系数矩阵作用的空间（辅助腿与量子站点）
        terms: 单项式到矩阵值系数的映射
        flavor: 'shift' 或 'diff'
    """

    def __init__(self, space: Space, terms: Mapping[Monomial, MatrixExpr], flavor: str = 'shift'):
        if flavor not in FLAVORS:
            raise ValidationError(f"未知的算子类型: {flavor}")
        self.space = space
        self.flavor = flavor
        self.terms: Dict[Monomial, MatrixExpr] = {}
        for mono, coef in terms.items():
            if coef.dims != space.dims:
                raise ValidationError(f"系数维数 {coef.dims} 与空间 {space} 不符")
            if coef.is_zero():
                continue
            if flavor == 'diff' and coef.has_opaque():
                raise CapabilityError("微分型算子的系数不能含有不透明节点")
            self.terms[mono] = coef

    # 构造

    @classmethod
    def zero(cls, space: Space, flavor: str = 'shift') -> 'OperatorElem':
        return cls(space, {}, flavor)

    @classmethod
    def identity(cls, space: Space, flavor: str = 'shift') -> 'OperatorElem':
        return cls.from_matrix(space, space.identity(), flavor)

    @classmethod
    def from_coefficient(cls, space: Space, coef: MatrixExpr, flavor: str = 'shift',
                         mono: Monomial = ()) -> 'OperatorElem':
        """单个系数乘单项式"""
        return cls(space, {mono: coef}, flavor)

    @classmethod
    def from_matrix(cls, space: Space, matrix: np.ndarray, flavor: str = 'shift') -> 'OperatorElem':
        """常数矩阵"""
        return cls(space, {(): constant(matrix, space.dims)}, flavor)

    @classmethod
    def from_scalar(cls, space: Space, f, flavor: str = 'shift') -> 'OperatorElem':
        """标量函数乘单位阵"""
        return cls(space, {(): tensor(coerce(f), space.identity(), space.dims)}, flavor)

    @classmethod
    def shift_op(cls, space: Space, var: VarId, power: int = 1) -> 'OperatorElem':
        """平移算子 e^{power·ħ∂_var}（乘法型变量为 q^{2·power·z∂_z}）"""
        return cls(space, {merge_shifts(((var, power),)): constant(space.identity(), space.dims)}, 'shift')

    @classmethod
    def diff_op(cls, space: Space, var: VarId, order: int = 1) -> 'OperatorElem':
        """微分算子 ∂_var^order"""
        if var.kind == 'multiplicative':
            raise CapabilityError(f"乘法型变量 {var} 不能作为微分变量")
        return cls(space, {merge_shifts(((var, order),)): constant(space.identity(), space.dims)}, 'diff')

    # 结构信息

    @property
    def dims(self):
        return self.space.dims

    def is_zero(self) -> bool:
        return not self.terms

    def free_vars(self) -> frozenset:
        """系数依赖的变量"""
        return frozenset().union(*(c.free_vars() for c in self.terms.values()))

    def monomials(self) -> List[Monomial]:
        return sorted(self.terms)

    def coefficient(self, mono: Monomial = ()) -> MatrixExpr:
        return self.terms.get(mono, ZeroMatrix(self.dims))

    def _check_compatible(self, other: 'OperatorElem'):
        if self.flavor != other.flavor:
            raise CapabilityError(f"算子类型不一致: {self.flavor} 与 {other.flavor}")
        if self.space != other.space:
            raise ValidationError(f"算子空间不一致: {self.space} 与 {other.space}")

    def _like(self, terms: Mapping[Monomial, MatrixExpr]) -> 'OperatorElem':
        return OperatorElem(self.space, terms, self.flavor)

    # 线性运算

    def __add__(self, other):
        if not isinstance(other, OperatorElem):
            other = OperatorElem.from_scalar(self.space, other, self.flavor)
        self._check_compatible(other)
        grouped: Dict[Monomial, List[MatrixExpr]] = defaultdict(list)
        for source in (self, other):
            for mono, coef in source.terms.items():
                grouped[mono].append(coef)
        return self._like({m: msum(cs, self.dims) for m, cs in grouped.items()})

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if not isinstance(other, OperatorElem):
            other = OperatorElem.from_scalar(self.space, other, self.flavor)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> 'OperatorElem':
        """左乘标量函数"""
        factor = coerce(factor)
        return self._like({m: scaled(factor, c) for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorElem):
            return self.ring_mul(other)
        if isinstance(other, Number):
            return self.scale(other)
        if isinstance(other, (ScalarExpr, VarId)):
            return self.ring_mul(OperatorElem.from_scalar(self.space, other, self.flavor))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Number, ScalarExpr, VarId)):
            return self.scale(other)
        return NotImplemented

    # 环乘法

    def ring_mul(self, other: 'OperatorElem') -> 'OperatorElem':
        """正规序乘积"""
        self._check_compatible(other)
        grouped: Dict[Monomial, List[MatrixExpr]] = defaultdict(list)
        if self.flavor == 'shift':
            for alpha, f in self.terms.items():
                for beta, g in other.terms.items():
                    grouped[merge_shifts(alpha, beta)].append(mprod([f, shifted(g, alpha)]))
        else:
            for alpha, f in self.terms.items():
                for beta, g in other.terms.items():
                    self._leibniz(alpha, f, beta, g, grouped)
        return self._like({m: msum(cs, self.dims) for m, cs in grouped.items()})

    @staticmethod
    def _leibniz(alpha: Monomial, f: MatrixExpr, beta: Monomial, g: MatrixExpr,
                 grouped: Dict[Monomial, List[MatrixExpr]]):
        # ∂^α g = Σ_γ C(α,γ) (∂^γ g) ∂^{α−γ}
        for gamma in _sub_multi_indices(alpha):
            dg = g
            weight = 1
            for var, order in gamma:
                for _ in range(order):
                    dg = dg.differentiate(var)
                weight *= int(comb(monomial_power(alpha, var), order, exact=True))
            if dg.is_zero():
                continue
            rest = merge_shifts(alpha, tuple((v, -p) for v, p in gamma), beta)
            product = mprod([f, dg])
            grouped[rest].append(product if weight == 1 else scaled(weight, product))

    def commutator(self, other: 'OperatorElem') -> 'OperatorElem':
        """[a, b] = ab − ba"""
        return self * other - other * self

    def power(self, k: int) -> 'OperatorElem':
        """k 次幂，k = 0 时为单位元"""
        result = OperatorElem.identity(self.space, self.flavor)
        for _ in range(k):
            result = result * self
        return result

    # 常数矩阵乘法

    def left_matrix(self, matrix: np.ndarray) -> 'OperatorElem':
        """左乘常数矩阵"""
        const = constant(matrix, self.dims)
        return self._like({m: mprod([const, c]) for m, c in self.terms.items()})

    def right_matrix(self, matrix: np.ndarray) -> 'OperatorElem':
        """右乘常数矩阵（常数与单项式可交换）"""
        const = constant(matrix, self.dims)
        return self._like({m: mprod([c, const]) for m, c in self.terms.items()})

    # 单项式分组

    def group_by(self, var: VarId) -> Dict[int, 'OperatorElem']:
        """按 var 的次数分组，返回的元素不再含 var 的单项式"""
        grouped: Dict[int, Dict[Monomial, MatrixExpr]] = defaultdict(dict)
        for mono, coef in self.terms.items():
            grouped[monomial_power(mono, var)][drop_var(mono, var)] = coef
        return {p: self._like(terms) for p, terms in sorted(grouped.items())}

    def substitute_monomials(self, mapping: Mapping[VarId, Tuple[VarId, int]]) -> 'OperatorElem':
        """
        把单项式变量换成 ±另一个变量，例如 ∂_λ₁ ↦ ∂_λ, ∂_λ₂ ↦ −∂_λ

        系数保持不变，调用方负责让系数也只依赖替换后的变量。
        """
        grouped: Dict[Monomial, List[MatrixExpr]] = defaultdict(list)
        for mono, coef in self.terms.items():
            images = []
            sign = 1
            for var, power in mono:
                target, direction = mapping.get(var, (var, 1))
                images.append((target, power))
                if direction < 0 and power % 2:
                    sign = -sign
            grouped[merge_shifts(images)].append(coef if sign == 1 else scaled(-1, coef))
        return self._like({m: msum(cs, self.dims) for m, cs in grouped.items()})

    # 腿运算

    def embed(self, target: Space) -> 'OperatorElem':
        """按标签嵌入更大的空间，未涉及的腿上为单位阵"""
        if not target.contains(self.space):
            raise ValidationError(f"空间 {self.space} 不是 {target} 的子空间")
        positions = target.positions(self.space.labels)
        return OperatorElem(
            target,
            {m: embedded(c, positions, target.dims) for m, c in self.terms.items()},
            self.flavor,
        )

    def relabel(self, mapping: Dict[str, str]) -> 'OperatorElem':
        """重命名腿，系数不变"""
        return OperatorElem(self.space.renamed(mapping), self.terms, self.flavor)

    def block(self, label: str, i: int, j: int) -> 'OperatorElem':
        """取出 label 腿上的 (i, j) 矩阵元"""
        position = self.space.position(label)
        space = self.space.without([label])
        return OperatorElem(space, {m: block(c, position, i, j) for m, c in self.terms.items()}, self.flavor)

    def partial_trace(self, labels: Iterable[str]) -> 'OperatorElem':
        """对所列腿求偏迹"""
        labels = list(labels)
        positions = self.space.positions(labels)
        space = self.space.without(labels)
        return OperatorElem(space, {m: partial_trace(c, positions) for m, c in self.terms.items()}, self.flavor)

    def weight_shifted(self, labels: Sequence[str], factor: float = 1.0) -> 'OperatorElem':
        """
        F(λ + factor·ħ·h)：h_k 取所列腿的权

        在 h 的联合本征子空间上把 λ_k 平移 factor·w_k 步，投影矩阵放在系数右侧。
        """
        if not labels:
            return self
        blocks = self.space.weight_blocks(labels)
        if all(not any(w) for w, _ in blocks):
            return self
        terms = {}
        for mono, coef in self.terms.items():
            parts = []
            for weights, projector in blocks:
                shifts = [(lam(k + 1), factor * w) for k, w in enumerate(weights) if w]
                parts.append(mprod([shifted(coef, merge_shifts(shifts)), constant(projector, self.dims)]))
            terms[mono] = msum(parts, self.dims)
        return self._like(terms)

    def shift_coefficients(self, shifts) -> 'OperatorElem':
        """系数整体平移，例如 L(u) → L(u + kħ)，单项式不变"""
        shifts = merge_shifts(shifts)
        if not shifts:
            return self
        return self._like({m: shifted(c, shifts) for m, c in self.terms.items()})

    # 微分与求值

    def derivative_in(self, var: VarId) -> 'OperatorElem':
        """系数逐项对 var 求导"""
        return self._like({m: c.differentiate(var) for m, c in self.terms.items()})

    def evaluate(self, point: Mapping[VarId, complex], ctx,
                 session: Optional[EvaluationSession] = None) -> Dict[Monomial, np.ndarray]:
        """在一点上求值全部系数"""
        session = session or EvaluationSession(point, ctx)
        return {m: session.matrix(c) for m, c in self.terms.items()}

    def prune_monomials(self, keep: Iterable[Monomial]) -> 'OperatorElem':
        keep = set(keep)
        return self._like({m: c for m, c in self.terms.items() if m in keep})

    def __repr__(self):
        monos = ', '.join('·'.join(f"{v}^{p}" for v, p in m) or '1' for m in self.monomials())
        return f"OperatorElem({self.flavor}, {self.space}, [{monos}])"
