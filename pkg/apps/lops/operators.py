"""
动力学 L 算子

DynamicalLOperator 保存 L(u;λ) 的构造方式：给定谱参数变量，返回辅助腿 'a'
与量子空间张量积上的系数。Cartan 元 h_k 由量子空间各腿的权给出。
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np
from django.core.exceptions import ValidationError

from apps.opalg.coefficients import MatrixExpr, constant
from apps.opalg.operators import OperatorElem
from apps.opalg.spaces import Leg, Space
from apps.scalar.expressions import U, VarId

# 配置日志
logger = logging.getLogger(__name__)

# 辅助腿标签
AUX = 'a'

Builder = Callable[[VarId], MatrixExpr]


class DynamicalLOperator:
    """
    动力学椭圆 L 算子

    Attributes:
        n: 辅助腿维数
        quantum: 量子空间，其腿上的权给出 Cartan 元
        space: 辅助腿与量子空间的张量积
        name: 名称，只用于日志
    """

    def __init__(self, n: int, quantum: Space, builder: Builder, name: str = 'L'):
        if AUX in quantum.labels:
            raise ValidationError(f"量子空间不能使用辅助腿标签 '{AUX}'")
        self.n = n
        self.quantum = quantum
        self.name = name
        self.space = Space([Leg.aux(AUX, n)]).concat(quantum)
        self._builder = builder
        self._cache: Dict[VarId, MatrixExpr] = {}

    @classmethod
    def trivial(cls, n: int) -> 'DynamicalLOperator':
        """L = 1，量子空间为空"""
        space = Space([Leg.aux(AUX, n)])
        return cls(n, Space(), lambda var: constant(space.identity(), space.dims), name='1')

    def __repr__(self):
        return f"DynamicalLOperator({self.name}, n={self.n}, {self.quantum})"

    @property
    def cartan_labels(self):
        """提供 Cartan 元的量子腿"""
        return self.quantum.labels

    def coefficient(self, spectral: VarId = U) -> MatrixExpr:
        """以 spectral 为谱参数的系数 L(spectral;λ)"""
        coef = self._cache.get(spectral)
        if coef is None:
            coef = self._builder(spectral)
            if coef.dims != self.space.dims:
                raise ValidationError(f"L 算子 {self.name} 的系数维数 {coef.dims} 与 {self.space} 不符")
            self._cache[spectral] = coef
        return coef

    def operator(self, spectral: VarId = U, offset: int = 0) -> OperatorElem:
        """L(spectral + offset·ħ;λ) 作为 shift 型算子"""
        op = OperatorElem.from_coefficient(self.space, self.coefficient(spectral))
        return op.shift_coefficients(((spectral, offset),))

    def at(self, label: str, target: Space, spectral: VarId = U, offset: int = 0) -> OperatorElem:
        """把辅助腿改名为 label 后嵌入 target"""
        return self.operator(spectral, offset).relabel({AUX: label}).embed(target)

    def cartan(self, k: int, target: Optional[Space] = None) -> np.ndarray:
        """h_k 在 target（默认本算子的空间）上的对角矩阵，k 从 0 开始"""
        target = self.space if target is None else target
        return target.cartan(k, self.quantum.labels)
