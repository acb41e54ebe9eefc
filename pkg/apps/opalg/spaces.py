"""
张量腿与量子空间

Leg 描述一个张量因子：辅助腿（aux）或量子站点（site），记录每个基向量在
Cartan 元 e_kk 下的权。Space 是有序的腿列表，提供嵌入、块提取、偏迹和按权分块。
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

LegKind = Literal['aux', 'site']


@dataclass(frozen=True)
class Leg:
    """
    张量腿

    weights[i][k] 是第 i 个基向量在 h_k 下的权。
    """
    label: str
    dim: int
    weights: Tuple[Tuple[float, ...], ...]
    kind: LegKind = 'site'
    rep: str = 'defining'
    eval_point: Optional[complex] = field(default=None, compare=False)

    @classmethod
    def aux(cls, label: str, n: int) -> 'Leg':
        """辅助腿 Cⁿ，基向量 e_i 的权为 δ_ik"""
        return cls(label, n, _unit_weights(n, 1), kind='aux', rep='defining')

    @classmethod
    def defining(cls, label: str, n: int, eval_point: Optional[complex] = None,
                 traceless: bool = False) -> 'Leg':
        """定义表示站点，权为 +δ_ik；traceless 时减去平均值 1/n"""
        weights = _unit_weights(n, 1)
        if traceless:
            weights = _traceless(weights, n)
        return cls(label, n, weights, kind='site', rep='defining', eval_point=eval_point)

    @classmethod
    def dual(cls, label: str, n: int, eval_point: Optional[complex] = None,
             traceless: bool = False) -> 'Leg':
        """对偶表示站点 e_ij ↦ −E_ji，权为 −δ_ik"""
        weights = _unit_weights(n, -1)
        if traceless:
            weights = _traceless(weights, n)
        return cls(label, n, weights, kind='site', rep='dual', eval_point=eval_point)

    def renamed(self, label: str) -> 'Leg':
        return Leg(label, self.dim, self.weights, self.kind, self.rep, self.eval_point)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def _unit_weights(n: int, sign: int) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(sign) if i == k else 0.0 for k in range(n)) for i in range(n))


def _traceless(weights, n: int) -> Tuple[Tuple[float, ...], ...]:
    array = np.asarray(weights, dtype=float)
    array = array - array.sum(axis=1, keepdims=True) / n
    return tuple(tuple(float(x) for x in row) for row in array)


class Space:
    """有序的张量腿列表"""

    def __init__(self, legs: Iterable[Leg] = ()):
        self.legs: Tuple[Leg, ...] = tuple(legs)
        labels = [leg.label for leg in self.legs]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"腿标签重复: {labels}")
        self._index = {label: i for i, label in enumerate(labels)}

    def __eq__(self, other):
        return isinstance(other, Space) and self.legs == other.legs

    def __hash__(self):
        return hash(self.legs)

    def __repr__(self):
        return f"Space({', '.join(self.labels)})"

    def __len__(self):
        return len(self.legs)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(leg.label for leg in self.legs)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(leg.dim for leg in self.legs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=int)) if self.legs else 1

    @property
    def aux_labels(self) -> Tuple[str, ...]:
        return tuple(leg.label for leg in self.legs if leg.kind == 'aux')

    @property
    def site_labels(self) -> Tuple[str, ...]:
        return tuple(leg.label for leg in self.legs if leg.kind == 'site')

    def leg(self, label: str) -> Leg:
        return self.legs[self.position(label)]

    def position(self, label: str) -> int:
        """腿的位置"""
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"未知的腿: '{label}'，现有 {list(self.labels)}")

    def positions(self, labels: Sequence[str]) -> Tuple[int, ...]:
        """一组腿的位置，标签不能重复"""
        if len(set(labels)) != len(labels):
            raise ValidationError(f"腿标签重复: {list(labels)}")
        return tuple(self.position(label) for label in labels)

    def sub(self, labels: Sequence[str]) -> 'Space':
        """按给定顺序取出部分腿"""
        return Space(self.legs[p] for p in self.positions(labels))

    def without(self, labels: Iterable[str]) -> 'Space':
        """去掉部分腿"""
        drop = set(labels)
        for label in drop:
            self.position(label)
        return Space(leg for leg in self.legs if leg.label not in drop)

    def concat(self, other: 'Space') -> 'Space':
        return Space(self.legs + other.legs)

    def renamed(self, mapping: Dict[str, str]) -> 'Space':
        """重命名腿"""
        return Space(leg.renamed(mapping.get(leg.label, leg.label)) for leg in self.legs)

    def contains(self, other: 'Space') -> bool:
        """other 的每条腿都在本空间中"""
        return all(label in self._index and self.leg(label) == leg
                   for label, leg in zip(other.labels, other.legs))

    # 矩阵运算

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def embed(self, matrix: np.ndarray, labels: Sequence[str]) -> np.ndarray:
        """
        把作用在 labels 所列腿上的矩阵嵌入整个空间

        labels 的顺序不必递增，矩阵的张量因子顺序与 labels 一致。

        Args:
            matrix: 作用在所列腿张量积上的矩阵
            labels: 腿标签

        Returns:
            np.ndarray: 整个空间上的矩阵
        """
        return embed_matrix(matrix, self.positions(labels), self.dims)

    def elementary(self, label: str, i: int, j: int) -> np.ndarray:
        """E_ij 作用在 label 腿上"""
        dim = self.leg(label).dim
        unit = np.zeros((dim, dim), dtype=complex)
        unit[i, j] = 1
        return self.embed(unit, [label])

    def weight_table(self, labels: Optional[Sequence[str]] = None) -> np.ndarray:
        """
        每个张量基向量的权（所列腿的权之和）

        Returns:
            np.ndarray: 形状 (dim, n)
        """
        labels = self.labels if labels is None else labels
        selected = set(self.positions(labels))
        if not self.legs:
            return np.zeros((1, 0))
        n = max(len(leg.weights[0]) for leg in self.legs)
        total = np.zeros(self.dims + (n,))
        for p, leg in enumerate(self.legs):
            if p not in selected:
                continue
            shape = [1] * len(self.legs) + [n]
            shape[p] = leg.dim
            total = total + leg.weight_array().reshape(shape)
        return total.reshape(self.dim, n)

    def weight_blocks(self, labels: Sequence[str]) -> List[Tuple[Tuple[float, ...], np.ndarray]]:
        """
        按所列腿的总权对基向量分组

        Returns:
            list: (权向量, 对角投影矩阵) 列表，按权排序
        """
        table = self.weight_table(labels)
        blocks: Dict[Tuple[float, ...], np.ndarray] = {}
        for index, row in enumerate(table):
            key = tuple(float(np.round(x, 12)) for x in row)
            mask = blocks.setdefault(key, np.zeros(self.dim))
            mask[index] = 1.0
        return [(w, np.diag(mask).astype(complex)) for w, mask in sorted(blocks.items())]

    def cartan(self, k: int, labels: Optional[Sequence[str]] = None) -> np.ndarray:
        """h_k（所列腿上 e_kk 的像之和）的对角矩阵，k 从 0 开始；空空间上为零"""
        table = self.weight_table(labels)
        if k >= table.shape[1]:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return np.diag(table[:, k]).astype(complex)


def embed_matrix(matrix: np.ndarray, positions: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """
    把作用在 positions 位置的矩阵嵌入 dims 描述的张量积空间

    Args:
        matrix: 作用在所选因子上的方阵，因子顺序与 positions 一致
        positions: 所选因子的位置
        dims: 全部因子的维数

    Returns:
        np.ndarray: 全空间矩阵
    """
    dims = tuple(dims)
    k = len(dims)
    positions = list(positions)
    rest = [i for i in range(k) if i not in positions]
    rest_dim = int(np.prod([dims[i] for i in rest], dtype=int)) if rest else 1
    full = np.kron(np.asarray(matrix, dtype=complex), np.eye(rest_dim, dtype=complex))
    order = positions + rest
    if order == list(range(k)):
        return full
    ordered = [dims[i] for i in order]
    tensor = full.reshape(ordered + ordered)
    perm = [order.index(j) for j in range(k)]
    tensor = tensor.transpose(perm + [k + p for p in perm])
    total = int(np.prod(dims, dtype=int))
    return tensor.reshape(total, total)


def extract_block(matrix: np.ndarray, dims: Sequence[int], position: int, i: int, j: int) -> np.ndarray:
    """取出 position 因子上的 (i, j) 块"""
    dims = tuple(dims)
    k = len(dims)
    tensor = matrix.reshape(dims + dims)
    tensor = np.take(tensor, j, axis=k + position)
    tensor = np.take(tensor, i, axis=position)
    rest = int(np.prod([d for p, d in enumerate(dims) if p != position], dtype=int))
    return tensor.reshape(rest, rest)


def partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], positions: Iterable[int]) -> np.ndarray:
    """对 positions 因子求偏迹"""
    dims = list(dims)
    k = len(dims)
    tensor = matrix.reshape(dims + dims)
    for p in sorted(set(positions), reverse=True):
        tensor = np.trace(tensor, axis1=p, axis2=p + k)
        k -= 1
        dims.pop(p)
    rest = int(np.prod(dims, dtype=int)) if dims else 1
    return tensor.reshape(rest, rest)
