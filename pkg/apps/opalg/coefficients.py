"""
矩阵值系数 DAG

MatrixExpr 表示量子空间（含辅助腿）上的矩阵值系数函数，是 ScalarExpr ⊗ 矩阵
的有限组合。节点只记录因子维数，不记录腿标签，因此重命名腿不需要重建系数。
求值在 EvaluationSession 中进行，同一会话内按 (节点, 点) 缓存。
"""

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from apps.scalar.expressions import (
    ONE, Evaluation, OpaqueMatrix, ScalarExpr, Shifts, VarId, coerce, merge_shifts,
)
from apps.opalg.spaces import embed_matrix, extract_block, partial_trace_matrix
from utils.exceptions import CapabilityError

# 配置日志
logger = logging.getLogger(__name__)

Dims = Tuple[int, ...]


def _point_key(point: Mapping[VarId, complex]):
    return tuple(sorted(point.items()))


class EvaluationSession:
    """
    求值会话

    同一会话内，节点在同一点上只计算一次；Shifted 节点改变子树的求值点。
    """

    def __init__(self, point: Mapping[VarId, complex], ctx):
        self.point = dict(point)
        self.ctx = ctx
        self._matrices: Dict[tuple, Tuple['MatrixExpr', np.ndarray]] = {}
        self._scalars: Dict[tuple, Evaluation] = {}

    def matrix(self, node: 'MatrixExpr', point: Optional[Mapping[VarId, complex]] = None) -> np.ndarray:
        """节点的数值矩阵"""
        point = self.point if point is None else point
        key = (id(node), _point_key(point))
        hit = self._matrices.get(key)
        if hit is not None:
            return hit[1]
        value = node._compute(self, point)
        self._matrices[key] = (node, value)
        return value

    def scalar(self, expr: ScalarExpr, point: Mapping[VarId, complex]) -> complex:
        """标量表达式的数值"""
        key = _point_key(point)
        evaluation = self._scalars.get(key)
        if evaluation is None:
            evaluation = Evaluation(point, self.ctx)
            self._scalars[key] = evaluation
        return evaluation.value(expr)


class MatrixExpr:
    """矩阵值系数基类"""

    children: Tuple['MatrixExpr', ...] = ()

    def __init__(self, dims: Dims):
        self.dims = tuple(dims)
        self._free: Optional[frozenset] = None
        self._derivs: Dict[VarId, 'MatrixExpr'] = {}
        self._opaque: Optional[bool] = None

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=int)) if self.dims else 1

    def free_vars(self) -> frozenset:
        if self._free is None:
            self._free = self._own_vars().union(*(c.free_vars() for c in self.children))
        return self._free

    def _own_vars(self) -> frozenset:
        return frozenset()

    def has_opaque(self) -> bool:
        """是否含有不透明节点"""
        if self._opaque is None:
            self._opaque = self._own_opaque() or any(c.has_opaque() for c in self.children)
        return self._opaque

    def _own_opaque(self) -> bool:
        return False

    def is_zero(self) -> bool:
        return False

    def evaluate(self, point: Mapping[VarId, complex], ctx) -> np.ndarray:
        """在一个点上求值"""
        return EvaluationSession(point, ctx).matrix(self)

    def _compute(self, session: EvaluationSession, point) -> np.ndarray:
        raise NotImplementedError

    def differentiate(self, var: VarId) -> 'MatrixExpr':
        """对 var 的导数，按节点缓存"""
        if var not in self.free_vars():
            return ZeroMatrix(self.dims)
        cached = self._derivs.get(var)
        if cached is None:
            cached = self._derivs.setdefault(var, self._derive(var))
        return cached

    def _derive(self, var: VarId) -> 'MatrixExpr':
        raise NotImplementedError


class ZeroMatrix(MatrixExpr):
    """零矩阵"""

    def is_zero(self) -> bool:
        return True

    def _compute(self, session, point):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def _derive(self, var):
        return self


class Tensor(MatrixExpr):
    """标量系数乘常数矩阵"""

    def __init__(self, scalar: ScalarExpr, matrix: np.ndarray, dims: Dims):
        super().__init__(dims)
        self.scalar = coerce(scalar)
        self.matrix = np.asarray(matrix, dtype=complex)
        if self.matrix.shape != (self.dim, self.dim):
            raise CapabilityError(f"矩阵形状 {self.matrix.shape} 与维数 {self.dims} 不符")

    def _own_vars(self):
        return self.scalar.free_vars()

    def _own_opaque(self):
        return self.scalar.has_opaque()

    def _compute(self, session, point):
        if self.scalar is ONE:
            return self.matrix
        return session.scalar(self.scalar, point) * self.matrix

    def _derive(self, var):
        return tensor(self.scalar.differentiate(var), self.matrix, self.dims)


class MatrixSum(MatrixExpr):
    """矩阵和"""

    def __init__(self, terms: Sequence[MatrixExpr]):
        super().__init__(terms[0].dims)
        self.children = tuple(terms)

    def _compute(self, session, point):
        total = session.matrix(self.children[0], point).copy()
        for term in self.children[1:]:
            total += session.matrix(term, point)
        return total

    def _derive(self, var):
        return msum([t.differentiate(var) for t in self.children], self.dims)


class MatrixProduct(MatrixExpr):
    """有序矩阵积"""

    def __init__(self, factors: Sequence[MatrixExpr]):
        super().__init__(factors[0].dims)
        self.children = tuple(factors)

    def _compute(self, session, point):
        result = session.matrix(self.children[0], point)
        for factor in self.children[1:]:
            result = result @ session.matrix(factor, point)
        return result

    def _derive(self, var):
        terms = []
        for i, factor in enumerate(self.children):
            d = factor.differentiate(var)
            if d.is_zero():
                continue
            terms.append(mprod(list(self.children[:i]) + [d] + list(self.children[i + 1:])))
        return msum(terms, self.dims)


class Scaled(MatrixExpr):
    """标量系数乘矩阵表达式"""

    def __init__(self, scalar: ScalarExpr, child: MatrixExpr):
        super().__init__(child.dims)
        self.scalar = coerce(scalar)
        self.child = child
        self.children = (child,)

    def _own_vars(self):
        return self.scalar.free_vars()

    def _own_opaque(self):
        return self.scalar.has_opaque()

    def _compute(self, session, point):
        return session.scalar(self.scalar, point) * session.matrix(self.child, point)

    def _derive(self, var):
        return msum([
            scaled(self.scalar.differentiate(var), self.child),
            scaled(self.scalar, self.child.differentiate(var)),
        ], self.dims)


class Shifted(MatrixExpr):
    """
    变量平移后的系数 f(x + p·ħ) 或 f(x·q^{2p})

    平移次数可以是分数（无迹权）。
    """

    def __init__(self, child: MatrixExpr, shifts: Shifts):
        super().__init__(child.dims)
        self.child = child
        self.shifts = shifts
        self.children = (child,)

    def _compute(self, session, point):
        return session.matrix(self.child, session.ctx.shift_point(point, self.shifts))

    def _derive(self, var):
        for shifted_var, _ in self.shifts:
            if shifted_var == var and var.kind == 'multiplicative':
                raise CapabilityError(f"乘法型变量 {var} 的平移节点不支持微分")
        return shifted(self.child.differentiate(var), self.shifts)


class Embedded(MatrixExpr):
    """把子空间上的系数嵌入更大的张量积"""

    def __init__(self, child: MatrixExpr, positions: Tuple[int, ...], dims: Dims):
        super().__init__(dims)
        self.child = child
        self.positions = tuple(positions)
        self.children = (child,)

    def _compute(self, session, point):
        return embed_matrix(session.matrix(self.child, point), self.positions, self.dims)

    def _derive(self, var):
        return embedded(self.child.differentiate(var), self.positions, self.dims)


class Block(MatrixExpr):
    """取出某个因子上的 (i, j) 块"""

    def __init__(self, child: MatrixExpr, position: int, i: int, j: int):
        dims = child.dims[:position] + child.dims[position + 1:]
        super().__init__(dims)
        self.child = child
        self.position = position
        self.i = i
        self.j = j
        self.children = (child,)

    def _compute(self, session, point):
        return extract_block(session.matrix(self.child, point), self.child.dims, self.position, self.i, self.j)

    def _derive(self, var):
        return block(self.child.differentiate(var), self.position, self.i, self.j)


class PartialTrace(MatrixExpr):
    """对若干因子求偏迹"""

    def __init__(self, child: MatrixExpr, positions: Tuple[int, ...]):
        dims = tuple(d for p, d in enumerate(child.dims) if p not in positions)
        super().__init__(dims)
        self.child = child
        self.positions = tuple(positions)
        self.children = (child,)

    def _compute(self, session, point):
        return partial_trace_matrix(session.matrix(self.child, point), self.child.dims, self.positions)

    def _derive(self, var):
        return partial_trace(self.child.differentiate(var), self.positions)


class OpaqueLeaf(MatrixExpr):
    """整块不透明矩阵"""

    def __init__(self, opaque: OpaqueMatrix, dims: Dims, shifts: Shifts = ()):
        super().__init__(dims)
        if opaque.dim != self.dim:
            raise CapabilityError(f"不透明矩阵维数 {opaque.dim} 与 {self.dims} 不符")
        self.opaque = opaque
        self.shifts = shifts

    def _own_vars(self):
        return frozenset(self.opaque.variables)

    def _own_opaque(self):
        return True

    def _compute(self, session, point):
        return self.opaque.evaluate(session.ctx.shift_point(point, self.shifts))

    def _derive(self, var):
        raise CapabilityError(f"不透明矩阵 {self.opaque.name} 不支持微分")


# 构造函数，带结构化零折叠

def tensor(scalar, matrix: np.ndarray, dims: Dims) -> MatrixExpr:
    """标量乘常数矩阵"""
    scalar = coerce(scalar)
    matrix = np.asarray(matrix, dtype=complex)
    if scalar.is_zero() or not np.any(matrix):
        return ZeroMatrix(dims)
    return Tensor(scalar, matrix, dims)


def constant(matrix: np.ndarray, dims: Dims) -> MatrixExpr:
    """常数矩阵"""
    return tensor(ONE, matrix, dims)


def msum(terms: Iterable[MatrixExpr], dims: Dims) -> MatrixExpr:
    """矩阵和，去掉零项"""
    flat: List[MatrixExpr] = []
    for t in terms:
        if t.is_zero():
            continue
        flat.extend(t.children if isinstance(t, MatrixSum) else (t,))
    if not flat:
        return ZeroMatrix(dims)
    if len(flat) == 1:
        return flat[0]
    return MatrixSum(flat)


def mprod(factors: Sequence[MatrixExpr]) -> MatrixExpr:
    """有序矩阵积，合并相邻的常数张量"""
    if any(f.is_zero() for f in factors):
        return ZeroMatrix(factors[0].dims)
    flat: List[MatrixExpr] = []
    for f in factors:
        parts = f.children if isinstance(f, MatrixProduct) else (f,)
        for p in parts:
            if flat and isinstance(p, Tensor) and isinstance(flat[-1], Tensor):
                last = flat.pop()
                merged = tensor(last.scalar * p.scalar, last.matrix @ p.matrix, p.dims)
                if merged.is_zero():
                    return ZeroMatrix(p.dims)
                flat.append(merged)
            else:
                flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return MatrixProduct(flat)


def scaled(scalar, child: MatrixExpr) -> MatrixExpr:
    """标量乘矩阵表达式"""
    scalar = coerce(scalar)
    if scalar.is_zero() or child.is_zero():
        return ZeroMatrix(child.dims)
    if scalar is ONE:
        return child
    if isinstance(child, Tensor):
        return tensor(scalar * child.scalar, child.matrix, child.dims)
    return Scaled(scalar, child)


def shifted(child: MatrixExpr, shifts: Shifts) -> MatrixExpr:
    """平移系数，与系数无关的平移直接忽略"""
    free = child.free_vars()
    shifts = tuple((v, p) for v, p in shifts if v in free and p != 0)
    if not shifts or child.is_zero():
        return child
    if isinstance(child, Shifted):
        return shifted(child.child, merge_shifts(child.shifts, shifts))
    if isinstance(child, OpaqueLeaf):
        return OpaqueLeaf(child.opaque, child.dims, merge_shifts(child.shifts, shifts))
    return Shifted(child, merge_shifts(shifts))


def embedded(child: MatrixExpr, positions: Sequence[int], dims: Dims) -> MatrixExpr:
    """嵌入更大的张量积"""
    dims = tuple(dims)
    positions = tuple(positions)
    if child.is_zero():
        return ZeroMatrix(dims)
    if positions == tuple(range(len(dims))):
        return child
    if isinstance(child, Tensor):
        return Tensor(child.scalar, embed_matrix(child.matrix, positions, dims), dims)
    return Embedded(child, positions, dims)


def block(child: MatrixExpr, position: int, i: int, j: int) -> MatrixExpr:
    """取 (i, j) 块"""
    dims = child.dims[:position] + child.dims[position + 1:]
    if child.is_zero():
        return ZeroMatrix(dims)
    if isinstance(child, Tensor):
        return tensor(child.scalar, extract_block(child.matrix, child.dims, position, i, j), dims)
    return Block(child, position, i, j)


def partial_trace(child: MatrixExpr, positions: Sequence[int]) -> MatrixExpr:
    """偏迹"""
    positions = tuple(sorted(set(positions)))
    dims = tuple(d for p, d in enumerate(child.dims) if p not in positions)
    if not positions:
        return child
    if child.is_zero():
        return ZeroMatrix(dims)
    if isinstance(child, Tensor):
        return tensor(child.scalar, partial_trace_matrix(child.matrix, child.dims, positions), dims)
    return PartialTrace(child, positions)
