"""
系数表达式 DAG

系数函数 f(u, v, λ₁..λₙ, z, w) 以不可变表达式 DAG 表示，支持数值求值、
符号微分和变量平移。节点在构造后不再修改，可以在线程间共享。
"""

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Literal, Mapping, Optional, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from utils.exceptions import CapabilityError, SingularPointError

# 配置日志
logger = logging.getLogger(__name__)

ShiftKind = Literal['additive', 'multiplicative']


@dataclass(frozen=True, order=True)
class VarId:
    """
    变量标识

    additive 变量按 x → x + k·ħ 平移，multiplicative 变量按 x → x·q^{2k} 平移。
    """
    name: str
    kind: ShiftKind = 'additive'

    def __str__(self):
        return self.name


U = VarId('u')
V = VarId('v')
Z = VarId('z', 'multiplicative')
W = VarId('w', 'multiplicative')
X = VarId('x')


def lam(k: int) -> VarId:
    """第 k 个动力学变量 λ_k，k 从 1 开始"""
    return VarId(f'lam{k}')


def spectral(name: str) -> VarId:
    """按名称取谱参数变量，z 和 w 开头的为乘法型"""
    kind = 'multiplicative' if name[:1] in ('z', 'w') else 'additive'
    return VarId(name, kind)


Shifts = Tuple[Tuple[VarId, int], ...]


def merge_shifts(*groups: Iterable[Tuple[VarId, int]]) -> Shifts:
    """合并平移，同一变量的次数相加，去掉零次"""
    total: Dict[VarId, int] = {}
    for group in groups:
        for var, power in group:
            total[var] = total.get(var, 0) + power
    return tuple(sorted((v, p) for v, p in total.items() if p != 0))


class Evaluation:
    """
    单点求值上下文

    在一个采样点上对多个节点求值时共享缓存，DAG 中的公共子表达式只计算一次。
    """

    def __init__(self, point: Mapping[VarId, complex], ctx):
        self.point = point
        self.ctx = ctx
        self._cache: Dict[int, Tuple['ScalarExpr', complex]] = {}

    def value(self, node: 'ScalarExpr') -> complex:
        """节点在当前点的数值"""
        hit = self._cache.get(id(node))
        if hit is not None:
            return hit[1]
        result = node._compute(self)
        self._cache[id(node)] = (node, result)
        return result


class ScalarExpr:
    """系数表达式基类"""

    children: Tuple['ScalarExpr', ...] = ()

    def __init__(self):
        self._free: Optional[frozenset] = None
        self._derivs: Dict[VarId, 'ScalarExpr'] = {}
        self._opaque: Optional[bool] = None

    # 结构信息

    def free_vars(self) -> frozenset:
        """表达式依赖的全部变量"""
        if self._free is None:
            self._free = self._own_vars().union(*(c.free_vars() for c in self.children))
        return self._free

    def _own_vars(self) -> frozenset:
        return frozenset()

    def is_zero(self) -> bool:
        return False

    def is_constant(self) -> bool:
        return not self.free_vars()

    def has_opaque(self) -> bool:
        """是否含有不透明节点"""
        if self._opaque is None:
            self._opaque = self._own_opaque() or any(c.has_opaque() for c in self.children)
        return self._opaque

    def _own_opaque(self) -> bool:
        return False

    # 求值

    def evaluate(self, point: Mapping[VarId, complex], ctx) -> complex:
        """在给定点求值"""
        return Evaluation(point, ctx).value(self)

    def _compute(self, ev: Evaluation) -> complex:
        raise NotImplementedError

    # 微分

    def differentiate(self, var: VarId) -> 'ScalarExpr':
        """对 var 的符号导数，结果按节点缓存"""
        if var not in self.free_vars():
            return ZERO
        cached = self._derivs.get(var)
        if cached is None:
            cached = self._derivs.setdefault(var, self._derive(var))
        return cached

    def _derive(self, var: VarId) -> 'ScalarExpr':
        raise NotImplementedError

    # 平移

    def substitute_shift(self, var: VarId, power: int, ctx,
                         memo: Optional[Dict[int, 'ScalarExpr']] = None) -> 'ScalarExpr':
        """
        结构化平移：additive 变量 x → x + power·ħ，multiplicative 变量 x → x·q^{2·power}
        """
        if power == 0 or var not in self.free_vars():
            return self
        if memo is None:
            memo = {}
        hit = memo.get(id(self))
        if hit is not None:
            return hit
        result = self._shift(var, power, ctx, memo)
        memo[id(self)] = result
        return result

    def _shift(self, var, power, ctx, memo) -> 'ScalarExpr':
        raise NotImplementedError

    # 运算符

    def __add__(self, other):
        return add(self, coerce(other))

    def __radd__(self, other):
        return add(coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(coerce(other)))

    def __rsub__(self, other):
        return add(coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, coerce(other))

    def __rmul__(self, other):
        return mul(coerce(other), self)

    def __truediv__(self, other):
        return div(self, coerce(other))

    def __rtruediv__(self, other):
        return div(coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, power: int):
        if not isinstance(power, (int, np.integer)):
            raise CapabilityError("表达式只支持整数次幂")
        power = int(power)
        if power == 0:
            return ONE
        if power < 0:
            return div(ONE, IntPow(self, -power))
        if power == 1:
            return self
        return IntPow(self, power)

    def __repr__(self):
        return str(self)


class Const(ScalarExpr):
    """复常数"""

    def __init__(self, value: complex):
        super().__init__()
        self.value = complex(value)

    def is_zero(self) -> bool:
        return self.value == 0

    def _compute(self, ev):
        return self.value

    def _derive(self, var):
        return ZERO

    def _shift(self, var, power, ctx, memo):
        return self

    def __str__(self):
        if self.value.imag == 0:
            return f"{self.value.real:g}"
        return f"({self.value.real:g}{self.value.imag:+g}i)"


ZERO = Const(0)
ONE = Const(1)


class Var(ScalarExpr):
    """变量"""

    def __init__(self, var: VarId):
        super().__init__()
        self.var = var

    def _own_vars(self):
        return frozenset([self.var])

    def _compute(self, ev):
        try:
            return complex(ev.point[self.var])
        except KeyError:
            raise ValidationError(f"变量未赋值: {self.var}")

    def _derive(self, var):
        return ONE

    def _shift(self, var, power, ctx, memo):
        step = ctx.step(var)
        if var.kind == 'additive':
            return add(self, Const(power * step))
        return mul(self, Const(step ** power))

    def __str__(self):
        return self.var.name


class Theta(ScalarExpr):
    """θ^{(order)}(argument)"""

    def __init__(self, order: int, argument: ScalarExpr):
        super().__init__()
        self.order = order
        self.argument = argument
        self.children = (argument,)

    def _compute(self, ev):
        return ev.ctx.theta_value(self.order, ev.value(self.argument))

    def _derive(self, var):
        return mul(Theta(self.order + 1, self.argument), self.argument.differentiate(var))

    def _shift(self, var, power, ctx, memo):
        return Theta(self.order, self.argument.substitute_shift(var, power, ctx, memo))

    def __str__(self):
        return f"θ{chr(39) * self.order}({self.argument})"


class Exp(ScalarExpr):
    """e^{argument}"""

    def __init__(self, argument: ScalarExpr):
        super().__init__()
        self.argument = argument
        self.children = (argument,)

    def _compute(self, ev):
        return complex(np.exp(ev.value(self.argument)))

    def _derive(self, var):
        return mul(self, self.argument.differentiate(var))

    def _shift(self, var, power, ctx, memo):
        return Exp(self.argument.substitute_shift(var, power, ctx, memo))

    def __str__(self):
        return f"exp({self.argument})"


class Sum(ScalarExpr):
    """多项和"""

    def __init__(self, terms: Tuple[ScalarExpr, ...]):
        super().__init__()
        self.children = tuple(terms)

    def _compute(self, ev):
        return sum((ev.value(t) for t in self.children), 0j)

    def _derive(self, var):
        return add(*(t.differentiate(var) for t in self.children))

    def _shift(self, var, power, ctx, memo):
        return add(*(t.substitute_shift(var, power, ctx, memo) for t in self.children))

    def __str__(self):
        return '(' + ' + '.join(str(t) for t in self.children) + ')'


class Product(ScalarExpr):
    """多项积"""

    def __init__(self, factors: Tuple[ScalarExpr, ...]):
        super().__init__()
        self.children = tuple(factors)

    def _compute(self, ev):
        result = 1 + 0j
        for f in self.children:
            result *= ev.value(f)
        return result

    def _derive(self, var):
        terms = []
        for i, f in enumerate(self.children):
            df = f.differentiate(var)
            if df.is_zero():
                continue
            terms.append(mul(*self.children[:i], df, *self.children[i + 1:]))
        return add(*terms)

    def _shift(self, var, power, ctx, memo):
        return mul(*(f.substitute_shift(var, power, ctx, memo) for f in self.children))

    def __str__(self):
        return '·'.join(str(f) for f in self.children)


def _denominator_factors(node: ScalarExpr) -> List[ScalarExpr]:
    """分母中非常数的乘性因子"""
    if isinstance(node, Product):
        return [f for c in node.children for f in _denominator_factors(c)]
    if isinstance(node, IntPow):
        return _denominator_factors(node.base)
    if isinstance(node, Negate):
        return _denominator_factors(node.operand)
    if isinstance(node, (Const, Exp)):
        return []
    return [node]


class Quotient(ScalarExpr):
    """商，分母的每个非常数乘性因子都受奇点保护"""

    def __init__(self, numerator: ScalarExpr, denominator: ScalarExpr):
        super().__init__()
        self.numerator = numerator
        self.denominator = denominator
        self.children = (numerator, denominator)
        self._guarded = tuple(_denominator_factors(denominator))

    def _compute(self, ev):
        guard = ev.ctx.denominator_guard
        for factor in self._guarded:
            magnitude = abs(ev.value(factor))
            if magnitude < guard:
                raise SingularPointError(f"分母因子过小: |{factor}| = {magnitude:.3e}", magnitude)
        den = ev.value(self.denominator)
        if den == 0:
            raise SingularPointError("分母为零", 0.0)
        return ev.value(self.numerator) / den

    def _derive(self, var):
        dn = self.numerator.differentiate(var)
        dd = self.denominator.differentiate(var)
        first = div(dn, self.denominator)
        if dd.is_zero():
            return first
        return add(first, neg(div(mul(self.numerator, dd), IntPow(self.denominator, 2))))

    def _shift(self, var, power, ctx, memo):
        return div(self.numerator.substitute_shift(var, power, ctx, memo),
                   self.denominator.substitute_shift(var, power, ctx, memo))

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


class Negate(ScalarExpr):
    """取负"""

    def __init__(self, operand: ScalarExpr):
        super().__init__()
        self.operand = operand
        self.children = (operand,)

    def _compute(self, ev):
        return -ev.value(self.operand)

    def _derive(self, var):
        return neg(self.operand.differentiate(var))

    def _shift(self, var, power, ctx, memo):
        return neg(self.operand.substitute_shift(var, power, ctx, memo))

    def __str__(self):
        return f"-{self.operand}"


class IntPow(ScalarExpr):
    """正整数次幂"""

    def __init__(self, base: ScalarExpr, power: int):
        super().__init__()
        if power < 1:
            raise CapabilityError(f"IntPow 只接受正整数次幂: {power}")
        self.base = base
        self.power = power
        self.children = (base,)

    def _compute(self, ev):
        return ev.value(self.base) ** self.power

    def _derive(self, var):
        db = self.base.differentiate(var)
        lower = self.base if self.power == 2 else IntPow(self.base, self.power - 1)
        return mul(Const(self.power), lower, db)

    def _shift(self, var, power, ctx, memo):
        return IntPow(self.base.substitute_shift(var, power, ctx, memo), self.power)

    def __str__(self):
        return f"({self.base})^{self.power}"


class OpaqueMatrix:
    """
    不透明矩阵函数

    回调 evaluator(point) 返回 dim×dim 复矩阵，每个不同的点只调用一次。
    条目节点 Opaque 支持平移（并入求值点），不支持微分。
    """

    def __init__(self, dim: int, evaluator: Callable[[Dict[VarId, complex]], np.ndarray],
                 variables: Iterable[VarId], name: str = 'opaque'):
        if dim < 1:
            raise ValidationError(f"不透明矩阵维数必须为正: {dim}")
        self.dim = dim
        self.evaluator = evaluator
        self.variables = tuple(sorted(set(variables)))
        self.name = name
        self.calls = 0
        self._cache: Dict[Tuple[complex, ...], np.ndarray] = {}
        self._lock = threading.Lock()

    def evaluate(self, point: Mapping[VarId, complex]) -> np.ndarray:
        """在给定点求值整块矩阵，结果按点缓存"""
        try:
            key = tuple(complex(point[v]) for v in self.variables)
        except KeyError as e:
            raise ValidationError(f"不透明矩阵 {self.name} 缺少变量: {e.args[0]}")

        cached = self._cache.get(key)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                return cached
            self.calls += 1
            try:
                value = np.asarray(self.evaluator(dict(zip(self.variables, key))), dtype=complex)
            except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError) as e:
                raise SingularPointError(f"不透明矩阵 {self.name} 求值失败: {e}")
            if value.shape != (self.dim, self.dim):
                raise CapabilityError(f"不透明矩阵 {self.name} 返回了错误的形状: {value.shape}")
            if not np.all(np.isfinite(value)):
                raise SingularPointError(f"不透明矩阵 {self.name} 返回了非有限值")
            self._cache[key] = value
            logger.debug(f"不透明矩阵 {self.name} 新增缓存点，累计调用 {self.calls} 次")
            return value

    def entry(self, i: int, j: int) -> 'Opaque':
        return Opaque(self, i, j)

    def entries(self) -> List[List['Opaque']]:
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]


class Opaque(ScalarExpr):
    """不透明矩阵的一个条目，平移记录在 shifts 中"""

    def __init__(self, matrix: OpaqueMatrix, i: int, j: int, shifts: Shifts = ()):
        super().__init__()
        self.matrix = matrix
        self.i = i
        self.j = j
        self.shifts = shifts

    def _own_vars(self):
        return frozenset(self.matrix.variables)

    def _own_opaque(self):
        return True

    def _compute(self, ev):
        point = ev.ctx.shift_point(ev.point, self.shifts)
        return complex(self.matrix.evaluate(point)[self.i, self.j])

    def _derive(self, var):
        raise CapabilityError(f"不透明节点 {self.matrix.name} 不支持微分")

    def _shift(self, var, power, ctx, memo):
        return Opaque(self.matrix, self.i, self.j, merge_shifts(self.shifts, ((var, power),)))

    def __str__(self):
        return f"{self.matrix.name}[{self.i},{self.j}]"


# 构造函数，带常数折叠

def coerce(value) -> ScalarExpr:
    """把数值包装为常数节点"""
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, VarId):
        return Var(value)
    return Const(value)


def add(*terms: ScalarExpr) -> ScalarExpr:
    """求和并合并常数项"""
    flat: List[ScalarExpr] = []
    constant = 0j
    for t in terms:
        t = coerce(t)
        parts = t.children if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                constant += p.value
            else:
                flat.append(p)
    if constant != 0:
        flat.append(Const(constant))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors: ScalarExpr) -> ScalarExpr:
    """求积并合并常数因子"""
    flat: List[ScalarExpr] = []
    constant = 1 + 0j
    for f in factors:
        f = coerce(f)
        parts = f.children if isinstance(f, Product) else (f,)
        for p in parts:
            if isinstance(p, Const):
                constant *= p.value
            else:
                flat.append(p)
    if constant == 0:
        return ZERO
    if not flat:
        return Const(constant)
    if constant != 1:
        flat.insert(0, Const(constant))
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def neg(a: ScalarExpr) -> ScalarExpr:
    """取负"""
    a = coerce(a)
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Negate):
        return a.operand
    return Negate(a)


def div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    """求商"""
    a, b = coerce(a), coerce(b)
    if isinstance(b, Const):
        if b.value == 0:
            raise ZeroDivisionError("表达式除以零常数")
        return mul(a, Const(1 / b.value))
    if a.is_zero():
        return ZERO
    return Quotient(a, b)


def theta(argument, order: int = 0) -> ScalarExpr:
    """θ^{(order)}(argument)"""
    return Theta(order, coerce(argument))


def exp(argument) -> ScalarExpr:
    """e^{argument}"""
    argument = coerce(argument)
    if isinstance(argument, Const):
        return Const(np.exp(argument.value))
    return Exp(argument)


def theta_ratio(argument) -> ScalarExpr:
    """θ'(x)/θ(x)"""
    argument = coerce(argument)
    return div(theta(argument, 1), theta(argument))
