"""
系数表达式业务逻辑服务

提供表达式求值、微分、平移、不透明矩阵构造和数值判等。
"""

import logging
from typing import Callable, Dict, Iterable, List, Mapping, Optional

import numpy as np

from apps.scalar.context import EngineContext
from apps.scalar.expressions import Opaque, OpaqueMatrix, ScalarExpr, VarId
from apps.scalar.sampling import PointSampler, ResidualCollector
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport

# 配置日志
logger = logging.getLogger(__name__)


class ScalarService:
    """
    系数表达式服务类

    提供系数层的全部操作，供算子环和验证检查调用。
    """

    @staticmethod
    def eval(e: ScalarExpr, point: Mapping[VarId, complex], ctx: EngineContext) -> complex:
        """
        求值表达式

        Args:
            e: 表达式
            point: 变量赋值
            ctx: 引擎上下文

        Returns:
            complex: 数值

        Raises:
            SingularPointError: 分母因子过小时抛出
            ValidationError: 存在未赋值变量时抛出
        """
        return e.evaluate(point, ctx)

    @staticmethod
    def differentiate(e: ScalarExpr, x: VarId) -> ScalarExpr:
        """
        符号求导

        Raises:
            CapabilityError: 表达式含有依赖 x 的不透明节点时抛出
        """
        return e.differentiate(x)

    @staticmethod
    def substitute_shift(e: ScalarExpr, x: VarId, power: int, ctx: EngineContext) -> ScalarExpr:
        """结构化平移 x → x + power·ħ 或 x → x·q^{2·power}"""
        return e.substitute_shift(x, power, ctx)

    @staticmethod
    def opaque_matrix_fn(dim: int, evaluator: Callable[[Dict[VarId, complex]], np.ndarray],
                         variables: Iterable[VarId], name: str = 'opaque') -> List[List[Opaque]]:
        """
        构造共享一次求值的不透明矩阵

        Args:
            dim: 矩阵维数
            evaluator: 回调，输入变量赋值，返回 dim×dim 矩阵
            variables: 回调依赖的变量
            name: 名称，用于日志

        Returns:
            list: dim×dim 的 Opaque 条目
        """
        matrix = OpaqueMatrix(dim, evaluator, variables, name=name)
        logger.debug(f"创建不透明矩阵 {name}，维数 {dim}")
        return matrix.entries()

    @staticmethod
    def expr_equal_numeric(a: ScalarExpr, b: ScalarExpr, sampling: SamplingPolicy, ctx: EngineContext,
                           tol: float = 1e-10, identity_id: str = 'expr_equal',
                           anchor: str = '', variables: Optional[Iterable[VarId]] = None) -> ResidualReport:
        """
        在随机点上比较两个表达式

        Args:
            a: 左侧表达式
            b: 右侧表达式
            sampling: 采样策略
            ctx: 引擎上下文
            tol: 容差
            identity_id: 报告标识
            anchor: 公式标签
            variables: 采样变量，默认取两侧自由变量的并集

        Returns:
            ResidualReport: 残差报告

        Raises:
            SamplingExhaustedError: 连续重采样耗尽时抛出
        """
        if variables is None:
            variables = a.free_vars() | b.free_vars()
        collector = ResidualCollector(identity_id, anchor, tol, sampling.seed)
        sampler = PointSampler(variables, sampling)

        def compare(point):
            return a.evaluate(point, ctx), b.evaluate(point, ctx)

        for _, (left, right) in sampler.run(compare):
            collector.add(left, right)
            collector.count_point()
        return collector.report()
