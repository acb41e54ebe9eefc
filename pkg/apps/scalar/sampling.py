"""
采样与残差收集

PointSampler 按 SamplingPolicy 生成随机点，遇到奇点时重新采样；
ResidualCollector 累积逐点残差并生成 ResidualReport。
"""

import logging
import time
from typing import Callable, Dict, Iterable, List, Optional, Tuple, TypeVar

import numpy as np

from apps.scalar.expressions import VarId
from apps.scalar.schemas import SamplingPolicy
from apps.verification.schemas import ResidualReport
from utils.exceptions import SamplingExhaustedError, SingularPointError
from utils.helpers import absolute_residual, make_rng, relative_residual

# 配置日志
logger = logging.getLogger(__name__)

T = TypeVar('T')


class PointSampler:
    """随机采样点生成器"""

    def __init__(self, variables: Iterable[VarId], policy: SamplingPolicy):
        self.variables = sorted(set(variables))
        self.policy = policy
        self.rng = make_rng(policy.seed)
        self.resamples = 0

    def draw(self) -> Dict[VarId, complex]:
        """生成一个采样点，变量按名称顺序依次采样"""
        policy = self.policy
        point: Dict[VarId, complex] = {}
        for var in self.variables:
            re = self.rng.uniform(*policy.re_range)
            im = self.rng.uniform(*policy.im_range)
            if var.name in policy.fixed:
                point[var] = complex(policy.fixed[var.name])
            elif var.kind == 'multiplicative':
                point[var] = complex(np.exp(2j * np.pi * complex(re, im)))
            else:
                point[var] = complex(re, im)
        return point

    def run(self, fn: Callable[[Dict[VarId, complex]], T],
            samples: Optional[int] = None) -> List[Tuple[Dict[VarId, complex], T]]:
        """
        在 samples 个非奇异点上调用 fn

        Args:
            fn: 逐点计算函数，抛出 SingularPointError 表示需要重新采样
            samples: 点数，默认取策略中的 samples

        Returns:
            list: (点, 结果) 列表

        Raises:
            SamplingExhaustedError: 连续重采样次数达到上限时抛出
        """
        count = self.policy.samples if samples is None else samples
        results = []
        for _ in range(count):
            failures = 0
            while True:
                point = self.draw()
                try:
                    results.append((point, fn(point)))
                    break
                except SingularPointError as e:
                    failures += 1
                    self.resamples += 1
                    logger.debug(f"采样点接近奇点，重新采样: {e}")
                    if failures >= self.policy.max_retries:
                        raise SamplingExhaustedError(
                            f"连续 {failures} 次重新采样仍然落在奇点上: {e}"
                        )
        return results


class ResidualCollector:
    """逐点残差累积器"""

    def __init__(self, identity_id: str, anchor: str, tol: float, seed: int = 0):
        self.identity_id = identity_id
        self.anchor = anchor
        self.tol = tol
        self.seed = seed
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.points = 0
        self.details: Dict[str, object] = {}
        self._started = time.perf_counter()

    def add(self, lhs, rhs) -> float:
        """记录一对数值的残差，返回相对残差"""
        rel = relative_residual(lhs, rhs)
        self.max_abs = max(self.max_abs, absolute_residual(lhs, rhs))
        self.max_rel = max(self.max_rel, rel)
        return rel

    def add_values(self, max_abs: float, max_rel: float):
        """直接记录已计算好的残差"""
        self.max_abs = max(self.max_abs, max_abs)
        self.max_rel = max(self.max_rel, max_rel)

    def merge(self, report: ResidualReport):
        """并入子检查的报告"""
        self.add_values(report.max_abs, report.max_rel)
        self.points += report.samples_used

    def count_point(self, count: int = 1):
        self.points += count

    def report(self) -> ResidualReport:
        """生成报告"""
        elapsed = (time.perf_counter() - self._started) * 1000.0
        report = ResidualReport(
            identity_id=self.identity_id,
            anchor=self.anchor,
            samples_used=self.points,
            max_abs=self.max_abs,
            max_rel=self.max_rel,
            tol=self.tol,
            seed=self.seed,
            wall_time_ms=elapsed,
            details=dict(self.details),
        )
        if report.passed:
            logger.debug(f"恒等式 {self.identity_id} 残差 {self.max_rel:.3e}")
        return report
