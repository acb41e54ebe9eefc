"""
数值引擎测试基类

提供默认上下文、采样策略和残差断言。
"""

import numpy as np
from django.test import SimpleTestCase

from apps.scalar.context import EngineContext
from apps.scalar.schemas import SamplingPolicy
from apps.theta.schemas import EllipticParams


class EngineTestCase(SimpleTestCase):
    """数值引擎测试基类"""

    # 默认秩
    n = 2

    def setUp(self):
        """测试前的准备工作"""
        self.params = EllipticParams(tau=complex(0, 1.1))
        self.ctx = EngineContext(n=self.n, theta=self.params, hbar=complex(0.137, 0.071))
        self.sampling = SamplingPolicy(samples=8, seed=1)

    def make_ctx(self, n=None, hbar=None, **kwargs) -> EngineContext:
        """构造指定秩或 ħ 的上下文"""
        return EngineContext(
            n=self.n if n is None else n,
            theta=kwargs.pop('theta', self.params),
            hbar=self.ctx.hbar if hbar is None else hbar,
            **kwargs,
        )

    def assertResidualBelow(self, report, tol, msg=None):
        """断言报告的相对残差低于 tol 且执行正常"""
        self.assertEqual(report.status, 'ok', msg or report.message)
        self.assertLess(report.max_rel, tol, msg or f"{report.identity_id}: {report.max_rel:.3e}")

    def assertClose(self, actual, expected, tol=1e-12, msg=None):
        """断言两个复数或数组在最大模意义下接近"""
        actual = np.asarray(actual, dtype=complex)
        expected = np.asarray(expected, dtype=complex)
        diff = float(np.max(np.abs(actual - expected))) if actual.size else 0.0
        self.assertLess(diff, tol, msg or f"差值 {diff:.3e} 超过 {tol:.1e}")
