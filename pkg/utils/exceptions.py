"""
引擎异常定义

数值引擎在求值、微分、采样过程中抛出的异常层次。
用户输入错误（腿标签、秩、站点描述等）统一使用 Django 的 ValidationError。
"""

from typing import Optional


class EngineError(Exception):
    """引擎异常基类"""


class ThetaConvergenceError(EngineError):
    """模参数不满足 Im τ > 0 或 |e^{iπτ}| < 0.995 时抛出"""


class ThetaAccuracyError(EngineError):
    """级数在 max_terms 项内未收敛"""

    def __init__(self, message: str, last_term: float):
        super().__init__(message)
        self.last_term = last_term


class SingularPointError(EngineError):
    """
    采样点落在奇点附近

    作为重新采样的信号使用，magnitude 记录触发保护的分母模长。
    """

    def __init__(self, message: str, magnitude: Optional[float] = None):
        super().__init__(message)
        self.magnitude = magnitude


class CapabilityError(EngineError):
    """不支持的操作，例如对不可微的不透明节点求导、混用算子类型"""


class SamplingExhaustedError(EngineError):
    """连续多次重新采样仍然落在奇点上"""


class InapplicableCheckError(EngineError):
    """检查在给定表示上没有意义，例如零权子空间为空"""
