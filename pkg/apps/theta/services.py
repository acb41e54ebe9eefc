"""
theta 函数业务逻辑服务

奇 theta 函数 θ(u) = ϑ₁(πu, q) / (π ϑ₁'(0, q))，q = e^{iπτ}，满足
θ(u+1) = −θ(u)，θ(u+τ) = −e^{−2πiu−πiτ}θ(u)，θ'(0) = 1。
"""

import logging
import time
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from django.core.exceptions import ValidationError
from scipy.special import comb

from apps.theta.schemas import EllipticParams
from apps.verification.schemas import ResidualReport
from utils.exceptions import ThetaAccuracyError
from utils.helpers import make_rng

# 配置日志
logger = logging.getLogger(__name__)

# 公开接口允许的最高导数阶
PUBLIC_MAX_ORDER = 4

# 表达式内部允许的最高导数阶
INTERNAL_MAX_ORDER = 8


def _sin_derivative(order: int, x: np.ndarray) -> np.ndarray:
    """sin 的 order 阶导数"""
    phase = order % 4
    if phase == 0:
        return np.sin(x)
    if phase == 1:
        return np.cos(x)
    if phase == 2:
        return -np.sin(x)
    return -np.cos(x)


@lru_cache(maxsize=1 << 16)
def _theta1_series(x: complex, order: int, tau: complex, series_tol: float, max_terms: int) -> complex:
    """
    ϑ₁ 的 order 阶导数，x 已约化到基本胞腔

    项的上界 |q^{(k+½)²}|·(2k+1)^order·e^{(2k+1)|Im x|} 在对数空间计算，
    相对已出现的最大上界低于 series_tol 时截断。
    """
    k = np.arange(max_terms + 1, dtype=float)
    odd = 2.0 * k + 1.0
    log_bound = (
        np.real(1j * np.pi * tau) * (k + 0.5) ** 2
        + order * np.log(odd)
        + odd * abs(x.imag)
    )
    relative = log_bound - np.maximum.accumulate(log_bound)
    below = np.nonzero(relative[1:] < np.log(series_tol))[0]
    if below.size == 0:
        last_term = float(np.exp(log_bound[max_terms - 1]))
        raise ThetaAccuracyError(
            f"theta 级数在 {max_terms} 项内未收敛，末项量级 {last_term:.3e}",
            last_term=last_term,
        )

    count = int(below[0]) + 1
    k = k[:count]
    odd = odd[:count]
    coeff = 2.0 * (-1.0) ** k * np.exp(1j * np.pi * tau * (k + 0.5) ** 2) * odd ** order
    return complex(np.sum(coeff * _sin_derivative(order, odd * x)))


def _reduce_argument(u: complex, tau: complex):
    """
    按周期格约化 u = u0 + a + bτ，|Re u0| ≤ ½，|Im u0| ≤ Im τ / 2

    Returns:
        tuple: (u0, a, b)
    """
    b = int(np.round(u.imag / tau.imag))
    shifted = u - b * tau
    a = int(np.round(shifted.real))
    return shifted - a, a, b


def _theta_at(order: int, u: complex, params: EllipticParams) -> complex:
    """θ 的 order 阶导数，不做阶数限制"""
    u = complex(u)
    tau = params.tau
    u0, a, b = _reduce_argument(u, tau)
    norm = _theta1_series(0j, 1, tau, params.series_tol, params.max_terms)

    # 约化因子 P(u0) = (−1)^{a+b} e^{−2πib·u0 − πib²τ}，在对数空间累积
    log_prefactor = 1j * np.pi * (a + b) - 2j * np.pi * b * u0 - 1j * np.pi * b * b * tau
    prefactor = np.exp(log_prefactor)
    rate = -2j * np.pi * b

    total = 0j
    for k in range(order + 1):
        inner = order - k
        reduced = (
            np.pi ** (inner - 1)
            * _theta1_series(complex(np.pi * u0), inner, tau, params.series_tol, params.max_terms)
            / norm
        )
        total += comb(order, k, exact=True) * rate ** k * reduced
    return complex(prefactor * total)


class ThetaService:
    """
    theta 函数服务类

    提供 θ 及其导数的求值和准周期性残差检查。
    """

    @staticmethod
    def theta(u: complex, params: EllipticParams) -> complex:
        """
        求值奇 theta 函数 θ(u)

        Args:
            u: 复变量
            params: 模参数

        Returns:
            complex: θ(u)

        Raises:
            ThetaAccuracyError: 级数未收敛时抛出
        """
        return _theta_at(0, u, params)

    @staticmethod
    def theta_deriv(order: int, u: complex, params: EllipticParams,
                    max_order: int = PUBLIC_MAX_ORDER) -> complex:
        """
        求值 θ 的 order 阶导数

        Args:
            order: 导数阶数
            u: 复变量
            params: 模参数
            max_order: 允许的最高阶数

        Returns:
            complex: θ^{(order)}(u)

        Raises:
            ValidationError: 阶数越界时抛出
        """
        if order < 0 or order > max_order:
            raise ValidationError(f"theta 导数阶数必须在 0 到 {max_order} 之间: {order}")
        return _theta_at(order, u, params)

    @staticmethod
    def theta_quasi_periodicity_residual(samples: int, params: EllipticParams, rng_seed: int,
                                         tol: float = 1e-10,
                                         points: Optional[Sequence[complex]] = None) -> ResidualReport:
        """
        检查 θ(u+τ) = −e^{−2πiu−πiτ}θ(u)

        Args:
            samples: 采样点数
            params: 模参数
            rng_seed: 随机种子
            tol: 容差
            points: 指定采样点，给定时忽略 samples

        Returns:
            ResidualReport: 残差报告
        """
        if points is None and samples < 1:
            raise ValidationError("采样点数必须至少为 1")

        started = time.perf_counter()
        tau = params.tau
        if points is None:
            rng = make_rng(rng_seed)
            half = tau.imag / 2.0
            points = (
                rng.uniform(-0.5, 0.5, samples) + 1j * rng.uniform(-half, half, samples)
            ).tolist()

        max_abs = 0.0
        max_rel = 0.0
        for u in points:
            value = ThetaService.theta(u, params)
            shifted = ThetaService.theta(u + tau, params)
            diff = abs(shifted + np.exp(-2j * np.pi * u - 1j * np.pi * tau) * value)
            max_abs = max(max_abs, diff)
            max_rel = max(max_rel, diff / (1.0 + abs(value)))

        report = ResidualReport(
            identity_id='theta_quasi_periodicity',
            anchor='θ(u+τ) = −e^{−2πiu−πiτ}θ(u)',
            samples_used=len(points),
            max_abs=max_abs,
            max_rel=max_rel,
            tol=tol,
            seed=rng_seed,
            wall_time_ms=(time.perf_counter() - started) * 1000.0,
        )
        logger.debug(f"theta 准周期性残差: {max_rel:.3e}")
        return report
