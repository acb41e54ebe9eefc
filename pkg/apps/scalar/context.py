"""
引擎上下文

EngineContext 固定一次计算中的秩 n、模参数 τ、量子参数 ħ 和数值保护阈值。
"""

from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from apps.scalar.expressions import VarId, lam
from apps.theta.schemas import ComplexValue, EllipticParams
from apps.theta.services import INTERNAL_MAX_ORDER, ThetaService


class EngineContext(BaseModel):
    """引擎上下文"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(2, ge=1, le=4, description='秩 n')
    theta: EllipticParams = Field(default_factory=EllipticParams, description='模参数')
    hbar: ComplexValue = Field(complex(0.137, 0.071), description='量子参数 ħ')
    denominator_guard: float = Field(0.05, ge=0, description='分母因子模长下限')
    condition_guard: float = Field(1e10, gt=1, description='矩阵求逆条件数上限')

    @property
    def q(self) -> complex:
        """q = e^{iπħ}"""
        return complex(np.exp(1j * np.pi * self.hbar))

    def step(self, var: VarId) -> complex:
        """变量的单位平移步长：additive 为 ħ，multiplicative 为 q²"""
        if var.kind == 'additive':
            return self.hbar
        return self.q ** 2

    def shifted_value(self, var: VarId, value: complex, power: int) -> complex:
        """把 value 按 var 的步长平移 power 次"""
        if var.kind == 'additive':
            return value + power * self.hbar
        return value * self.step(var) ** power

    def shift_point(self, point: Mapping[VarId, complex],
                    shifts: Iterable[Tuple[VarId, int]]) -> Mapping[VarId, complex]:
        """返回平移后的点，原点不变"""
        shifts = tuple(shifts)
        if not shifts:
            return point
        moved: Dict[VarId, complex] = dict(point)
        for var, power in shifts:
            if var in moved:
                moved[var] = self.shifted_value(var, moved[var], power)
        return moved

    @property
    def lambda_vars(self) -> List[VarId]:
        """λ₁..λₙ"""
        return [lam(k) for k in range(1, self.n + 1)]

    def theta_value(self, order: int, x: complex) -> complex:
        """θ^{(order)}(x)"""
        return ThetaService.theta_deriv(order, x, self.theta, max_order=INTERNAL_MAX_ORDER)

    def with_hbar(self, hbar: complex) -> 'EngineContext':
        """替换 ħ 后的新上下文"""
        return self.model_copy(update={'hbar': complex(hbar)})

    def with_tau(self, tau: complex) -> 'EngineContext':
        """替换 τ 后的新上下文"""
        params = EllipticParams(tau=tau, series_tol=self.theta.series_tol, max_terms=self.theta.max_terms)
        return self.model_copy(update={'theta': params})

    @classmethod
    def from_settings(cls, n=None, tau=None, hbar=None) -> 'EngineContext':
        """
        按项目配置构造上下文

        Args:
            n: 秩，默认取 VERIFICATION['N']
            tau: 模参数，默认取 VERIFICATION['TAU']
            hbar: 量子参数，默认取 VERIFICATION['HBAR']

        Returns:
            EngineContext: 上下文
        """
        from django.conf import settings

        options = settings.VERIFICATION
        return cls(
            n=options['N'] if n is None else n,
            theta=EllipticParams.from_settings(tau),
            hbar=options['HBAR'] if hbar is None else hbar,
            denominator_guard=options['SAMPLING_DENOMINATOR_GUARD'],
            condition_guard=options['OPAQUE_CONDITION_GUARD'],
        )
