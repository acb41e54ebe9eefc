"""
theta 函数数据模式

定义椭圆曲线模参数 EllipticParams 以及复数字段的通用类型。
"""

from typing import Annotated

import numpy as np
from django.core.exceptions import ValidationError as DjangoValidationError
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from utils.exceptions import ThetaConvergenceError
from utils.helpers import parse_complex

# e^{iπτ} 的模上限
NOME_LIMIT = 0.995


def _to_complex(value):
    """pydantic 前置校验：接受 "0+1.1i" 等字面量"""
    try:
        return parse_complex(value)
    except DjangoValidationError as e:
        raise ValueError(e.messages[0])


# 支持 i/j 后缀字面量的复数字段
ComplexValue = Annotated[complex, BeforeValidator(_to_complex)]


class EllipticParams(BaseModel):
    """椭圆曲线模参数"""
    model_config = ConfigDict(frozen=True)

    tau: ComplexValue = Field(complex(0, 1.1), description='模参数 τ')
    series_tol: float = Field(1e-16, gt=0, description='级数相对截断阈值')
    max_terms: int = Field(200, ge=1, description='级数最大项数')

    @model_validator(mode='after')
    def check_nome(self):
        """校验 Im τ > 0 且 |e^{iπτ}| < 0.995"""
        if self.tau.imag <= 0:
            raise ThetaConvergenceError(f"模参数虚部必须为正: τ={self.tau}")
        if abs(self.nome) >= NOME_LIMIT:
            raise ThetaConvergenceError(f"级数不收敛: |q|={abs(self.nome):.6f} ≥ {NOME_LIMIT}")
        return self

    @property
    def nome(self) -> complex:
        """q = e^{iπτ}"""
        return complex(np.exp(1j * np.pi * self.tau))

    @classmethod
    def from_settings(cls, tau=None) -> 'EllipticParams':
        """
        按项目配置构造模参数

        Args:
            tau: 模参数，默认取 VERIFICATION['TAU']

        Returns:
            EllipticParams: 模参数
        """
        from django.conf import settings

        options = settings.VERIFICATION
        return cls(
            tau=options['TAU'] if tau is None else tau,
            series_tol=options['THETA_SERIES_TOL'],
            max_terms=options['THETA_MAX_TERMS'],
        )
