"""
R 矩阵数据模式

定义 R 矩阵描述 RMatrixSpec。
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from apps.theta.schemas import ComplexValue

RMatrixKind = Literal[
    'elliptic_dynamical', 'classical_r', 'trig_dynamical', 'trig_nondynamical', 'trig_tilde',
]


class RMatrixSpec(BaseModel):
    """R 矩阵描述：秩、类型和可选的参数覆盖"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(2, ge=1, le=4, description='秩 n')
    kind: RMatrixKind = Field('elliptic_dynamical', description='R 矩阵类型')
    tau: Optional[ComplexValue] = Field(None, description='模参数 τ，缺省时取上下文')
    hbar: Optional[ComplexValue] = Field(None, description='量子参数 ħ，缺省时取上下文')

    @property
    def is_dynamical(self) -> bool:
        return self.kind in ('elliptic_dynamical', 'classical_r', 'trig_dynamical')

    @property
    def is_trigonometric(self) -> bool:
        return self.kind.startswith('trig')

    def context(self, ctx):
        """按本描述覆盖上下文中的 n、τ、ħ"""
        result = ctx if ctx.n == self.n else ctx.model_copy(update={'n': self.n})
        if self.tau is not None:
            result = result.with_tau(self.tau)
        if self.hbar is not None:
            result = result.with_hbar(self.hbar)
        return result
