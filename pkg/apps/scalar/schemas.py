"""
系数层数据模式

定义采样策略 SamplingPolicy。
"""

from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.theta.schemas import ComplexValue


class SamplingPolicy(BaseModel):
    """
    采样策略

    additive 变量的实部、虚部分别在 re_range、im_range 内均匀采样；
    multiplicative 变量取 e^{2πi·x}，x 按同样的方式采样。
    """
    model_config = ConfigDict(frozen=True)

    samples: int = Field(8, ge=1, description='采样点数')
    seed: int = Field(1, description='随机种子')
    re_range: Tuple[float, float] = Field((-0.4, 0.4), description='实部区间')
    im_range: Tuple[float, float] = Field((-0.3, 0.3), description='虚部区间')
    max_retries: int = Field(20, ge=1, description='单点连续重采样上限')
    fixed: Dict[str, ComplexValue] = Field(default_factory=dict, description='固定取值的变量')

    @model_validator(mode='after')
    def check_ranges(self):
        """区间端点有序"""
        for low, high in (self.re_range, self.im_range):
            if low > high:
                raise ValueError(f"采样区间端点顺序错误: ({low}, {high})")
        return self

    def with_seed(self, seed: int) -> 'SamplingPolicy':
        return self.model_copy(update={'seed': seed})

    def with_samples(self, samples: int) -> 'SamplingPolicy':
        return self.model_copy(update={'samples': samples})

    def with_fixed(self, **values) -> 'SamplingPolicy':
        """追加固定变量，键为变量名"""
        fixed = dict(self.fixed)
        fixed.update({k: complex(v) for k, v in values.items()})
        return self.model_copy(update={'fixed': fixed})

    @classmethod
    def from_settings(cls, samples=None, seed=None) -> 'SamplingPolicy':
        """按项目配置构造采样策略"""
        from django.conf import settings

        options = settings.VERIFICATION
        return cls(
            samples=options['SAMPLES'] if samples is None else samples,
            seed=options['SEED'] if seed is None else seed,
            max_retries=options['SAMPLING_MAX_RETRIES'],
        )
