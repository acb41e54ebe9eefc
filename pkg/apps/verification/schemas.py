"""
验证数据模式

定义残差报告 ResidualReport 和运行配置 RunConfig。
"""

import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from apps.gaudin.schemas import GaudinSiteSpec
from apps.theta.schemas import ComplexValue

# 可选的验证套件
SUITES = ('theta', 'felder', 'manin', 'commfam', 'gaudin', 'sl2', 'trig', 'newton')


class ResidualReport(BaseModel):
    """
    单个恒等式的残差报告

    passed 与 max_rel < tol 等价，出错的检查 status 为 error 且不通过。
    序列化时非有限残差写成 null，读回时还原为 nan。
    """
    model_config = ConfigDict(populate_by_name=True, ser_json_inf_nan='null')

    identity_id: str = Field(..., description='恒等式标识')
    anchor: str = Field('', alias='paper_anchor', description='对应的公式标签')
    samples_used: int = Field(0, ge=0, description='使用的采样点数')
    max_abs: float = Field(0.0, description='最大绝对残差')
    max_rel: float = Field(0.0, description='最大相对残差')
    tol: float = Field(..., description='容差')
    passed: bool = Field(False, alias='pass', description='是否通过')
    wall_time_ms: float = Field(0.0, description='耗时（毫秒）')
    seed: int = Field(0, description='采样种子')
    status: Literal['ok', 'error'] = Field('ok', description='执行状态')
    message: str = Field('', description='错误信息')
    details: Dict[str, Any] = Field(default_factory=dict, description='附加信息')

    @field_validator('max_abs', 'max_rel', mode='before')
    @classmethod
    def null_to_nan(cls, v):
        """null 残差读作 nan"""
        return float('nan') if v is None else v

    @model_validator(mode='after')
    def derive_pass(self):
        """按残差和状态确定是否通过"""
        passed = self.status == 'ok' and not math.isnan(self.max_rel) and self.max_rel < self.tol
        self.passed = passed
        return self

    @classmethod
    def failure(cls, identity_id: str, anchor: str, tol: float, seed: int, message: str,
                wall_time_ms: float = 0.0) -> 'ResidualReport':
        """构造出错检查的报告"""
        return cls(
            identity_id=identity_id,
            anchor=anchor,
            tol=tol,
            seed=seed,
            status='error',
            message=message,
            max_abs=float('nan'),
            max_rel=float('nan'),
            wall_time_ms=wall_time_ms,
        )


class RunConfig(BaseModel):
    """验证运行配置"""

    n: int = Field(2, ge=1, le=3, description='秩 n')
    suites: List[str] = Field(default_factory=lambda: ['all'], description='验证套件')
    tau: ComplexValue = Field(complex(0, 1.1), description='模参数 τ')
    hbar: ComplexValue = Field(complex(0.137, 0.071), description='量子参数 ħ')
    seed: int = Field(1, description='随机种子')
    tol: float = Field(1e-9, gt=0, description='基准容差')
    samples: int = Field(8, ge=1, description='每个恒等式的采样点数')
    sites: List[GaudinSiteSpec] = Field(default_factory=list, description='Gaudin 站点')
    workers: int = Field(1, ge=1, description='并行线程数')
    output_path: Optional[str] = Field(None, description='JSON 报告路径')

    @field_validator('suites', mode='before')
    @classmethod
    def split_suites(cls, v):
        """接受逗号分隔的套件字符串"""
        if isinstance(v, str):
            v = [item.strip() for item in v.split(',') if item.strip()]
        return v

    @field_validator('suites')
    @classmethod
    def check_suites(cls, v):
        """校验套件名称"""
        if not v:
            raise ValueError('至少需要一个验证套件')
        unknown = [s for s in v if s != 'all' and s not in SUITES]
        if unknown:
            raise ValueError(f"未知的验证套件: {', '.join(unknown)}")
        return v

    @field_validator('sites', mode='before')
    @classmethod
    def parse_sites(cls, v):
        """接受 "defining@0.1,dual@0.45" 形式的站点字符串"""
        if isinstance(v, str):
            return GaudinSiteSpec.parse_list(v)
        return v

    def selected_suites(self) -> List[str]:
        """展开 all 之后的套件列表"""
        if 'all' in self.suites:
            return list(SUITES)
        return [s for s in SUITES if s in self.suites]
