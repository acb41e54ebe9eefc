"""
Gaudin 模型数据模式

定义量子空间站点的描述模型，以及站点列表的解析方法。
"""

from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from apps.theta.schemas import ComplexValue


class GaudinSiteSpec(BaseModel):
    """站点描述：表示类型和求值点"""
    model_config = ConfigDict(frozen=True)

    rep: Literal['defining', 'dual'] = Field('defining', description='定义表示或对偶表示')
    eval_point: ComplexValue = Field(..., description='求值点 v_k')

    @field_validator('rep', mode='before')
    @classmethod
    def normalize_rep(cls, v):
        """统一表示名称"""
        if isinstance(v, str):
            v = v.strip().lower()
            if v == 'dual_defining':
                return 'dual'
        return v

    @classmethod
    def parse(cls, text: str) -> 'GaudinSiteSpec':
        """
        解析 "defining@0.1" 形式的站点描述

        Args:
            text: 站点字符串

        Returns:
            GaudinSiteSpec: 站点描述
        """
        if '@' not in text:
            raise ValueError(f"站点描述缺少 '@': '{text}'")
        rep, point = text.split('@', 1)
        return cls(rep=rep, eval_point=point)

    @classmethod
    def parse_list(cls, text: str) -> List['GaudinSiteSpec']:
        """解析逗号分隔的站点列表，空字符串表示没有站点"""
        items = [item.strip() for item in (text or '').split(',') if item.strip()]
        return [cls.parse(item) for item in items]

    def label(self) -> str:
        """站点的文本形式，可被 parse 回读"""
        from utils.helpers import format_complex

        return f"{self.rep}@{format_complex(self.eval_point)}"
