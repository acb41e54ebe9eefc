"""
通用工具函数

提供项目中常用的数值辅助方法：复数字面量解析、种子派生、残差度量和 Richardson 外推。
"""

import hashlib
import re
from typing import Sequence, Union

import numpy as np
from django.core.exceptions import ValidationError

ArrayLike = Union[complex, np.ndarray]

# 允许 "0+1.1i"、"1.1i"、"0.2+0.9j"、"-0.3" 等写法
_COMPLEX_PATTERN = re.compile(r'^[\s0-9eE.+\-ij()]+$')


def parse_complex(text: Union[str, complex, float, int]) -> complex:
    """
    解析复数字面量

    Args:
        text: 字符串形式的复数，虚部后缀可以是 i 或 j

    Returns:
        complex: 解析后的复数

    Raises:
        ValidationError: 格式不正确时抛出
    """
    if isinstance(text, (complex, float, int)):
        return complex(text)

    value = str(text).strip().replace(' ', '')
    if not value or not _COMPLEX_PATTERN.match(value):
        raise ValidationError(f"无法解析的复数: '{text}'")

    try:
        return complex(value.replace('i', 'j'))
    except ValueError:
        raise ValidationError(f"无法解析的复数: '{text}'")


def format_complex(value: complex) -> str:
    """
    将复数格式化为可回读的字面量

    Args:
        value: 复数

    Returns:
        str: 形如 "0.137+0.071i" 的字符串
    """
    value = complex(value)
    sign = '-' if value.imag < 0 else '+'
    return f"{value.real:.17g}{sign}{abs(value.imag):.17g}i"


def derive_seed(seed: int, key: str) -> int:
    """
    由运行种子和检查标识派生独立种子

    派生结果与检查的执行顺序无关。

    Args:
        seed: 运行种子
        key: 检查标识

    Returns:
        int: 64 位非负整数种子
    """
    digest = hashlib.sha256(f"{seed}:{key}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def make_rng(seed: int) -> np.random.Generator:
    """
    创建可复现的随机数生成器

    Args:
        seed: 种子

    Returns:
        np.random.Generator: PCG64 生成器
    """
    return np.random.default_rng(seed)


def relative_residual(lhs: ArrayLike, rhs: ArrayLike) -> float:
    """
    计算混合相对残差 |a−b| / (1 + max(|a|, |b|))，范数取最大模

    Args:
        lhs: 左侧数值或数组
        rhs: 右侧数值或数组

    Returns:
        float: 残差
    """
    a = np.asarray(lhs, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if a.size == 0 and b.size == 0:
        return 0.0
    diff = float(np.max(np.abs(a - b)))
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return diff / (1.0 + scale)


def absolute_residual(lhs: ArrayLike, rhs: ArrayLike) -> float:
    """最大模意义下的绝对残差"""
    a = np.asarray(lhs, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if a.size == 0 and b.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def richardson_extrapolate(steps: Sequence[float], values: Sequence[ArrayLike]) -> np.ndarray:
    """
    Richardson 外推到步长 0

    用 Neville 格式在 h = 0 处求插值多项式的值。

    Args:
        steps: 步长序列
        values: 各步长上的数值或数组

    Returns:
        np.ndarray: 外推值

    Raises:
        ValidationError: 步长与数值个数不一致或步长重复时抛出
    """
    if len(steps) != len(values) or not steps:
        raise ValidationError("外推需要等长且非空的步长和数值序列")
    if len(set(complex(h) for h in steps)) != len(steps):
        raise ValidationError("外推步长不能重复")

    hs = [complex(h) for h in steps]
    table = [np.asarray(v, dtype=complex) for v in values]
    for level in range(1, len(hs)):
        table = [
            (hs[i + level] * table[i] - hs[i] * table[i + 1]) / (hs[i + level] - hs[i])
            for i in range(len(table) - 1)
        ]
    return table[0]
