"""验证命令的退出码。

`IntEnumChoices` 在 `IntEnum` 基础上为每个成员绑定人类可读的 `label`，
`ExitCode` 是 `verify` 命令的退出码。
"""

from enum import IntEnum


class IntEnumChoices(IntEnum):
    """为枚举成员增加 `label` 标签的整型枚举。

    每个枚举成员以 `(value, label)` 的形式定义。
    """
    def __new__(cls, value, label):
        obj = int.__new__(cls, value)
        obj._value_ = value
        obj.label = label
        return obj


class ExitCode(IntEnumChoices):
    """`verify` 命令的退出码

    非零当且仅当存在未通过或出错的检查（FAILED），或命令参数无效（USAGE）。
    """
    OK = 0, "全部通过"
    FAILED = 1, "存在未通过的检查"
    USAGE = 2, "参数错误"

    @classmethod
    def from_reports(cls, reports) -> 'ExitCode':
        """按报告列表确定退出码"""
        return cls.OK if all(r.passed for r in reports) else cls.FAILED
