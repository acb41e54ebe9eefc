#!/usr/bin/env python
"""
Django 管理脚本

运行恒等式验证等管理命令，例如 `python manage.py verify --suites all`。
"""

import os
import sys

if __name__ == '__main__':
    # 设置 Django 设置模块
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

    try:
        # 导入 Django 管理命令执行器
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "无法导入 Django。请确认是否已安装 Django 并激活了虚拟环境。"
        ) from exc

    # 执行管理命令
    execute_from_command_line(sys.argv)
