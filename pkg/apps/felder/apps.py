"""
Django R 矩阵应用配置

定义R 矩阵应用的配置信息。
"""

from django.apps import AppConfig


class FelderConfig(AppConfig):
    """R 矩阵应用配置类"""

    # 应用名称
    name = 'apps.felder'

    # 应用标签
    label = 'felder'

    # 应用描述
    verbose_name = 'R 矩阵'
