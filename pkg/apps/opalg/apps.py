"""
Django 算子环应用配置

定义算子环应用的配置信息。
"""

from django.apps import AppConfig


class OpalgConfig(AppConfig):
    """算子环应用配置类"""

    # 应用名称
    name = 'apps.opalg'

    # 应用标签
    label = 'opalg'

    # 应用描述
    verbose_name = '算子环'
