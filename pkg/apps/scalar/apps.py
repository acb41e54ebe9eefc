"""
Django 系数表达式应用配置

定义系数表达式应用的配置信息。
"""

from django.apps import AppConfig


class ScalarConfig(AppConfig):
    """系数表达式应用配置类"""

    # 应用名称
    name = 'apps.scalar'

    # 应用标签
    label = 'scalar'

    # 应用描述
    verbose_name = '系数表达式'
