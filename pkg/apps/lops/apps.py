"""
Django 动力学 L 算子应用配置

定义动力学 L 算子应用的配置信息。
"""

from django.apps import AppConfig


class LopsConfig(AppConfig):
    """动力学 L 算子应用配置类"""

    # 应用名称
    name = 'apps.lops'

    # 应用标签
    label = 'lops'

    # 应用描述
    verbose_name = '动力学 L 算子'
