"""
Django theta 函数应用配置

定义theta 函数应用的配置信息。
"""

from django.apps import AppConfig


class ThetaConfig(AppConfig):
    """theta 函数应用配置类"""

    # 应用名称
    name = 'apps.theta'

    # 应用标签
    label = 'theta'

    # 应用描述
    verbose_name = 'theta 函数'
