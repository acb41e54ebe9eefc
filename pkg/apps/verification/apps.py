"""
Django 恒等式验证应用配置

定义恒等式验证应用的配置信息。
"""

from django.apps import AppConfig


class VerificationConfig(AppConfig):
    """恒等式验证应用配置类"""

    # 应用名称
    name = 'apps.verification'

    # 应用标签
    label = 'verification'

    # 应用描述
    verbose_name = '恒等式验证'
