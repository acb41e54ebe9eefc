"""
Django Gaudin 模型应用配置

定义Gaudin 模型应用的配置信息。
"""

from django.apps import AppConfig


class GaudinConfig(AppConfig):
    """Gaudin 模型应用配置类"""

    # 应用名称
    name = 'apps.gaudin'

    # 应用标签
    label = 'gaudin'

    # 应用描述
    verbose_name = 'Gaudin 模型'
