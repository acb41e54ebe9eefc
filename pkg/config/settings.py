"""
Django 项目设置文件

本文件包含验证引擎的全部配置：已安装应用、数值参数、运行默认值和日志配置。
所有可调参数通过 python-decouple 从环境变量或 .env 文件读取。
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# 引擎不提供 Web 服务，密钥只用于满足 Django 启动检查
SECRET_KEY = config('SECRET_KEY', default='django-insecure-verification-engine')

# 调试模式开关
DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# 应用定义
# Django 内置应用
DJANGO_APPS = [
    'django.contrib.contenttypes',
]

# 自定义应用
LOCAL_APPS = [
    'apps.theta',  # theta 函数
    'apps.scalar',  # 系数表达式
    'apps.opalg',  # 算子环与张量腿
    'apps.felder',  # R 矩阵
    'apps.lops',  # 动力学 L 算子
    'apps.gaudin',  # Gaudin 模型
    'apps.verification',  # 验证命令
]

# 合并所有应用
INSTALLED_APPS = DJANGO_APPS + LOCAL_APPS

# 引擎不使用数据库
DATABASES = {}

# 国际化配置
LANGUAGE_CODE = 'zh-hans'  # 简体中文
TIME_ZONE = 'Asia/Shanghai'  # 上海时区
USE_I18N = True

# 验证引擎配置
# 命令行参数 > VERIFY_CONFIG_PATH 指向的 JSON 文件 > 环境变量 > 默认值
VERIFICATION = {
    # 运行默认值
    'N': config('VERIFY_N', default=2, cast=int),
    'TAU': config('VERIFY_TAU', default='0+1.1i'),
    'HBAR': config('VERIFY_HBAR', default='0.137+0.071i'),
    'SEED': config('VERIFY_SEED', default=1, cast=int),
    'TOL': config('VERIFY_TOL', default=1e-9, cast=float),
    'SAMPLES': config('VERIFY_SAMPLES', default=8, cast=int),
    'SITES': config('VERIFY_SITES', default='defining@0.1,dual@0.45'),
    'WORKERS': config('VERIFY_WORKERS', default=1, cast=int),
    'CONFIG_PATH': config('VERIFY_CONFIG_PATH', default=''),
    # theta 级数
    'THETA_SERIES_TOL': config('THETA_SERIES_TOL', default=1e-16, cast=float),
    'THETA_MAX_TERMS': config('THETA_MAX_TERMS', default=200, cast=int),
    # 采样
    'SAMPLING_DENOMINATOR_GUARD': config('SAMPLING_DENOMINATOR_GUARD', default=0.05, cast=float),
    'SAMPLING_MAX_RETRIES': config('SAMPLING_MAX_RETRIES', default=20, cast=int),
    # 不透明矩阵求逆
    'OPAQUE_CONDITION_GUARD': config('OPAQUE_CONDITION_GUARD', default=1e10, cast=float),
    # 零项剪枝
    'PRUNE_THRESHOLD': config('PRUNE_THRESHOLD', default=1e-13, cast=float),
    'PRUNE_SAMPLES': config('PRUNE_SAMPLES', default=8, cast=int),
}

LOG_LEVEL = config('LOG_LEVEL', default='INFO')

# 日志配置
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple'
        },
        'file': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': BASE_DIR / 'logs' / 'verification.log',
            'maxBytes': 1024 * 1024 * 15,  # 15MB
            'backupCount': 10,
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
    'loggers': {
        'apps': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'django': {
            'handlers': ['console', 'file'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}

# 创建日志目录
LOGS_DIR = BASE_DIR / 'logs'
LOGS_DIR.mkdir(exist_ok=True)
