#!/usr/bin/env python
"""
开发辅助脚本

提供代码格式化、检查、测试和恒等式验证等开发任务。
"""

import os
import subprocess
import sys

# 设置 Django 环境
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

SOURCES = "apps config utils tests"


def run_command(command, description):
    """运行系统命令"""
    print(f"\n🚀 {description}")
    print(f"命令: {command}")
    result = subprocess.run(command, shell=True)
    if result.returncode != 0:
        print(f"❌ 命令执行失败: {command} (退出码 {result.returncode})")
        return False
    print(f"✅ {description} 完成")
    return True


def format_code():
    """格式化代码"""
    print("\n🎨 开始代码格式化...")
    return (run_command(f"black {SOURCES} --line-length=120", "Black 代码格式化")
            and run_command(f"isort {SOURCES}", "isort 导入排序"))


def lint_code():
    """代码检查"""
    print("\n🔍 开始代码检查...")
    return run_command(f"flake8 {SOURCES} --max-line-length=120 --extend-ignore=E203,W503", "Flake8 代码检查")


def run_tests(fast=False):
    """运行测试，fast 时跳过 slow 标记的用例"""
    print("\n🧪 开始运行测试...")
    marker = " -m 'not slow'" if fast else ""
    return run_command(f"pytest --cov=apps --cov-report=term-missing{marker}", "运行测试")


def run_verify(extra):
    """运行全部恒等式检查"""
    print("\n🧮 开始验证恒等式...")
    return run_command(f"python manage.py verify {' '.join(extra)}".rstrip(), "验证恒等式")


def list_identities():
    """列出全部恒等式"""
    return run_command("python manage.py list_identities", "列出恒等式")


def show_help():
    """显示帮助信息"""
    print("""
开发辅助脚本

使用方法: python scripts/manage_extra.py [命令] [参数...]

可用命令:
    format      - 格式化代码 (Black + isort)
    lint        - 代码检查 (Flake8)
    test        - 运行全部测试
    quick       - 运行测试，跳过 slow 用例
    verify      - 运行 verify 命令，其余参数原样传递
    identities  - 列出全部恒等式
    all         - 执行 format + lint + quick + verify
    help        - 显示帮助信息

示例:
    python scripts/manage_extra.py verify --suites felder,manin --n 3
    python scripts/manage_extra.py all
""")


def main():
    """主函数"""
    if len(sys.argv) < 2:
        show_help()
        return

    command, extra = sys.argv[1], sys.argv[2:]

    if command == "format":
        ok = format_code()
    elif command == "lint":
        ok = lint_code()
    elif command == "test":
        ok = run_tests()
    elif command == "quick":
        ok = run_tests(fast=True)
    elif command == "verify":
        ok = run_verify(extra)
    elif command == "identities":
        ok = list_identities()
    elif command == "all":
        print("🔧 执行完整检查流程...")
        ok = format_code() and lint_code() and run_tests(fast=True) and run_verify(extra)
        print("\n✅ 所有检查通过！" if ok else "\n❌ 某些检查失败，请查看输出信息。")
    elif command == "help":
        show_help()
        return
    else:
        print(f"❌ 未知命令: {command}")
        show_help()
        ok = False

    if not ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
