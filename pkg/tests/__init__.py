"""
测试包

数值引擎各应用与验证命令的测试，由 pytest-django 按 pytest.ini 加载 config.settings。
"""
