# 恒等式验证应用初始化文件
"""
恒等式验证应用包初始化文件

提供验证命令、检查注册表和残差报告。
"""
