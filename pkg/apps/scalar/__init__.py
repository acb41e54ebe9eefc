# 系数表达式应用初始化文件
"""
系数表达式应用包初始化文件

提供可求值、可微分、可平移的系数表达式及采样策略。
"""
