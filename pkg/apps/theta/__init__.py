# theta 函数应用初始化文件
"""
theta 函数应用包初始化文件

提供奇 theta 函数及其导数的级数求值。
"""
