# 动力学 L 算子应用初始化文件
"""
动力学 L 算子应用包初始化文件

提供 L 算子、Manin 矩阵、交换族和特征多项式。
"""
