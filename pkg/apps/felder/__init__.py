# R 矩阵应用初始化文件
"""
R 矩阵应用包初始化文件

提供 Felder 动力学 R 矩阵及其经典与三角退化。
"""
