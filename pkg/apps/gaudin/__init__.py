# Gaudin 模型应用初始化文件
"""
Gaudin 模型应用包初始化文件

提供经典 L 算子、Gaudin 特征多项式及其交换性检验。
"""
