# 算子环应用初始化文件
"""
算子环应用包初始化文件

提供平移算子环、微分算子环以及张量腿的嵌入、反对称化和偏迹。
"""
