"""
共享工具：异常层次、复数字面量解析、采样种子和残差度量
"""
