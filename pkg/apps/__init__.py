"""
验证引擎的应用包

theta、scalar、opalg、felder、lops、gaudin 自底向上依赖，verification 汇总全部检查。
"""
