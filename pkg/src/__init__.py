"""diracspec - Dirac 型边值问题的谱分析"""

__version__ = "0.1.0"
