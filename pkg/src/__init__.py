"""survgen - 基于 VAE 与 Beran 估计器的生存数据生成与原型轨迹"""

__version__: str = "0.1.0"
