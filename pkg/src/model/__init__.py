"""VAE 模型、原型轨迹与持久化"""
