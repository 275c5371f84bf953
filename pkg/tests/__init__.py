"""survgen 测试套件"""
