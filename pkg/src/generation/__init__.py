"""生存三元组生成与删失指示分类器"""
