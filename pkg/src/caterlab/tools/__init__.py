"""
Tools package initialization
"""
