"""
Explorer package initialization
"""
