"""
anticyclo - anticyclotomic p-adic L-functions for U(n+1) x U(n) on finite class-set models
"""

__version__ = "0.1.0"
