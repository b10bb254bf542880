"""
Test suite for scpkit.
"""
