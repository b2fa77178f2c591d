"""
Test suite for quasiid.
"""
