"""Test suite for the isomorphic Busemann-Petty laboratory"""
