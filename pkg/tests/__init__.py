"""Test suite for unidioph"""
