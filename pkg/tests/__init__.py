"""Test suite for Smart Home Bot"""
