"""Configuration module for CWSSNet"""
