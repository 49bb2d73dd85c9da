"""Grids, classification and image output"""
