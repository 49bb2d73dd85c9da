"""Dynamical-plane computations for the McMullen family"""
