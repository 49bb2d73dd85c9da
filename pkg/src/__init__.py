"""McMullen Dynamics Toolkit - Main Application Package"""
