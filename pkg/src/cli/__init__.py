"""Command-line surface: job model, command handlers and the acceptance suite"""
