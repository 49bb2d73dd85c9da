#!/usr/bin/env python3
"""
Entry point for the command-line tool - redirects to the actual implementation.
"""

import sys
import os

# Add the repository root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.cli.main import run

if __name__ == "__main__":
    sys.exit(run())
