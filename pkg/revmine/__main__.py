#!/usr/bin/env python3
"""
revmine CLI Entry Point

Usage:
    python -m revmine [command] [options]

Or with the installed script:
    revmine [command] [options]
"""

import sys

from revmine.cli import main

if __name__ == "__main__":
    sys.exit(main())
