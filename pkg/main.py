#!/usr/bin/env python3
"""GMI survival - entry point for CLI execution."""

import sys

from src.main import main

if __name__ == "__main__":
    sys.exit(main())
