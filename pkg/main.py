#!/usr/bin/env python
"""
Generate, cost and rank denormalized data models
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
