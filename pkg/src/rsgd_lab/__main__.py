"""
Main entry point for running rsgd-lab as a module.

This file allows the package to be executed with:
    python -m rsgd_lab <command> [options]
"""

import sys

# Import with fallback for different execution contexts
try:
    from .cli import main
except ImportError:
    from rsgd_lab.cli import main

if __name__ == "__main__":
    sys.exit(main())
