#!/usr/bin/env python3
"""Entry point for running semicoarse as a module with python -m semicoarse."""

import sys

from semicoarse.semicoarse import main


if __name__ == "__main__":
    sys.exit(main(sys.argv))
