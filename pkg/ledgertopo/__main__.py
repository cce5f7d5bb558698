#!/usr/bin/env python3
"""Module entry point for running ledgertopo as a package"""

from ledgertopo.main import main

if __name__ == "__main__":
    main()
