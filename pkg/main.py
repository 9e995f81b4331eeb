#!/usr/bin/env python3
"""
Onion Binding Authentication
Main application entry point
"""

import os
import sys
from dotenv import load_dotenv

# Add src directory to Python path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from command_line.cli import dispatch


def main():
    load_dotenv()
    return dispatch(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
