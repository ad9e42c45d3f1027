#!/usr/bin/env python3
"""
Launcher for the cascadeqa command line
"""

import sys
from pathlib import Path

# Add backend to Python path
sys.path.insert(0, str(Path(__file__).resolve().parent / "backend"))

from main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
