# File: conftest.py

import os
import sys

# Packages are imported from the repository root, as main.py does
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
