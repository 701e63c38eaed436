# File: config.py

import os
import appdirs

APP_NAME = "CBE Lab"
APP_AUTHOR = "CBE Lab"
APP_VERSION = "1.0.0"

BASE_DIR = os.path.dirname(os.path.abspath(__file__))

# Runs and the registry live in the user's app data directory
DATA_DIR = appdirs.user_data_dir(APP_NAME, APP_AUTHOR)

# Default experiment settings and tolerances
DEFAULTS_FILE = os.path.join(BASE_DIR, 'config.yaml')

# Output directory for run artifacts; $CBE_LAB_OUT takes precedence
OUTPUT_DIR = os.environ.get('CBE_LAB_OUT') or os.path.join(DATA_DIR, 'runs')

# Run registry
DB_FILE = os.path.join(DATA_DIR, 'runs.db')
