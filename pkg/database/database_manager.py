# File: database/database_manager.py

import json
import logging
import os
import sqlite3
from datetime import datetime

import pandas as pd

from config import DB_FILE

logger = logging.getLogger(__name__)

RUN_COLUMNS = ['id', 'subcommand', 'name', 'config_hash', 'master_seed', 'started_at', 'duration_s', 'passed',
               'out_dir', 'summary_json']


class DatabaseManager:
    """sqlite run registry recording every experiment invocation."""

    def __init__(self, db_file=DB_FILE):
        self.db_file = db_file
        self.conn = None
        self.cursor = None

    def connect(self):
        """Open the registry file, creating its folder on first use."""
        folder = os.path.dirname(os.path.abspath(self.db_file))
        os.makedirs(folder, exist_ok=True)
        try:
            self.conn = sqlite3.connect(self.db_file)
        except sqlite3.Error as e:
            logger.error(f"Cannot open run registry {self.db_file}: {str(e)}")
            raise
        self.cursor = self.conn.cursor()
        logger.debug(f"Run registry opened at {self.db_file}")

    def disconnect(self):
        if self.conn:
            self.conn.close()
            self.conn = None
            self.cursor = None

    def init_db(self):
        """Create the runs table from schema.sql if the registry is new."""
        with open(self.get_schema_path(), 'r') as f:
            self.conn.executescript(f.read())
        self.conn.commit()

    def get_schema_path(self):
        return os.path.join(os.path.dirname(os.path.abspath(__file__)), 'schema.sql')

    def _query(self, sql, params=None):
        if self.cursor is None:
            raise RuntimeError(f"run registry {self.db_file} is not connected")
        try:
            self.cursor.execute(sql, params or ())
        except sqlite3.Error as e:
            logger.error(f"Run registry query failed: {str(e)}")
            raise

    def execute(self, sql, params=None):
        self._query(sql, params)
        self.conn.commit()

    def fetch_all(self, sql, params=None):
        self._query(sql, params)
        return self.cursor.fetchall()

    def record_run(self, subcommand: str, name: str, config_hash: str, master_seed: int, started_at: datetime,
                   duration_s: float, passed: bool, out_dir: str, summary: dict) -> int:
        """
        Insert one run.

        Returns:
            int: Row id of the run.
        """
        try:
            self.execute("""
                INSERT INTO runs (subcommand, name, config_hash, master_seed, started_at, duration_s, passed,
                                  out_dir, summary_json)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                subcommand,
                name,
                config_hash,
                str(master_seed),
                started_at.replace(microsecond=0).isoformat(),
                float(duration_s),
                int(bool(passed)),
                out_dir,
                json.dumps(summary, default=str),
            ))
            run_id = self.cursor.lastrowid
            logger.info(f"Registered {subcommand} run '{name}' as #{run_id}")
            return run_id
        except Exception as e:
            logger.error(f"Error recording run '{name}': {str(e)}")
            raise

    def recent_runs(self, limit: int = 20, subcommand: str = None) -> pd.DataFrame:
        """Most recent runs first."""
        if subcommand is None:
            rows = self.fetch_all("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (int(limit),))
        else:
            rows = self.fetch_all("SELECT * FROM runs WHERE subcommand = ? ORDER BY id DESC LIMIT ?",
                                  (subcommand, int(limit)))
        return pd.DataFrame(rows, columns=RUN_COLUMNS)

    def runs_for_config(self, config_hash: str) -> pd.DataFrame:
        rows = self.fetch_all("SELECT * FROM runs WHERE config_hash = ? ORDER BY id", (config_hash,))
        return pd.DataFrame(rows, columns=RUN_COLUMNS)
