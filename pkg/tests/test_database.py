# File: tests/test_database.py

import json
from datetime import datetime

import pytest

from database.database_manager import RUN_COLUMNS, DatabaseManager


@pytest.fixture
def db(tmp_path):
    manager = DatabaseManager(str(tmp_path / "registry" / "runs.db"))
    manager.connect()
    manager.init_db()
    yield manager
    manager.disconnect()


def _record(db, subcommand='clt', config_hash='abc', passed=True):
    return db.record_run(subcommand, 'demo', config_hash, 2 ** 63 + 5, datetime(2024, 5, 1, 12, 0, 0, 1234),
                         1.5, passed, '/tmp/out', {'estimate': 0.25})


def test_record_and_read_back(db):
    run_id = _record(db)
    frame = db.recent_runs()
    assert list(frame.columns) == RUN_COLUMNS
    row = frame.iloc[0]
    assert row['id'] == run_id
    assert row['master_seed'] == str(2 ** 63 + 5)
    assert row['started_at'] == '2024-05-01T12:00:00'
    assert row['passed'] == 1
    assert json.loads(row['summary_json']) == {'estimate': 0.25}


def test_recent_runs_order_and_filter(db):
    first = _record(db, 'clt')
    second = _record(db, 'gmc', passed=False)
    assert list(db.recent_runs()['id']) == [second, first]
    assert list(db.recent_runs(subcommand='gmc')['id']) == [second]
    assert len(db.recent_runs(limit=1)) == 1


def test_runs_for_config(db):
    _record(db, config_hash='one')
    _record(db, config_hash='two')
    _record(db, config_hash='one')
    assert len(db.runs_for_config('one')) == 2
    assert db.runs_for_config('missing').empty


def test_queries_need_a_connection(tmp_path):
    manager = DatabaseManager(str(tmp_path / "runs.db"))
    with pytest.raises(RuntimeError):
        manager.recent_runs()
    manager.connect()
    manager.disconnect()
    with pytest.raises(RuntimeError):
        manager.fetch_all("SELECT 1")
