import json
from unittest.mock import patch

from sqlalchemy import inspect

from src.cli.manifest import RunManifest
from src.db import init_db, recent_runs, record_run
from src.models import RunRecord


def test_tables_created(db_session):
    tables = set(inspect(db_session.get_bind()).get_table_names())
    assert "RunRecord" in tables


def test_record_run_stores_manifest(db_session):
    manifest = RunManifest(command="repro flat_bounds", options={"replicates": None}, seed=7)
    manifest.input_hashes["graphs/graph_1.csv"] = "abc123"

    row_id = record_run(manifest, 0, session=db_session)

    row = db_session.get(RunRecord, row_id)
    assert row.command == "repro flat_bounds"
    assert row.seed == 7
    assert row.exit_code == 0
    assert json.loads(row.input_hashes_json) == {"graphs/graph_1.csv": "abc123"}
    assert row.created_at is not None


def test_recent_runs_newest_first(db_session):
    for code in (0, 1, 2):
        record_run(RunManifest(command=f"pipeline {code}", seed=code), code, session=db_session)

    rows = recent_runs(limit=2, session=db_session)

    assert [r.exit_code for r in rows] == [2, 1]


def test_record_run_uses_session_factory(db_session):
    # with 'with SessionLocal()' patched, the ledger lands in the test database
    with patch("src.db.SessionLocal") as mock_factory, patch("src.db.init_db"):
        mock_factory.return_value.__enter__.return_value = db_session
        row_id = record_run(RunManifest(command="pipeline", seed=1), 1)

    assert db_session.get(RunRecord, row_id).command == "pipeline"


def test_ledger_disabled_without_url():
    with patch("src.db.SessionLocal", None):
        assert record_run(RunManifest(command="pipeline"), 0) is None
        assert recent_runs() == []
    with patch("src.db.engine", None):
        assert init_db() is False
