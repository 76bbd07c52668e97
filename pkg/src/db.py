import json
import logging
import os

from sqlalchemy import create_engine, select
from sqlalchemy.orm import sessionmaker

from src.models import Base, RunRecord

logger = logging.getLogger(__name__)

# run ledger is off unless a database url is configured
DB_URL = os.getenv("OMNIKIT_DB_URL")

engine = create_engine(DB_URL) if DB_URL else None
SessionLocal = sessionmaker(bind=engine) if engine is not None else None


def init_db(bind=None):
    bind = bind or engine
    if bind is None:
        return False
    Base.metadata.create_all(bind=bind)
    return True


def record_run(manifest, exit_code, session=None):
    """Store one ledger row for a pipeline/repro run. Returns the row id, or None when the ledger is off."""
    if session is None:
        if SessionLocal is None:
            logger.debug("run ledger disabled, OMNIKIT_DB_URL not set")
            return None
        init_db()
        with SessionLocal() as own_session:
            return record_run(manifest, exit_code, session=own_session)

    row = RunRecord(
        command=manifest.command,
        options_json=json.dumps(manifest.options, sort_keys=True, default=str),
        seed=manifest.seed,
        input_hashes_json=json.dumps(manifest.input_hashes, sort_keys=True),
        tool_version=manifest.tool_version,
        exit_code=int(exit_code),
    )
    try:
        session.add(row)
        session.commit()
    except Exception as err:
        session.rollback()
        logger.error(f"could not write run ledger: {err}")
        return None
    return row.id


def recent_runs(limit=20, session=None):
    if session is None:
        if SessionLocal is None:
            return []
        init_db()
        with SessionLocal() as own_session:
            return recent_runs(limit, session=own_session)
    stmt = select(RunRecord).order_by(RunRecord.id.desc()).limit(limit)
    return list(session.scalars(stmt))
