"""Experiment ledger: one row per recorded CLI run"""
import json
import os
from datetime import datetime, timezone
from typing import Optional

from dotenv import load_dotenv
from sqlalchemy import Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import sessionmaker

from app.models.schemas import ExperimentManifest

load_dotenv()

# Database configuration
LEDGER_URL = os.getenv("UNIDIOPH_LEDGER_URL", "sqlite:///./unidioph_runs.db")


def _make_engine(url: str):
    return create_engine(url, connect_args={"check_same_thread": False} if "sqlite" in url else {})


# No connection is opened until a run is recorded
engine = _make_engine(LEDGER_URL)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()


class ExperimentRun(Base):
    """A recorded run with its manifest"""
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, nullable=False, index=True)
    parameters = Column(Text, nullable=False)  # JSON
    version = Column(String, nullable=False)
    seed = Column(Integer)
    workers = Column(Integer, default=1)
    exit_code = Column(Integer, default=0)
    result = Column(Text)  # payload exactly as printed
    created_at = Column(DateTime, default=lambda: datetime.now(timezone.utc))

    def to_manifest(self) -> ExperimentManifest:
        result = self.result
        try:
            result = json.loads(result) if result else None
        except ValueError:
            pass  # CSV payloads are stored verbatim
        return ExperimentManifest(
            command=self.command,
            parameters=json.loads(self.parameters),
            version=self.version,
            timestamp=self.created_at,
            result=result,
        )


def bind_ledger(url: str) -> None:
    """Point the ledger at another database (tests, one-off runs)"""
    global engine
    engine = _make_engine(url)
    SessionLocal.configure(bind=engine)


def init_db():
    """Initialize database tables"""
    Base.metadata.create_all(bind=engine)


def get_db():
    """Get database session"""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def record_run(manifest: ExperimentManifest, exit_code: int, payload: str) -> int:
    """Append a run to the ledger and return its id"""
    init_db()
    db = SessionLocal()
    try:
        run = ExperimentRun(
            command=manifest.command,
            parameters=json.dumps(manifest.parameters, sort_keys=True),
            version=manifest.version,
            seed=manifest.parameters.get("seed"),
            workers=manifest.parameters.get("workers", 1),
            exit_code=exit_code,
            result=payload,
            created_at=manifest.timestamp,
        )
        db.add(run)
        db.commit()
        db.refresh(run)
        return run.id
    finally:
        db.close()


def latest_run(command: Optional[str] = None) -> Optional[ExperimentRun]:
    init_db()
    db = SessionLocal()
    try:
        query = db.query(ExperimentRun)
        if command:
            query = query.filter(ExperimentRun.command == command)
        return query.order_by(ExperimentRun.id.desc()).first()
    finally:
        db.close()
