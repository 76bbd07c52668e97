from sqlalchemy import Column, Integer, String, Text, DateTime, func
from sqlalchemy.orm import declarative_base

Base = declarative_base()

class RunRecord(Base):
    __tablename__ = "RunRecord"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String, nullable=False)
    options_json = Column(Text)
    seed = Column(Integer, nullable=True)
    input_hashes_json = Column(Text)
    tool_version = Column(String)
    exit_code = Column(Integer, nullable=False, default=0)
    created_at = Column(DateTime, server_default=func.now(), nullable=False)
