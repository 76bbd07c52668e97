import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from src.graphs.store import GraphCollection
from src.models import Base

TEST_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    TEST_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)

TestingSessionLocal = sessionmaker(
    autocommit=False,
    autoflush=False,
    bind=engine,
)


@pytest.fixture(scope="function")
def db_session():
    Base.metadata.create_all(bind=engine)

    session = TestingSessionLocal()
    try:
        yield session
    finally:
        session.close()
        Base.metadata.drop_all(bind=engine)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_graph(rng, n, p=0.4):
    upper = np.triu((rng.random((n, n)) < p).astype(float), 1)
    return upper + upper.T


@pytest.fixture
def small_collection(rng):
    """Three random graphs on 8 vertices, none empty."""
    graphs = []
    while len(graphs) < 3:
        a = random_graph(rng, 8)
        if 0 < a.sum() < 8 * 7:
            graphs.append(a)
    return GraphCollection(graphs=tuple(graphs))
