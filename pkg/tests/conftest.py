"""Shared pytest fixtures"""
import json
import os
import sys

import numpy as np
import pytest

# Add app to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.models import database
from app.services.finite_catalog import cyclic_action, dihedral_action, symmetric_action
from app.services.haar_measure import haar_samples
from app.utils.linalg import diagonal_unitary
from app.utils.serialization import matrix_to_payload


@pytest.fixture
def rng():
    """Seeded generator for ad-hoc test data"""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def haar_pairs():
    """Haar-random (A, B) pairs per dimension, fixed by seed"""
    return {n: [tuple(haar_samples(n, 2, 11, i)) for i in range(20)] for n in (1, 2, 3)}


@pytest.fixture(scope="session")
def haar_matrices():
    """100 Haar matrices per dimension 1..4"""
    return {n: haar_samples(n, 100, 5, n) for n in (1, 2, 3, 4)}


@pytest.fixture(scope="session")
def z12():
    return cyclic_action(12)


@pytest.fixture(scope="session")
def s3():
    return symmetric_action(3)


@pytest.fixture(scope="session")
def d5():
    return dihedral_action(5)


@pytest.fixture(scope="session")
def small_catalog():
    """Both metric branches and a non-abelian isometric action"""
    return [cyclic_action(6), cyclic_action(12), symmetric_action(3), symmetric_action(4), dihedral_action(4)]


@pytest.fixture
def ledger(tmp_path):
    """Experiment ledger on a temporary sqlite file"""
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    previous = str(database.engine.url)
    database.bind_ledger(url)
    database.init_db()
    yield url
    database.bind_ledger(previous)


@pytest.fixture
def write_matrix(tmp_path):
    """Write a matrix JSON file and return its path"""
    def _write(name, matrix):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(matrix_to_payload(matrix)))
        return str(path)
    return _write


@pytest.fixture
def golden_pair():
    """A = e(1/3), B = e(1/2) in U(1)"""
    return diagonal_unitary([1 / 3]), diagonal_unitary([1 / 2])


@pytest.fixture
def cli(capsys):
    """Run the CLI in-process; returns (exit code, stdout, stderr)"""
    from app.cli.main import run

    def _run(*argv):
        code = run([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return _run
