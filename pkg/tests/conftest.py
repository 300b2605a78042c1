"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from mmgc.data import ModalityFeatures, MultimodalGraph, save_dataset

from helpers import er_graph

# acceptance verdict lines, echoed after the run so output capture cannot
# hide them (one line per criterion; see test_acceptance.py)
_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_graph() -> MultimodalGraph:
    rng = np.random.default_rng(42)
    n = 24
    edges = er_graph(n, 0.2, seed=7)
    mods = [
        ModalityFeatures("text", rng.standard_normal((n, 6)).astype(np.float32)),
        ModalityFeatures("image", rng.standard_normal((n, 4)).astype(np.float32)),
    ]
    labels = (np.arange(n) % 3).astype(np.int64)
    return MultimodalGraph(edges=edges, modalities=mods, labels=labels)


@pytest.fixture
def dataset_dir(tmp_path, small_graph):
    """A small dataset written to disk; returns the manifest path."""
    return save_dataset(small_graph, tmp_path / "ds", clusters=3)


@pytest.fixture
def triangle() -> sp.csr_matrix:
    rows = [0, 1, 1, 2, 0, 2]
    cols = [1, 0, 2, 1, 2, 0]
    return sp.csr_matrix((np.ones(6), (rows, cols)), shape=(3, 3))
