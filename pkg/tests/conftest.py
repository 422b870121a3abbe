# tests/conftest.py
# -*- coding: utf-8 -*-

import pytest

from topology.graph import build_topology
from topology.partite import partite_decomposition
from topology.state_space import enumerate_state_space


@pytest.fixture
def k55():
    return build_topology({"kind": "complete_partite", "sizes": [5, 5]})


@pytest.fixture
def k55_space(k55):
    return enumerate_state_space(k55)


@pytest.fixture
def k55_parts(k55):
    return partite_decomposition(k55)


@pytest.fixture
def k22():
    return build_topology({"kind": "complete_partite", "sizes": [2, 2]})
