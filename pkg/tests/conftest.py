"""Shared fixtures: bundled example networks and a one-transaction network."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from demoflow.network import TransactionNetwork, load_network, parse_network

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def make_solo_network() -> TransactionNetwork:
    """A single transaction between two actors; the smallest legal network."""
    return parse_network(
        json.dumps(
            {
                "name": "solo",
                "actors": [
                    {"id": "A", "name": "Customer"},
                    {"id": "B", "name": "Supplier"},
                ],
                "transactions": [
                    {
                        "id": "TK01",
                        "name": "order fulfilment",
                        "initiator": "A",
                        "executor": "B",
                        "result": {"id": "PK01", "phrase": "[order] has been fulfilled"},
                    }
                ],
                "dependencies": [],
            }
        )
    )


@pytest.fixture(scope="session")
def solo_net() -> TransactionNetwork:
    return make_solo_network()


@pytest.fixture(scope="session")
def poc1_net() -> TransactionNetwork:
    return load_network(FIXTURES / "poc1.json")


@pytest.fixture(scope="session")
def poc2_net() -> TransactionNetwork:
    return load_network(FIXTURES / "poc2.json")
