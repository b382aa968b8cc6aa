"""Shared fixtures: a small trained checkpoint and a test client over it.

The checkpoint trains once per session on a fixed corpus mixing coordination
rewrites with pure copies, so tests can pin both fused and identity outputs.
"""

import json

import pytest


def write_pairs(path, pairs):
    with open(path, "w", encoding="utf-8") as handle:
        for source, target in pairs:
            handle.write(json.dumps({"source": source, "target": target, "meta": {}}) + "\n")


TRAINING_PAIRS = [
    pair
    for k in range(8)
    for pair in (
        (f"Alpha{k} is a pub. Alpha{k} is in the centre.",
         f"Alpha{k} is a pub, and is in the centre."),
        (f"Beta{k} is nice.", f"Beta{k} is nice."),
    )
]


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    from fusionserver.training import train_fusion

    root = tmp_path_factory.mktemp("model")
    pairs_path = root / "pairs.jsonl"
    write_pairs(pairs_path, TRAINING_PAIRS)
    out = root / "tagger.pt"
    train_fusion(
        str(pairs_path), str(out),
        vocab_size=100, updates=150, batch_size=8, learning_rate=1e-2, seed=0,
    )
    return str(out)


@pytest.fixture(scope="session")
def client(checkpoint):
    from fastapi.testclient import TestClient

    from fusionserver.app import build_app
    from fusionserver.config import ServerConfig

    config = ServerConfig(fusion_checkpoint=checkpoint, beam_cap=4, max_length=64)
    with TestClient(build_app(config)) as test_client:
        yield test_client
