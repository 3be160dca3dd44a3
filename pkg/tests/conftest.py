import pytest
from oracles import ACCEPTANCE

from quadnc import nn, pipeline

DESK_VECTORS = 2000


def _train(config):
    corpus = pipeline.generate_corpus(config)
    return corpus, nn.fit(corpus.dataset(), nn.TrainConfig(seed=config.seed))


@pytest.fixture(scope="session")
def desk():
    """(corpus, model) at 2000 vectors per family, master seed 0."""
    return _train(pipeline.default_training_config(vectors_per_family=DESK_VECTORS, seed=0))


@pytest.fixture(scope="session")
def desk_model(desk):
    return desk[1]


@pytest.fixture(scope="session")
def ablated_model():
    cfg = pipeline.ablated_config("spacs", pipeline.default_training_config(vectors_per_family=DESK_VECTORS, seed=0))
    return _train(cfg)[1]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
