import pytest
import torch

from qadst import (
    ModelConfig,
    SyntheticConfig,
    TrainConfig,
    generate_synthetic,
    save_checkpoint,
    train,
)
from qadst.synthetic import default_ontology

QUICK_MODEL = dict(word_dim=24, char_dim=8, char_filters=8, role_dim=8, dropout=0.2)


@pytest.fixture(scope="session")
def tiny_ontology():
    return default_ontology()


@pytest.fixture(scope="session")
def small_corpus(tiny_ontology):
    corpus, _ = generate_synthetic(
        SyntheticConfig(n_train=12, n_dev=4, n_test=4, seed=7), tiny_ontology
    )
    return corpus


@pytest.fixture(scope="session")
def quick_result(small_corpus, tiny_ontology):
    """A briefly-trained tracker shared by tests that only need a working
    runtime, not a converged one."""
    torch.manual_seed(0)
    return train(
        small_corpus,
        tiny_ontology,
        model_config=ModelConfig(**QUICK_MODEL),
        train_config=TrainConfig(epochs=3, seed=0),
    )


@pytest.fixture(scope="session")
def quick_runtime(quick_result):
    return quick_result.runtime


@pytest.fixture(scope="session")
def checkpoint_dir(quick_runtime, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "checkpoint"
    save_checkpoint(quick_runtime, path, metrics={"note": "fixture"})
    return path
