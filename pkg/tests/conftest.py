import pytest

from densify.calculus import SystemId
from densify.config import Settings
from densify.preprocess import preprocess
from densify.syntax import IdSource

from .proofs import example_proof


def pytest_addoption(parser):
    parser.addoption(
        "--assert-lemmas",
        action="store_true",
        default=False,
        help="Check structural postconditions of every pipeline stage",
    )


@pytest.fixture
def assert_lemmas(request) -> bool:
    """
    Fixture to provide the --assert-lemmas switch.
    Pipeline tests pass it on so a run with the switch checks every stage.
    """
    return request.config.getoption("--assert-lemmas")


@pytest.fixture
def giul() -> SystemId:
    """
    Fixture to provide the involutive system most tests run in.
    """
    return SystemId.from_value("giul")


@pytest.fixture
def settings(assert_lemmas) -> Settings:
    """
    Fixture to provide run settings with the lemma assertions of the command line.
    """
    return Settings(assert_lemmas=assert_lemmas)


@pytest.fixture
def g0_proof():
    """
    Fixture to provide the hand-built proof of G0 with unlabeled eigenvariables.
    """
    return example_proof()


@pytest.fixture
def g0_trace(giul, g0_proof, assert_lemmas):
    """
    Fixture to provide the preprocessing trace of the G0 proof.
    """
    return preprocess(giul, g0_proof, IdSource(), assert_lemmas)
