import pytest
from pydantic import ValidationError

from densify.config import SearchBudget, SeparationBudget, Settings


def test_search_budget_aliases():
    budget = SearchBudget(depth=4, ec=1, splits=8)
    assert budget.max_depth == 4
    assert budget.max_ec_per_branch == 1
    assert budget.max_com_splits == 8
    assert budget.widened(6).max_depth == 6
    assert budget.widened(2).max_depth == 4


def test_budget_bounds():
    with pytest.raises(ValidationError):
        SearchBudget(depth=-1)
    with pytest.raises(ValidationError):
        SeparationBudget(max_members=0)


def test_defaults():
    settings = Settings()
    assert settings.log_level == "error"
    assert not settings.assert_lemmas
    assert settings.separation.max_members == 512
    assert settings.search.max_depth == 10


def test_log_level():
    assert Settings(log_level="DEBUG").log_level == "debug"
    with pytest.raises(ValueError):
        Settings(log_level="loud")


def test_from_env(monkeypatch):
    monkeypatch.setenv("DENSIFY_LOG", "Info")
    monkeypatch.setenv("DENSIFY_ASSERT_LEMMAS", "yes")
    settings = Settings.from_env()
    assert settings.log_level == "info"
    assert settings.assert_lemmas

    settings = Settings.from_env(log_level="trace", pure_gl=None)
    assert settings.log_level == "trace"
    assert not settings.pure_gl


def test_from_env_without_variables(monkeypatch):
    monkeypatch.delenv("DENSIFY_LOG", raising=False)
    monkeypatch.delenv("DENSIFY_ASSERT_LEMMAS", raising=False)
    assert Settings.from_env() == Settings()
