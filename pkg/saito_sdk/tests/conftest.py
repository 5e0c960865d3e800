"""
@file conftest.py
@Description: Shared fixtures for the saito_sdk test suite
@Author: Saito SDK developers
Copyright 2024
"""
import pytest

from saito_sdk.groups import group_spec
from saito_sdk.saito_sdk import SAITOSDK, RunConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end E7/E8 runs and large symbolic checks")


@pytest.fixture
def a2():
    return group_spec("A2")


@pytest.fixture
def a3():
    return group_spec("A3")


@pytest.fixture
def e6():
    return group_spec("E6")


@pytest.fixture
def make_sdk(tmp_path):
    """Builds a session whose cache lives in the test's temporary directory."""

    def build(group, **kwargs):
        kwargs.setdefault("cache_dir", str(tmp_path / "cache"))
        return SAITOSDK(RunConfig(group=group, **kwargs))

    return build


@pytest.fixture(scope="session")
def e6_tables():
    """E6 metric and eta, computed once per test session."""
    from saito_sdk.saito import eta_table, metric_table

    g = group_spec("E6")
    gt = metric_table(g, threads=2)
    return gt, eta_table(gt)


@pytest.fixture(scope="session")
def e6_potential(tmp_path_factory):
    """E6 potential from a full session, computed once per test session."""
    sdk = SAITOSDK(RunConfig(group="E6", threads=2, cache_dir=str(tmp_path_factory.mktemp("e6-cache"))))
    assert sdk.requestPotential(), sdk.lastError()
    return sdk.getPotential()
