import pytest
from fastapi.testclient import TestClient

from dm_bridge import BridgeConfig, create_app


@pytest.fixture()
def echo_client() -> TestClient:
    return TestClient(create_app(BridgeConfig()))


@pytest.fixture()
def make_client():
    """Factory: a TestClient over an arbitrary config/backend combination."""

    def build(config: BridgeConfig = None, backend=None) -> TestClient:
        return TestClient(create_app(config or BridgeConfig(), backend))

    return build
