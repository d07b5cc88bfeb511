"""Shared fixtures: phantom datasets, loaded sessions, HTTP clients."""
import socket
import threading
import time

import numpy as np
import pytest

from slicealign.dataset import load_config, scan
from slicealign.phantom import build_phantom_case
from slicealign.session import Session


@pytest.fixture(scope="session")
def aligned_phantom(tmp_path_factory):
    """One clean case (correct headers) plus its config and table."""
    root = tmp_path_factory.mktemp("phantom_aligned")
    case = build_phantom_case(root, "case01", seed=3)
    build_phantom_case(root, "case02", seed=4)
    config = load_config(case.config_path)
    return {"case": case, "config": config, "table": scan(config)}


@pytest.fixture()
def session(aligned_phantom):
    return Session.load_case(aligned_phantom["table"], aligned_phantom["config"], "case01")


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """uvicorn in a daemon thread, for tests that need real sockets."""

    def __init__(self, app):
        import uvicorn

        self.port = free_port()
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self.thread.start()
        deadline = time.monotonic() + 10.0
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start within 10 s")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10.0)


def seeded_rigid_params(rng: np.random.Generator, center_scale: float = 10.0):
    """Generic rigid parameters away from the gimbal-lock band."""
    from slicealign.geometry import RigidParams

    t = rng.uniform(-20.0, 20.0, size=3)
    r = rng.uniform(-170.0, 170.0, size=2)
    ry = rng.uniform(-85.0, 85.0)
    c = rng.uniform(-center_scale, center_scale, size=3)
    return RigidParams(t[0], t[1], t[2], r[0], ry, r[1], c[0], c[1], c[2])
