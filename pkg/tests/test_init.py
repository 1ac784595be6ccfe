"""Smoke test: the package imports and exposes its version."""

import our_pd_approx
from our_pd_approx import __version__


def test_version_is_set() -> None:
    assert __version__ == "0.1.0"


def test_public_api_exported() -> None:
    for name in our_pd_approx.__all__:
        assert hasattr(our_pd_approx, name), name
