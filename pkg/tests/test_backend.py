import pytest

from itmdp import ItmdpError
from itmdp.backend import BACKEND_ENV, THREADS_ENV, get_kernels, resolve_backend


def test_auto_prefers_compiled_when_available(monkeypatch):
    monkeypatch.delenv(BACKEND_ENV, raising=False)
    choice = resolve_backend(None)
    try:
        import numba  # noqa: F401
        assert choice == "numba"
    except ImportError:
        assert choice == "numpy"


def test_env_selects_backend(monkeypatch):
    monkeypatch.setenv(BACKEND_ENV, "numpy")
    assert resolve_backend(None) == "numpy"


def test_explicit_argument_beats_env(monkeypatch):
    monkeypatch.setenv(BACKEND_ENV, "numpy")
    pytest.importorskip("numba")
    assert resolve_backend("numba") == "numba"


def test_unknown_backend_rejected(monkeypatch):
    monkeypatch.delenv(BACKEND_ENV, raising=False)
    with pytest.raises(ItmdpError):
        resolve_backend("fortran")
    monkeypatch.setenv(BACKEND_ENV, "fortran")
    with pytest.raises(ItmdpError):
        resolve_backend(None)


def test_kernels_expose_required_entry_points(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
    kernels = get_kernels("numpy")
    assert hasattr(kernels, "run_mdp")
    assert hasattr(kernels, "run_pomdp_threshold")
