import pytest

from ftopt import kernels

KERNEL_NAMES = ("trimmed_round", "envelope_bounds", "displaced_mean")


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    mod = kernels.compiled_backend if request.param == "compiled" else kernels.python_backend
    if mod is None:
        pytest.skip("compiled kernels are not built")
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
