import pytest

from mrpr import _kernels_py

try:
    from mrpr import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_kernels_py] + ([_ckernels] if _ckernels is not None else [])

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
