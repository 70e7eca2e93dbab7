import pytest

from stokesblock.blockop import FluidParams, assemble_stokes, full_spectrum
from stokesblock.grid import Rectangle, assemble_operators, build_grid

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def unit_ops(n, a=1.0, b=1.0):
    return assemble_operators(build_grid(Rectangle(a, b), n, n))


@pytest.fixture(scope="session")
def ops16():
    return unit_ops(16)


@pytest.fixture(scope="session")
def spec16(ops16):
    return full_spectrum(assemble_stokes(ops16, FluidParams(1.0, 1.0)))
