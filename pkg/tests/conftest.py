import pytest

from helpers import ACCEPTANCE_LINES, TOY, grid_to_dict, matrix_from_grid
from cupcf.movielens import fetch_ml100k, find_ml100k


@pytest.fixture
def toy():
    return matrix_from_grid(TOY)


@pytest.fixture
def toy_dict():
    return grid_to_dict(TOY)


@pytest.fixture(scope="session")
def ml100k_path():
    path = find_ml100k()
    if path is None:
        try:
            path = fetch_ml100k()
        except Exception as exc:
            pytest.fail(f"MovieLens-100K unavailable ({exc}); run `python -m cupcf.movielens` "
                        "or set CUPCF_DATA_DIR")
    return path


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
