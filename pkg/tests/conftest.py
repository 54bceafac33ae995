import sys
import time
from pathlib import Path

import numpy as np
import pytest

from anyonsplit import make_fibonacci, make_ising, make_su2k

sys.path.insert(0, str(Path(__file__).parent))

DEFAULT_SEED = 20240611
SUITE_BUDGET_SECONDS = 60.0

_ACCEPTANCE = {}
_START = {}


def pytest_addoption(parser):
    parser.addoption('--seed', type=int, default=DEFAULT_SEED,
                     help='seed for randomized property tests (default %(default)s)')


def pytest_sessionstart(session):
    _START['t'] = time.perf_counter()


@pytest.fixture(scope='session')
def seed(request):
    return request.config.getoption('--seed')


@pytest.fixture
def rng(seed, request):
    # independent stream per test, reproducible from the session seed
    return np.random.default_rng([seed, sum(map(ord, request.node.nodeid))])


@pytest.fixture(scope='session')
def ising():
    return make_ising()


@pytest.fixture(scope='session')
def fibonacci():
    return make_fibonacci()


@pytest.fixture(scope='session')
def su2k():
    return make_su2k


@pytest.fixture(scope='session')
def rep_a4():
    from repa4 import make_rep_a4
    return make_rep_a4()


@pytest.fixture(scope='session')
def acceptance_report():
    """Record ``(number, title, passed, detail)`` for the end-of-run summary."""
    def record(number, title, passed, detail=''):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
    return record


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _START.get('t', time.perf_counter())
    session.config._suite_elapsed = elapsed
    full_run = not session.config.option.keyword and not session.config.option.markexpr
    if full_run and _ACCEPTANCE and elapsed > SUITE_BUDGET_SECONDS:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section('acceptance criteria')
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        tr.write_line(f'criterion {number}: {"PASS" if passed else "FAIL"}  {title}'
                      + (f'  [{detail}]' if detail else ''))
    elapsed = getattr(config, '_suite_elapsed', None)
    if elapsed is not None:
        ok = elapsed <= SUITE_BUDGET_SECONDS
        tr.write_line(f'suite runtime: {elapsed:.1f} s (budget {SUITE_BUDGET_SECONDS:.0f} s) '
                      f'{"PASS" if ok else "FAIL"}')
