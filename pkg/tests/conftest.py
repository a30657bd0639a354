import functools

import pytest

from nhformation.harness import load_config, resolve_scenario, run_scenario


@functools.lru_cache(maxsize=None)
def _bundled(name):
    cfg = load_config(resolve_scenario(name))
    return cfg, run_scenario(cfg)


@pytest.fixture(scope="session")
def bundled_run():
    """``bundled_run(name) -> (config, log)``, simulated once per session."""
    return _bundled


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, title, checks)`` records one PASS/FAIL line and asserts.

    ``checks`` is a list of ``(description, ok)`` pairs.
    """

    def record(n, title, checks):
        ok = all(c for _, c in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} | " + "; ".join(d for d, _ in checks)
        ACCEPTANCE[n] = line
        print(line)
        failed = [d for d, c in checks if not c]
        assert ok, "failed: " + "; ".join(failed)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
