import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

# criterion -> list of (part, ok, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"[{status}] criterion {crit}")
        for part, ok, detail in parts:
            tr.write_line(f"    {'ok ' if ok else 'BAD'} {part}: {detail}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
