import numpy as np
import pytest


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_skew(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) * scale
    return x - x.T


def random_spd(rng, n, floor=0.2):
    x = rng.standard_normal((n, n))
    return x @ x.T + floor * np.eye(n)


def random_gl_plus(rng, n):
    a = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
    if np.linalg.det(a) < 0:
        a[:, 0] = -a[:, 0]
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria outcomes, printed once at the end of the session
ACCEPTANCE: dict = {}


def record_acceptance(cid: str, ok: bool, detail: str) -> None:
    line = f"[{cid}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE[cid] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[cid])
