import math

import numpy as np
import pytest

from uqsl3.core import Params, SpectralPoint

GOLDEN_HBAR = math.log(0.6) + 0.05j
GOLDEN_PHI = (6.3 + 0.2j, -12.4 - 0.1j)
ZETA = SpectralPoint(0.3 + 0.2j)
ZETA_B = SpectralPoint(-0.2 + 0.5j)
TENSOR_ZETAS = (SpectralPoint(0.3 + 0.2j), SpectralPoint(-0.25 + 0.4j), SpectralPoint(0.1 - 0.35j))


def golden_params(**changes) -> Params:
    return Params(hbar=GOLDEN_HBAR, phi=GOLDEN_PHI, cutoff=14, tol=1e-7).replace(**changes)


def random_eta(n: int, seed: int = 1) -> list:
    rng = np.random.default_rng(seed)
    return [SpectralPoint(math.log(0.9) + 1j * rng.uniform(0, 2 * np.pi)) for _ in range(n)]


@pytest.fixture(scope="session")
def params():
    return golden_params()


@pytest.fixture(scope="session")
def eta1():
    return random_eta(1)


@pytest.fixture(scope="session")
def eta2():
    return random_eta(2)


def gl3_relation_defects(rep, params: Params) -> dict:
    """Relative defects of the Uq(gl3) relations for a representation ``rep(label, nu)``.

    ``rep`` may return arrays or objects with ``@``, ``+``, ``-``, scalar
    ``*`` and a ``masked_norm``-style ``norm`` supplied through ``norm``.
    """
    q = params.q
    kappa = q - 1 / q
    E = {j: rep(f"E{j}", 1.0) for j in (1, 2, 3)}
    F = {j: rep(f"F{j}", 1.0) for j in (1, 2, 3)}
    G = lambda j, nu: rep(f"qG{j}", nu)  # noqa: E731
    qH = {1: lambda nu: G(1, nu) @ G(2, -nu), 2: lambda nu: G(2, nu) @ G(3, -nu)}
    bracket = lambda h: (qH[h](1.0) - qH[h](-1.0)) * (1 / kappa)  # noqa: E731
    qH12 = lambda nu: qH[1](nu) @ qH[2](nu)  # noqa: E731
    pairs = {
        "E3": (E[3], E[1] @ E[2] - E[2] @ E[1] * (1 / q)),
        "F3": (F[3], F[2] @ F[1] - F[1] @ F[2] * q),
        "E1F1": (E[1] @ F[1] - F[1] @ E[1], bracket(1)),
        "E2F2": (E[2] @ F[2] - F[2] @ E[2], bracket(2)),
        "E1F2": (E[1] @ F[2], F[2] @ E[1]),
        "E3F3": (E[3] @ F[3] - F[3] @ E[3], (qH12(1.0) - qH12(-1.0)) * (1 / kappa)),
        "E3E1": (E[3] @ E[1], E[1] @ E[3] * (1 / q)),
        "E3E2": (E[3] @ E[2], E[2] @ E[3] * q),
        "E1F3": (E[1] @ F[3] - F[3] @ E[1], F[2] @ qH[1](1.0) * (-q)),
        "E2F3": (E[2] @ F[3] - F[3] @ E[2], F[1] @ qH[2](-1.0)),
        "E3F1": (E[3] @ F[1] - F[1] @ E[3], E[2] @ qH[1](-1.0) * (-1)),
        "E3F2": (E[3] @ F[2] - F[2] @ E[3], E[1] @ qH[2](1.0) * (1 / q)),
        "GE": (G(1, 0.7) @ E[1], E[1] @ G(1, 0.7) * params.qpow(0.7)),
    }
    return pairs


# acceptance criteria outcomes, filled by test_acceptance.py and listed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}")
