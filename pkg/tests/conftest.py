"""Shared fixtures and independent brute-force oracles.

The oracles here are deliberately written as plain python loops over the
defining formulas, independent of the vectorized library paths they check.
"""

import itertools

import numpy as np
import pytest

from pluriflow import catalog
from pluriflow.hermitian_forms import HermitianMetric
from pluriflow.lie_core import LieBracket, standard_j_diag


@pytest.fixture(scope="session")
def heisenberg():
    return catalog.heisenberg_kt()


@pytest.fixture(scope="session")
def inoue():
    return catalog.inoue_s0(1.0, 1.0)


@pytest.fixture(scope="session")
def solvable():
    return catalog.solvable_2414()


@pytest.fixture(scope="session")
def torus2():
    return catalog.torus(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_pd_metric(rng, n, spread=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianMetric(A @ A.conj().T * (spread / n) + 0.5 * np.eye(n))


def abelian(n=2):
    return LieBracket(np.zeros((2 * n, 2 * n, 2 * n), dtype=complex))


def iwasawa_like():
    """mu(Z_1, Z_2) = Z_3 on n = 3: 2-step, integrable, not SKT at the identity."""
    c = np.zeros((6, 6, 6), dtype=complex)
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    c[3, 4, 5] = 1.0
    c[4, 3, 5] = -1.0
    return LieBracket(c)


def brute_jacobi(mu: LieBracket) -> float:
    c = mu.coeffs
    m = c.shape[0]
    worst = 0.0
    for a, b, d in itertools.product(range(m), repeat=3):
        acc = np.zeros(m, dtype=complex)
        for e in range(m):
            acc += c[a, b, e] * c[e, d, :]
            acc += c[b, d, e] * c[e, a, :]
            acc += c[d, a, e] * c[e, b, :]
        worst = max(worst, float(np.abs(acc).max()))
    return worst


def brute_nijenhuis(mu: LieBracket) -> float:
    c = mu.coeffs
    m = c.shape[0]
    j = standard_j_diag(mu.n)
    worst = 0.0
    for a, b in itertools.product(range(m), repeat=2):
        n_ab = j[a] * j[b] * c[a, b, :] - j[a] * (j * c[a, b, :]) \
            - j[b] * (j * c[a, b, :]) - c[a, b, :]
        worst = max(worst, float(np.abs(n_ab).max()))
    return worst


def brute_d(mu: LieBracket, T: np.ndarray) -> np.ndarray:
    """Plain-loop Chevalley-Eilenberg differential of a dense tensor."""
    c = mu.coeffs
    m = c.shape[0]
    r = T.ndim
    out = np.zeros((m,) * (r + 1), dtype=complex)
    for args in itertools.product(range(m), repeat=r + 1):
        val = 0.0 + 0.0j
        for i in range(r + 1):
            for j in range(i + 1, r + 1):
                rest = tuple(args[k] for k in range(r + 1) if k not in (i, j))
                sign = (-1) ** (i + j)
                for e in range(m):
                    val += sign * c[args[i], args[j], e] * T[(e,) + rest]
        out[args] = val
    return out


def assert_form_close(a, b, tol=1e-12, scale=1.0):
    diff = np.abs(np.asarray(a) - np.asarray(b)).max()
    assert diff <= tol * scale, f"forms differ by {diff:.3e}"
