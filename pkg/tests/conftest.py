import numpy as np
import pytest

from kdqcompat.pauli import PauliString, PauliSum

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
LETTERS = "IXYZ"


def dense_string(letters):
    """Kronecker-chain oracle for a Pauli string, site 1 leftmost."""
    m = np.ones((1, 1), dtype=complex)
    for ch in letters:
        m = np.kron(m, PAULI[ch])
    return m


def dense_sum(ps):
    dim = 2**ps.n_sites
    m = np.zeros((dim, dim), dtype=complex)
    for s, c in ps.items():
        m += c * dense_string(s.letters)
    return m


def random_sum(rng, n_sites, n_terms, complex_coeffs=True):
    terms = {}
    for _ in range(n_terms):
        letters = "".join(rng.choice(list(LETTERS), size=n_sites))
        c = rng.normal()
        if complex_coeffs:
            c += 1j * rng.normal()
        terms[letters] = terms.get(letters, 0) + c
    return PauliSum.from_terms(n_sites, terms)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
