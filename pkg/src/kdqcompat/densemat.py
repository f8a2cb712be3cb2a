"""Dense complex-matrix kernel.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. Everything
here is pure: inputs are never mutated and results are fresh arrays.
"""
import numpy as np

from . import config
from .errors import CapacityError, DomainError, ShapeError


def as_cmatrix(a):
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def _check_square(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")


def is_hermitian(m, atol=config.HERMITIAN_ATOL):
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) < atol * scale)


def kron(a, b, max_dim=None):
    """Kronecker product with a capacity check on the result dimension."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    limit = config.max_dim() if max_dim is None else max_dim
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > limit:
        raise CapacityError(f"Kronecker product of dimension {rows}x{cols} exceeds cap {limit}")
    return np.kron(a, b)


def commutator(a, b):
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    _check_square(a, "a")
    _check_square(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def frobenius(m):
    return float(np.linalg.norm(m))


def hermitian_eig(h):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Returns ``(w, v)`` with ``h = v @ diag(w) @ v^dagger``.
    """
    h = as_cmatrix(h)
    _check_square(h, "h")
    if not is_hermitian(h):
        raise DomainError("matrix is not Hermitian")
    # symmetrize so LAPACK sees an exactly Hermitian input
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return w, v


class Propagator:
    """Cached eigendecomposition of a Hamiltonian for repeated evolution.

    >>> import numpy as np
    >>> u = Propagator(np.diag([1.0, -1.0])).unitary(0.0)
    >>> bool(np.allclose(u, np.eye(2)))
    True
    """

    def __init__(self, h):
        self.energies, self.vectors = hermitian_eig(h)
        self.dim = len(self.energies)

    def unitary(self, t):
        """U(t) = exp(-i t H)."""
        phases = np.exp(-1j * float(t) * self.energies)
        return (self.vectors * phases) @ self.vectors.conj().T

    def heisenberg(self, op, t):
        """U(t)^dagger op U(t)."""
        op = as_cmatrix(op)
        if op.shape != (self.dim, self.dim):
            raise ShapeError(f"operator shape {op.shape} does not match dimension {self.dim}")
        if t == 0:
            return op.copy()
        u = self.unitary(t)
        return u.conj().T @ op @ u


def evolve(h, t):
    return Propagator(h).unitary(t)


def heisenberg(op, h, t):
    op = as_cmatrix(op)
    h = as_cmatrix(h)
    if op.shape != h.shape:
        raise ShapeError(f"operator shape {op.shape} does not match Hamiltonian {h.shape}")
    return Propagator(h).heisenberg(op, t)


def embed(op, sites, n_sites):
    """Place a local operator on ``sites`` (1-based) of an ``n_sites`` qubit register.

    The tensor factors of ``op`` follow ascending site order. Identity acts on
    every other site. The result uses the global site order 1..n, site 1 being
    the leftmost Kronecker factor.
    """
    op = as_cmatrix(op)
    sites = sorted(sites)
    k = len(sites)
    if op.shape != (2**k, 2**k):
        raise ShapeError(f"operator shape {op.shape} does not act on {k} qubits")
    if len(set(sites)) != k or any(s < 1 or s > n_sites for s in sites):
        raise ShapeError(f"invalid site list {sites} for {n_sites} sites")
    rest = [s for s in range(1, n_sites + 1) if s not in sites]
    full = kron(op, np.eye(2 ** len(rest)))
    # axes of full, in order: sites..., rest... (rows) then the same for columns
    order = sites + rest
    perm = [order.index(s) for s in range(1, n_sites + 1)]
    t = full.reshape([2] * (2 * n_sites))
    t = t.transpose(perm + [p + n_sites for p in perm])
    return t.reshape(2**n_sites, 2**n_sites)
