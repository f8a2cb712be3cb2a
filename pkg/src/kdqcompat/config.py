"""Global numeric tolerances and capacity limits."""
import os

#: Default cap on dense Hilbert-space dimension (overridden by ``KDQ_MAX_DIM``).
DEFAULT_MAX_DIM = 2**12

#: Absolute zero threshold for Frobenius norms in dense checks.
DENSE_ATOL = 1e-10

#: Elementwise Hermiticity tolerance.
HERMITIAN_ATOL = 1e-12

#: Relative pruning threshold for Pauli-sum coefficients.
PRUNE_RTOL = 1e-12

#: Relative threshold for declaring a constraint commutator nonzero.
VIOLATION_RTOL = 1e-12

#: Relative threshold for linear independence in the closure basis.
INDEPENDENCE_RTOL = 1e-10


def max_dim():
    value = os.environ.get("KDQ_MAX_DIM")
    if value is None:
        return DEFAULT_MAX_DIM
    try:
        dim = int(value)
    except ValueError:
        raise ValueError(f"KDQ_MAX_DIM must be an integer, got {value!r}") from None
    if dim < 1:
        raise ValueError("KDQ_MAX_DIM must be positive")
    return dim
