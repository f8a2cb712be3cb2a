"""Exact algebra of weighted Pauli-string sums.

A Pauli string on ``n`` qubits is stored in symplectic form as two bit masks
``(x, z)``: site ``s`` (1-based) is bit ``n - s``, so that printing a mask in
binary with width ``n`` lists sites 1..n left to right. The letter at a site is
``I`` (x=0, z=0), ``X`` (1, 0), ``Z`` (0, 1) or ``Y`` (1, 1), with
``Y = i X Z`` so every string is Hermitian.
"""
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import CapacityError, ShapeError

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PHASES = (1, 1j, -1, -1j)


@dataclass(frozen=True, order=True)
class PauliString:
    n_sites: int
    x: int
    z: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ShapeError("n_sites must be positive")
        full = (1 << self.n_sites) - 1
        if self.x & ~full or self.z & ~full:
            raise ShapeError("mask has bits beyond n_sites")

    @classmethod
    def identity(cls, n_sites):
        return cls(n_sites, 0, 0)

    @classmethod
    def from_letters(cls, letters):
        """``PauliString.from_letters("XIZ")``; the first letter is site 1."""
        n = len(letters)
        x = z = 0
        for ch in letters:
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r}") from None
            x = (x << 1) | bx
            z = (z << 1) | bz
        return cls(n, x, z)

    @classmethod
    def single(cls, n_sites, letter, site):
        if not 1 <= site <= n_sites:
            raise ShapeError(f"site {site} out of range 1..{n_sites}")
        bx, bz = _LETTER_BITS[letter]
        bit = n_sites - site
        return cls(n_sites, bx << bit, bz << bit)

    @property
    def letters(self):
        out = []
        for s in range(1, self.n_sites + 1):
            bit = self.n_sites - s
            out.append(_BITS_LETTER[((self.x >> bit) & 1, (self.z >> bit) & 1)])
        return "".join(out)

    def letter(self, site):
        bit = self.n_sites - site
        return _BITS_LETTER[((self.x >> bit) & 1, (self.z >> bit) & 1)]

    @property
    def support(self):
        mask = self.x | self.z
        return frozenset(s for s in range(1, self.n_sites + 1) if mask >> (self.n_sites - s) & 1)

    @property
    def weight(self):
        return (self.x | self.z).bit_count()

    def is_identity(self):
        return self.x == 0 and self.z == 0

    def restrict(self, sites):
        """Keep letters on ``sites`` and put identities elsewhere."""
        mask = site_mask(self.n_sites, sites)
        return PauliString(self.n_sites, self.x & mask, self.z & mask)

    def commutes_with(self, other):
        _check_sites(self.n_sites, other.n_sites)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def __str__(self):
        return self.letters

    def label(self):
        """Sparse label such as ``"X1 Z3"``; the identity is ``"I"``."""
        parts = [f"{self.letter(s)}{s}" for s in sorted(self.support)]
        return " ".join(parts) if parts else "I"


def site_mask(n_sites, sites):
    mask = 0
    for s in sites:
        if not 1 <= s <= n_sites:
            raise ShapeError(f"site {s} out of range 1..{n_sites}")
        mask |= 1 << (n_sites - s)
    return mask


def _check_sites(n1, n2):
    if n1 != n2:
        raise ShapeError(f"site-count mismatch: {n1} vs {n2}")


def mul(a, b):
    """Product of two strings: ``a * b = phase * s`` with phase in {±1, ±i}."""
    _check_sites(a.n_sites, b.n_sites)
    x = a.x ^ b.x
    z = a.z ^ b.z
    k = (
        (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        + 2 * (a.z & b.x).bit_count()
        - (x & z).bit_count()
    ) % 4
    return _PHASES[k], PauliString(a.n_sites, x, z)


class PauliSum:
    """Weighted sum of Pauli strings with canonical, pruned coefficients.

    Instances are treated as immutable. Arithmetic returns new objects.

    >>> a = PauliSum.from_terms(1, {"X": 1.0})
    >>> b = PauliSum.from_terms(1, {"Z": 1.0})
    >>> commutator(a, b).labelled()
    {'Y': -2j}
    """

    __slots__ = ("n_sites", "_terms")

    def __init__(self, n_sites, terms=None, scale=None, rtol=None):
        if n_sites < 1:
            raise ShapeError("n_sites must be positive")
        self.n_sites = n_sites
        terms = {} if terms is None else terms
        for s in terms:
            if s.n_sites != n_sites:
                raise ShapeError(f"term {s} has {s.n_sites} sites, expected {n_sites}")
        self._terms = _prune(terms, scale, config.PRUNE_RTOL if rtol is None else rtol)

    @classmethod
    def from_terms(cls, n_sites, terms):
        """Build from ``{letters or PauliString: coefficient}``."""
        out = {}
        for key, c in terms.items():
            s = PauliString.from_letters(key) if isinstance(key, str) else key
            if s.n_sites != n_sites:
                raise ShapeError(f"term {key!r} does not have {n_sites} sites")
            out[s] = out.get(s, 0) + complex(c)
        return cls(n_sites, out)

    @classmethod
    def from_string(cls, s, coeff=1.0):
        return cls(s.n_sites, {s: complex(coeff)})

    @classmethod
    def zero(cls, n_sites):
        return cls(n_sites, {})

    @classmethod
    def identity(cls, n_sites, coeff=1.0):
        return cls(n_sites, {PauliString.identity(n_sites): complex(coeff)})

    @property
    def terms(self):
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, s):
        if isinstance(s, str):
            s = PauliString.from_letters(s)
        return self._terms.get(s, 0j)

    def labelled(self):
        return {s.letters: c for s, c in sorted(self._terms.items())}

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def is_zero(self):
        return not self._terms

    def max_abs(self):
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def norm(self):
        """Normalized Hilbert-Schmidt norm ``sqrt(tr(a^dagger a) / 2^n)``."""
        return float(np.sqrt(sum(abs(c) ** 2 for c in self._terms.values())))

    def is_hermitian(self, atol=0.0):
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def adjoint(self):
        return PauliSum(self.n_sites, {s: c.conjugate() for s, c in self._terms.items()})

    def scaled(self, factor):
        factor = complex(factor)
        return PauliSum(self.n_sites, {s: factor * c for s, c in self._terms.items()},
                        scale=abs(factor) * self.max_abs())

    def __neg__(self):
        return self.scaled(-1)

    def __add__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        _check_sites(self.n_sites, other.n_sites)
        out = dict(self._terms)
        for s, c in other._terms.items():
            out[s] = out.get(s, 0j) + c
        return PauliSum(self.n_sites, out, scale=max(self.max_abs(), other.max_abs()))

    def __sub__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return product(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return self.scaled(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scaled(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_sites == other.n_sites and self._terms == other._terms

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{s.letters}: {c:g}" for s, c in sorted(self._terms.items()))
        return f"PauliSum({self.n_sites}, {{{body}}})"

    def restrict_terms(self, predicate):
        return PauliSum(self.n_sites, {s: c for s, c in self._terms.items() if predicate(s)})

    def support(self):
        return support(self)

    def to_dense(self):
        return to_dense(self)


def _prune(terms, scale, rtol):
    if not terms:
        return {}
    if scale is None:
        scale = max(abs(c) for c in terms.values())
    cut = rtol * scale
    return {s: complex(c) for s, c in terms.items() if abs(c) > cut}


def product(a, b):
    _check_sites(a.n_sites, b.n_sites)
    out = {}
    for sa, ca in a._terms.items():
        for sb, cb in b._terms.items():
            phase, s = mul(sa, sb)
            out[s] = out.get(s, 0j) + phase * ca * cb
    return PauliSum(a.n_sites, out, scale=a.max_abs() * b.max_abs())


def commutator(a, b):
    """Exact ``[a, b]``. Only anticommuting string pairs contribute."""
    _check_sites(a.n_sites, b.n_sites)
    out = {}
    for sa, ca in a._terms.items():
        ax, az = sa.x, sa.z
        for sb, cb in b._terms.items():
            if ((ax & sb.z).bit_count() + (az & sb.x).bit_count()) & 1 == 0:
                continue
            phase, s = mul(sa, sb)
            out[s] = out.get(s, 0j) + 2 * phase * ca * cb
    return PauliSum(a.n_sites, out, scale=2 * a.max_abs() * b.max_abs())


def support(a):
    mask = 0
    for s in a._terms:
        mask |= s.x | s.z
    return frozenset(i for i in range(1, a.n_sites + 1) if mask >> (a.n_sites - i) & 1)


def hs_inner(a, b):
    """Normalized Hilbert-Schmidt inner product ``tr(a^dagger b) / 2^n``."""
    _check_sites(a.n_sites, b.n_sites)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for s, c in small._terms.items():
        other = large._terms.get(s)
        if other is not None:
            total += c.conjugate() * other if small is a else other.conjugate() * c
    return total


def string_matrix(s):
    """Dense matrix of a single Pauli string."""
    dim = 1 << s.n_sites
    _check_capacity(dim)
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ s.x
    signs = 1 - 2 * (np.bitwise_count(cols & s.z).astype(np.int64) & 1)
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[rows, cols] = _PHASES[(s.x & s.z).bit_count() % 4] * signs
    return m


def to_dense(a):
    dim = 1 << a.n_sites
    _check_capacity(dim)
    m = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim, dtype=np.int64)
    for s, c in a._terms.items():
        signs = 1 - 2 * (np.bitwise_count(cols & s.z).astype(np.int64) & 1)
        m[cols ^ s.x, cols] += c * _PHASES[(s.x & s.z).bit_count() % 4] * signs
    return m


def _check_capacity(dim):
    limit = config.max_dim()
    if dim > limit:
        raise CapacityError(f"dense dimension {dim} exceeds cap {limit}")
