"""Decide classical compatibility from the nested-commutator constraints.

Two observers X and Y are compatible when, for every interaction index a, b
and every finite sequence ``mu``,

    [S^X_a, C_mu(k) ... C_mu(1) S^Y_b] = 0

where ``C_0 = [H_C, .]`` and ``C_(Z, i) = [S^Z_i, .]`` for any observer Z.
Two independent routes decide this: :func:`check_enumerated` walks sequences
up to a depth bound, and :func:`check_closure` computes the finite invariant
subspace spanned by all sequences and tests a basis of it.
"""
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import config
from .densemat import Propagator, as_cmatrix
from .errors import PreconditionError, ResourceError, ShapeError
from .model import interaction_decomposition
from .pauli import PauliSum, commutator, to_dense

LOG = logging.getLogger(__name__)

#: Tag of the ``[H_C, .]`` superoperator in a sequence.
HC = 0

DEFAULT_MAX_NODES = 2_000_000


def format_sequence(mu):
    return ["0" if tag == HC else f"{tag[0]}{tag[1]}" for tag in mu]


@dataclass(frozen=True)
class Witness:
    """A violated constraint ``[S^X_a, C_mu S^Y_b] != 0``; indices are 1-based."""

    observer_x: str
    a: int
    mu: tuple
    observer_y: str
    b: int
    violation_norm: float

    def to_dict(self):
        return {
            "observer_x": self.observer_x,
            "a": self.a,
            "mu": [tag if tag == HC else list(tag) for tag in self.mu],
            "mu_label": format_sequence(self.mu),
            "observer_y": self.observer_y,
            "b": self.b,
            "violation_norm": self.violation_norm,
        }


@dataclass
class CompatReport:
    compatible: bool
    method: str
    witness: Witness = None
    closure_dimension: int = 0
    depth: int = None
    nodes: int = 0
    offending_terms: list = field(default_factory=list)

    def to_dict(self):
        out = {
            "compatible": self.compatible,
            "method": self.method,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "closure_dimension": self.closure_dimension,
            "nodes": self.nodes,
        }
        if self.depth is not None:
            out["depth"] = self.depth
        if self.offending_terms:
            out["offending_terms"] = [
                {"term": s.label(), "coefficient": c.real, "subsystems": sorted(names)}
                for s, c, names in self.offending_terms
            ]
        return out


class Generators:
    """The operators on C entering the constraints, extracted from a report.

    ``couplings[X]`` lists ``S^X_1, S^X_2, ...``; ``tags`` lists every
    superoperator tag in a fixed order: ``0`` first, then ``(X, i)``.
    """

    def __init__(self, report):
        if not report.hform_ok:
            raise PreconditionError("Hamiltonian violates the allowed structure")
        self.n_sites = report.partition.n_sites
        self.h_c = report.h_remainder
        self.observers = list(report.partition.names)
        self.couplings = {
            name: interaction_decomposition(report, name).couplings for name in self.observers
        }
        self.tags = [HC] + [(x, i + 1) for x in self.observers for i in range(len(self.couplings[x]))]

    def operator(self, tag):
        if tag == HC:
            return self.h_c
        try:
            name, i = tag
            return self.couplings[name][i - 1]
        except (KeyError, IndexError, TypeError, ValueError):
            raise KeyError(f"unknown superoperator tag {tag!r}") from None

    def as_map(self):
        return {tag: self.operator(tag) for tag in self.tags}

    def active_tags(self):
        return [t for t in self.tags if not self.operator(t).is_zero()]


def nested_commutator(mu, start, generators):
    """Apply ``C_mu(n) ... C_mu(1)`` to ``start``; ``mu[0]`` acts first."""
    out = start
    for tag in mu:
        try:
            g = generators[tag]
        except KeyError:
            raise KeyError(f"unknown superoperator tag {tag!r}") from None
        if g.n_sites != out.n_sites:
            raise ShapeError("generator and operand site counts differ")
        out = commutator(g, out)
        if out.is_zero():
            break
    return out


def _violates(s_x, k, rtol=config.VIOLATION_RTOL):
    c = commutator(s_x, k)
    if c.is_zero():
        return False, 0.0
    norm = c.norm()
    return norm > rtol * s_x.norm() * k.norm(), norm


def _structure_report(report, method):
    return CompatReport(False, method, offending_terms=list(report.offending_terms))


def constraint_norm(gens, witness):
    """Recompute ``||[S^X_a, C_mu S^Y_b]||`` for a witness."""
    start = gens.couplings[witness.observer_y][witness.b - 1]
    k = nested_commutator(witness.mu, start, gens.as_map())
    return commutator(gens.couplings[witness.observer_x][witness.a - 1], k).norm()


def check_enumerated(report, depth, max_nodes=DEFAULT_MAX_NODES):
    """Walk all constraint sequences with ``len(mu) <= depth``.

    Sequences are expanded in breadth-first order. Only the empty sequence and
    sequences whose last superoperator is ``C_0`` are tested: a sequence ending
    in ``C_(Z, j)`` is implied by shorter ones through the Jacobi identity.
    The first violation found is therefore of minimal length.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if not report.hform_ok:
        return _structure_report(report, "enumeration")
    gens = Generators(report)
    tags = gens.active_tags()
    gmap = gens.as_map()
    nodes = 0

    # frontier entries: (observer_y, b, mu, operator)
    frontier = []
    for y in gens.observers:
        for b, s in enumerate(gens.couplings[y], start=1):
            frontier.append((y, b, (), s))

    for level in range(depth + 1):
        for y, b, mu, k in frontier:
            if mu and mu[-1] != HC:
                continue
            for x in gens.observers:
                if x == y:
                    continue
                for a, s_x in enumerate(gens.couplings[x], start=1):
                    bad, norm = _violates(s_x, k)
                    if bad:
                        return CompatReport(False, "enumeration",
                                            Witness(x, a, mu, y, b, norm),
                                            depth=depth, nodes=nodes)
        if level == depth:
            break
        nxt = []
        for y, b, mu, k in frontier:
            for tag in tags:
                k2 = commutator(gmap[tag], k)
                nodes += 1
                if nodes > max_nodes:
                    partial = CompatReport(True, "enumeration", depth=level, nodes=nodes)
                    raise ResourceError(
                        f"enumeration exceeded {max_nodes} nodes at depth {level + 1}", partial)
                if not k2.is_zero():
                    nxt.append((y, b, mu + (tag,), k2))
        frontier = nxt
        if not frontier:
            break
    return CompatReport(True, "enumeration", depth=depth, nodes=nodes)


class _Basis:
    """Orthonormal basis (under the normalized HS inner product) in coefficient space."""

    def __init__(self, rtol=config.INDEPENDENCE_RTOL):
        self.rtol = rtol
        self.vectors = []

    def add(self, op):
        """Orthogonalize ``op`` against the basis; keep it if independent."""
        norm0 = op.norm()
        if norm0 == 0.0:
            return False
        residual = {s: c / norm0 for s, c in op.items()}
        # two Gram-Schmidt passes for stability
        for _ in range(2):
            for vec in self.vectors:
                overlap = sum(vc.conjugate() * residual.get(s, 0j) for s, vc in vec.items())
                if overlap != 0:
                    for s, vc in vec.items():
                        residual[s] = residual.get(s, 0j) - overlap * vc
        rnorm = float(np.sqrt(sum(abs(c) ** 2 for c in residual.values())))
        if rnorm <= self.rtol:
            return False
        self.vectors.append({s: c / rnorm for s, c in residual.items() if abs(c) > 1e-15 * rnorm})
        return True

    def __len__(self):
        return len(self.vectors)


def observer_closure(gens, observer, max_dim=None):
    """Closure of ``{S^Y_b}`` under every ``C_tag``.

    Returns ``(elements, sequences)``: ``elements[j]`` is a positive multiple
    of the nested commutator ``C_mu S^Y_b`` with ``(b, mu) = sequences[j]``,
    and the elements span the smallest invariant subspace containing the seeds.
    """
    n_c = len(_remainder_sites(gens))
    cap = 4**n_c if max_dim is None else max_dim
    basis = _Basis()
    elements = []
    sequences = []
    queue = deque()
    for b, s in enumerate(gens.couplings[observer], start=1):
        if basis.add(s):
            el = s.scaled(1.0 / s.norm())
            elements.append(el)
            sequences.append((b, ()))
            queue.append(len(elements) - 1)
    tags = gens.active_tags()
    gmap = gens.as_map()
    while queue:
        j = queue.popleft()
        b, mu = sequences[j]
        for tag in tags:
            k = commutator(gmap[tag], elements[j])
            if k.is_zero() or not basis.add(k):
                continue
            if len(elements) >= cap:
                raise ResourceError(f"closure dimension exceeds cap {cap}",
                                    CompatReport(True, "closure", closure_dimension=len(elements)))
            elements.append(k.scaled(1.0 / k.norm()))
            sequences.append((b, mu + (tag,)))
            queue.append(len(elements) - 1)
    return elements, sequences


def _remainder_sites(gens):
    sites = set()
    for tag in gens.tags:
        sites |= gens.operator(tag).support()
    return sites


def check_closure(report, max_dim=None):
    """Complete decision via per-observer Lie-closure fixed points."""
    if not report.hform_ok:
        return _structure_report(report, "closure")
    gens = Generators(report)
    total_dim = 0
    witness = None
    for y in gens.observers:
        elements, sequences = observer_closure(gens, y, max_dim)
        total_dim += len(elements)
        if witness is not None:
            continue
        for el, (b, mu) in zip(elements, sequences):
            for x in gens.observers:
                if x == y:
                    continue
                for a, s_x in enumerate(gens.couplings[x], start=1):
                    bad, _ = _violates(s_x, el)
                    if bad and witness is None:
                        candidate = Witness(x, a, mu, y, b, 0.0)
                        norm = constraint_norm(gens, candidate)
                        witness = Witness(x, a, mu, y, b, norm)
                if witness is not None:
                    break
            if witness is not None:
                break
    return CompatReport(witness is None, "closure", witness, closure_dimension=total_dim)


def check(report, method="closure", depth=6):
    if method == "closure":
        return check_closure(report)
    if method in ("enumerate", "enumeration"):
        return check_enumerated(report, depth)
    raise ValueError(f"unknown method {method!r}")


def bch_partial(h, proj, tau, order):
    """Truncated series ``sum_{n<=N} (i tau)^n / n! ad_H^n(proj)`` for ``U^dagger proj U``."""
    if order < 0 or order > 20:
        raise ValueError("order must lie in 0..20")
    hd = to_dense(h) if isinstance(h, PauliSum) else as_cmatrix(h)
    proj = as_cmatrix(proj)
    if proj.shape != hd.shape:
        raise ShapeError(f"projector shape {proj.shape} does not match Hamiltonian {hd.shape}")
    total = proj.copy()
    term = proj.copy()
    for n in range(1, order + 1):
        term = (1j * tau / n) * (hd @ term - term @ hd)
        total = total + term
    return total


def heisenberg_reference(h, proj, tau):
    hd = to_dense(h) if isinstance(h, PauliSum) else as_cmatrix(h)
    return Propagator(hd).heisenberg(proj, tau)
