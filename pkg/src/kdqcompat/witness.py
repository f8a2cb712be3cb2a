"""Random search for KDQ non-classicality and the Darwinism screening test."""
import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .densemat import Propagator
from .errors import ValidationError
from .kdq import MeasurementSpec, Scenario, kdq_distribution, kdq_tpm_residual, scenario_to_dict
from .pauli import to_dense

RANK_POLICIES = ("rank1", "binary", "mixed")


def haar_unitary(dim, rng):
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_projectors(block_dim, ranks, rng=None):
    """Complete orthogonal projector family with the given ranks in a Haar-random basis."""
    ranks = [int(r) for r in ranks]
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be positive")
    if sum(ranks) != block_dim:
        raise ValueError(f"ranks {ranks} do not sum to block dimension {block_dim}")
    rng = np.random.default_rng() if rng is None else rng
    u = haar_unitary(block_dim, rng)
    out = []
    start = 0
    for r in ranks:
        v = u[:, start:start + r]
        out.append(v @ v.conj().T)
        start += r
    return out


def random_ranks(block_dim, policy, rng):
    if policy == "rank1":
        return [1] * block_dim
    if policy == "binary":
        k = int(rng.integers(1, block_dim)) if block_dim > 1 else 1
        return [k, block_dim - k] if block_dim > 1 else [1]
    if policy == "mixed":
        if block_dim == 1:
            return [1]
        # random composition of block_dim into at least two parts
        while True:
            cuts = sorted(c for c in range(1, block_dim) if rng.random() < 0.5)
            if cuts:
                break
        edges = [0] + cuts + [block_dim]
        return [b - a for a, b in zip(edges, edges[1:])]
    raise ValueError(f"unknown rank policy {policy!r}")


def random_pure_state(dim, rng):
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_product_state(n_sites, rng):
    psi = np.ones(1, dtype=np.complex128)
    for _ in range(n_sites):
        psi = np.kron(psi, random_pure_state(2, rng))
    return psi


def random_state(n_sites, rng, kind=None):
    """Density matrix of a random pure state: product (``"product"``) or Haar (``"haar"``)."""
    if kind is None:
        kind = "product" if rng.random() < 0.5 else "haar"
    if kind == "product":
        psi = random_product_state(n_sites, rng)
    elif kind == "haar":
        psi = random_pure_state(2**n_sites, rng)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class SearchBudget:
    samples: int
    time_range: tuple = (0.0, 10.0)
    rank_policy: str = "rank1"
    seed: int = 0
    max_observers: int = 2

    def __post_init__(self):
        failures = []
        if int(self.samples) < 1:
            failures.append("samples must be at least 1")
        lo, hi = self.time_range
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            failures.append(f"time range {self.time_range} is empty")
        if self.rank_policy not in RANK_POLICIES:
            failures.append(f"unknown rank policy {self.rank_policy!r}")
        if self.max_observers < 2:
            failures.append("max_observers must be at least 2")
        if failures:
            raise ValidationError(failures)
        object.__setattr__(self, "time_range", (float(lo), float(hi)))


def random_scenario(model, rng, time_range=(0.0, 10.0), rank_policy="rank1", n_observers=2,
                    state_kind=None):
    """Draw a scenario: random blocks, Haar projectors, uniform times, random pure state."""
    part = model.partition
    names = part.names
    if len(names) < 2:
        raise ValidationError("need at least two accessible blocks")
    n_obs = min(n_observers, len(names))
    chosen = [names[i] for i in rng.choice(len(names), size=n_obs, replace=False)]
    measurements = []
    for name in chosen:
        dim = 2 ** len(part.blocks[name])
        ranks = random_ranks(dim, rank_policy, rng)
        projectors = random_projectors(dim, ranks, rng)
        t = rng.uniform(*time_range)
        measurements.append(MeasurementSpec(name, projectors, t))
    rho = random_state(part.n_sites, rng, state_kind)
    return Scenario(model, rho, measurements)


def violation(meas):
    """Largest departure from classical statistics among the measures."""
    return max(meas["l1_negativity"], meas["max_imag"], -meas["min_real"], 0.0)


@dataclass
class WitnessRecord:
    scenario: Scenario
    measures: dict
    best: float
    sample: int
    samples_tested: int
    residual: float = 0.0

    def to_dict(self):
        return {
            "best": self.best,
            "measures": self.measures,
            "kdq_tpm_residual": self.residual,
            "sample": self.sample,
            "samples_tested": self.samples_tested,
            "scenario": scenario_to_dict(self.scenario),
        }


def _evaluate(model, budget, propagator, seed_seq, n_obs):
    rng = np.random.default_rng(seed_seq)
    sc = random_scenario(model, rng, budget.time_range, budget.rank_policy, n_obs)
    dist = kdq_distribution(sc, propagator)
    return sc, dist.measures, violation(dist.measures), kdq_tpm_residual(dist)


def search(model, budget, threads=1):
    """Sample scenarios and keep the most non-classical one.

    Each sample draws from its own stream spawned from ``budget.seed``, so the
    result does not depend on ``threads``. Ties go to the lowest sample index.
    """
    if not isinstance(budget, SearchBudget):
        raise ValidationError("budget must be a SearchBudget")
    if len(model.partition.names) < 2:
        raise ValidationError("search needs at least two accessible blocks")
    propagator = Propagator(to_dense(model.hamiltonian))
    streams = np.random.SeedSequence(budget.seed).spawn(budget.samples)
    max_obs = min(budget.max_observers, len(model.partition.names))
    # observer count cycles deterministically through 2..max_obs
    counts = itertools.cycle(range(2, max_obs + 1))
    jobs = [(s, next(counts)) for s in streams]

    def run(job):
        return _evaluate(model, budget, propagator, *job)

    if threads == 1:
        results = map(run, jobs)
    else:
        with ThreadPoolExecutor(max_workers=None if threads == 0 else threads) as pool:
            results = list(pool.map(run, jobs))
    best = None
    for k, (sc, meas, v, res) in enumerate(results):
        if best is None or v > best.best:
            best = WitnessRecord(sc, meas, v, k, budget.samples, res)
    return best


class Verdict(str, enum.Enum):
    CANNOT_SUPPORT_QD = "CANNOT_SUPPORT_QD"
    NO_VIOLATION_FOUND = "NO_VIOLATION_FOUND"


@dataclass
class ScreenResult:
    verdict: Verdict
    threshold: float
    samples_tested: int
    record: WitnessRecord

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "threshold": self.threshold,
            "samples_tested": self.samples_tested,
            "record": self.record.to_dict(),
        }


def screen_darwinism(model, budget, threshold, threads=1):
    """One-sided screening: refutes Darwinism support, never certifies it."""
    if not threshold > 0:
        raise ValidationError("threshold must be positive")
    record = search(model, budget, threads)
    verdict = Verdict.CANNOT_SUPPORT_QD if record.best > threshold else Verdict.NO_VIOLATION_FOUND
    return ScreenResult(verdict, float(threshold), budget.samples, record)
