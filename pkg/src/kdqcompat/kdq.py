"""Kirkwood-Dirac quasiprobabilities and sequential (TPM) probabilities.

For time-ordered projective measurements ``t_1 <= ... <= t_n`` on disjoint
blocks,

    q[i1, ..., in] = tr[P_n(t_n) ... P_1(t_1) rho]
    p[i1, ..., in] = tr[P_n(t_n) ... P_1(t_1) rho P_1(t_1) ... P_n(t_n)]

with ``P_k(t) = U(t)^dagger P_k U(t)`` and ``U(t) = exp(-i t H)``.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import config
from .densemat import Propagator, as_cmatrix, embed, is_hermitian
from .errors import ValidationError
from .model import Model
from .pauli import to_dense

_TOL = config.DENSE_ATOL


@dataclass(frozen=True)
class MeasurementSpec:
    block: str
    projectors: tuple
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "projectors", tuple(as_cmatrix(p) for p in self.projectors))
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_outcomes(self):
        return len(self.projectors)

    def problems(self, dim=None):
        """List every violated projector-family invariant (empty when valid)."""
        out = []
        label = f"measurement on {self.block!r}"
        if not self.projectors:
            return [f"{label}: no projectors"]
        d = self.projectors[0].shape[0]
        if dim is not None and d != dim:
            out.append(f"{label}: projector dimension {d} does not match block dimension {dim}")
        for i, p in enumerate(self.projectors):
            if p.shape != (d, d):
                out.append(f"{label}: projector {i} has shape {p.shape}, expected {(d, d)}")
                return out
            if not is_hermitian(p, atol=_TOL):
                out.append(f"{label}: projector {i} is not Hermitian")
            if np.linalg.norm(p @ p - p) >= _TOL:
                out.append(f"{label}: projector {i} is not idempotent")
        for i in range(len(self.projectors)):
            for j in range(i + 1, len(self.projectors)):
                if np.linalg.norm(self.projectors[i] @ self.projectors[j]) >= _TOL:
                    out.append(f"{label}: projectors {i} and {j} are not orthogonal")
        if np.linalg.norm(sum(self.projectors) - np.eye(d)) >= _TOL:
            out.append(f"{label}: projectors do not sum to the identity")
        return out


def state_problems(rho, dim):
    out = []
    if rho.shape != (dim, dim):
        return [f"initial state has shape {rho.shape}, expected {(dim, dim)}"]
    if abs(np.trace(rho) - 1) >= _TOL:
        out.append(f"initial state trace {np.trace(rho).real:.3g} != 1")
    if not is_hermitian(rho, atol=_TOL):
        out.append("initial state is not Hermitian")
    else:
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -_TOL:
            out.append("initial state is not positive semidefinite")
    return out


@dataclass(frozen=True)
class Scenario:
    model: Model
    initial_state: np.ndarray
    measurements: tuple

    def __post_init__(self):
        object.__setattr__(self, "initial_state", as_cmatrix(self.initial_state))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        failures = self.problems()
        if failures:
            raise ValidationError(failures)

    @property
    def n_sites(self):
        return self.model.partition.n_sites

    def problems(self):
        part = self.model.partition
        out = []
        if len(self.measurements) < 2:
            out.append("at least two measurements are required")
        blocks = [m.block for m in self.measurements]
        if len(set(blocks)) != len(blocks):
            out.append(f"measurement blocks must be distinct, got {blocks}")
        for m in self.measurements:
            if m.block not in part.blocks:
                out.append(f"unknown block {m.block!r}")
                continue
            out.extend(m.problems(2 ** len(part.blocks[m.block])))
        out.extend(state_problems(self.initial_state, 2**self.n_sites))
        return out

    def ordered(self):
        """Measurements sorted by time; ties keep declaration order."""
        return sorted(self.measurements, key=lambda m: m.time)

    def with_state(self, rho):
        return Scenario(self.model, rho, self.measurements)


@dataclass
class QuasiDistribution:
    """Joint KDQ ``q`` and TPM ``tpm`` over outcome tuples.

    Axis ``k`` of both arrays is the ``k``-th measurement in time order;
    ``blocks`` records which block each axis belongs to.
    """

    outcome_shape: tuple
    q: np.ndarray
    tpm: np.ndarray
    blocks: tuple = ()
    measures: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.measures:
            self.measures = measures(self.q)

    def to_dict(self):
        return {
            "blocks": list(self.blocks),
            "outcome_shape": list(self.outcome_shape),
            "q": _complex_nested(self.q),
            "tpm": self.tpm.tolist(),
            "measures": dict(self.measures),
            "kdq_tpm_residual": kdq_tpm_residual(self),
        }

    def rows(self):
        """Flat ``(outcome tuple, q, tpm)`` rows for tabular output."""
        for idx in np.ndindex(*self.outcome_shape):
            yield idx, complex(self.q[idx]), float(self.tpm[idx])


def _complex_nested(a):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def measures(q):
    q = np.asarray(q)
    return {
        "l1_negativity": float(np.abs(q).sum() - 1.0),
        "max_imag": float(np.abs(q.imag).max()),
        "min_real": float(q.real.min()),
    }


def evolved_projectors(scenario, propagator=None):
    """Heisenberg-picture projectors of each measurement, in time order."""
    part = scenario.model.partition
    n = part.n_sites
    if propagator is None:
        propagator = Propagator(to_dense(scenario.model.hamiltonian))
    out = []
    for m in scenario.ordered():
        sites = part.blocks[m.block]
        out.append([propagator.heisenberg(embed(p, sites, n), m.time) for p in m.projectors])
    return out


def _kdq_and_tpm(families, rho):
    shape = tuple(len(f) for f in families)
    q = np.empty(shape, dtype=np.complex128)
    tpm = np.empty(shape, dtype=np.float64)

    def walk(level, idx, left, sandwich):
        fam = families[level]
        last = level == len(families) - 1
        for i, p in enumerate(fam):
            left_i = p @ left
            if last:
                q[idx + (i,)] = np.trace(left_i)
                tpm[idx + (i,)] = np.trace(p @ sandwich).real
            else:
                walk(level + 1, idx + (i,), left_i, p @ sandwich @ p)

    walk(0, (), rho, rho)
    return q, tpm


def kdq_distribution(scenario, propagator=None):
    families = evolved_projectors(scenario, propagator)
    q, tpm = _kdq_and_tpm(families, scenario.initial_state)
    blocks = tuple(m.block for m in scenario.ordered())
    return QuasiDistribution(q.shape, q, tpm, blocks)


def marginal(dist, keep):
    """Sum out every axis not in ``keep`` (indices into the time order)."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must be a nonempty set of measurement indices")
    ndim = len(dist.outcome_shape)
    if any(k < 0 or k >= ndim for k in keep):
        raise IndexError(f"measurement index out of range 0..{ndim - 1}")
    drop = tuple(k for k in range(ndim) if k not in keep)
    q = dist.q.sum(axis=drop) if drop else dist.q.copy()
    tpm = dist.tpm.sum(axis=drop) if drop else dist.tpm.copy()
    return QuasiDistribution(q.shape, q, tpm, tuple(dist.blocks[k] for k in keep)
                             if dist.blocks else ())


def kdq_tpm_residual(dist):
    return float(np.abs(dist.q - dist.tpm).sum())


@dataclass(frozen=True)
class Reduction:
    """Outcome ``i`` of the earliest measurement folded into the state.

    ``state`` is the unnormalized ``P_i rho P_i``; ``weight`` its trace and
    ``scenario`` the remaining measurements on the normalized state (``None``
    when ``weight`` vanishes).
    """

    outcome: int
    state: np.ndarray
    weight: float
    scenario: Scenario = None

    def kdq(self, propagator=None):
        if self.scenario is None:
            return None
        return self.weight * kdq_distribution(self.scenario, propagator).q


def modified_state_reduction(scenario, propagator=None):
    ordered = scenario.ordered()
    if len(ordered) < 3:
        raise ValidationError("modified-state reduction needs at least three measurements")
    part = scenario.model.partition
    n = part.n_sites
    if propagator is None:
        propagator = Propagator(to_dense(scenario.model.hamiltonian))
    first, rest = ordered[0], ordered[1:]
    out = []
    for i, p in enumerate(first.projectors):
        pt = propagator.heisenberg(embed(p, part.blocks[first.block], n), first.time)
        state = pt @ scenario.initial_state @ pt
        weight = float(np.trace(state).real)
        reduced = None
        if weight > _TOL:
            reduced = Scenario(scenario.model, state / weight, rest)
        out.append(Reduction(i, state, weight, reduced))
    return out


def reduced_kdq(scenario, propagator=None):
    """Stack ``(q~_i)_{jk...}`` over first outcomes ``i``, matching ``kdq_distribution(...).q``."""
    if propagator is None:
        propagator = Propagator(to_dense(scenario.model.hamiltonian))
    shape = tuple(m.n_outcomes for m in scenario.ordered())
    out = np.zeros(shape, dtype=np.complex128)
    for red in modified_state_reduction(scenario, propagator):
        if red.scenario is not None:
            out[red.outcome] = red.kdq(propagator)
    return out


# -- scenario file format ---------------------------------------------------

def _complex_array(data):
    a = np.asarray(data, dtype=np.float64)
    if a.shape[-1] != 2:
        raise ValidationError("complex numbers must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _projectors_from_json(spec, dim):
    if spec == "computational":
        return [np.diag(np.eye(dim)[k]).astype(np.complex128) for k in range(dim)]
    if isinstance(spec, dict) and "basis" in spec:
        u = _complex_array(spec["basis"])
        if u.shape != (dim, dim):
            raise ValidationError(f"basis must be {dim}x{dim}")
        if np.linalg.norm(u.conj().T @ u - np.eye(dim)) >= _TOL:
            raise ValidationError("basis matrix is not unitary")
        return [np.outer(u[:, k], u[:, k].conj()) for k in range(dim)]
    if isinstance(spec, list):
        return [_complex_array(p) for p in spec]
    raise ValidationError(f"unrecognized projector specification {spec!r}")


def state_from_json(spec, dim):
    if "pure" in spec:
        psi = _complex_array(spec["pure"])
        if psi.shape != (dim,):
            raise ValidationError(f"pure state must have {dim} amplitudes")
        norm = np.linalg.norm(psi)
        if abs(norm - 1) >= 1e-8:
            raise ValidationError(f"pure state norm {norm:.6g} != 1")
        return np.outer(psi, psi.conj())
    if "density" in spec:
        return _complex_array(spec["density"])
    raise ValidationError("initial_state needs 'pure' or 'density'")


def scenario_from_dict(data, model=None):
    """Build a :class:`Scenario` from its JSON form.

    ``model`` overrides ``data["model"]`` (useful when the file references the
    model by path and the caller has already loaded it).
    """
    if model is None:
        if not isinstance(data.get("model"), dict):
            raise ValidationError("scenario needs an inline 'model' object")
        model = Model.from_dict(data["model"])
    part = model.partition
    rho = state_from_json(data.get("initial_state", {}), 2**part.n_sites)
    measurements = []
    for m in data.get("measurements", []):
        block = m.get("block")
        if block not in part.blocks:
            raise ValidationError(f"unknown block {block!r}")
        dim = 2 ** len(part.blocks[block])
        measurements.append(MeasurementSpec(block, _projectors_from_json(
            m.get("projectors", "computational"), dim), m.get("time", 0.0)))
    return Scenario(model, rho, measurements)


def scenario_to_dict(scenario):
    return {
        "model": scenario.model.to_dict(),
        "initial_state": {"density": _complex_nested(scenario.initial_state)},
        "measurements": [
            {"block": m.block, "time": m.time,
             "projectors": [_complex_nested(p) for p in m.projectors]}
            for m in scenario.measurements
        ],
    }


def load_scenario(text, model=None):
    return scenario_from_dict(json.loads(text), model)
