"""Acceptance criteria AC1..AC8.

Each test appends one ``[PASS]``/``[FAIL]`` line to the session log, which is
printed in the terminal summary, and also prints it (visible with ``-s``).
"""
import json
import time
from contextlib import contextmanager

import numpy as np
from scipy.linalg import expm

from conftest import LETTERS, dense_sum, random_sum
from kdqcompat.cli import main
from kdqcompat.compat import (Generators, bch_partial, check_closure, check_enumerated,
                              heisenberg_reference)
from kdqcompat.kdq import kdq_distribution, marginal, reduced_kdq
from kdqcompat.model import classify
from kdqcompat.pauli import PauliSum, commutator
from kdqcompat.witness import SearchBudget, random_scenario, search
from zoo import COMPATIBLE, INCOMPATIBLE, THREE_OBSERVERS, random_model


@contextmanager
def criterion(log, tag, title, limit):
    """Time the body and log one pass/fail line; ``limit`` is the runtime bound in seconds."""
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"[FAIL] {tag} {title}: {type(exc).__name__}: {str(exc).splitlines()[0][:120]}"
        log.append(line)
        print(line)
        raise
    elapsed = time.perf_counter() - start
    info = ", ".join(f"{k}={v}" for k, v in detail.items())
    ok = elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] {tag} {title} ({elapsed:.2f} s < {limit} s; {info})"
    log.append(line)
    print(line)
    assert ok, line


# -- AC1 ------------------------------------------------------------------------

def _random_structure_case(rng):
    n = int(rng.integers(4, 7))
    sites = list(rng.permutation(np.arange(1, n + 1)))
    n_blocks = int(rng.integers(2, 4))
    blocks = {}
    for k in range(n_blocks):
        blocks[f"B{k}"] = [int(sites.pop())]
    # leftover sites go to blocks or the remainder
    for s in sites:
        if rng.random() < 0.3:
            blocks[f"B{int(rng.integers(n_blocks))}"].append(int(s))
    terms = []
    for _ in range(int(rng.integers(1, 7))):
        weight = int(rng.integers(1, 4))
        where = rng.choice(np.arange(1, n + 1), size=weight, replace=False)
        letters = ["I"] * n
        for s in where:
            letters[s - 1] = str(rng.choice(list("XYZ")))
        terms.append(("".join(letters), round(float(rng.normal()), 3) or 0.5))
    text = ""
    for letters, c in terms:
        body = " ".join(f"{ch}{i + 1}" for i, ch in enumerate(letters) if ch != "I")
        text += f" {'-' if c < 0 else '+'} {abs(c)}*{body}"
    return n, blocks, terms, text


def _oracle_hform(n, blocks, terms):
    owner = {s: name for name, ss in blocks.items() for s in ss}
    acc = {}
    for letters, c in terms:
        acc[letters] = acc.get(letters, 0) + c
    for letters, c in acc.items():
        if c == 0:
            continue
        touched = {owner[i + 1] for i, ch in enumerate(letters) if ch != "I" and i + 1 in owner}
        if len(touched) >= 2:
            return False
    return True


def test_ac1_structure_theorem(acceptance_log, tmp_path, capsys):
    rng = np.random.default_rng(101)
    cases = [_random_structure_case(rng) for _ in range(120)]
    with criterion(acceptance_log, "AC1", "structure classification matches support oracle", 5) as d:
        flagged = 0
        for k, (n, blocks, terms, text) in enumerate(cases):
            path = tmp_path / f"m{k}.json"
            path.write_text(json.dumps({"hamiltonian": text,
                                        "partition": {"n_sites": n, "blocks": blocks}}))
            code = main(["classify", str(path)])
            report = json.loads(capsys.readouterr().out)
            expected = _oracle_hform(n, blocks, terms)
            assert report["hform_ok"] is expected, text
            assert code == (0 if expected else 2)
            flagged += not expected
        d["models"] = len(cases)
        d["flagged"] = flagged
        assert 0 < flagged < len(cases)


# -- AC2 ------------------------------------------------------------------------

def _dense_witness_norm(model, witness):
    """Re-evaluate a witness with Kronecker-chain matrices only."""
    gens = Generators(classify(model.hamiltonian, model.partition))
    dense = {tag: dense_sum(gens.operator(tag)) for tag in gens.tags}
    k = dense[(witness.observer_y, witness.b)]
    for tag in witness.mu:
        g = dense[tag]
        k = g @ k - k @ g
    s = dense[(witness.observer_x, witness.a)]
    c = s @ k - k @ s
    return np.linalg.norm(c) / np.sqrt(c.shape[0])


def test_ac2_hierarchy_equivalence(acceptance_log):
    rng = np.random.default_rng(202)
    models = [random_model(rng) for _ in range(60)]
    with criterion(acceptance_log, "AC2", "closure agrees with enumeration to depth 6", 60) as d:
        incompatible = 0
        min_norm = np.inf
        for m in models:
            report = classify(m.hamiltonian, m.partition)
            assert len(report.partition.remainder) <= 3
            closure = check_closure(report)
            enum = check_enumerated(report, 6)
            assert closure.compatible == enum.compatible, m.hamiltonian
            for r in (closure, enum):
                if r.witness is not None:
                    norm = _dense_witness_norm(m, r.witness)
                    assert norm > 1e-10
                    min_norm = min(min_norm, norm)
            incompatible += not closure.compatible
        d["models"] = len(models)
        d["incompatible"] = incompatible
        d["min_witness_norm"] = f"{min_norm:.3g}"
        assert 0 < incompatible < len(models)


# -- AC3 ------------------------------------------------------------------------

def test_ac3_compatible_models_are_classical(acceptance_log):
    with criterion(acceptance_log, "AC3", "compatible models give classical KDQ", 600) as d:
        worst = {"imag": 0.0, "neg": 0.0, "resid": 0.0}
        for k, m in enumerate(COMPATIBLE):
            assert m.partition.n_sites <= 4
            assert check_closure(classify(m.hamiltonian, m.partition)).compatible
            rng = np.random.default_rng(300 + k)
            for j in range(1000):
                kind = "product" if j % 2 else "haar"
                sc = random_scenario(m, rng, (0.0, 10.0), state_kind=kind)
                dist = kdq_distribution(sc)
                worst["imag"] = max(worst["imag"], float(np.abs(dist.q.imag).max()))
                worst["neg"] = max(worst["neg"], float(-dist.q.real.min()))
                worst["resid"] = max(worst["resid"], float(np.abs(dist.q - dist.tpm).sum()))
        d.update({key: f"{v:.2g}" for key, v in worst.items()})
        assert worst["imag"] < 1e-9
        assert worst["neg"] < 1e-9
        assert worst["resid"] < 1e-9


# -- AC4 ------------------------------------------------------------------------

def test_ac4_incompatible_models_are_witnessed(acceptance_log):
    with criterion(acceptance_log, "AC4", "search witnesses incompatible models", 600) as d:
        bests = []
        for k, m in enumerate(INCOMPATIBLE):
            assert not check_closure(classify(m.hamiltonian, m.partition)).compatible
            record = search(m, SearchBudget(1000, (0.0, 10.0), seed=k))
            bests.append(record.best)
        d["min_best"] = f"{min(bests):.3g}"
        assert min(bests) > 1e-3


# -- AC5 ------------------------------------------------------------------------

def _random_pauli_hamiltonian(rng, n, n_terms, target_norm):
    terms = {}
    for _ in range(n_terms):
        letters = "".join(rng.choice(list(LETTERS), size=n))
        terms[letters] = terms.get(letters, 0) + rng.normal()
    h = PauliSum.from_terms(n, terms)
    norm = np.linalg.norm(dense_sum(h), 2)
    return h.scaled(target_norm / norm)


def test_ac5_bch_convergence(acceptance_log):
    rng = np.random.default_rng(500)
    taus = np.array([0.2, 0.1, 0.05, 0.025])
    with criterion(acceptance_log, "AC5", "BCH N=8 error order is 9 +- 0.5", 30) as d:
        orders = []
        for _ in range(3):
            h = _random_pauli_hamiltonian(rng, 3, 8, 3.0)
            v = rng.normal(size=8) + 1j * rng.normal(size=8)
            v /= np.linalg.norm(v)
            proj = np.outer(v, v.conj())
            errs = [np.linalg.norm(bch_partial(h, proj, t, 8) - heisenberg_reference(h, proj, t))
                    for t in taus]
            slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
            orders.append(slope)
        d["orders"] = "[" + ", ".join(f"{o:.3f}" for o in orders) + "]"
        assert all(abs(o - 9) <= 0.5 for o in orders)


# -- AC6 ------------------------------------------------------------------------

def _born(model, spec, rho):
    """Born distribution of one measurement via a Schrodinger-picture expm oracle."""
    part = model.partition
    u = expm(-1j * spec.time * dense_sum(model.hamiltonian))
    rho_t = u @ rho @ u.conj().T
    sites = part.blocks[spec.block]
    ascending = sorted(sites)
    return np.array([
        np.trace(_interleave(_permute_block(p, sites, ascending), ascending, part.n_sites)
                 @ rho_t).real
        for p in spec.projectors])


def _permute_block(p, sites, sorted_sites):
    k = len(sites)
    t = p.reshape([2] * (2 * k))
    order = [list(sites).index(s) for s in sorted_sites]
    return t.transpose(order + [k + i for i in order]).reshape(2**k, 2**k)


def _interleave(p, block_sites, n):
    """Embed ``p`` (on ascending ``block_sites``) into ``n`` sites via an explicit basis sum."""
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    others = [s for s in range(1, n + 1) if s not in block_sites]
    for rest in range(2 ** len(others)):
        rbits = {s: (rest >> (len(others) - 1 - i)) & 1 for i, s in enumerate(others)}
        for a in range(p.shape[0]):
            for b in range(p.shape[1]):
                if p[a, b] == 0:
                    continue
                abits = {s: (a >> (len(block_sites) - 1 - i)) & 1 for i, s in enumerate(block_sites)}
                bbits = {s: (b >> (len(block_sites) - 1 - i)) & 1 for i, s in enumerate(block_sites)}
                row = sum(({**rbits, **abits}[s]) << (n - s) for s in range(1, n + 1))
                col = sum(({**rbits, **bbits}[s]) << (n - s) for s in range(1, n + 1))
                full[row, col] += p[a, b]
    return full


def test_ac6_normalization_and_marginals(acceptance_log):
    rng = np.random.default_rng(606)
    pool = COMPATIBLE + INCOMPATIBLE + [THREE_OBSERVERS]
    with criterion(acceptance_log, "AC6", "normalization and extreme marginals", 300) as d:
        worst_norm = worst_marg = 0.0
        for j in range(1000):
            m = pool[j % len(pool)]
            sc = random_scenario(m, rng, (0.0, 10.0), rank_policy=("rank1", "mixed")[j % 2],
                                 n_observers=3)
            dist = kdq_distribution(sc)
            worst_norm = max(worst_norm, abs(dist.q.sum() - 1))
            ordered = sc.ordered()
            last = len(ordered) - 1
            for axis in (0, last):
                born = _born(m, ordered[axis], sc.initial_state)
                q_m = marginal(dist, [axis]).q
                worst_marg = max(worst_marg, float(np.abs(q_m - born).max()))
        d["norm_err"] = f"{worst_norm:.2g}"
        d["marginal_err"] = f"{worst_marg:.2g}"
        assert worst_norm < 1e-10
        assert worst_marg < 1e-10


# -- AC7 ------------------------------------------------------------------------

def test_ac7_three_observer_reduction(acceptance_log):
    rng = np.random.default_rng(707)
    m = THREE_OBSERVERS
    assert len(m.partition.remainder) == 2
    with criterion(acceptance_log, "AC7", "three-observer modified-state reduction", 300) as d:
        worst = 0.0
        for j in range(100):
            sc = random_scenario(m, rng, (0.0, 10.0), rank_policy=("rank1", "binary")[j % 2],
                                 n_observers=3)
            q = kdq_distribution(sc).q
            worst = max(worst, float(np.abs(q - reduced_kdq(sc)).max()))
        d["max_err"] = f"{worst:.2g}"
        assert worst < 1e-10


# -- AC8 ------------------------------------------------------------------------

def test_ac8_symbolic_dense_equivalence(acceptance_log):
    rng = np.random.default_rng(808)
    with criterion(acceptance_log, "AC8", "symbolic commutators match dense", 30) as d:
        worst = 0.0
        for _ in range(10_000):
            n = int(rng.integers(1, 5))
            a = random_sum(rng, n, int(rng.integers(1, 5)))
            b = random_sum(rng, n, int(rng.integers(1, 5)))
            da, db = dense_sum(a), dense_sum(b)
            ref = da @ db - db @ da
            got = dense_sum(commutator(a, b))
            scale = max(np.abs(ref).max(), np.abs(da).max() * np.abs(db).max())
            worst = max(worst, float(np.abs(got - ref).max() / scale))
        d["max_rel_err"] = f"{worst:.2g}"
        assert worst < 1e-12
