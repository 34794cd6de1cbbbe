"""Monte Carlo run of the local discrimination protocol.

Every party measures its own POVM, results are compared over a classical
channel, and the round is conclusive only when all parties name the same
label. Outcomes are drawn party by party from the exact conditional
distributions, so correlations in entangled states are reproduced.

Trials are cut into fixed-size blocks, each with its own generator seeded
by ``(seed, block)``. Counts therefore do not depend on how blocks are
spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .discrimination import LocalPOVMSet
from .states import StateEnsemble, partial_trace_first, reduced_first

BLOCK_SIZE = 8192
INCONCLUSIVE = "?"


@dataclass
class StateStats:
    prepared: int = 0
    conclusive_correct: int = 0
    conclusive_wrong: int = 0
    inconclusive: int = 0
    predicted_rate: float = 0.0
    conclusive_counts: dict = field(default_factory=dict)

    @property
    def empirical_rate(self) -> float:
        return self.conclusive_correct / self.prepared if self.prepared else 0.0

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the empirical rate."""
        if not self.prepared:
            return 0.0
        p = self.predicted_rate
        return float(np.sqrt(max(p * (1.0 - p), 0.0) / self.prepared))

    def within(self, n_sigma: float = 5.0) -> bool:
        return abs(self.empirical_rate - self.predicted_rate) <= n_sigma * self.sigma + 1e-9


@dataclass
class SimulationReport:
    trials: int
    seed: int
    per_state: dict[int, StateStats]

    @property
    def conclusive_wrong(self) -> int:
        return sum(s.conclusive_wrong for s in self.per_state.values())

    @property
    def unambiguous(self) -> bool:
        return self.conclusive_wrong == 0

    def rates_match(self, n_sigma: float = 5.0) -> bool:
        return all(s.within(n_sigma) for s in self.per_state.values())


def _outcome_probs(marginal: np.ndarray, elements) -> np.ndarray:
    p = np.array([np.trace(marginal @ el).real for el in elements])
    if p.min() < -1e-10:
        raise ValueError(f"negative outcome probability {p.min():.3e}: invalid POVM")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0.0:
        raise ValueError("state gives zero total probability")
    return p / total


def _kraus_update(rho: np.ndarray, d: int, element_sqrt: np.ndarray) -> np.ndarray:
    """State of the remaining parties after the first one saw `element`."""
    k = np.kron(element_sqrt, np.eye(rho.shape[0] // d))
    post = partial_trace_first(k @ rho @ k.conj().T, d)
    return post / np.trace(post).real


def sample_local_outcome(rho: np.ndarray, dims, elements, rng: np.random.Generator):
    """Measure the first of the remaining parties.

    Parameters
    ----------
    rho : ndarray
        Joint state of the parties still to measure, first party leading.
    dims : sequence of int
        Their local dimensions.
    elements : sequence of ndarray
        POVM of the first party.
    rng : numpy.random.Generator

    Returns
    -------
    (int, ndarray or None)
        Index of the drawn element and the conditional state of the other
        parties (``None`` if this was the last one).
    """
    d = dims[0]
    probs = _outcome_probs(reduced_first(rho, d), elements)
    k = int(rng.choice(len(elements), p=probs))
    if len(dims) == 1:
        return k, None
    return k, _kraus_update(rho, d, linalg.psd_sqrt(elements[k]))


def _conditional_tables(rho: np.ndarray, dims, party_elements, party_sqrts):
    """``{outcome prefix: distribution of the next party's outcome}``."""
    tables = {}

    def walk(state, prefix, j):
        probs = _outcome_probs(reduced_first(state, dims[j]), party_elements[j])
        tables[prefix] = probs
        if j + 1 == len(dims):
            return
        for k, p in enumerate(probs):
            if p > 1e-15:
                walk(_kraus_update(state, dims[j], party_sqrts[j][k]), prefix + (k,), j + 1)

    walk(rho, (), 0)
    return tables


def _sample_chain(tables, n_parties: int, n: int, rng: np.random.Generator) -> np.ndarray:
    outcomes = np.zeros((n, n_parties), dtype=np.int64)
    for j in range(n_parties):
        if j == 0:
            probs = tables[()]
            outcomes[:, 0] = rng.choice(len(probs), size=n, p=probs)
            continue
        prefixes = outcomes[:, :j]
        keys, inverse = np.unique(prefixes, axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        for g, key in enumerate(keys):
            rows = np.flatnonzero(inverse == g)
            probs = tables[tuple(int(x) for x in key)]
            outcomes[rows, j] = rng.choice(len(probs), size=rows.size, p=probs)
    return outcomes


def _run_block(block: int, size: int, seed: int, priors, tables, labels, n_parties):
    rng = np.random.default_rng([seed, block])
    prepared = rng.choice(len(priors), size=size, p=priors)
    n_out = len(labels)
    counts = {}
    for nu in range(len(priors)):
        n = int(np.count_nonzero(prepared == nu))
        if n == 0:
            counts[nu + 1] = (0, np.zeros(n_out + 1, dtype=np.int64))
            continue
        out = _sample_chain(tables[nu], n_parties, n, rng)
        agree = np.all(out == out[:, :1], axis=1) & (out[:, 0] < n_out)
        verdict = np.where(agree, out[:, 0], n_out)
        counts[nu + 1] = (n, np.bincount(verdict, minlength=n_out + 1))
    return counts


def run_protocol(
    e: StateEnsemble,
    lp: LocalPOVMSet,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> SimulationReport:
    """Simulate `trials` rounds; states are drawn from the ensemble priors.

    A round is conclusive for label nu only if every party reports nu;
    mixed or inconclusive reports count as inconclusive.
    """
    if lp.shape != e.shape:
        raise ValueError("local POVMs and ensemble have different shapes")
    if trials < 1:
        raise ValueError("trials must be positive")
    labels = lp.labels
    dims = e.shape.dims
    party_elements = [p.elements() for p in lp.parties]
    party_sqrts = [[linalg.psd_sqrt(el) for el in els] for els in party_elements]
    tables = [
        _conditional_tables(rho.matrix / rho.trace, dims, party_elements, party_sqrts)
        for rho in e.states
    ]
    priors = e.prior_weights()
    blocks = [(b, min(block_size, trials - b * block_size)) for b in range(-(-trials // block_size))]

    def job(item):
        b, size = item
        return _run_block(b, size, seed, priors, tables, labels, len(dims))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, blocks))
    else:
        results = [job(item) for item in blocks]

    per_state = {}
    for nu, rho in enumerate(e.states, start=1):
        stats = StateStats(predicted_rate=_predicted(e, lp, nu))
        hist = np.zeros(len(labels) + 1, dtype=np.int64)
        for res in results:
            n, h = res[nu]
            stats.prepared += n
            hist += h
        for k, mu in enumerate(labels):
            stats.conclusive_counts[mu] = int(hist[k])
            if mu == nu:
                stats.conclusive_correct += int(hist[k])
            else:
                stats.conclusive_wrong += int(hist[k])
        stats.inconclusive = int(hist[-1])
        per_state[nu] = stats
    return SimulationReport(trials, seed, per_state)


def exact_rate(e: StateEnsemble, lp: LocalPOVMSet, nu: int, mu: Optional[int] = None) -> float:
    """``Tr(rho_nu (x)_j Pi_mu j)`` per unit trace (``mu`` defaults to ``nu``)."""
    mu = nu if mu is None else mu
    rho = e.rho(nu)
    return float(np.trace(rho.matrix @ lp.joint_element(mu)).real / rho.trace)


def _predicted(e: StateEnsemble, lp: LocalPOVMSet, nu: int) -> float:
    if nu not in lp.labels:
        return 0.0
    if nu in lp.predicted:
        return lp.predicted[nu]
    return exact_rate(e, lp, nu)
