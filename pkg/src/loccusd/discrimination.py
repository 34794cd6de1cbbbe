"""Feasibility of unambiguous discrimination and the measurements that do it.

For each target label mu, the candidate detection vectors are the vectors
orthogonal to every other state's support (``R_perp(rest)``) that the state
``rho_mu`` itself still sees. Without constraints it is enough that such a
vector exists; for separable/LOCC measurements it must also be a product
vector. The constructive side builds

* a global POVM ``Pi_mu = |pi_mu><pi_mu| / lam`` with ``lam`` the top
  eigenvalue of ``sum_mu |pi_mu><pi_mu|``, and
* one local POVM per party built the same way from the factors
  ``|pi_mu j>``. The parties measure independently and a result counts
  only when they all agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from . import linalg
from .linalg import DEFAULT_TOL_RANK
from .search import (
    DEFAULT_TOL_DETECT,
    SearchConfig,
    certify_two_qubit,
    find_product_in_subspace,
)
from .states import (
    ProductVector,
    SpaceShape,
    StateEnsemble,
    Subspace,
    as_shape,
    complement,
    factorize_if_product,
    support_of_matrix,
)

POVM_TOL = 1e-9
PSD_TOL = 1e-10


@dataclass(frozen=True)
class SeparablePOVMElement:
    """``sum_k (x)_j terms[k][j]`` with positive per-party operators."""

    terms: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        terms = tuple(tuple(np.asarray(op, dtype=complex) for op in term) for term in self.terms)
        if not terms:
            raise ValueError("a separable element needs at least one term")
        dims = [op.shape[0] for op in terms[0]]
        d = int(np.prod(dims))
        if len(terms) > d * d:
            raise ValueError(f"{len(terms)} terms exceed the D^2 = {d * d} bound")
        for term in terms:
            if [op.shape[0] for op in term] != dims:
                raise ValueError("terms have inconsistent party dimensions")
            for op in term:
                if np.linalg.eigvalsh(0.5 * (op + op.conj().T))[0] < -PSD_TOL:
                    raise ValueError("separable element factor is not positive")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_product(cls, pv: ProductVector, weight: float = 1.0) -> "SeparablePOVMElement":
        ops = [np.outer(f, f.conj()) for f in pv.factors]
        ops[0] = weight * ops[0]
        return cls((tuple(ops),))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def matrix(self) -> np.ndarray:
        total = None
        for term in self.terms:
            m = term[0]
            for op in term[1:]:
                m = np.kron(m, op)
            total = m if total is None else total + m
        return total


@dataclass(frozen=True)
class GlobalPOVM:
    shape: SpaceShape
    conclusive: dict[int, np.ndarray]
    inconclusive: np.ndarray
    lam: float
    vectors: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    products: dict[int, ProductVector] = field(default_factory=dict, repr=False)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self.conclusive)

    def elements(self) -> list[np.ndarray]:
        """Conclusive elements in label order, then the inconclusive one."""
        return [self.conclusive[mu] for mu in self.labels] + [self.inconclusive]

    def completeness_error(self) -> float:
        return float(np.linalg.norm(sum(self.elements()) - np.eye(self.shape.total)))

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(e)[0]) for e in self.elements())

    def is_valid(self, tol: float = POVM_TOL) -> bool:
        return self.completeness_error() <= tol and self.min_eigenvalue() >= -PSD_TOL

    def separable_elements(self) -> dict[int, SeparablePOVMElement]:
        """Conclusive elements as single-term separable operators.

        Only available when the POVM was built from product vectors.
        """
        if set(self.products) != set(self.conclusive):
            raise ValueError("POVM was not built from product vectors")
        return {mu: SeparablePOVMElement.from_product(pv, 1.0 / self.lam) for mu, pv in self.products.items()}


@dataclass(frozen=True)
class LocalPOVM:
    conclusive: dict[int, np.ndarray]
    inconclusive: np.ndarray
    lam: float

    def elements(self) -> list[np.ndarray]:
        return [self.conclusive[mu] for mu in self.conclusive] + [self.inconclusive]

    def completeness_error(self) -> float:
        d = self.inconclusive.shape[0]
        return float(np.linalg.norm(sum(self.elements()) - np.eye(d)))


@dataclass(frozen=True)
class LocalPOVMSet:
    """One POVM per party plus the detection probabilities they predict.

    ``predicted[mu]`` is ``detect_value(mu) * prod_j 1/lam_j`` and is only
    filled when detection values were supplied to the builder.
    """

    shape: SpaceShape
    parties: tuple[LocalPOVM, ...]
    predicted: dict[int, float] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self.parties[0].conclusive)

    @property
    def lambdas(self) -> tuple[float, ...]:
        return tuple(p.lam for p in self.parties)

    @property
    def scale(self) -> float:
        return float(np.prod([1.0 / lam for lam in self.lambdas]))

    def joint_element(self, mu: int) -> np.ndarray:
        """``(x)_j Pi_mu j`` on the composite space."""
        m = self.parties[0].conclusive[mu]
        for party in self.parties[1:]:
            m = np.kron(m, party.conclusive[mu])
        return m

    def is_valid(self, tol: float = POVM_TOL) -> bool:
        for party in self.parties:
            if party.completeness_error() > tol:
                return False
            if min(float(np.linalg.eigvalsh(e)[0]) for e in party.elements()) < -PSD_TOL:
                return False
        return True


@dataclass(frozen=True)
class FeasibilityEntry:
    """Verdict for one target label.

    `locc_feasible` is ``None`` when the heuristic search gave up without a
    proof either way.
    """

    mu: int
    unconstrained_feasible: bool
    locc_feasible: Optional[bool]
    certificate: Optional[ProductVector]
    detect_value: float
    membership: float
    method: str

    @property
    def locc_label(self) -> str:
        return "undetermined" if self.locc_feasible is None else str(self.locc_feasible).lower()


@dataclass(frozen=True)
class FeasibilityReport:
    shape: SpaceShape
    entries: dict[int, FeasibilityEntry]

    def __getitem__(self, mu: int) -> FeasibilityEntry:
        return self.entries[mu]

    @property
    def all_unconstrained(self) -> bool:
        return all(e.unconstrained_feasible for e in self.entries.values())

    @property
    def all_locc(self) -> bool:
        return all(e.locc_feasible is True for e in self.entries.values())

    def certificates(self) -> dict[int, ProductVector]:
        return {mu: e.certificate for mu, e in self.entries.items() if e.certificate is not None}

    def detect_values(self) -> dict[int, float]:
        return {mu: e.detect_value for mu, e in self.entries.items()}


@dataclass(frozen=True)
class ProbabilityTable:
    """``table[nu-1, k]`` is the probability of outcome k given state nu.

    Columns follow `labels` and end with the inconclusive outcome.
    """

    labels: tuple[int, ...]
    table: np.ndarray
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def p(self, state: int, outcome) -> float:
        k = len(self.labels) if outcome == "?" else self.labels.index(outcome)
        return float(self.table[state - 1, k])


def _rest_sum(e: StateEnsemble, mu: int) -> np.ndarray:
    return sum(rho.matrix for k, rho in enumerate(e.states, start=1) if k != mu)


def complement_support_of_rest(e: StateEnsemble, mu: int, tol_rank: float = DEFAULT_TOL_RANK) -> Subspace:
    """Vectors orthogonal to the support of every state other than `mu`."""
    if not 1 <= mu <= e.size:
        raise ValueError(f"mu must lie in 1..{e.size}")
    return complement(support_of_matrix(_rest_sum(e, mu), e.shape, tol_rank))


def _detection_capacity(e: StateEnsemble, mu: int, sub: Subspace) -> tuple[float, np.ndarray]:
    """Top eigenpair of rho_mu compressed to `sub`, per unit trace of rho_mu."""
    rho = e.rho(mu)
    if sub.dim == 0:
        return 0.0, np.zeros(e.shape.total, dtype=complex)
    compressed = sub.basis.conj().T @ rho.matrix @ sub.basis / rho.trace
    w, v = linalg.eigh(compressed)
    return float(w[-1]), sub.basis @ v[:, -1]


def check_unconstrained(
    e: StateEnsemble, tol_rank: float = DEFAULT_TOL_RANK, tol_detect: float = DEFAULT_TOL_DETECT
) -> dict[int, bool]:
    """For each mu in delta: can some measurement detect rho_mu unambiguously?

    True iff ``rho_mu`` compressed onto ``R_perp(rest)`` has top eigenvalue
    above `tol_detect`, measured per unit trace so that rescaling a state
    leaves the answer unchanged.
    """
    out = {}
    for mu in e.delta:
        value, _ = _detection_capacity(e, mu, complement_support_of_rest(e, mu, tol_rank))
        out[mu] = value > tol_detect
    return out


def check_locc(
    e: StateEnsemble, cfg: SearchConfig = SearchConfig(), tol_rank: float = DEFAULT_TOL_RANK
) -> FeasibilityReport:
    """Decide, per target label, whether a product detection vector exists.

    Two qubits and single-party systems are decided exactly ("algebraic");
    anything larger goes through the see-saw search ("seesaw"), where a
    failure is reported as undetermined rather than infeasible. Detection
    values are taken per unit trace of rho_mu.
    """
    entries = {}
    two_qubit = e.shape.dims == (2, 2)
    for mu in e.delta:
        sub = complement_support_of_rest(e, mu, tol_rank)
        rho = e.rho(mu)
        target = rho.matrix / rho.trace
        capacity, best_vec = _detection_capacity(e, mu, sub)
        unconstrained = capacity > cfg.tol_detect
        if not unconstrained:
            entries[mu] = FeasibilityEntry(mu, False, False, None, 0.0, 0.0, "algebraic")
            continue
        if e.shape.n_parties == 1:
            pv = ProductVector(e.shape, (linalg.fix_phase(best_vec),))
            entries[mu] = FeasibilityEntry(
                mu, True, True, pv, float(np.real(pv.vector.conj() @ target @ pv.vector)), 1.0, "algebraic"
            )
        elif two_qubit:
            d = certify_two_qubit(sub, target, cfg.tol_product, cfg.tol_detect)
            entries[mu] = FeasibilityEntry(
                mu, True, d.exists, d.certificate, d.detect_value, d.membership, "algebraic"
            )
        else:
            found = find_product_in_subspace(sub.projector, target, e.shape, cfg)
            if found is None:
                entries[mu] = FeasibilityEntry(mu, True, None, None, 0.0, 0.0, "seesaw")
            else:
                entries[mu] = FeasibilityEntry(
                    mu, True, True, found.vector, found.detect_value, found.membership, "seesaw"
                )
    return FeasibilityReport(e.shape, entries)


PiVector = Union[ProductVector, np.ndarray]


def _unit(v) -> np.ndarray:
    vec = v.vector if isinstance(v, ProductVector) else np.asarray(v, dtype=complex).ravel()
    if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
        raise ValueError("detection vectors must be unit vectors")
    return vec


def _scaled_projectors(vectors: dict[int, np.ndarray], dim: int):
    total = np.zeros((dim, dim), dtype=complex)
    for v in vectors.values():
        total += np.outer(v, v.conj())
    lam = linalg.max_eigenvalue(total)
    conclusive = {mu: np.outer(v, v.conj()) / lam for mu, v in vectors.items()}
    return conclusive, np.eye(dim) - total / lam, lam


def build_global_povm(pis: Mapping[int, PiVector], shape=None) -> GlobalPOVM:
    """Conclusive elements ``|pi_mu><pi_mu| / lam`` plus the remainder."""
    if not pis:
        raise ValueError("need at least one detection vector")
    first = next(iter(pis.values()))
    if shape is None:
        shape = first.shape if isinstance(first, ProductVector) else SpaceShape((len(_unit(first)),))
    shape = as_shape(shape)
    for v in pis.values():
        if isinstance(v, ProductVector) and v.shape != shape:
            raise ValueError("detection vectors have mismatched shapes")
    vectors = {mu: _unit(v) for mu, v in pis.items()}
    if any(v.size != shape.total for v in vectors.values()):
        raise ValueError("detection vector length does not match the shape")
    conclusive, inconclusive, lam = _scaled_projectors(vectors, shape.total)
    products = {mu: v for mu, v in pis.items() if isinstance(v, ProductVector)}
    return GlobalPOVM(shape, conclusive, inconclusive, lam, vectors, products)


def verify_povm(povm, e: StateEnsemble, tol: float = POVM_TOL) -> ProbabilityTable:
    """Outcome probabilities of every state, checked for unambiguity.

    Accepts a :class:`GlobalPOVM` or a :class:`LocalPOVMSet` (whose joint
    conclusive elements are used). A violation is a conclusive outcome with
    probability above `tol` for the wrong state, or a target state whose
    own outcome has probability at most `tol`.
    """
    if povm.shape != e.shape:
        raise ValueError("POVM and ensemble shapes differ")
    labels = povm.labels
    if isinstance(povm, LocalPOVMSet):
        conclusive = [povm.joint_element(mu) for mu in labels]
        elements = conclusive + [np.eye(e.shape.total) - sum(conclusive)]
    else:
        elements = povm.elements()
    table = np.array(
        [[np.trace(rho.matrix @ el).real / rho.trace for el in elements] for rho in e.states]
    )
    violations = []
    for nu in range(1, e.size + 1):
        for k, mu in enumerate(labels):
            p = table[nu - 1, k]
            if mu != nu and p > tol:
                violations.append(f"state {nu} triggers outcome {mu} with p={p:.3e}")
            if mu == nu and nu in e.delta and p <= tol:
                violations.append(f"state {nu} is detected with p={p:.3e} only")
    for mu in e.delta:
        if mu not in labels:
            violations.append(f"no conclusive outcome for target {mu}")
    return ProbabilityTable(labels, table, tuple(violations))


def build_local_povms(
    pis: Mapping[int, ProductVector], detect_values: Optional[Mapping[int, float]] = None
) -> LocalPOVMSet:
    """Per-party POVMs ``Pi_mu j = |pi_mu j><pi_mu j| / lam_j``.

    When `detect_values` (``<pi_mu|rho_mu|pi_mu>``) are given, the predicted
    success probabilities ``detect * prod_j 1/lam_j`` are attached.
    """
    if not pis:
        raise ValueError("need at least one product vector")
    shapes = {pv.shape for pv in pis.values()}
    if len(shapes) != 1:
        raise ValueError("product vectors have mismatched shapes")
    shape = shapes.pop()
    parties = []
    for j, d in enumerate(shape.dims):
        conclusive, inconclusive, lam = _scaled_projectors({mu: pv.factors[j] for mu, pv in pis.items()}, d)
        parties.append(LocalPOVM(conclusive, inconclusive, lam))
    lp = LocalPOVMSet(shape, tuple(parties))
    if detect_values is not None:
        lp.predicted.update({mu: float(detect_values[mu]) * lp.scale for mu in pis})
    return lp


def certificates_povms(report: FeasibilityReport):
    """Global and local POVMs from a fully feasible report."""
    if not report.all_locc:
        raise ValueError("not every target has a product certificate")
    certs = report.certificates()
    return build_global_povm(certs), build_local_povms(certs, report.detect_values())


def reciprocal_states(pure_states, tol_rank: float = DEFAULT_TOL_RANK) -> np.ndarray:
    """Normalized dual family of a basis of pure states (returned as rows).

    ``<psi~_mu|psi_nu> = c_mu delta_mu,nu`` with ``c_mu > 0``; built from the
    inverse Gram matrix.
    """
    psi = np.array([np.asarray(v, dtype=complex).ravel() for v in pure_states]).T
    d, m = psi.shape
    if m != d:
        raise ValueError(f"need exactly D = {d} states, got {m}")
    if linalg.numerical_rank(linalg.svd(psi)[1], tol_rank) < m:
        raise ValueError("states are linearly dependent")
    gram = psi.conj().T @ psi
    dual = psi @ np.linalg.inv(gram)
    dual /= np.linalg.norm(dual, axis=0, keepdims=True)
    return dual.T


def reciprocal_verdict(pure_states, shape, tol_product: float = 1e-8, tol_rank: float = DEFAULT_TOL_RANK):
    """Reciprocal states, their factorizations, and the LOCC verdict.

    For a basis of pure states each ``R_perp(rest)`` is the line through the
    reciprocal state, so LOCC discrimination works iff all of them factorize.
    """
    recip = reciprocal_states(pure_states, tol_rank)
    factors = [factorize_if_product(v, shape, tol_product) for v in recip]
    return recip, factors, all(f is not None for f in factors)
