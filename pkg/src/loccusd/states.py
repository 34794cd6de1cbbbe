"""Multiparticle state representations.

Vectors of the composite space use row-major party ordering: the basis
index of ``|i_1 ... i_N>`` is ``sum_j i_j * prod_{k>j} D_k``, which is what
``np.kron`` over parties 1..N produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .linalg import DEFAULT_TOL_RANK

DEFAULT_TOL_PRODUCT = 1e-8


@dataclass(frozen=True)
class SpaceShape:
    """Per-party local dimensions of an N-party system."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise ValueError("need at least one party")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def identity(self) -> np.ndarray:
        return np.eye(self.total, dtype=complex)


def as_shape(shape) -> SpaceShape:
    return shape if isinstance(shape, SpaceShape) else SpaceShape(tuple(shape))


@dataclass(frozen=True)
class DensityMatrix:
    """A positive semidefinite operator on the composite space.

    ``normalized=False`` admits arbitrary positive trace; the feasibility
    tests are scale invariant so only the simulator cares about it.
    `vector` is kept when the state was built from a ket.
    """

    shape: SpaceShape
    matrix: np.ndarray
    normalized: bool = True
    vector: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        m = linalg.as_matrix(self.matrix, "density matrix")
        d = shape.total
        if m.shape != (d, d):
            raise ValueError(f"density matrix must be {d}x{d}, got {m.shape}")
        if not linalg.is_hermitian(m, 1e-10):
            raise ValueError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -1e-10 * max(1.0, np.linalg.norm(m)):
            raise ValueError("density matrix has a negative eigenvalue")
        tr = float(np.trace(m).real)
        if self.normalized and abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace is {tr}, expected 1 (pass normalized=False to allow)")
        if not self.normalized and tr <= 0.0:
            raise ValueError("density matrix has zero trace")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, vector, shape) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ValueError("zero state vector")
        v = v / norm
        return cls(as_shape(shape), np.outer(v, v.conj()), vector=v)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def expectation(self, vector) -> float:
        v = np.asarray(vector, dtype=complex)
        return float(np.real(v.conj() @ self.matrix @ v))


@dataclass(frozen=True)
class StateEnsemble:
    """States to be discriminated, with the 1-based target subset `delta`."""

    shape: SpaceShape
    states: tuple[DensityMatrix, ...]
    delta: tuple[int, ...] = ()
    priors: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        m = len(states)
        if m < 2:
            raise ValueError("an ensemble needs at least two states")
        for k, rho in enumerate(states, start=1):
            if rho.shape != shape:
                raise ValueError(f"state {k} has dims {rho.shape.dims}, expected {shape.dims}")
        delta = tuple(int(x) for x in self.delta) if self.delta else tuple(range(1, m + 1))
        if len(set(delta)) != len(delta):
            raise ValueError(f"delta has duplicate indices: {delta}")
        if any(not 1 <= x <= m for x in delta):
            raise ValueError(f"delta indices must lie in 1..{m}: {delta}")
        object.__setattr__(self, "delta", delta)
        if self.priors is not None:
            p = tuple(float(x) for x in self.priors)
            if len(p) != m:
                raise ValueError(f"expected {m} priors, got {len(p)}")
            if min(p) < 0.0 or abs(sum(p) - 1.0) > 1e-10:
                raise ValueError("priors must be non-negative and sum to 1")
            object.__setattr__(self, "priors", p)

    @classmethod
    def from_vectors(cls, vectors, shape, delta=(), priors=None) -> "StateEnsemble":
        shape = as_shape(shape)
        return cls(shape, tuple(DensityMatrix.from_vector(v, shape) for v in vectors), delta, priors)

    @property
    def size(self) -> int:
        return len(self.states)

    def rho(self, mu: int) -> DensityMatrix:
        """State with 1-based label `mu`."""
        if not 1 <= mu <= self.size:
            raise IndexError(f"label {mu} outside 1..{self.size}")
        return self.states[mu - 1]

    def prior_weights(self) -> np.ndarray:
        if self.priors is None:
            return np.full(self.size, 1.0 / self.size)
        return np.array(self.priors)

    @property
    def all_pure(self) -> bool:
        return all(rho.is_pure for rho in self.states)


@dataclass(frozen=True)
class Subspace:
    """Subspace of the composite space held as an orthonormal basis (columns)."""

    shape: SpaceShape
    basis: np.ndarray

    def __post_init__(self):
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        if b.shape[0] != shape.total:
            raise ValueError(f"basis rows {b.shape[0]} != dimension {shape.total}")
        if b.shape[1] and np.linalg.norm(b.conj().T @ b - np.eye(b.shape[1])) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, shape) -> "Subspace":
        shape = as_shape(shape)
        return cls(shape, np.zeros((shape.total, 0), dtype=complex))

    @classmethod
    def span(cls, vectors, shape, tol_rank: float = DEFAULT_TOL_RANK) -> "Subspace":
        """Orthonormalized span of arbitrary vectors (given as rows)."""
        shape = as_shape(shape)
        a = np.atleast_2d(np.asarray(vectors, dtype=complex)).T
        u, s, _ = linalg.svd(a)
        return cls(shape, u[:, : linalg.numerical_rank(s, tol_rank)])

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, vector, tol: float = 1e-9) -> bool:
        v = np.asarray(vector, dtype=complex)
        return np.linalg.norm(v - self.projector @ v) <= tol * max(1.0, np.linalg.norm(v))


@dataclass(frozen=True)
class ProductVector:
    """Unit vector ``|pi_1> (x) ... (x) |pi_N>`` stored factor by factor."""

    shape: SpaceShape
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = as_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        factors = tuple(np.asarray(f, dtype=complex).ravel() for f in self.factors)
        if len(factors) != shape.n_parties:
            raise ValueError(f"expected {shape.n_parties} factors, got {len(factors)}")
        for j, (f, d) in enumerate(zip(factors, shape.dims), start=1):
            if f.size != d:
                raise ValueError(f"factor {j} has length {f.size}, expected {d}")
            if abs(np.linalg.norm(f) - 1.0) > 1e-12:
                raise ValueError(f"factor {j} is not a unit vector")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def normalized(cls, shape, factors) -> "ProductVector":
        return cls(shape, tuple(np.asarray(f, dtype=complex) / np.linalg.norm(f) for f in factors))

    @property
    def vector(self) -> np.ndarray:
        return assemble(self)


def assemble(pv: ProductVector) -> np.ndarray:
    """Kronecker product of the factors in party order."""
    return reduce(np.kron, pv.factors)


def support(rho, tol_rank: float = DEFAULT_TOL_RANK) -> Subspace:
    """Span of eigenvectors whose eigenvalue exceeds ``tol_rank * lambda_max``.

    Accepts a :class:`DensityMatrix` or ``(matrix, shape)`` via
    :func:`support_of_matrix`.
    """
    return support_of_matrix(rho.matrix, rho.shape, tol_rank)


def support_of_matrix(matrix, shape, tol_rank: float = DEFAULT_TOL_RANK) -> Subspace:
    w, v = linalg.eigh(matrix)
    top = w[-1]
    if top <= 0.0:
        return Subspace.zero(shape)
    keep = w > tol_rank * top
    # descending eigenvalue order for the stored basis
    return Subspace(as_shape(shape), v[:, keep][:, ::-1])


def complement(s: Subspace) -> Subspace:
    """Orthogonal complement, from the unit eigenspace of ``1 - P``."""
    d = s.shape.total
    if s.dim == 0:
        return Subspace(s.shape, np.eye(d, dtype=complex))
    w, v = linalg.eigh(np.eye(d) - s.projector)
    return Subspace(s.shape, v[:, w > 0.5][:, ::-1])


def split_factor(v: np.ndarray, first: int):
    """Leading Schmidt pair across ``first | rest`` of a vector.

    Returns ``(u, w, s)`` with ``v ~ s[0] * kron(u, w)`` and the full list
    of Schmidt coefficients `s`.
    """
    u, s, vv = linalg.svd(np.reshape(v, (first, -1)))
    return u[:, 0], vv[:, 0].conj(), s


def factorize_if_product(v, shape, tol_product: float = DEFAULT_TOL_PRODUCT) -> Optional[ProductVector]:
    """Split a unit vector into per-party factors, or ``None`` if entangled.

    Parties are peeled off one at a time; each bipartite cut must have its
    second Schmidt coefficient at most `tol_product`. Factors come out
    phase-fixed, so the result equals `v` only up to a global phase.
    """
    shape = as_shape(shape)
    rest = np.asarray(v, dtype=complex).ravel()
    if rest.size != shape.total:
        raise ValueError(f"vector length {rest.size} != dimension {shape.total}")
    if abs(np.linalg.norm(rest) - 1.0) > 1e-10:
        raise ValueError("factorize_if_product expects a unit vector")
    factors = []
    for d in shape.dims[:-1]:
        u, rest, s = split_factor(rest, d)
        if s.size > 1 and s[1] > tol_product:
            return None
        factors.append(u)
    factors.append(rest)
    factors = [linalg.fix_phase(f / np.linalg.norm(f)) for f in factors]
    return ProductVector(shape, tuple(factors))


def product_vector(shape, *factors) -> ProductVector:
    return ProductVector.normalized(as_shape(shape), factors)


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector via a normalized complex Gaussian."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def haar_product(shape, rng: np.random.Generator) -> ProductVector:
    shape = as_shape(shape)
    return ProductVector(shape, tuple(haar_vector(d, rng) for d in shape.dims))


def partial_trace_first(matrix: np.ndarray, d_first: int) -> np.ndarray:
    """Trace out the leading tensor factor of dimension `d_first`."""
    rest = matrix.shape[0] // d_first
    t = matrix.reshape(d_first, rest, d_first, rest)
    return np.einsum("iaib->ab", t)


def reduced_first(matrix: np.ndarray, d_first: int) -> np.ndarray:
    """Marginal on the leading tensor factor."""
    rest = matrix.shape[0] // d_first
    t = matrix.reshape(d_first, rest, d_first, rest)
    return np.einsum("iaja->ij", t)


# Frequently used two-qubit states.
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
BELL_STATES = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def stack_kets(vectors: Sequence) -> np.ndarray:
    return np.array([np.asarray(v, dtype=complex).ravel() for v in vectors])
