"""Entanglement witnesses from subspaces without product vectors.

When the states jointly span the whole space, ``R_perp(rest)`` of a label
together with the zero vector is a subspace. If it holds no product
vector, ``gamma = max over product states of <pi|P|pi>`` is below 1 and
``W = 1 - P / gamma`` is non-negative on every separable state while
every state inside the subspace scores ``1 - 1/gamma < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional

import numpy as np

from . import linalg
from .discrimination import complement_support_of_rest
from .linalg import DEFAULT_TOL_RANK
from .search import SearchConfig, max_product_overlap
from .states import SpaceShape, StateEnsemble, Subspace, as_shape, haar_vector

SAMPLE_TOL = 1e-8
RECHECK_TOL = 1e-6


class NotASubspaceError(ValueError):
    """Raised when the ensemble's joint support is not the whole space."""


class WitnessValidationError(RuntimeError):
    """Raised when an independent search finds a product state W misses."""


@dataclass(frozen=True)
class WitnessOperator:
    shape: SpaceShape
    W: np.ndarray
    gamma: float
    projector: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")

    @classmethod
    def from_projector(cls, projector, gamma: float, shape) -> "WitnessOperator":
        p = np.asarray(projector, dtype=complex)
        return cls(as_shape(shape), np.eye(p.shape[0]) - p / gamma, float(gamma), p)

    @property
    def projector_dim(self) -> int:
        return int(round(np.trace(self.projector).real))

    def expectation(self, vector) -> float:
        v = np.asarray(vector, dtype=complex)
        return float(np.real(v.conj() @ self.W @ v))


@dataclass(frozen=True)
class WitnessValidation:
    samples: int
    min_sampled: float
    violations: int
    recheck_overlap: float
    recheck_min: float
    detected_value: float

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.recheck_min >= -RECHECK_TOL and self.detected_value < 0.0


def full_support_check(e: StateEnsemble, tol_rank: float = DEFAULT_TOL_RANK) -> bool:
    """Whether ``sum_mu rho_mu`` has full rank."""
    total = sum(rho.matrix for rho in e.states)
    return linalg.numerical_rank(np.linalg.eigvalsh(total)[::-1].clip(0.0), tol_rank) == e.shape.total


def s_tilde_projector(e: StateEnsemble, mu: int, tol_rank: float = DEFAULT_TOL_RANK) -> Subspace:
    """``R_perp(rest)`` for label `mu`, valid only under full joint support."""
    if not full_support_check(e, tol_rank):
        raise NotASubspaceError("S~_mu is not a subspace here: the states do not span the space")
    return complement_support_of_rest(e, mu, tol_rank)


def build_witness(p, shape=None, cfg: SearchConfig = SearchConfig()) -> Optional[WitnessOperator]:
    """Witness ``1 - P / gamma`` or ``None`` when the subspace holds a product.

    `p` is a :class:`Subspace` or a projector matrix. gamma comes from the
    see-saw, which only bounds it from below, so the witness is re-checked
    with an independent seed and rejected with
    :class:`WitnessValidationError` if that finds a larger overlap.
    """
    if isinstance(p, Subspace):
        shape, proj, dim = p.shape, p.projector, p.dim
    else:
        proj = np.asarray(p, dtype=complex)
        dim = int(round(np.trace(proj).real))
    shape = as_shape(shape)
    if dim < 1:
        raise ValueError("cannot build a witness for the zero subspace")
    gamma = max_product_overlap(proj, shape, cfg).value
    if gamma >= 1.0 - cfg.tol_product:
        return None
    wit = WitnessOperator.from_projector(proj, gamma, shape)
    recheck = max_product_overlap(proj, shape, cfg.with_seed(_fresh_seed(cfg.seed))).value
    if 1.0 - recheck / gamma < -RECHECK_TOL:
        raise WitnessValidationError(
            f"independent search reached overlap {recheck:.9f} > gamma {gamma:.9f}"
        )
    return wit


def _fresh_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, 0x5EED]).generate_state(1)[0])


def sample_product_expectations(w: np.ndarray, shape, samples: int, seed: int, batch: int = 8192):
    """``<pi|W|pi>`` for Haar-random product vectors, drawn in batches."""
    shape = as_shape(shape)
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        factors = []
        for d in shape.dims:
            z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
            factors.append(z / np.linalg.norm(z, axis=1, keepdims=True))
        vecs = reduce(lambda a, b: np.einsum("na,nb->nab", a, b).reshape(n, -1), factors)
        out[start : start + n] = np.einsum("na,ab,nb->n", vecs.conj(), w, vecs).real
    return out


def validate_witness(wop: WitnessOperator, samples: int = 100_000, seed: int = 0,
                     cfg: Optional[SearchConfig] = None) -> WitnessValidation:
    """Sampled, optimized and constructive checks of a witness.

    (a) Haar-random product states must all score ``>= -1e-8``; (b) a fresh
    see-saw over the projector must not beat gamma by more than 1e-6; (c) a
    vector from the projector's range exhibits the negative value.
    """
    vals = sample_product_expectations(wop.W, wop.shape, samples, seed)
    cfg = (cfg or SearchConfig()).with_seed(_fresh_seed(seed + 1))
    overlap = max_product_overlap(wop.projector, wop.shape, cfg).value
    w_vals, w_vecs = linalg.eigh(wop.projector)
    inside = w_vecs[:, -1]
    return WitnessValidation(
        samples=samples,
        min_sampled=float(vals.min()),
        violations=int(np.count_nonzero(vals < -SAMPLE_TOL)),
        recheck_overlap=overlap,
        recheck_min=1.0 - overlap / wop.gamma,
        detected_value=wop.expectation(inside),
    )


def random_range_vector(wop: WitnessOperator, seed: int = 0) -> np.ndarray:
    """Random unit vector inside the projector's range."""
    rng = np.random.default_rng(seed)
    v = wop.projector @ haar_vector(wop.projector.shape[0], rng)
    return v / np.linalg.norm(v)
