"""Search for product vectors inside subspaces.

Three tools live here:

* :func:`max_product_overlap` -- alternating ("see-saw") maximization of
  ``<pi|A|pi>`` over product vectors. Each step replaces one party's factor
  by the top eigenvector of the operator contracted with all other factors,
  so the objective never decreases. The result is a lower bound.
* :func:`certify_two_qubit` -- exact decision for two qubits. A vector of
  C^2 (x) C^2 is a product iff its 2x2 reshape is singular, so product
  vectors in ``span{b_i}`` are the zeros of the quadratic form
  ``det(sum_i c_i M_i)``.
* :func:`brute_force_overlap` -- exhaustive Bloch-angle grid, used only to
  validate the other two.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import linalg
from .states import (
    DEFAULT_TOL_PRODUCT,
    ProductVector,
    SpaceShape,
    as_shape,
    haar_vector,
    split_factor,
    support_of_matrix,
)

DEFAULT_TOL_DETECT = 1e-8


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 32
    max_iters: int = 200
    conv_tol: float = 1e-12
    tol_product: float = DEFAULT_TOL_PRODUCT
    tol_detect: float = DEFAULT_TOL_DETECT
    weight_w: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be >= 1")
        for name in ("conv_tol", "tol_product", "tol_detect", "weight_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def with_seed(self, seed: int) -> "SearchConfig":
        return SearchConfig(
            self.restarts, self.max_iters, self.conv_tol, self.tol_product,
            self.tol_detect, self.weight_w, seed,
        )


@dataclass(frozen=True)
class OverlapResult:
    """Best product vector found and its objective value.

    `history` is the objective after every single-party update of the
    winning restart.
    """

    value: float
    argmax: ProductVector
    iterations: int
    restart_index: int
    history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class FoundProduct:
    vector: ProductVector
    membership: float
    detect_value: float
    restart_index: int = -1


@dataclass(frozen=True)
class TwoQubitDecision:
    exists: bool
    certificate: Optional[ProductVector] = None
    membership: float = 0.0
    detect_value: float = 0.0


@lru_cache(maxsize=None)
def _contraction(n: int, j: int) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows, cols = letters[:n], letters[n : 2 * n]
    ops = [rows + cols]
    for k in range(n):
        if k != j:
            ops += ["Z" + rows[k], "Z" + cols[k]]
    return ",".join(ops) + "->Z" + rows[j] + cols[j]


def effective_operators(tensor: np.ndarray, factors, j: int) -> np.ndarray:
    """Contract every party except `j` into ``<x_k| . |x_k>``, per restart.

    `tensor` is the D x D operator reshaped to ``dims + dims``; each entry
    of `factors` is an ``(R, d_k)`` stack, one row per restart.
    """
    n = len(factors)
    if n == 1:
        return np.broadcast_to(tensor, (factors[0].shape[0],) + tensor.shape)
    operands = [tensor]
    for k, x in enumerate(factors):
        if k != j:
            operands += [x.conj(), x]
    return np.einsum(_contraction(n, j), *operands, optimize=n > 2)


def effective_operator(tensor: np.ndarray, factors, j: int) -> np.ndarray:
    """Single-restart form of :func:`effective_operators`."""
    return effective_operators(tensor, [np.asarray(f)[None, :] for f in factors], j)[0]


def _expect(matrix: np.ndarray, v: np.ndarray) -> float:
    return float(np.real(v.conj() @ matrix @ v))


def _check_psd(a: np.ndarray, shape: SpaceShape, name="operator") -> np.ndarray:
    a = linalg.as_matrix(a, name)
    d = shape.total
    if a.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got {a.shape}")
    if not linalg.is_hermitian(a, 1e-9):
        raise ValueError(f"{name} is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    if np.linalg.eigvalsh(a)[0] < -1e-9 * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"{name} is not positive semidefinite")
    return a


def leading_factors(v: np.ndarray, shape: SpaceShape) -> list[np.ndarray]:
    """Best product approximation of `v` by successive leading Schmidt pairs."""
    factors = []
    rest = v / np.linalg.norm(v)
    for d in shape.dims[:-1]:
        u, rest, _ = split_factor(rest, d)
        factors.append(u)
    factors.append(rest / np.linalg.norm(rest))
    return factors


def _initial_factors(a: np.ndarray, shape: SpaceShape, seed: int, restarts: int):
    """``(R, d_j)`` starting stacks, one row per restart.

    Restart 0 is the product approximation of A's dominant eigenvector;
    restart r > 0 draws Haar factors from a generator seeded by ``(seed, r)``.
    """
    stacks = [np.empty((restarts, d), dtype=complex) for d in shape.dims]
    top = linalg.eigh(a).eigenvectors[:, -1]
    for j, f in enumerate(leading_factors(top, shape)):
        stacks[j][0] = f
    for r in range(1, restarts):
        rng = np.random.default_rng([seed, r])
        for j, d in enumerate(shape.dims):
            stacks[j][r] = haar_vector(d, rng)
    return stacks


def _batch_expect(a: np.ndarray, factors) -> np.ndarray:
    vecs = factors[0]
    for f in factors[1:]:
        vecs = np.einsum("za,zb->zab", vecs, f).reshape(vecs.shape[0], -1)
    return np.einsum("za,ab,zb->z", vecs.conj(), a, vecs).real


def _seesaw(a: np.ndarray, shape: SpaceShape, factors, max_iters: int, conv_tol: float):
    """Alternating top-eigenvector updates for a stack of restarts.

    A restart stops once a full sweep gains less than `conv_tol`. Factors
    are only replaced when the new value is at least the old one, so every
    trajectory is non-decreasing. Returns ``(values, factors, sweeps,
    history)`` where ``history[t, r]`` is the value after step t.
    """
    tensor = a.reshape(shape.dims * 2)
    factors = [np.array(f, dtype=complex) for f in factors]
    values = _batch_expect(a, factors)
    history = [values.copy()]
    sweeps = np.zeros(len(values), dtype=int)
    active = np.ones(len(values), dtype=bool)
    for _ in range(max_iters):
        if not active.any():
            break
        sweeps += active
        before = values.copy()
        for j in range(shape.n_parties):
            h = effective_operators(tensor, factors, j)
            h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
            w, v = np.linalg.eigh(h)
            take = active & (w[:, -1] >= values)
            factors[j][take] = v[take, :, -1]
            values = np.where(take, w[:, -1], values)
            history.append(values.copy())
        active &= values - before >= conv_tol
    return values, factors, sweeps, np.array(history)


def _kron_all(factors) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def _as_product(shape: SpaceShape, factors) -> ProductVector:
    return ProductVector(shape, tuple(linalg.fix_phase(f / np.linalg.norm(f)) for f in factors))


def max_product_overlap(a, shape, cfg: SearchConfig = SearchConfig()) -> OverlapResult:
    """Largest ``<pi|A|pi>`` found over product unit vectors.

    Restart 0 starts from the product approximation of A's top eigenvector,
    the rest from seeded Haar-random factors. The best restart wins; ties go
    to the lowest restart index.
    """
    shape = as_shape(shape)
    a = _check_psd(a, shape)
    init = _initial_factors(a, shape, cfg.seed, cfg.restarts)
    values, factors, sweeps, history = _seesaw(a, shape, init, cfg.max_iters, cfg.conv_tol)
    r = int(np.argmax(values))
    pv = _as_product(shape, [f[r] for f in factors])
    steps = 1 + int(sweeps[r]) * shape.n_parties
    return OverlapResult(_expect(a, pv.vector), pv, int(sweeps[r]), r, tuple(history[:steps, r]))


def find_product_in_subspace(
    p, rho=None, shape=None, cfg: SearchConfig = SearchConfig()
) -> Optional[FoundProduct]:
    """Look for a product vector inside ``range(p)``, optionally seen by `rho`.

    Each restart maximizes ``<pi| P (1 + w rho) P |pi>`` and then polishes
    with P alone to push the candidate fully into the subspace. Candidates
    are accepted when ``<pi|P|pi> >= 1 - tol_product`` and, given a target,
    ``<pi|rho|pi> >= tol_detect``; the accepted one with the largest
    detection value is returned. ``None`` means the search failed, which is
    not a proof that no product vector exists.
    """
    shape = as_shape(shape)
    p = _check_psd(p, shape, "projector")
    if np.linalg.norm(p @ p - p) > 1e-9 * max(1.0, np.linalg.norm(p)):
        raise ValueError("p is not a projector")
    target = None
    if rho is not None:
        target = _check_psd(getattr(rho, "matrix", rho), shape, "target")
        objective = p @ (np.eye(shape.total) + cfg.weight_w * target) @ p
    else:
        objective = p
    init = _initial_factors(objective, shape, cfg.seed, cfg.restarts)
    _, factors, _, _ = _seesaw(objective, shape, init, cfg.max_iters, cfg.conv_tol)
    _, factors, _, _ = _seesaw(p, shape, factors, cfg.max_iters, cfg.conv_tol)
    threshold = 1.0 - cfg.tol_product
    best = None
    for r in range(cfg.restarts):
        pv = _as_product(shape, [f[r] for f in factors])
        v = pv.vector
        membership = _expect(p, v)
        if membership < threshold:
            continue
        detect = _expect(target, v) if target is not None else 1.0
        if target is not None and detect < cfg.tol_detect:
            continue
        if best is None or detect > best.detect_value:
            best = FoundProduct(pv, membership, detect, r)
    return best


def _binary_roots(qa: complex, qb: complex, qc: complex):
    """Zeros of ``qa x^2 + qb x y + qc y^2`` as unit vectors ``(x, y)``.

    Returns ``None`` when the form vanishes identically.
    """
    scale = max(abs(qa), abs(qb), abs(qc))
    if scale <= 1e-12:
        return None
    if max(abs(qa), abs(qc)) <= 1e-14 * scale:
        return [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]
    swap = abs(qc) > abs(qa)
    if swap:
        qa, qc = qc, qa
    # stable quadratic formula: pick the sign that avoids cancellation
    disc = np.sqrt(complex(qb * qb - 4 * qa * qc))
    if (np.conj(qb) * disc).real < 0:
        disc = -disc
    q = -0.5 * (qb + disc)
    t1 = q / qa
    t2 = qc / q if q != 0 else 0.0
    roots = []
    for t in (t1, t2):
        vec = np.array([t, 1.0], dtype=complex)
        if swap:
            vec = vec[::-1]
        roots.append(vec / np.linalg.norm(vec))
    return roots


def _det_form(basis: np.ndarray) -> np.ndarray:
    """Symmetric Q with ``det(sum_i c_i M_i) = c^T Q c`` for 2x2 reshapes M_i."""
    m = basis.T.reshape(-1, 2, 2)
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    return 0.5 * (np.outer(a, d) + np.outer(d, a) - np.outer(b, c) - np.outer(c, b))


def _slice_candidates(q: np.ndarray, rho_v: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Product directions in ``span{x, y}`` (coefficient space)."""
    qa = x @ q @ x
    qb = 2 * (x @ q @ y)
    qc = y @ q @ y
    roots = _binary_roots(qa, qb, qc)
    if roots is None:
        # the whole slice is product; take its best-detected direction
        frame = np.column_stack([x, y])
        w, v = np.linalg.eigh(frame.conj().T @ rho_v @ frame)
        return [frame @ v[:, -1]]
    return [r[0] * x + r[1] * y for r in roots]


def _leading_index(v: np.ndarray) -> int:
    mags = np.abs(v)
    return int(np.flatnonzero(mags >= mags.max() * (1.0 - 1e-9))[0])


def _preferred(detect: float, v: np.ndarray, best_detect: float, best_v: np.ndarray) -> bool:
    """Higher detection wins; near-ties go to the lower leading basis index."""
    if abs(detect - best_detect) > 1e-12:
        return detect > best_detect
    return _leading_index(v) < _leading_index(best_v)


def certify_two_qubit(
    p, rho=None, tol_product: float = DEFAULT_TOL_PRODUCT, tol_detect: float = DEFAULT_TOL_DETECT
) -> TwoQubitDecision:
    """Exact test for a product vector in a subspace of two qubits.

    Candidates are the zeros of the determinant form restricted to planes
    through the best-detected direction of the subspace. For dimension 1
    and 2 this enumerates every product direction (or the whole plane when
    the form vanishes); for dimension 3 and 4 the zero cone spans enough of
    the subspace that these planes always reach a point with non-zero
    detection. Each candidate is re-checked through its rank-1 reshape.
    """
    basis = getattr(p, "basis", None)
    if basis is None:
        p = np.asarray(p, dtype=complex)
        if p.shape != (4, 4):
            raise ValueError("certify_two_qubit needs dims [2, 2]")
        basis = support_of_matrix(p, (2, 2), 0.5).basis
    basis = np.asarray(basis, dtype=complex)
    if basis.shape[0] != 4:
        raise ValueError("certify_two_qubit needs dims [2, 2]")
    r = basis.shape[1]
    if r == 0:
        return TwoQubitDecision(False)
    proj = basis @ basis.conj().T
    target = None if rho is None else np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    rho_v = np.eye(r) if target is None else basis.conj().T @ target @ basis
    rho_v = 0.5 * (rho_v + rho_v.conj().T)

    q = _det_form(basis)
    w_vals, w_vecs = linalg.eigh(rho_v)
    top = w_vecs[:, -1]
    coeffs = [top]
    if r == 2:
        roots = _binary_roots(q[0, 0], 2 * q[0, 1], q[1, 1])
        if roots is not None:
            coeffs += roots
    elif r >= 3:
        others = w_vecs[:, :-1]
        planes = [others[:, k] for k in range(r - 1)]
        for k, l in itertools.combinations(range(r - 1), 2):
            planes.append((others[:, k] + others[:, l]) / np.sqrt(2))
            planes.append((others[:, k] + 1j * others[:, l]) / np.sqrt(2))
        for y in planes:
            coeffs += _slice_candidates(q, rho_v, top, y)

    shape = SpaceShape((2, 2))
    best = None
    for c in coeffs:
        v = basis @ c
        v = v / np.linalg.norm(v)
        pv = _as_product(shape, leading_factors(v, shape))
        pi = pv.vector
        membership = _expect(proj, pi)
        if membership < 1.0 - tol_product:
            continue
        detect = 1.0 if target is None else _expect(target, pi)
        if target is not None and detect < tol_detect:
            continue
        if best is None or _preferred(detect, pi, best.detect_value, best.certificate.vector):
            best = TwoQubitDecision(True, pv, membership, detect)
    return best if best is not None else TwoQubitDecision(False)


def bloch_grid(grid_points: int) -> np.ndarray:
    """Single-qubit states ``cos(t/2)|0> + e^{i f} sin(t/2)|1>`` on a grid."""
    theta = np.linspace(0.0, np.pi, grid_points)
    phi = np.linspace(0.0, 2 * np.pi, grid_points, endpoint=False)
    t, f = np.meshgrid(theta, phi, indexing="ij")
    return np.stack([np.cos(t / 2), np.exp(1j * f) * np.sin(t / 2)], axis=-1).reshape(-1, 2)


def brute_force_overlap(a, shape, grid_points: int = 60, chunk: int = 512) -> float:
    """Maximum of ``<pi|A|pi>`` over a product grid of Bloch angles.

    Every party must be a qubit and there may be at most three. The value
    is a lower bound that tightens as the grid is refined.
    """
    shape = as_shape(shape)
    if any(d != 2 for d in shape.dims):
        raise ValueError("brute_force_overlap only handles qubits")
    if shape.n_parties > 3:
        raise ValueError("brute_force_overlap handles at most three qubits")
    if grid_points < 20:
        raise ValueError("grid_points must be >= 20")
    a = linalg.as_matrix(a)
    grid = bloch_grid(grid_points)
    return _grid_max(a.reshape(shape.dims * 2), shape.n_parties, grid, chunk)


def _grid_max(tensor: np.ndarray, n: int, grid: np.ndarray, chunk: int) -> float:
    if n == 1:
        return float(np.max(np.einsum("gi,ij,gj->g", grid.conj(), tensor, grid).real))
    if n == 2:
        # <x y|T|x y> = sum_ab H_x[a, b] conj(y_a) y_b, a plain matrix product
        outer = np.einsum("ha,hb->hab", grid.conj(), grid).reshape(len(grid), -1)
        best = -np.inf
        for start in range(0, len(grid), chunk):
            g1 = grid[start : start + chunk]
            h = np.einsum("gi,iajb,gj->gab", g1.conj(), tensor, g1).reshape(len(g1), -1)
            best = max(best, float((h @ outer.T).real.max()))
        return best
    best = -np.inf
    for x in grid:
        rest = np.tensordot(np.tensordot(x.conj(), tensor, axes=(0, 0)), x, axes=(n - 1, 0))
        best = max(best, _grid_max(rest, n - 1, grid, chunk))
    return best
