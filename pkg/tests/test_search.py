import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loccusd.search import (
    SearchConfig,
    bloch_grid,
    brute_force_overlap,
    certify_two_qubit,
    effective_operator,
    find_product_in_subspace,
    max_product_overlap,
)
from loccusd.states import (
    BELL_STATES,
    KET0,
    KET1,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    Subspace,
    haar_product,
    haar_vector,
)

FAST = SearchConfig(restarts=8)


def rank_one(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj()) / np.vdot(v, v).real


def schmidt_top_squared(v, d1):
    s = np.linalg.svd(np.reshape(v, (d1, -1)), compute_uv=False)
    return s[0] ** 2


def test_effective_operator_matches_explicit_contraction(rng):
    a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    x = [haar_vector(2, rng), haar_vector(3, rng), haar_vector(2, rng)]
    h = effective_operator(a.reshape(2, 3, 2, 2, 3, 2), x, 1)
    for i in range(3):
        for j in range(3):
            ei, ej = np.eye(3)[i], np.eye(3)[j]
            bra = np.kron(np.kron(x[0], ei), x[2])
            ket = np.kron(np.kron(x[0], ej), x[2])
            assert h[i, j] == pytest.approx(bra.conj() @ a @ ket, abs=1e-12)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_overlap_of_pure_state_is_top_schmidt_weight(dims, rng):
    v = haar_vector(int(np.prod(dims)), rng)
    res = max_product_overlap(rank_one(v), dims, FAST)
    assert res.value == pytest.approx(schmidt_top_squared(v, dims[0]), abs=1e-9)


def test_overlap_three_qubit_ghz_and_w():
    ghz = np.zeros(8)
    ghz[[0, 7]] = 1
    w = np.zeros(8)
    w[[1, 2, 4]] = 1
    assert max_product_overlap(rank_one(ghz), (2, 2, 2)).value == pytest.approx(0.5, abs=1e-9)
    assert max_product_overlap(rank_one(w), (2, 2, 2)).value == pytest.approx(4 / 9, abs=1e-9)


def test_overlap_history_is_monotone(rng):
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    res = max_product_overlap(a @ a.conj().T, (2, 2, 2), FAST)
    assert np.all(np.diff(res.history) >= -1e-12)
    assert res.history[-1] == pytest.approx(res.value, abs=1e-10)


def test_overlap_is_deterministic(rng):
    a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    a = a @ a.conj().T
    r1 = max_product_overlap(a, (3, 3), FAST)
    r2 = max_product_overlap(a, (3, 3), FAST)
    assert r1.value == r2.value
    assert all(np.array_equal(f, g) for f, g in zip(r1.argmax.factors, r2.argmax.factors))


def test_overlap_rejects_indefinite():
    with pytest.raises(ValueError):
        max_product_overlap(np.diag([1.0, -1.0, 0.0, 0.0]), (2, 2))


def test_find_product_in_product_containing_subspace():
    p = Subspace.span([PHI_PLUS, PHI_MINUS], (2, 2)).projector
    found = find_product_in_subspace(p, shape=(2, 2), cfg=FAST)
    assert found is not None and found.membership > 1 - 1e-8


def test_find_product_respects_target():
    p = Subspace.span([PSI_PLUS, PSI_MINUS], (2, 2)).projector
    found = find_product_in_subspace(p, rank_one(PSI_PLUS), (2, 2), FAST)
    assert found.detect_value == pytest.approx(0.5, abs=1e-8)


def test_find_product_in_entangled_line_fails():
    assert find_product_in_subspace(rank_one(PHI_PLUS), shape=(2, 2), cfg=FAST) is None


def test_find_product_rejects_non_projector():
    with pytest.raises(ValueError, match="projector"):
        find_product_in_subspace(0.5 * np.eye(4), shape=(2, 2))


def test_find_product_three_qubits(rng):
    pis = [haar_product((2, 2, 2), rng).vector for _ in range(2)]
    p = Subspace.span(pis + [haar_vector(8, rng)], (2, 2, 2)).projector
    found = find_product_in_subspace(p, shape=(2, 2, 2), cfg=FAST)
    assert found is not None


class TestCertifier:
    def test_entangled_line(self):
        assert not certify_two_qubit(Subspace.span([PHI_PLUS], (2, 2))).exists

    def test_product_line(self):
        d = certify_two_qubit(Subspace.span([np.kron(KET0, KET1)], (2, 2)))
        assert d.exists and d.membership == pytest.approx(1.0)

    def test_psi_plane_picks_01_for_psi_plus(self):
        d = certify_two_qubit(Subspace.span([PSI_PLUS, PSI_MINUS], (2, 2)), rank_one(PSI_PLUS))
        np.testing.assert_allclose(d.certificate.vector, np.kron(KET0, KET1), atol=1e-12)
        assert d.detect_value == pytest.approx(0.5, abs=1e-12)

    def test_phi_plus_psi_minus_plane(self):
        d = certify_two_qubit(Subspace.span([PHI_PLUS, PSI_MINUS], (2, 2)), rank_one(PHI_PLUS))
        v = d.certificate.vector
        # a Phi+ + b Psi- is product iff b = +-i a
        a, b = np.vdot(PHI_PLUS, v), np.vdot(PSI_MINUS, v)
        assert abs(abs(b / a) - 1) < 1e-9 and abs((b / a).real) < 1e-9
        assert d.detect_value == pytest.approx(0.5, abs=1e-9)

    def test_accepts_projector_matrix(self):
        p = Subspace.span([PHI_PLUS, PHI_MINUS], (2, 2)).projector
        assert certify_two_qubit(p).exists

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            certify_two_qubit(np.eye(9))

    def test_zero_subspace(self):
        assert not certify_two_qubit(Subspace.zero((2, 2))).exists

    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_higher_rank_always_has_products(self, r, rng):
        for _ in range(10):
            sub = Subspace.span([haar_vector(4, rng) for _ in range(r)], (2, 2))
            target = rank_one(haar_vector(4, rng))
            d = certify_two_qubit(sub, target)
            assert d.exists
            assert sub.contains(d.certificate.vector, 1e-7)
            # best detect cannot exceed the compressed top eigenvalue
            cap = np.linalg.eigvalsh(sub.basis.conj().T @ target @ sub.basis)[-1]
            assert 0 < d.detect_value <= cap + 1e-12

    def test_random_line_is_entangled(self, rng):
        for _ in range(20):
            assert not certify_two_qubit(Subspace.span([haar_vector(4, rng)], (2, 2))).exists

    def test_agrees_with_schmidt_rank_on_lines(self, rng):
        for k in range(20):
            v = haar_product((2, 2), rng).vector if k % 2 else haar_vector(4, rng)
            expected = np.linalg.svd(v.reshape(2, 2), compute_uv=False)[1] < 1e-8
            assert certify_two_qubit(Subspace.span([v], (2, 2))).exists == expected


def test_bloch_grid_is_normalized():
    g = bloch_grid(20)
    assert g.shape == (400, 2)
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0)


def test_brute_force_lower_bounds_seesaw(rng):
    v = haar_vector(4, rng)
    grid = brute_force_overlap(rank_one(v), (2, 2), 40)
    exact = schmidt_top_squared(v, 2)
    assert grid <= exact + 1e-12
    assert grid >= exact - 5e-3


def test_brute_force_argument_checks():
    with pytest.raises(ValueError):
        brute_force_overlap(np.eye(6), (2, 3))
    with pytest.raises(ValueError):
        brute_force_overlap(np.eye(16), (2, 2, 2, 2))
    with pytest.raises(ValueError):
        brute_force_overlap(np.eye(4), (2, 2), grid_points=10)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(restarts=0)
    with pytest.raises(ValueError):
        SearchConfig(tol_detect=0)
    assert SearchConfig().with_seed(7).seed == 7


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_seesaw_never_exceeds_top_eigenvalue(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    a = a @ a.conj().T
    res = max_product_overlap(a, (2, 3), FAST)
    assert res.value <= np.linalg.eigvalsh(a)[-1] + 1e-9
    assert res.value == pytest.approx(np.real(res.argmax.vector.conj() @ a @ res.argmax.vector), abs=1e-9)
