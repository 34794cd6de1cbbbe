import numpy as np
import pytest

from loccusd.discrimination import build_local_povms, certificates_povms, check_locc
from loccusd.simulate import exact_rate, run_protocol, sample_local_outcome
from loccusd.states import KET0, KET1, PHI_PLUS, ProductVector, StateEnsemble

THREE_BELL_PREDICTED = 0.5 / ((3 + np.sqrt(3)) / 2) ** 2


@pytest.fixture(scope="module")
def three_bell_protocol():
    from loccusd.states import BELL_STATES

    e = StateEnsemble.from_vectors(BELL_STATES[:3], (2, 2))
    _, lp = certificates_povms(check_locc(e))
    return e, lp


def test_sample_local_outcome_collapses_bell_pair():
    rho = np.outer(PHI_PLUS, PHI_PLUS.conj())
    elements = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    rng = np.random.default_rng(3)
    for _ in range(20):
        k, post = sample_local_outcome(rho, (2, 2), elements, rng)
        expected = np.zeros((2, 2))
        expected[k, k] = 1.0
        np.testing.assert_allclose(post, expected, atol=1e-12)


def test_sample_local_outcome_last_party():
    k, post = sample_local_outcome(np.diag([0.0, 1.0]), (2,), [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])],
                                   np.random.default_rng(0))
    assert k == 1 and post is None


def test_sample_local_outcome_rejects_invalid_povm():
    with pytest.raises(ValueError, match="negative"):
        sample_local_outcome(np.diag([1.0, 0.0]), (2,), [np.diag([-1.0, 0.0]), np.eye(2)],
                             np.random.default_rng(0))


def test_three_bell_rates(three_bell_protocol):
    e, lp = three_bell_protocol
    report = run_protocol(e, lp, 100_000, seed=1)
    assert report.unambiguous
    assert report.rates_match(5.0)
    for nu, stats in report.per_state.items():
        assert stats.predicted_rate == pytest.approx(THREE_BELL_PREDICTED, abs=1e-12)
        assert stats.prepared == stats.conclusive_correct + stats.conclusive_wrong + stats.inconclusive
    assert sum(s.prepared for s in report.per_state.values()) == 100_000


def test_exact_rate_matches_prediction(three_bell_protocol):
    e, lp = three_bell_protocol
    for nu in (1, 2, 3):
        assert exact_rate(e, lp, nu) == pytest.approx(lp.predicted[nu], abs=1e-12)
        for mu in (1, 2, 3):
            if mu != nu:
                assert exact_rate(e, lp, nu, mu) == pytest.approx(0.0, abs=1e-15)


def test_counts_independent_of_workers(three_bell_protocol):
    e, lp = three_bell_protocol
    a = run_protocol(e, lp, 30_000, seed=9, workers=1, block_size=4096)
    b = run_protocol(e, lp, 30_000, seed=9, workers=4, block_size=4096)
    assert {k: vars(v) for k, v in a.per_state.items()} == {k: vars(v) for k, v in b.per_state.items()}


def test_seed_changes_counts(three_bell_protocol):
    e, lp = three_bell_protocol
    a = run_protocol(e, lp, 5000, seed=1)
    b = run_protocol(e, lp, 5000, seed=2)
    assert [s.conclusive_correct for s in a.per_state.values()] != [s.conclusive_correct for s in b.per_state.values()]


def test_fourth_bell_state_is_misidentified(three_bell_protocol, bell4):
    # POVMs built for three Bell states only; Psi- overlaps pi_1 and pi_3
    _, lp = three_bell_protocol
    assert exact_rate(bell4, lp, 4, 3) == pytest.approx(THREE_BELL_PREDICTED, abs=1e-12)
    report = run_protocol(bell4, lp, 40_000, seed=5)
    for nu in (1, 2, 3):
        assert report.per_state[nu].conclusive_wrong == 0
    assert report.per_state[4].conclusive_wrong > 0
    assert report.per_state[4].predicted_rate == 0.0


def test_product_basis_never_errs():
    # every party sees each factor twice, so lam_j = 2 and the rate is 1/4
    kets = [np.kron(a, b) for a in (KET0, KET1) for b in (KET0, KET1)]
    e = StateEnsemble.from_vectors(kets, (2, 2))
    pis = {1: ProductVector((2, 2), (KET0, KET0)), 2: ProductVector((2, 2), (KET0, KET1)),
           3: ProductVector((2, 2), (KET1, KET0)), 4: ProductVector((2, 2), (KET1, KET1))}
    lp = build_local_povms(pis, {mu: 1.0 for mu in pis})
    report = run_protocol(e, lp, 2000, seed=0)
    assert report.unambiguous
    for s in report.per_state.values():
        assert s.predicted_rate == pytest.approx(0.25)
        assert s.within(5.0)


def test_run_protocol_arguments(three_bell_protocol, bell4):
    e, lp = three_bell_protocol
    with pytest.raises(ValueError):
        run_protocol(e, lp, 0)
    other = StateEnsemble.from_vectors([np.ones(8) / np.sqrt(8), np.eye(8)[0]], (2, 2, 2))
    with pytest.raises(ValueError, match="shape"):
        run_protocol(other, lp, 10)


def test_priors_respected(three_bell_protocol):
    e, lp = three_bell_protocol
    skewed = StateEnsemble(e.shape, e.states, priors=(0.8, 0.1, 0.1))
    report = run_protocol(skewed, lp, 20_000, seed=4)
    share = report.per_state[1].prepared / 20_000
    assert abs(share - 0.8) < 5 * np.sqrt(0.8 * 0.2 / 20_000)
