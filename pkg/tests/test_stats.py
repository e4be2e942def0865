import itertools
import math

import numpy as np
import pytest
from scipy import integrate
from scipy import stats as sps

from betalab import analytic, stats
from betalab.sampling import EnsembleParams, RngStream, sample_ensemble, sample_spectra
from betalab.tridiag import SpectrumSample
import constants as C
import samples

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)
SEED = C.SEED_UNIT


@pytest.fixture(scope="module")
def iid_spectra():
    # beta = 0, alpha = 1: iid standard normal eigenvalues
    return sample_spectra(EnsembleParams.explicit(1000, 0.0, 1.0), SEED, 200)


def fake(values, params=None):
    return SpectrumSample(np.sort(np.asarray(values, float)), params)


# --- local process ------------------------------------------------------------


def test_local_process_examples():
    assert fake([-1.0, 1.0]).n == 2
    assert stats.local_process(fake([-1.0, 1.0]), 0.0, 1.0).points.size == 0
    N, E = 50, 0.3
    pts = stats.local_process(fake([E, E + 1 / N] + [5.0] * (N - 2)), E, 2.0).points
    np.testing.assert_allclose(pts, [0.0, 1.0], atol=1e-12)
    with pytest.raises(ValueError):
        stats.local_process(fake([0.0]), 0.0, 0.0)
    with pytest.raises(ValueError):
        stats.LocalProcess(np.array([3.0]), 0.0, 1, 2.0)


def test_local_process_iid_intensity(iid_spectra):
    W = 2.0
    pr = stats.local_processes(iid_spectra, 0.0, W)
    c = np.array([p.points.size for p in pr])
    assert abs(c.mean() - 2 * W * PHI0) < 3 * c.std(ddof=1) / math.sqrt(c.size)


# --- spacings -------------------------------------------------------------------


def test_equally_spaced_constant_density():
    N = 200
    ev = np.linspace(-1, 1, N)
    sp = stats.unfolded_spacings(fake(ev), "mu_gamma_unfold", 0.05, density=lambda x: np.full_like(x, 0.5), rescale=False)
    np.testing.assert_allclose(sp.spacings, N * 0.5 * (2 / (N - 1)), rtol=1e-12)
    rescaled = stats.unfolded_spacings(fake(ev), "mu_gamma_unfold", 0.05, density=lambda x: np.full_like(x, 0.5))
    np.testing.assert_allclose(rescaled.spacings, 1.0, rtol=1e-12)


def test_unit_mean_rescale_exact():
    rng = np.random.default_rng(SEED)
    s = fake(rng.normal(size=500))
    for mode in stats.SPACING_MODES:
        kw = {"density": analytic.semicircle_density} if mode == "mu_gamma_unfold" else {}
        sp = stats.unfolded_spacings(s, mode, 0.1, **kw)
        assert sp.rescaled
        assert abs(sp.spacings.mean() - 1.0) < 1e-14
        assert np.all(sp.spacings >= 0)


def test_bulk_trim_indices():
    s = fake(np.arange(100.0))
    sp = stats.unfolded_spacings(s, "unit_mean_rescale", 0.05)
    # 0-based lower indices 5 .. 94, each followed by its neighbour
    assert sp.spacings.size == 90


def test_spacing_errors():
    with pytest.raises(ValueError):
        stats.unfolded_spacings(fake([0.0, 1.0]), "unit_mean_rescale", 0.6)
    with pytest.raises(ValueError):
        stats.unfolded_spacings(fake([0.0]), "unit_mean_rescale", 0.0)
    with pytest.raises(ValueError):
        stats.unfolded_spacings(fake([0.0, 1.0, 2.0]), "bogus", 0.0)
    with pytest.raises(ValueError):
        stats.unfolded_spacings(fake([0.0, 1.0, 2.0]), "mu_gamma_unfold", 0.0)
    with pytest.raises(ValueError):
        # every eigenvalue outside (-2, 2)
        stats.unfolded_spacings(fake([3.0, 4.0, 5.0]), "semicircle_unfold", 0.0)


def test_iid_spacings_are_exponential(iid_spectra):
    x = stats.pooled_spacings(iid_spectra, "mu_gamma_unfold", 0.05, density=sps.norm.pdf)
    assert stats.ks_exponential(x)[1] > 0.01


def test_semicircle_unfold_growing_regime():
    x = stats.pooled_spacings(samples.growing_1000(-0.8), "semicircle_unfold", 0.05)
    assert stats.ks_exponential(x)[0] < 0.02


def test_histogram_density_normalized(iid_spectra):
    h = stats.HistogramDensity(iid_spectra, bins=200)
    total = np.sum(h.values * np.diff(h.edges))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert h(0.0) == pytest.approx(PHI0, rel=0.05)
    assert h(50.0) == 0.0


def test_spacing_histogram_rows():
    rng = np.random.default_rng(SEED)
    x = rng.exponential(size=10000)
    rows = stats.spacing_histogram(x, bins=10, upper=5.0)
    assert len(rows) == 10 and rows[0][0] == 0.0 and rows[-1][1] == 5.0
    assert sum(r[2] for r in rows) == np.count_nonzero(x < 5.0)
    assert sum(r[3] for r in rows) == pytest.approx(10000 * (1 - math.exp(-5)))


# --- counting -------------------------------------------------------------------


def test_counting_synthetic_poisson():
    pr = stats.synthetic_poisson_processes(1.0, 1.0, 10**4, np.random.default_rng(SEED))
    (wc,) = stats.counting_statistics(pr, [(-1.0, 1.0)])
    assert wc.counts.size == 10**4
    assert abs(wc.dispersion - 1.0) < 0.05
    hist = wc.histogram()
    assert hist.sum() == 10**4


def test_counting_gaussian_intensity(iid_spectra):
    pr = stats.local_processes(iid_spectra, 0.0, 4.0)
    (wc,) = stats.counting_statistics(pr, [(-1.0, 1.0)])
    assert abs(wc.mean - 2 * PHI0) < 3 * math.sqrt(wc.variance / wc.counts.size)


def test_counting_rejects_outside_window():
    pr = stats.synthetic_poisson_processes(1.0, 1.0, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        stats.counting_statistics(pr, [(-2.0, 0.0)])


# --- correlation ------------------------------------------------------------------


def _brute_tuples(points, box):
    k = len(box)
    n = 0
    for tup in itertools.permutations(range(len(points)), k):
        if all(a <= points[i] < b for i, (a, b) in zip(tup, box)):
            n += 1
    return n


def test_distinct_tuple_counts_against_brute_force():
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        pts = rng.uniform(-2, 2, size=rng.integers(0, 7))
        k = int(rng.integers(1, 4))
        box = []
        for _ in range(k):
            a = float(rng.uniform(-2, 1.5))
            box.append((a, a + float(rng.uniform(0.2, 2.5))))
        assert stats._distinct_tuple_counts(pts, box) == _brute_tuples(pts, box)


def _mostly_within(ce, target, sigmas=3.0, fraction=0.95):
    z = np.abs(ce.estimates - target) / ce.std_errors
    pooled_se = math.sqrt(np.mean(ce.std_errors**2) / len(ce.boxes))
    return np.mean(z <= sigmas) >= fraction and abs(ce.estimates.mean() - target) <= sigmas * pooled_se * math.sqrt(len(ce.boxes))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_correlation_synthetic_poisson(k):
    pr = stats.synthetic_poisson_processes(1.0, 4.0, 4000, np.random.default_rng(SEED + k))
    ce = stats.correlation_estimate(pr, k)
    assert len(ce.boxes) == 8**k
    assert np.all(ce.estimates >= 0) and np.all(np.isfinite(ce.std_errors))
    assert _mostly_within(ce, 1.0)


def test_correlation_gaussian_one_point(iid_spectra):
    ce = stats.correlation_estimate(stats.local_processes(iid_spectra, 0.0, 4.0), 1)
    assert _mostly_within(ce, PHI0)


def test_correlation_bounded_two_point_flat():
    pr = stats.local_processes(samples.bounded_1000(), 0.0, 4.0)
    ce = stats.correlation_estimate(pr, 2)
    theta = C.THETA_BOUNDED_E0_G1
    assert _mostly_within(ce, theta**2, fraction=0.9)


def test_correlation_validation():
    pr = stats.synthetic_poisson_processes(1.0, 4.0, 5, np.random.default_rng(0))
    with pytest.raises(ValueError):
        stats.correlation_estimate(pr, 0)
    with pytest.raises(ValueError):
        stats.correlation_estimate(pr, 2, boxes=[((0.0, 1.0),)])


# --- log potential ------------------------------------------------------------------


def test_log_potential_gaussian(iid_spectra):
    est, se = stats.log_potential_mu_gamma(iid_spectra, 0.0)
    exact = -(0.5772156649015329 + math.log(2)) / 2
    quad = 2 * integrate.quad(lambda x: math.log(x) * sps.norm.pdf(x), 0, np.inf)[0]
    assert quad == pytest.approx(exact, abs=1e-8)
    assert abs(est - exact) < 3 * se


def test_log_potential_far_energy(iid_spectra):
    est, se = stats.log_potential_mu_gamma(iid_spectra, 5.0)
    f = lambda x: math.log(abs(5.0 - x)) * sps.norm.pdf(x)  # noqa: E731
    quad = integrate.quad(f, -np.inf, 5.0)[0] + integrate.quad(f, 5.0, np.inf)[0]
    assert abs(est - quad) < 3 * se
    assert abs(quad - math.log(5)) < 0.03


def test_log_potential_standard_error_scaling(iid_spectra):
    _, se_small = stats.log_potential_mu_gamma(iid_spectra[:50], 0.0)
    _, se_big = stats.log_potential_mu_gamma(iid_spectra, 0.0)
    # four times the replicas halves the error
    assert se_big / se_small == pytest.approx(0.5, rel=0.2)


def test_log_potential_truncation_flag():
    s = fake([0.0, 1.0])
    est, _ = stats.log_potential_mu_gamma([s], 0.0)
    assert est == -np.inf
    est, _ = stats.log_potential_mu_gamma([s], 0.0, delta=1e-8)
    assert est == pytest.approx(0.5 * math.log(1e-8))
    with pytest.raises(ValueError):
        stats.log_potential_mu_gamma([], 0.0)


def test_estimate_theta_bounded_matches_manual():
    theta, se = stats.estimate_theta_bounded(0.0, 1.0, N=200, replicas=20, seed=5)
    sp = sample_spectra(EnsembleParams.fixed_gamma(200, 1.0), 5, 20)
    lp, _ = stats.log_potential_mu_gamma(sp, 0.0)
    assert theta == analytic.theta_bounded_regime(0.0, 1.0, lp)
    assert se > 0


def test_theta_regression_constant():
    lp, _ = stats.log_potential_mu_gamma(samples.bounded_4000()[:200], 0.0)
    theta = analytic.theta_bounded_regime(0.0, 1.0, lp)
    assert theta == pytest.approx(C.THETA_BOUNDED_E0_G1, rel=C.THETA_BOUNDED_E0_G1_RTOL)


# --- Stieltjes and linear statistics --------------------------------------------------


def test_empirical_stieltjes_zero_spectrum():
    z = 0.3 + 0.7j
    assert stats.empirical_stieltjes([fake(np.zeros(10))] * 3, z) == pytest.approx(1 / z, abs=1e-15)
    with pytest.raises(ValueError):
        stats.empirical_stieltjes([fake(np.zeros(3))], 1.0)


def test_empirical_stieltjes_approaches_semicircle():
    z = 0.5 + 1j
    est = stats.empirical_stieltjes(samples.nu_4000(), z)
    assert abs(est - analytic.stieltjes_semicircle(z)) < 0.02


def test_linear_statistic_constant():
    sp = sample_spectra(EnsembleParams.beta_exponent(300, -0.5, alpha_offset=0.0), SEED, 10)
    ls = stats.linear_statistic(sp, lambda x: np.full_like(x, 0.7))
    assert abs(ls.rhs) < 1e-12
    assert abs(ls.lhs) < 1e-10


def test_linear_statistic_lorentzian():
    h = lambda x: 1.0 / (x * x + 1.0)  # noqa: E731
    sp = samples.nu_4000()
    ls = stats.linear_statistic(sp, h)
    se = stats.linear_statistic_bootstrap_se(sp, h, seed=SEED)
    assert ls.rhs == pytest.approx(analytic.nu_integral(lambda x: 1 / (x * x + 1)), abs=1e-12)
    assert abs(ls.lhs - ls.rhs) < 3 * se


def test_linear_statistic_needs_params():
    with pytest.raises(ValueError):
        stats.linear_statistic([fake([0.0, 1.0])], lambda x: x)


# --- tails ------------------------------------------------------------------------------


def test_tail_frequency_trivial_thresholds():
    sp = sample_spectra(EnsembleParams.fixed_gamma(200, 1.0), SEED, 50)
    mx = np.array([np.abs(s.eigenvalues).max() for s in sp])
    rows = stats.tail_frequency(sp, [mx.min() * 0.99, mx.max() * 1.01])
    assert rows[0][1] == 1.0 and rows[1][1] == 0.0
    for x, f, lo, hi in rows:
        assert lo <= f <= hi


def test_tail_frequency_matrix_route_agrees():
    p = EnsembleParams.fixed_gamma(300, 1.0)
    mats = [sample_ensemble(p, RngStream(SEED, r)) for r in range(100)]
    from betalab.tridiag import eigenvalues

    spectra = [SpectrumSample(eigenvalues(m)) for m in mats]
    xs = np.linspace(1.5, 4.0, 11)
    assert stats.tail_frequency(mats, xs) == stats.tail_frequency(spectra, xs)
    with pytest.raises(TypeError):
        stats.tail_frequency([np.zeros(3)], xs)


def test_tail_frequency_monotone_decay():
    xs = [2.1, 2.15, 2.2, 2.3, 2.4]
    rows = stats.tail_frequency(samples.nu_4000(), xs)
    freqs = [r[1] for r in rows]
    assert all(a >= b for a, b in zip(freqs, freqs[1:]))
    for (x0, f0, lo0, hi0), (x1, f1, lo1, hi1) in zip(rows, rows[1:]):
        if f1 > 0:
            assert f0 > f1
            assert lo0 > hi1


def test_wilson_interval():
    assert stats.wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = stats.wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = stats.wilson_interval(50, 100)
    assert lo == pytest.approx(1 - hi)


# --- global properties -------------------------------------------------------------------


def test_bulk_fraction_linear_in_width():
    sp = samples.bounded_1000()
    f = [stats.window_fraction(sp, 0.0, eps)[0] for eps in (0.02, 0.01, 0.005)]
    assert f[0] / f[1] == pytest.approx(2.0, rel=0.25)
    assert f[1] / f[2] == pytest.approx(2.0, rel=0.25)


def test_pooled_moments_other_gammas():
    # property check at N = 4000 for gamma in {0.5, 2}; gamma = 1 is the acceptance run
    from betalab.moments import moment_value

    for g in (0.5, 2.0):
        sp = sample_spectra(EnsembleParams.fixed_gamma(4000, g), SEED, 40)
        for k in (2, 4, 6, 8):
            m, se = stats.pooled_moment(sp, k)
            assert abs(m - moment_value(k, g)) < 3 * se


def test_statistics_depend_on_sorted_sequence_only():
    rng = np.random.default_rng(SEED)
    ev = rng.normal(size=300)
    a = fake(ev)
    b = fake(rng.permutation(ev))
    assert np.array_equal(
        stats.unfolded_spacings(a, "unit_mean_rescale", 0.05).spacings,
        stats.unfolded_spacings(b, "unit_mean_rescale", 0.05).spacings,
    )
    assert stats.log_potential_mu_gamma([a], 0.1) == stats.log_potential_mu_gamma([b], 0.1)


# --- Poisson null self-test: every test rejects at its nominal level -----------------------

NULL_TRIALS = 10**4
LEVEL = 0.05


def _rejection_rate(pvalues):
    return np.mean(np.asarray(pvalues) < LEVEL)


def test_null_ks_exponential():
    rng = np.random.default_rng(SEED + 100)
    p = [stats.ks_exponential(rng.exponential(size=200))[1] for _ in range(NULL_TRIALS)]
    assert abs(_rejection_rate(p) - LEVEL) <= C.NULL_LEVEL_SLACK


@pytest.mark.parametrize("lam", [1.0, 3.0])
def test_null_poisson_chi2(lam):
    rng = np.random.default_rng(SEED + 200)
    p = [stats.poisson_chi2_test(rng.poisson(lam, size=500))[1] for _ in range(NULL_TRIALS)]
    assert abs(_rejection_rate(p) - LEVEL) <= C.NULL_LEVEL_SLACK


def test_null_dispersion():
    rng = np.random.default_rng(SEED + 300)
    p = [stats.dispersion_test(rng.poisson(2.0, size=500))[1] for _ in range(NULL_TRIALS)]
    assert abs(_rejection_rate(p) - LEVEL) <= C.NULL_LEVEL_SLACK


def test_null_counting_pipeline():
    # the chi-square fit as used on local processes, fed synthetic Poisson processes
    rng = np.random.default_rng(SEED + 400)
    p = []
    for _ in range(2000):
        pr = stats.synthetic_poisson_processes(0.4, 2.0, 300, rng)
        (wc,) = stats.counting_statistics(pr, [(-2.0, 2.0)])
        p.append(stats.poisson_chi2_test(wc.counts)[1])
    assert abs(_rejection_rate(p) - LEVEL) <= C.NULL_LEVEL_SLACK


def test_null_wilson_coverage():
    rng = np.random.default_rng(SEED + 500)
    n, q = 200, 0.1
    hits = rng.binomial(n, q, size=NULL_TRIALS)
    covered = [lo <= q <= hi for lo, hi in (stats.wilson_interval(int(h), n) for h in hits)]
    assert abs((1 - np.mean(covered)) - LEVEL) <= C.NULL_LEVEL_SLACK
