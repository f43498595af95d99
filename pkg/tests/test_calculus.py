"""Functional calculus: exact path, Chebyshev path, semigroup, bands, PW spaces."""

import numpy as np
import pytest

from lpbesov import (
    ChebyshevFilter,
    NumericalError,
    Signal,
    SpectralFunction,
    ValidationError,
    apply_function,
    apply_function_chebyshev,
    apply_semigroup_difference,
    bandlimited_signal,
    bernstein_check,
    build_laplacian,
    calderon_reconstruct,
    eigendecompose,
    eigenvector_signal,
    filter_bank_apply,
    heat_symbol,
    is_bandlimited,
    pw_project,
    semigroup_apply,
    spectral_bound,
    spectral_coefficients,
)
from lpbesov.calculus import (
    calderon_reconstruct_chebyshev,
    filter_bank_apply_chebyshev,
    window_symbol,
)
from lpbesov.filters import eval_psi
from lpbesov.operators import Operator


def test_identity_symbol_is_identity(p4, rng):
    _, decomp, _ = p4
    f = rng.standard_normal(4)
    one = SpectralFunction(lambda xi: np.ones_like(xi), (0.0, np.inf), "one")
    np.testing.assert_allclose(apply_function(decomp, one, f), f, atol=1e-14)


def test_multiplication_symbol_on_eigenvector(p4):
    _, decomp, _ = p4
    f = eigenvector_signal(decomp, 2)
    ident = SpectralFunction(lambda xi: xi, (0.0, np.inf), "xi")
    out = apply_function(decomp, ident, f)
    np.testing.assert_allclose(out, decomp.eigenvalues[2] * f.values, atol=1e-12)


def test_heat_on_diagonal_closed_form():
    decomp = eigendecompose(Operator([1.0, 2.0], "diagonal"))
    out = apply_function(decomp, heat_symbol(1.0), np.array([1.0, 1.0]))
    np.testing.assert_allclose(out, [np.exp(-1.0), np.exp(-2.0)], rtol=1e-15)


def test_symbol_nonfinite_rejected(p4):
    _, decomp, _ = p4
    bad = SpectralFunction(lambda xi: 1.0 / xi, (0.1, np.inf), "1/xi")
    with pytest.raises(NumericalError, match="non-finite"):
        apply_function(decomp, bad, np.ones(4))


def test_operator_norm_contract(bundled_spectral, rng):
    # ||beta(A) f|| <= max_spec |beta| * ||f|| for semigroup and window symbols
    for name, (op, decomp, bank) in bundled_spectral.items():
        symbols = [heat_symbol(0.7)] + [window_symbol(bank, j) for j in bank.levels]
        for beta in symbols:
            cap = np.abs(beta(decomp.eigenvalues)).max()
            for _ in range(20):
                f = rng.standard_normal(op.n)
                out = apply_function(decomp, beta, f)
                assert np.linalg.norm(out) <= cap * np.linalg.norm(f) * (1 + 1e-10), name


def test_chebyshev_constant_reproduced(p4, rng):
    op, _, _ = p4
    f = rng.standard_normal(4)
    one = SpectralFunction(lambda xi: np.ones_like(xi), (0.0, np.inf), "one")
    for degree in (1, 5, 50):
        out = apply_function_chebyshev(op, one, f, degree=degree, lam_hat=4.0)
        assert np.linalg.norm(out - f) <= 1e-12 * np.linalg.norm(f)


def test_chebyshev_heat_matches_exact(p4, rng):
    op, decomp, _ = p4
    f = rng.standard_normal(4)
    lam_hat = spectral_bound(op)
    approx = apply_function_chebyshev(op, heat_symbol(1.0), f, degree=50, lam_hat=lam_hat)
    exact = apply_function(decomp, heat_symbol(1.0), f)
    assert np.linalg.norm(approx - exact) <= 1e-10 * np.linalg.norm(f)


def test_chebyshev_window_matches_exact(p4, rng):
    op, decomp, bank = p4
    f = rng.standard_normal(4)
    lam_hat = max(spectral_bound(op), decomp.lambda_max)
    approx = apply_function_chebyshev(op, window_symbol(bank, 1), f, degree=200, lam_hat=lam_hat)
    exact = apply_function(decomp, window_symbol(bank, 1), f)
    assert np.linalg.norm(approx - exact) <= 1e-6 * np.linalg.norm(f)


def test_chebyshev_filter_tail_reported(p4):
    filt = ChebyshevFilter.from_function(heat_symbol(1.0), 50, 0.0, 4.0)
    assert filt.tail < 1e-14
    assert filt.coefficients.shape == (51,)


def test_chebyshev_agreement_all_bundled(bundled_spectral, rng):
    for name, (op, decomp, bank) in bundled_spectral.items():
        f = rng.standard_normal(op.n)
        lam_hat = max(spectral_bound(op), decomp.lambda_max)
        for j in bank.levels:
            approx = apply_function_chebyshev(
                op, window_symbol(bank, j), f, degree=200, lam_hat=lam_hat
            )
            exact = apply_function(decomp, window_symbol(bank, j), f)
            err = np.linalg.norm(approx - exact) / np.linalg.norm(f)
            assert err <= 1e-6, f"{name} psi_{j}: {err:.2e}"


def test_semigroup_difference_kernel_vector():
    decomp = eigendecompose(build_laplacian("path", 8))
    const = np.ones(8) / np.sqrt(8.0)
    out = apply_semigroup_difference(decomp, const, 0.3, 1)
    assert np.linalg.norm(out) <= 1e-12


def test_semigroup_difference_eigenvector_scaling(p4):
    _, decomp, _ = p4
    f = eigenvector_signal(decomp, 2)  # lambda = 2
    out1 = apply_semigroup_difference(decomp, f, 0.5, 1)
    np.testing.assert_allclose(out1, (1.0 - np.exp(-1.0)) * f.values, rtol=1e-12)
    out2 = apply_semigroup_difference(decomp, f, 0.5, 2)
    np.testing.assert_allclose(out2, (1.0 - np.exp(-1.0)) ** 2 * f.values, rtol=1e-12)


def test_semigroup_difference_contraction(bundled_spectral, rng):
    _, decomp, _ = bundled_spectral["path64"]
    for _ in range(10):
        f = rng.standard_normal(64)
        out = apply_semigroup_difference(decomp, f, rng.uniform(0.01, 1.0), 2)
        assert np.linalg.norm(out) <= np.linalg.norm(f)


def test_semigroup_difference_validates(p4):
    _, decomp, _ = p4
    with pytest.raises(ValidationError):
        apply_semigroup_difference(decomp, np.ones(4), -0.1, 1)
    with pytest.raises(ValidationError):
        apply_semigroup_difference(decomp, np.ones(4), 0.1, 0)


def test_semigroup_law(bundled_spectral, rng):
    for name, (op, decomp, _) in bundled_spectral.items():
        for _ in range(5):
            s, t = rng.uniform(0.0, 2.0, 2)
            f = rng.standard_normal(op.n)
            two_step = semigroup_apply(decomp, semigroup_apply(decomp, f, t), s)
            one_step = semigroup_apply(decomp, f, s + t)
            err = np.linalg.norm(two_step - one_step) / np.linalg.norm(f)
            assert err <= 1e-10, name


def test_semigroup_monotone_in_tau(p4, rng):
    _, decomp, _ = p4
    f = rng.standard_normal(4)
    taus = np.linspace(0.01, 1.0, 40)
    norms = [np.linalg.norm(apply_semigroup_difference(decomp, f, t, 2)) for t in taus]
    assert np.all(np.diff(norms) >= -1e-14)


def test_generator_limit(bundled_spectral):
    # ||(I - T_tau) f / tau - A f|| / ||A f|| <= C tau with stable C
    op, decomp, _ = bundled_spectral["path64"]
    f = bandlimited_signal(decomp, 0.25, 2.0, seed=3)
    af = decomp.synthesize(decomp.eigenvalues * decomp.coefficients(f))
    na = np.linalg.norm(af)
    cs = []
    for tau in (1e-2, 1e-3, 1e-4):
        diff = apply_semigroup_difference(decomp, f, tau, 1) / tau
        cs.append(np.linalg.norm(diff - af) / na / tau)
    cs = np.array(cs)
    assert cs.max() / cs.min() <= 1.2


def test_filter_bank_single_band_eigenvector(bundled_spectral):
    op, decomp, bank = bundled_spectral["path64"]
    idx = int(np.argmin(np.abs(decomp.eigenvalues - 2.0)))
    assert decomp.eigenvalues[idx] == pytest.approx(2.0, abs=1e-12)
    f = eigenvector_signal(decomp, idx)
    comps = filter_bank_apply(decomp, bank, f)
    norms = comps.band_norms()
    assert norms[1] == pytest.approx(1.0, abs=1e-12)
    for j in (0, 2):
        assert norms[j] <= 1e-12


def test_filter_bank_zero_signal(p4):
    _, decomp, bank = p4
    comps = filter_bank_apply(decomp, bank, np.zeros(4))
    assert comps.band_norms().max() == 0.0
    assert comps.energy_ratio() == 0.0


def test_filter_bank_energy_parseval(bundled_spectral, rng):
    for name, (op, decomp, bank) in bundled_spectral.items():
        f = rng.standard_normal(op.n)
        comps = filter_bank_apply(decomp, bank, f)
        assert comps.energy_ratio() == pytest.approx(1.0, abs=1e-10), name


def test_band_components_are_bandlimited(bundled_spectral, rng):
    op, decomp, bank = bundled_spectral["grid8"]
    f = rng.standard_normal(op.n)
    comps = filter_bank_apply(decomp, bank, f)
    for j in range(1, bank.J + 1):
        lo, hi = bank.band_support(j)
        e = spectral_coefficients(decomp, comps.bands[j])
        outside = (decomp.eigenvalues < lo) | (decomp.eigenvalues > hi)
        assert np.abs(e[outside]).max() <= 1e-12


def test_calderon_reconstruction(bundled_spectral, rng):
    for name, (op, decomp, bank) in bundled_spectral.items():
        f = rng.standard_normal(op.n)
        recon = calderon_reconstruct(decomp, bank, f)
        err = np.linalg.norm(recon - f) / np.linalg.norm(f)
        assert err <= 1e-10, name


def test_calderon_kernel_eigenvector():
    decomp = eigendecompose(build_laplacian("path", 8))
    from lpbesov import make_filter_bank, make_window_pair

    bank = make_filter_bank(make_window_pair(), 4.0)
    f = eigenvector_signal(decomp, 0)  # lambda = 0, only band 0 contributes
    recon = calderon_reconstruct(decomp, bank, f)
    np.testing.assert_allclose(recon, f.values, atol=1e-12)
    comps = filter_bank_apply(decomp, bank, f)
    assert comps.band_norms()[0] == pytest.approx(1.0, abs=1e-12)


def test_calderon_mid_eigenvalue_split(bundled_spectral):
    # lambda = 3 sits in bands 1 and 2; the squared windows still sum to 1
    op, decomp, bank = bundled_spectral["path64"]
    w1 = eval_psi(bank, 1, 3.0)
    w2 = eval_psi(bank, 2, 3.0)
    assert 0.0 < w1 < 1.0 and 0.0 < w2 < 1.0
    assert w1**2 + w2**2 == pytest.approx(1.0, abs=1e-14)


def test_calderon_coverage_error(p4, rng):
    from lpbesov.filters import FilterBank, make_window_pair

    _, decomp, _ = p4
    small = FilterBank(windows=make_window_pair(), J=1, lambda_max=2.0)
    with pytest.raises(ValidationError, match="cover"):
        calderon_reconstruct(decomp, small, rng.standard_normal(4))


def test_chebyshev_bank_matches_exact(bundled_spectral, rng):
    op, decomp, bank = bundled_spectral["path64"]
    f = rng.standard_normal(op.n)
    exact = filter_bank_apply(decomp, bank, f)
    approx = filter_bank_apply_chebyshev(op, bank, f, degree=200)
    for j in bank.levels:
        err = np.linalg.norm(exact.bands[j] - approx.bands[j]) / np.linalg.norm(f)
        assert err <= 1e-6
    recon = calderon_reconstruct_chebyshev(op, bank, f, degree=200)
    assert np.linalg.norm(recon - f) / np.linalg.norm(f) <= 1e-6


def test_pw_project_full_band_identity(p4, rng):
    _, decomp, _ = p4
    f = rng.standard_normal(4)
    np.testing.assert_allclose(pw_project(decomp, f, 0.0, 5.0), f, atol=1e-12)


def test_pw_project_idempotent(bundled_spectral, rng):
    _, decomp, _ = bundled_spectral["grid8"]
    f = rng.standard_normal(64)
    once = pw_project(decomp, f, 0.5, 2.5)
    twice = pw_project(decomp, once, 0.5, 2.5)
    np.testing.assert_allclose(once, twice, atol=1e-13)


def test_pw_project_path4_band_selection(p4):
    # [0.5, 2.5] keeps eigenvalues {2 - sqrt(2), 2}, drops {0, 2 + sqrt(2)}
    _, decomp, _ = p4
    f = decomp.eigenvectors.sum(axis=1)
    proj = pw_project(decomp, f, 0.5, 2.5)
    e = spectral_coefficients(decomp, proj)
    np.testing.assert_allclose(e, [0.0, 1.0, 1.0, 0.0], atol=1e-12)


def test_pw_project_empty_interval(p4):
    _, decomp, _ = p4
    with pytest.raises(ValidationError):
        pw_project(decomp, np.ones(4), 2.0, 1.0)


def test_is_bandlimited_band_component(bundled_spectral, rng):
    op, decomp, bank = bundled_spectral["path64"]
    f = rng.standard_normal(op.n)
    comps = filter_bank_apply(decomp, bank, f)
    ok, leakage = is_bandlimited(decomp, comps.bands[1], 1.0, 4.0, 1e-12)
    assert ok
    assert leakage <= 1e-24


def test_is_bandlimited_white_noise_false(bundled_spectral, rng):
    _, decomp, _ = bundled_spectral["path64"]
    f = rng.standard_normal(64)
    ok, leakage = is_bandlimited(decomp, f, 0.5, 1.0, 1e-6)
    assert not ok
    assert leakage > 0.1


def test_is_bandlimited_zero_signal(p4):
    _, decomp, _ = p4
    ok, leakage = is_bandlimited(decomp, np.zeros(4), 0.5, 1.0, 1e-12)
    assert ok
    assert leakage == 0.0


def test_bernstein_extremal_eigenvector(bundled_spectral):
    _, decomp, _ = bundled_spectral["path64"]
    idx = int(np.argmin(np.abs(decomp.eigenvalues - 2.0)))
    f = eigenvector_signal(decomp, idx)
    for k in (1, 3, 5):
        assert bernstein_check(decomp, f, 0.0, 2.0, k) == pytest.approx(1.0, abs=1e-12)


def test_bernstein_power_scaling(bundled_spectral):
    _, decomp, _ = bundled_spectral["path64"]
    idx = int(np.argmin(np.abs(decomp.eigenvalues - 2.0)))
    f = eigenvector_signal(decomp, idx)
    assert bernstein_check(decomp, f, 0.0, 4.0, 3) == pytest.approx(1.0 / 8.0, rel=1e-12)


def test_bernstein_mixed_band(bundled_spectral):
    _, decomp, _ = bundled_spectral["grid8"]
    f = bandlimited_signal(decomp, 1.0, 2.0, seed=9)
    assert bernstein_check(decomp, f, 1.0, 2.0, 5) <= 1.0 + 1e-8


def test_bernstein_rejects_wideband(bundled_spectral, rng):
    _, decomp, _ = bundled_spectral["path64"]
    with pytest.raises(ValidationError, match="not bandlimited"):
        bernstein_check(decomp, rng.standard_normal(64), 0.5, 1.0, 2)


def test_bandlimited_signal_empty_band(p4):
    _, decomp, _ = p4
    with pytest.raises(ValidationError, match="no spectrum"):
        bandlimited_signal(decomp, 10.0, 11.0)


def test_diagonal_spectral_oracle(rng):
    # on diagonal operators every operation is plain coefficientwise arithmetic
    d = np.sort(np.concatenate([[0.0], np.logspace(-1, np.log10(3.5), 15)]))
    decomp = eigendecompose(Operator(d, "diagonal"))
    from lpbesov import make_filter_bank, make_window_pair

    bank = make_filter_bank(make_window_pair(), 4.0)
    f = rng.standard_normal(16)
    heat = apply_function(decomp, heat_symbol(0.7), f)
    np.testing.assert_allclose(heat, np.exp(-0.7 * d) * f, atol=1e-14)
    diff = apply_semigroup_difference(decomp, f, 0.3, 2)
    np.testing.assert_allclose(diff, (1 - np.exp(-0.3 * d)) ** 2 * f, atol=1e-14)
    comps = filter_bank_apply(decomp, bank, f)
    for j in bank.levels:
        np.testing.assert_allclose(comps.bands[j], eval_psi(bank, j, d) * f, atol=1e-14)
    np.testing.assert_allclose(calderon_reconstruct(decomp, bank, f), f, atol=1e-14)
    np.testing.assert_allclose(
        pw_project(decomp, f, 0.5, 2.0), np.where((d >= 0.5) & (d <= 2.0), f, 0.0), atol=1e-14
    )
