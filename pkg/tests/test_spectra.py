"""
测试特征行列式、指数多项式、零点定位、谱配对与严格正则性判别
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.bvp_core import CommensurateDeclaration, PiecewisePolynomial, build_dirac_bvp
from src.errors import CountMismatch, InsufficientTerms, NotAnEigenvalue, SignPatternViolated, ValidationError
from src.spectra import (NOT_REGULAR, NOT_STRICT, STRICT, UNDECIDABLE, Eigenvalue, ExponentialPolynomial,
                         SpectrumReport, adjugate, classify_bvp, classify_by_roots, classify_quasi_periodic,
                         classify_separated, default_strip, delta, delta0_expansion, delta_batch, delta_derivative,
                         eigenvector, exp_poly_zeros, modified_delta0, pair_spectra, spectrum_from_polynomial,
                         zeros_in_window)

C_REG = np.array([[1.0, 1.0], [0.0, 0.0]])
D_REG = np.array([[0.0, 0.0], [1.0, 1.0]])


def _quasi_periodic(c, commensurate=None):
    return build_dirac_bvp([-1.0, 1.0], None, np.diag(c), -np.eye(2), 1.0, commensurate=commensurate)


def test_adjugate_identity_for_singular_matrix():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.5, 1.0, 2.0]])
    adj = adjugate(M)
    np.testing.assert_allclose(M @ adj, np.linalg.det(M) * np.eye(3), atol=1e-12)
    assert np.linalg.norm(adj) > 0


def test_jacobi_derivative_matches_finite_difference():
    q = PiecewisePolynomial([0.0, 1.0], [[0.4, -0.3]])
    bvp = build_dirac_bvp([-1.0, 2.0], [[0, q], [0.2, 0]], C_REG, D_REG, 1.0)
    lam = 1.1 - 0.3j
    h = 1e-4
    numeric = (delta(bvp, lam + h) - delta(bvp, lam - h)) / (2 * h)
    assert delta_derivative(bvp, lam) == pytest.approx(numeric, rel=1e-4)
    values, derivatives = delta_batch(bvp, np.array([lam]), with_derivative=True)
    assert values[0] == pytest.approx(delta(bvp, lam), rel=1e-5)
    assert derivatives[0] == pytest.approx(numeric, rel=1e-4)


def test_delta0_expansion_terms():
    """(2 − e^{−iλ})(3 − e^{iλ}) = 7 − 3e^{−iλ} − 2e^{iλ}"""
    bvp = _quasi_periodic([2.0, 3.0])
    poly = delta0_expansion(bvp.C, bvp.D, bvp.profile)
    np.testing.assert_allclose(poly.exponents, [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(poly.coefficients, [-3.0, 7.0, -2.0])
    assert not poly.commensurate
    lam = 0.4 + 0.1j
    assert poly(lam) == pytest.approx(delta(bvp, lam), rel=1e-8)
    assert modified_delta0(bvp)(lam) == pytest.approx(poly(lam))


def test_exponential_polynomial_merging_and_base():
    poly = ExponentialPolynomial.from_terms([(1.0, 2.0), (0.0, 1.0), (1.0, -0.5), (2.0, 1e-16)], base=1.0)
    assert poly.terms == [(0.0, 1.0 + 0j), (1.0, 1.5 + 0j)]
    assert poly.multiples == (0, 1)
    np.testing.assert_allclose(poly.reduced_polynomial(), [1.5, 1.0])
    with pytest.raises(ValidationError):
        ExponentialPolynomial.from_terms([(0.0, 1.0), (0.7, 1.0)], base=0.5)
    with pytest.raises(ValidationError):
        ExponentialPolynomial.from_terms([(0.0, 1.0), (0.7, 1.0)]).reduced_polynomial()


def test_commensurate_zeros_are_exact_progressions():
    bvp = _quasi_periodic([2.0, 3.0], CommensurateDeclaration(base=1.0, multiples=(-1, 1)))
    poly = modified_delta0(bvp)
    assert poly.base == 1.0
    zeros = exp_poly_zeros(poly, (-1.0, 7.0), h=2.0)
    expected = [-1j * np.log(3.0), 1j * np.log(2.0), 2 * np.pi - 1j * np.log(3.0), 2 * np.pi + 1j * np.log(2.0)]
    assert len(zeros) == 4
    for z in expected:
        assert min(abs(e.lam - z) for e in zeros) < 1e-12
    assert default_strip(poly) == pytest.approx(np.log(3.0) + 2.0)
    with pytest.raises(InsufficientTerms):
        exp_poly_zeros(ExponentialPolynomial.from_terms([(0.0, 1.0)]), (0.0, 1.0), 1.0)


def test_zeros_in_window_quasi_periodic():
    bvp = _quasi_periodic([2.0, 3.0])
    report = zeros_in_window(bvp, (-1.0, 7.0))
    assert report.count == 4
    assert report.winding_total == 4
    expected = [-1j * np.log(3.0), 1j * np.log(2.0), 2 * np.pi - 1j * np.log(3.0), 2 * np.pi + 1j * np.log(2.0)]
    for z in expected:
        assert np.min(np.abs(report.values() - z)) < 1e-8
    frame = report.to_frame()
    assert list(frame.columns) == ["re", "im", "multiplicity", "residual"]
    assert SpectrumReport.from_dict(report.to_dict()).count == 4


def test_pairing_uses_optimal_assignment():
    spectrum = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10,
                              eigenvalues=[Eigenvalue(1.0 + 0j, 1, 0.0), Eigenvalue(2.0 + 0.01j, 1, 0.0)])
    reference = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10,
                               eigenvalues=[Eigenvalue(1.001 + 0j, 1, 0.0), Eigenvalue(2.0 + 0j, 1, 0.0)])
    pairing = pair_spectra(spectrum, reference)
    assert pairing.mismatch is None
    np.testing.assert_allclose(pairing.deviations, [0.001, 0.01], rtol=1e-9)
    assert pairing.onset == 0
    assert pairing.bands[0]["count"] == 2


def test_pairing_reports_count_mismatch():
    spectrum = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10, eigenvalues=[Eigenvalue(1.0 + 0j, 1, 0.0)])
    reference = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10,
                               eigenvalues=[Eigenvalue(1.0 + 0j, 1, 0.0), Eigenvalue(3.0 + 0j, 2, 0.0)])
    pairing = pair_spectra(spectrum, reference)
    assert isinstance(pairing.mismatch, CountMismatch)
    assert pairing.mismatch.exit_code == 2
    assert len(pairing.pairs) == 1
    disjoint = SpectrumReport(window=(6.0, 9.0), h=1.0, tol=1e-10, eigenvalues=[])
    with pytest.raises(ValidationError):
        pair_spectra(spectrum, disjoint)


def test_pairing_tolerates_partners_across_window_edges():
    spectrum = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10,
                              eigenvalues=[Eigenvalue(k + 0.02 + 0j, 1, 0.0) for k in range(5)])
    reference = SpectrumReport(window=(0.0, 5.0), h=1.0, tol=1e-10,
                               eigenvalues=[Eigenvalue(complex(x), 1, 0.0) for x in (1.0, 2.0, 3.0, 4.0, 4.98)])
    pairing = pair_spectra(spectrum, reference)
    assert pairing.mismatch is None
    np.testing.assert_allclose(pairing.deviations, [0.02] * 4, atol=1e-12)
    assert sorted(z.real for z in pairing.edge_unmatched) == pytest.approx([0.02, 4.98])
    assert len(pairing.to_dict()["edge_unmatched"]) == 2


def test_periodic_double_zeros_on_default_grid():
    """Δ = 2 − 2cos λ；默认子矩形网格在 x = 6.35 处离 2π 只有 0.067"""
    bvp = build_dirac_bvp([-1.0, 1.0], None, np.eye(2), -np.eye(2), 1.0)
    report = zeros_in_window(bvp, (0.5, 20.0))
    assert report.window == (0.5, 20.0)
    assert report.count == report.winding_total == 6
    assert [e.multiplicity for e in report.eigenvalues] == [2, 2, 2]
    np.testing.assert_allclose(report.values(), 2 * np.pi * np.arange(1, 4), atol=1e-6)


def test_separated_window_on_reference_zeros():
    """Δ₀ = 2e^{iλ} − e^{−iλ} 的零点 πm + (i ln 2)/2 恰落在窗口两端"""
    q = PiecewisePolynomial([0.0, 1.0], [[0.4, -0.3]])
    bvp = build_dirac_bvp([-1.0, 1.0], [[0, q], [0.2, 0]], C_REG, np.array([[0.0, 0.0], [1.0, 2.0]]), 1.0)
    window = (0.0, 6 * np.pi)
    spectrum = zeros_in_window(bvp, window)
    assert spectrum.window == window
    assert spectrum.count == spectrum.winding_total
    reference = spectrum_from_polynomial(modified_delta0(bvp), window, spectrum.h)
    assert reference.window == window
    pairing = pair_spectra(spectrum, reference)
    assert pairing.mismatch is None
    assert len(pairing.pairs) >= 5
    assert pairing.max_deviation < 0.5 * np.pi


def test_separated_deviation_decays_over_dyadic_bands():
    q = PiecewisePolynomial([0.0, 1.0], [[0.4, -0.3]])
    bvp = build_dirac_bvp([-1.0, 1.0], [[0, q], [0.2, 0]], C_REG, np.array([[0.0, 0.0], [1.0, 2.0]]), 1.0)
    window = (0.0, 128 * np.pi)
    spectrum = zeros_in_window(bvp, window)
    reference = spectrum_from_polynomial(modified_delta0(bvp), window, spectrum.h)
    pairing = pair_spectra(spectrum, reference)
    assert pairing.mismatch is None
    band_max = {band["band"]: band["max"] for band in pairing.bands}
    tail = [band_max[k] for k in range(2, 7)]
    assert all(later < earlier for earlier, later in zip(tail, tail[1:]))
    assert tail[-1] < 0.05


def test_eigenvector_satisfies_boundary_conditions():
    """Δ₀ = 2i·sin λ，λ = π 为单零点"""
    bvp = build_dirac_bvp([-1.0, 1.0], None, C_REG, D_REG, 1.0)
    vec = eigenvector(bvp, np.pi)
    assert vec.boundary_residual < 1e-8
    assert not vec.trivial
    assert vec.max_column_angle() < 1e-6
    with pytest.raises(NotAnEigenvalue):
        eigenvector(bvp, 1.0)


def test_classify_periodic_is_not_strict():
    verdict = classify_quasi_periodic([1.0, 1.0], [-1.0, 1.0])
    assert verdict.status == NOT_STRICT
    assert verdict.reason["clause"] == "periodic clause"


def test_classify_antiperiodic_powers_of_two():
    declaration = CommensurateDeclaration(base=2.0, multiples=(1, 2, 4))
    verdict = classify_quasi_periodic([-1.0, -1.0, -1.0], [2.0, 4.0, 8.0], declaration)
    assert verdict.status == STRICT
    assert verdict.reason["clause"] == "power-of-two clause"
    assert verdict.reason["dyadic_valuations"] == [0, 1, 2]


def test_classify_antiperiodic_odd_ratio_is_not_strict():
    declaration = CommensurateDeclaration(base=1.0, multiples=(1, 3))
    assert classify_quasi_periodic([-1.0, -1.0], [1.0, 3.0], declaration).status == NOT_STRICT


def test_classify_undeclared_rational_is_undecidable():
    verdict = classify_quasi_periodic([-1.0, 1j], [1.0, 3.0])
    assert verdict.status == UNDECIDABLE


def test_classify_distinct_moduli_by_ln_clause():
    verdict = classify_quasi_periodic([2.0, 3.0], [-1.0, 1.0])
    assert verdict.status == STRICT
    assert verdict.reason["clause"] == "ln-clause"


def test_classify_separated_conditions():
    single = classify_separated([1.0, 1.0], [1.0, 2.0], [-1.0, 1.0])
    assert single.strict
    assert single.reason["tau"] == [[0.5, 0.0]]
    coincident = classify_separated([1.0] * 4, [1.0] * 4, [-1.0, 1.0, -2.0, 2.0])
    assert coincident.status == NOT_STRICT
    with pytest.raises(SignPatternViolated):
        classify_separated([1.0, 1.0], [1.0, 1.0], [1.0, -1.0])


def test_classify_by_roots():
    double = ExponentialPolynomial.from_terms([(0.0, 1.0), (1.0, -2.0), (2.0, 1.0)], base=1.0)
    assert classify_by_roots(double).status == NOT_STRICT
    simple = ExponentialPolynomial.from_terms([(0.0, -1.0), (2.0, 1.0)], base=1.0)
    verdict = classify_by_roots(simple)
    assert verdict.status == STRICT
    assert verdict.reason["min_gap"] == pytest.approx(2.0)


def test_classify_bvp_dispatch():
    assert classify_bvp(_quasi_periodic([2.0, 3.0])).status == STRICT
    assert classify_bvp(_quasi_periodic([1.0, 1.0])).status == NOT_STRICT
    not_regular = build_dirac_bvp([-1.0, 1.0], None, np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 1]]), 1.0)
    assert classify_bvp(not_regular).status == NOT_REGULAR
    separated = build_dirac_bvp([-1.0, 1.0], None, C_REG, np.array([[0, 0], [1.0, 2.0]]), 1.0)
    verdict = classify_bvp(separated)
    assert verdict.reason["criterion"] == "separated"
    assert verdict.strict
