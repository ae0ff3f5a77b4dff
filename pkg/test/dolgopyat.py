from score.anosov.dolgopyat import (
    ConeFunction, ConstantsLedger, DolgopyatOperator, apply_dolgopyat,
    build_ledger, build_sections, build_structure, contraction_profile,
    damping_margin, lnic_scan, select_dense_subset, smallest_p1,
    strong_triangle_check, verify_mechanism)
from score.anosov.exceptions import LedgerInfeasible, LnicFailure, NotInCone
from score.anosov.symbolic import ConstantRoof, FunctionRoof, full_shift
from score.anosov.thermo import OperatorDiscretization, normalize, solve_delta
import math
import numpy as np
import pytest


def coupled_roof(factor=1.0):
    def roof(w):
        return 1.0 + 0.1 * sum(0.5 ** k * w[0] * w[k]
                               for k in range(1, min(6, len(w))))
    return FunctionRoof(full_shift(3), roof, factor)


def small_ledger(**changes):
    values = dict(epsilon=0.05, epsilon1=0.9, rho=0.5, p0=1, p1=4, c0=0.99,
                  kappa1=2.02, kappa2=2.0, A0=20.0, E=50.0, m=21,
                  log_mu=0.0, T=1.0)
    values.update(changes)
    ledger = ConstantsLedger(**values)
    if 'log_mu' not in changes:
        ledger.log_mu = ledger.log_mu_bound() - 1
    return ledger


def normalized_at(depth):
    disc = OperatorDiscretization(coupled_roof(), depth)
    normalized, _ = normalize(disc, solve_delta(disc))
    return normalized


def test_smallest_p1():
    assert smallest_p1(0.5) == 4
    assert smallest_p1(0.25) == 3


def test_strong_triangle_inequality():
    assert strong_triangle_check() <= 1e-12


def test_ledger_holds():
    assert small_ledger().check()


@pytest.mark.parametrize('changes, inequality', [
    ({'rho': 1.2}, 'rho < 1'),
    ({'kappa2': 0.9}, 'c0 <= 1 < kappa2 <= kappa1'),
    ({'E': 30.0}, 'E > 2 A0 > 4'),
    ({'epsilon1': 1.5}, 'epsilon1 < min'),
    ({'m': 5}, 'kappa2^m > max'),
    ({'log_mu': 0.0}, 'mu < min'),
])
def test_ledger_names_violated_inequality(changes, inequality):
    ledger = small_ledger(**changes)
    with pytest.raises(LedgerInfeasible) as info:
        ledger.check()
    assert info.value.inequality.startswith(inequality)


def test_fitted_ledger():
    ledger = build_ledger(normalized_at(4), 0.05, m0=3)
    assert ledger.check()
    assert ledger.m >= 3
    assert ledger.kappa2 == pytest.approx(2.0)
    assert ledger.p1 == smallest_p1(ledger.rho)


def test_sections():
    model = full_shift(3)
    sections = build_sections(model, 0, 3)
    assert sections == [(0, 0, 0), (0, 1, 0), (0, 2, 0)]
    assert build_sections(model, 0, 4, count=2) == [(0, 0, 0, 0),
                                                     (0, 0, 1, 0)]
    with pytest.raises(ValueError):
        build_sections(model, 0, 2)


def test_lnic_constant():
    result = lnic_scan(coupled_roof(), 3)
    assert result.epsilon == pytest.approx(0.05)
    assert result.pairs == 39


def test_lnic_constant_scales_with_roof():
    plain = lnic_scan(coupled_roof(), 3).epsilon
    scaled = lnic_scan(coupled_roof().scaled(3.0), 3).epsilon
    assert scaled == pytest.approx(3 * plain)


def test_constant_roof_fails_lnic():
    roof = ConstantRoof(full_shift(3), 1.0)
    with pytest.raises(LnicFailure) as info:
        lnic_scan(roof, 3)
    assert info.value.epsilon == 0.0
    assert lnic_scan(roof, 3, strict=False).epsilon == 0.0


def test_structure():
    structure = build_structure(2.0, small_ledger(), full_shift(3))
    assert structure.c_words.shape == (3, 2)
    assert structure.d_words.shape == (243, 6)
    assert structure.j0 == 2
    assert len(structure.xi) == 3 * 243
    assert structure.disjoint()
    assert structure.check_sandwich()
    assert structure.x_words(1, 0) == (0,) * 19 + (1, 0) + (0,) * 6


def test_structure_needs_large_frequency():
    with pytest.raises(ValueError):
        build_structure(1.0, small_ledger(), full_shift(3))


def test_structure_checks_ledger():
    with pytest.raises(LedgerInfeasible):
        build_structure(2.0, small_ledger(rho=1.2), full_shift(3))


def test_cone_functions():
    norms = normalized_at(3).norms()
    ConeFunction(np.ones(27), 1.0, norms)
    with pytest.raises(NotInCone):
        ConeFunction(np.zeros(27), 1.0, norms)
    with pytest.raises(NotInCone):
        ConeFunction(np.arange(1, 28, dtype=float), 0.1, norms)


@pytest.mark.timeout(120)
def test_empty_subset_is_plain_iterate():
    normalized = normalized_at(6)
    structure = build_structure(2.0, small_ledger(), full_shift(3))
    operator = DolgopyatOperator(normalized, structure)
    h = np.exp(0.1 * np.sin(np.arange(normalized.disc.size)))
    assert np.array_equal(operator.apply(h, []), operator.iterate(h))
    J, _ = select_dense_subset(operator, h.astype(complex), h, 2.0)
    assert np.array_equal(operator.apply(h, J, mu=0), operator.iterate(h))


@pytest.mark.timeout(120)
def test_dolgopyat_operator_keeps_cone():
    normalized = normalized_at(6)
    structure = build_structure(2.0, small_ledger(), full_shift(3))
    operator = DolgopyatOperator(normalized, structure)
    norms = normalized.norms(2.0)
    h = ConeFunction(np.ones(normalized.disc.size), 100.0, norms)
    J, _ = select_dense_subset(operator, h.values.astype(complex), h.values,
                               2.0)
    image = apply_dolgopyat(h, J, operator)
    assert image.B == 100.0
    assert np.all(image.values <= operator.iterate(h.values))


@pytest.mark.timeout(300)
def test_mechanism_on_coupled_roof():
    normalized = normalized_at(6)
    ledger = small_ledger()
    structure = build_structure(2.0, ledger, full_shift(3))
    report = verify_mechanism(normalized, structure, samples=4,
                              mu='measured')
    assert report.contraction < 1
    assert report.cause is None
    row = report.rows[0]
    assert row['mu'] > ledger.mu
    assert row['constant_factor'] < 1
    assert row['constant_damping'] > 0
    assert row['damping'] >= 0
    assert row['cone'] <= row['cone_bound']
    assert row['domination_margin'] >= -1e-12
    assert math.isfinite(row['gain'])


@pytest.mark.timeout(120)
def test_ledger_damping_is_below_double_precision():
    normalized = normalized_at(6)
    ledger = small_ledger()
    structure = build_structure(2.0, ledger, full_shift(3))
    row = verify_mechanism(normalized, structure, samples=2).rows[0]
    assert row['mu'] == ledger.mu
    assert row['constant_damping'] == 0.0
    assert row['damping'] == 0.0


@pytest.mark.timeout(120)
def test_damping_margin():
    structure = build_structure(2.0, small_ledger(), full_shift(3))
    ones = np.ones(729)
    coupled = DolgopyatOperator(normalized_at(6), structure)
    assert damping_margin(coupled, ones.astype(complex), ones, 2.0) > 0
    disc = OperatorDiscretization(ConstantRoof(full_shift(3), 1.0), 6)
    flat, _ = normalize(disc, solve_delta(disc))
    constant = DolgopyatOperator(flat, structure)
    assert damping_margin(constant, ones.astype(complex), ones, 2.0) < 1e-12


@pytest.mark.timeout(300)
def test_contraction_improves_with_section_length():
    profile = contraction_profile(normalized_at(6), small_ledger(),
                                  full_shift(3), 2.0, [3, 5, 21], samples=4)
    assert [m for m, _ in profile] == [3, 5, 21]
    factors = [factor for _, factor in profile]
    assert all(f < 1 for f in factors)
    for before, after in zip(factors, factors[1:]):
        assert after <= before + 1e-12
    assert factors[-1] < factors[0]
