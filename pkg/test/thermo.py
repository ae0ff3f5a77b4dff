from score.anosov.exceptions import LatticeRoofDetected, RateNotResolved
from score.anosov.pool import WorkerPool
from score.anosov.symbolic import ConstantRoof, FunctionRoof, full_shift
from score.anosov.thermo import (
    CorrelationResult, OperatorDiscretization, complex_iterate,
    correlation_estimate, cycle_periods, detect_lattice, fit_correlation_rate,
    normalize, pressure, rpf_solve, solve_delta, spectral_bound_estimate)
import math
import numpy as np
import pytest


def mixing_roof(size=3):
    return FunctionRoof(full_shift(size), lambda w: 1.0 + 0.3 * w[0] / size +
                        0.1 * math.sqrt(2) * w[1] * w[2] / size ** 2)


def test_depth_must_be_two():
    with pytest.raises(ValueError):
        OperatorDiscretization(ConstantRoof(full_shift(2), 1.0), 1)


def test_discretization_shape():
    disc = OperatorDiscretization(ConstantRoof(full_shift(2), 1.0), 3)
    assert disc.size == 8
    assert len(disc.branches) == 16
    assert np.all(disc.tau == 1.0)


def test_delta_of_full_shift():
    disc = OperatorDiscretization(ConstantRoof(full_shift(2), 1.0), 3)
    assert solve_delta(disc) == pytest.approx(math.log(2), abs=1e-10)


def test_delta_scales_inversely():
    roof = mixing_roof()
    delta = solve_delta(OperatorDiscretization(roof, 4))
    scaled = solve_delta(OperatorDiscretization(roof.scaled(2.0), 4))
    assert scaled == pytest.approx(delta / 2, rel=1e-9)


def test_pressure_at_zero_is_entropy():
    value = pressure(mixing_roof(), 0.0, 4)
    assert float(value) == pytest.approx(math.log(3), abs=1e-9)
    assert value.error < 1e-9


def test_rpf_normalization():
    disc = OperatorDiscretization(mixing_roof(), 4)
    data = rpf_solve(disc.matrix(-0.5))
    assert np.all(data.h > 0)
    assert data.nu.sum() == pytest.approx(1.0)
    assert data.nu @ data.h == pytest.approx(1.0)
    assert 0 <= data.gap < 1


def test_normalized_operator_fixes_constants():
    disc = OperatorDiscretization(mixing_roof(), 4)
    normalized, _ = normalize(disc, solve_delta(disc))
    ones = np.ones(disc.size)
    for a in (0.0, 0.05, -0.05):
        assert np.allclose(normalized.real_operator(a) @ ones, ones,
                           atol=1e-9)


def test_equilibrium_measure_is_invariant():
    disc = OperatorDiscretization(mixing_roof(), 4)
    normalized, _ = normalize(disc, solve_delta(disc))
    image = normalized.real_operator().T @ normalized.nu
    assert np.allclose(image, normalized.nu, atol=1e-9)


def test_twisted_iterates_do_not_grow():
    disc = OperatorDiscretization(mixing_roof(), 4)
    normalized, _ = normalize(disc, solve_delta(disc))
    values = np.cos(np.arange(disc.size))
    _, records = complex_iterate(normalized, values, 3.0, 10)
    norms = [r.norm2 for r in records]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_lattice_detection():
    assert detect_lattice([1.0, 2.0, 3.0]) == pytest.approx(1.0)
    assert detect_lattice([1.0, 1.5, 2.5]) == pytest.approx(0.5)
    assert detect_lattice([1.0, math.sqrt(2), 3.0]) is None


def test_constant_roof_periods():
    roof = ConstantRoof(full_shift(2), 1.5)
    periods = cycle_periods(roof, [(0,), (0, 1), (0, 0, 1)])
    assert np.allclose(periods, [1.5, 3.0, 4.5])


def test_spectral_estimate_rejects_lattice():
    disc = OperatorDiscretization(ConstantRoof(full_shift(2), 1.0), 3)
    normalized, _ = normalize(disc, solve_delta(disc))
    with pytest.raises(LatticeRoofDetected):
        spectral_bound_estimate(normalized, [1.0], 10)


def test_spectral_estimate_rows():
    disc = OperatorDiscretization(mixing_roof(), 4)
    normalized, _ = normalize(disc, solve_delta(disc))
    table = spectral_bound_estimate(normalized, [1.0, 2.0], 20)
    assert [row['b'] for row in table.rows] == [1.0, 2.0]
    assert table.gap == min(row['eta'] for row in table.rows)


def first_symbol(words, fraction):
    return (words[:, 0] == 0).astype(float)


@pytest.mark.timeout(120)
def test_correlations_do_not_depend_on_workers():
    disc = OperatorDiscretization(mixing_roof(), 3)
    normalized, _ = normalize(disc, solve_delta(disc))
    times = [0.0, 0.5, 1.0]
    single = correlation_estimate(normalized, first_symbol, first_symbol,
                                  times, samples=2000, fit_rate=False)
    multi = correlation_estimate(normalized, first_symbol, first_symbol,
                                 times, samples=2000, fit_rate=False,
                                 pool=WorkerPool(3))
    assert single.values == multi.values
    assert single.errors == multi.errors
    assert single.values[0] > 0


def test_rate_fit_on_exponential_curve():
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    result = CorrelationResult(times, [math.exp(-2 * t) for t in times],
                               [1e-6] * len(times))
    fit_correlation_rate(result)
    assert result.rate == pytest.approx(2.0)


def test_rate_fit_in_noise():
    times = [0.0, 0.5, 1.0]
    result = CorrelationResult(times, [0.1, 0.09, 0.08], [0.1, 0.1, 0.1])
    with pytest.raises(RateNotResolved):
        fit_correlation_rate(result)
