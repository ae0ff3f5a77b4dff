from score.anosov.exceptions import (
    DomainError, HorizonExceeded, LatticeRoofDetected, TruncationInsufficient)
from score.anosov.groups import schottky
from score.anosov.lie import LinearForm, jordan_projection
from score.anosov.symbolic import (
    ConstantRoof, CocycleRoof, RoofCocycle, build_sft, full_shift)
from score.anosov.zeta import (
    CountRecord, GapScan, OrbitTable, counting_table, dynamical_determinant,
    gap_scan, leading_zero, li, power_saving_fit, prime_orbit_count,
    ruelle_zeta, selberg_zeta)
import itertools
import math
import numpy as np
import pytest
from scipy import special


def unit_table(max_period=6):
    return OrbitTable.from_roof(ConstantRoof(full_shift(2), 1.0), max_period,
                                delta=math.log(2))


def test_table_of_full_shift():
    table = unit_table()
    assert len(table) == 23
    assert table.tau_min == 1.0
    assert table.horizon == 7.0
    assert table.entropy == pytest.approx(math.log(2))


def test_prime_orbit_count():
    record = prime_orbit_count(unit_table(4), 3.5)
    assert record.count == 5
    assert record.li == pytest.approx(li(2 ** 3.5))
    assert record.residual == pytest.approx(5 - record.li)


def test_count_beyond_horizon():
    table = unit_table(4)
    with pytest.raises(HorizonExceeded):
        prime_orbit_count(table, 5.0)


def test_count_without_delta():
    table = OrbitTable.from_roof(ConstantRoof(full_shift(2), 1.0), 4)
    record = prime_orbit_count(table, 3.5)
    assert record.count == 5
    assert record.li is None


def test_rescaled_counts_agree():
    table = unit_table()
    scaled = table.rescaled(2.0)
    assert scaled.delta == pytest.approx(2 * math.log(2))
    assert scaled.horizon == pytest.approx(table.horizon / 2)
    for T in (1.5, 2.5, 3.5):
        assert prime_orbit_count(scaled, T / 2).count == \
            prime_orbit_count(table, T).count


def test_counting_table_respects_capacity():
    records = counting_table(unit_table(), [1, 2, 3, 4, 5, 6.5, 8])
    assert [r.T for r in records] == [1, 2, 3, 4]


def test_determinant_of_full_shift():
    table = unit_table()
    for xi in (0.3, 1.0, 0.5 + 2j):
        expected = 1 - 2 * np.exp(-xi)
        assert abs(dynamical_determinant(xi, table) - expected) < 1e-12
    values = dynamical_determinant(np.array([0.3, 1.0]), table)
    assert values.shape == (2,)


def test_leading_zero_is_entropy():
    assert leading_zero(unit_table()) == pytest.approx(math.log(2),
                                                       abs=1e-10)


def test_ruelle_zeta_of_full_shift():
    evaluation = ruelle_zeta(3.0, unit_table(8))
    assert abs(evaluation.value - 1 / (1 - 2 * math.exp(-3))) < 1e-6
    assert evaluation.truncation == (8, 16)


def test_selberg_quotient():
    table = unit_table(8)
    upper = selberg_zeta(4.0, table).value
    lower = selberg_zeta(3.0, table).value
    expected = ruelle_zeta(3.0, table).value
    assert abs(upper / lower - expected) < 1e-6 * abs(expected)


def test_selberg_truncation_near_critical_line():
    with pytest.raises(TruncationInsufficient):
        selberg_zeta(0.8, unit_table(8))


def test_gap_scan_rejects_lattice():
    with pytest.raises(LatticeRoofDetected):
        gap_scan(unit_table())


def test_gap_scan_boxes():
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    ys = np.array([-0.5, 0.5, 1.5])
    counts = np.zeros((3, 2), dtype=int)
    counts[2, 0] = 1
    counts[1, 1] = 1
    scan = GapScan(xs, ys, counts, 2.5)
    assert len(scan.zeros) == 2
    assert scan.zero_free == 2.0
    assert scan.gap == 0.5
    assert scan.count_in(0, 3, -0.5, 1.5) == 2
    assert scan.count_in(0, 2, -0.5, 1.5) == 1


def test_offset_logarithmic_integral():
    x = math.exp(2)
    assert li(x) == pytest.approx(special.expi(2) -
                                  special.expi(math.log(2)), abs=1e-10)
    with pytest.raises(DomainError):
        li(2.0)


def test_power_saving_fit():
    records = [CountRecord(T, 0, 0.0, math.exp(0.3 * T))
               for T in (1.0, 2.0, 3.0, 4.0)]
    fit = power_saving_fit(records, 0.7)
    assert fit.slope == pytest.approx(0.3)
    assert fit.saving == pytest.approx(0.4)
    with pytest.raises(ValueError):
        power_saving_fit(records[:2], 0.7)


@pytest.mark.timeout(120)
def test_group_periods_match_roof_periods():
    generators = schottky()
    form = LinearForm.root(1, generators.blocks)
    by_group = OrbitTable.from_group(generators, form, 3)
    model = build_sft(generators)
    roof = CocycleRoof(RoofCocycle(model, depth_cutoff=12), form)
    by_roof = OrbitTable.from_roof(roof, 3)
    assert by_group.words == by_roof.words
    assert np.allclose(by_group.periods, by_roof.periods, atol=1e-6)
    assert by_group.tau_min == pytest.approx(by_roof.tau_min)
    per_letter = by_group.periods / by_group.lengths
    assert by_group.tau_min <= np.min(per_letter) + 1e-9


def conjugacy_classes(max_length):
    alphabet = [1, 2, -1, -2]
    classes = set()
    for length in range(1, max_length + 1):
        for word in itertools.product(alphabet, repeat=length):
            if any(word[i] == -word[(i + 1) % length]
                   for i in range(length)):
                continue
            rotations = [word[i:] + word[:i] for i in range(length)]
            if len(set(rotations)) < length:
                continue
            classes.add(min(rotations))
    return classes


@pytest.mark.timeout(120)
def test_counts_below_horizon_match_conjugacy_classes():
    generators = schottky()
    form = LinearForm.root(1, generators.blocks)
    table = OrbitTable.from_group(generators, form, 3)
    lengths = sorted(form(jordan_projection(generators.element(word)).coords)
                     for word in conjugacy_classes(5))
    for fraction in (0.5, 0.8, 0.95):
        T = fraction * table.horizon
        expected = sum(1 for length in lengths if length <= T)
        assert prime_orbit_count(table, T).count == expected
