from score.anosov.exceptions import (
    CapExceeded, NonPositiveRoof, NotMixing, ResolutionTooLow)
from score.anosov.groups import schottky
from score.anosov.lie import jordan_projection
from score.anosov.symbolic import (
    ConstantRoof, Cylinder, FunctionRoof, RoofCocycle, SubshiftModel,
    birkhoff_sum, build_sft, cylinder_contraction_fit, extend_word,
    full_shift, hyperbolicity_fit, is_topologically_mixing, metric_D,
    metric_d, periodic_orbits)
import numpy as np
import pytest


def test_full_shift_words():
    model = full_shift(2)
    words = model.words(3)
    assert len(words) == 8
    assert tuple(words[0]) == (0, 0, 0)
    assert tuple(words[-1]) == (1, 1, 1)


def test_reduced_word_model():
    model = build_sft(schottky())
    assert model.size == 4
    assert model.alphabet == (1, 2, -1, -2)
    assert not model.transition[0, 2]
    assert not model.transition[3, 1]
    assert model.transition[0, 0]
    assert len(model.words(2)) == 12


def test_not_mixing():
    with pytest.raises(NotMixing):
        SubshiftModel([[0, 1], [1, 0]])
    assert is_topologically_mixing([[0, 1], [1, 0]]) is None
    assert is_topologically_mixing([[1, 1], [1, 0]]) == 2


def test_metrics():
    assert metric_d((0, 1, 0), (0, 1, 1)) == 0.25
    assert metric_d((0, 1, 0), (0, 1, 0)) == 0.0
    assert metric_D((0, 1, 0), (1, 1, 0)) == 1.0
    assert metric_D((0, 1, 0), (0, 1, 1)) == Cylinder.diameter_at(1, 0.5)
    with pytest.raises(ResolutionTooLow):
        metric_d((0, 1), (0, 1, 1))


def test_cylinders():
    model = full_shift(3)
    cylinder = Cylinder((0, 2), model)
    assert cylinder.depth == 1
    assert cylinder.diameter == 0.25
    assert len(cylinder.children()) == 3
    assert cylinder.representative(5) == (0, 2, 0, 2, 0)
    with pytest.raises(ValueError):
        Cylinder((0, 2), build_sft(schottky()))


def test_extend_word_without_closing_transition():
    model = build_sft(schottky())
    word = extend_word((0, 2), 6, model)
    assert word[:2] == (0, 2)
    assert model.admissible(word)


def test_constant_roof_must_be_positive():
    with pytest.raises(NonPositiveRoof):
        ConstantRoof(full_shift(2), 0.0)


def test_function_roof_must_be_positive():
    roof = FunctionRoof(full_shift(2), lambda w: w[0] - 0.5)
    with pytest.raises(NonPositiveRoof):
        roof.evaluate([(0, 1), (1, 1)])


def test_birkhoff_sum():
    roof = FunctionRoof(full_shift(2), lambda w: 1.0 + w[0])
    assert birkhoff_sum(roof, (1, 0, 1, 1), 3) == 5.0
    assert birkhoff_sum(roof, (1, 0), 0) == 0.0
    with pytest.raises(ValueError):
        birkhoff_sum(roof, (1, 0), 3)
    assert birkhoff_sum(roof.scaled(2), (1, 0, 1, 1), 3) == 10.0


def test_primitive_orbit_count():
    orbits = periodic_orbits(full_shift(2), 4)
    assert [o.period for o in orbits] == [1, 1, 2, 3, 3, 4, 4, 4]
    assert orbits[2].word == (0, 1)


def test_orbit_period_cap():
    with pytest.raises(CapExceeded):
        periodic_orbits(full_shift(2), 19)


def test_reduced_orbits_avoid_cancellation():
    model = build_sft(schottky(), certify=False)
    for orbit in periodic_orbits(model, 3):
        letters = model.letters(orbit.word)
        closed = letters + letters[:1]
        assert all(a != -b for a, b in zip(closed, closed[1:]))


def test_cocycle_sums_to_jordan_projection():
    model = build_sft(schottky())
    cocycle = RoofCocycle(model, depth_cutoff=12)
    for word in [(0,), (0, 1), (0, 1, 1)]:
        rotations = [word[j:] + word[:j] for j in range(len(word))]
        vectors, _ = cocycle.vectors(rotations)
        element = model.generators.element(model.letters(word))
        expected = jordan_projection(element).coords
        assert np.allclose(vectors.sum(axis=0), expected, atol=1e-6)


def test_cocycle_depth_cutoff():
    model = build_sft(schottky())
    cocycle = RoofCocycle(model, depth_cutoff=6)
    with pytest.raises(ValueError):
        cocycle.vectors([(0, 1)], depth=7)


def test_cocycle_needs_group_model():
    with pytest.raises(ValueError):
        RoofCocycle(full_shift(2))


def test_full_shift_hyperbolicity():
    fit = hyperbolicity_fit(full_shift(2, beta0=0.5))
    assert fit.kappa2 == pytest.approx(2.0)
    assert fit.c0 <= 1.0
    assert cylinder_contraction_fit(full_shift(2)) == (1, 0.5)
