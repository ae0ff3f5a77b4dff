from score.anosov.exceptions import BallTooLarge, PingPongViolation
from score.anosov.explorer import (
    GrowthIndicator, completeness_radius, enumerate_ball,
    growth_indicator_estimate, limit_cone_estimate, ping_pong_certificate,
    reduced_word_count, tangent_form)
from score.anosov.groups import schottky, symmetric_joining
from score.anosov.lie import GeneratorSet
from score.anosov.pool import WorkerPool
import csv
import numpy as np
import pytest


def test_reduced_word_count():
    assert reduced_word_count(2, 1) == 5
    assert reduced_word_count(2, 2) == 17
    assert reduced_word_count(3, 2) == 1 + 6 + 30


def test_ball_sizes_and_order():
    ball = enumerate_ball(schottky(), 2)
    assert len(ball) == 17
    assert ball.elements[0].word == ()
    assert [e.word for e in ball.elements[1:5]] == [(1,), (2,), (-1,), (-2,)]
    assert list(ball.lengths) == sorted(ball.lengths)
    assert all(a != -b for e in ball.elements
               for a, b in zip(e.word, e.word[1:]))


def test_ball_cap():
    with pytest.raises(BallTooLarge):
        enumerate_ball(schottky(), 4, cap=100)


def test_ball_does_not_depend_on_workers():
    single = enumerate_ball(schottky(), 3)
    multi = enumerate_ball(schottky(), 3, pool=WorkerPool(4))
    assert [e.word for e in single.elements] == \
        [e.word for e in multi.elements]
    assert np.array_equal(single.mu, multi.mu)


def test_ball_csv(tmp_path):
    ball = enumerate_ball(schottky(), 1)
    path = ball.to_csv(str(tmp_path / 'ball.csv'))
    with open(path) as fp:
        rows = list(csv.reader(fp))
    assert rows[0][0] == 'word'
    assert len(rows) == 6
    assert rows[2][0] == '1'


def test_ping_pong():
    assert ping_pong_certificate(schottky()).passed
    close = GeneratorSet([np.diag([1.1, 1 / 1.1]),
                          np.array([[1.05, 0.0], [0.05, 1 / 1.05]])])
    with pytest.raises(PingPongViolation):
        ping_pong_certificate(close)


def test_rank_one_cone():
    ball = enumerate_ball(schottky(), 4)
    cone = limit_cone_estimate(ball)
    assert cone.degenerate
    assert cone.dimension == 1
    assert np.allclose(cone.centroid, [2 ** -0.5, -2 ** -0.5])
    assert cone.contains(ball.lam[1])


def test_rank_two_cone_contains_rays():
    ball = enumerate_ball(symmetric_joining(), 3)
    cone = limit_cone_estimate(ball)
    assert cone.dimension == 2
    assert not cone.degenerate
    for lam in ball.lam[ball.nontrivial()]:
        assert cone.contains(lam)
    assert cone.contains(cone.centroid)


def test_completeness_radius():
    ball = enumerate_ball(schottky(), 3)
    radius = completeness_radius(ball)
    norms = np.linalg.norm(ball.mu[ball.lengths == 3], axis=1)
    assert radius == pytest.approx(norms.min())
    assert radius > 0


@pytest.mark.timeout(120)
def test_growth_indicator_rank_one():
    ball = enumerate_ball(schottky(), 7)
    indicator = GrowthIndicator(ball)
    direction = indicator.directions[0]
    fit = growth_indicator_estimate(ball, direction)
    assert fit.slope > 0
    assert indicator.evaluate(direction) == fit.slope
    form = tangent_form(direction, indicator)
    assert form(direction) == pytest.approx(1.0)


def test_aperture_range():
    ball = enumerate_ball(schottky(), 3)
    with pytest.raises(ValueError):
        growth_indicator_estimate(ball, [1.0, -1.0], aperture=1.0)
