# Copyright © 2017,2018 STRG.AT GmbH, Vienna, Austria
# Copyright © 2019-2023 Necdet Can Ateşman, Vienna, Austria
#
# This file is part of the The SCORE Framework.
#
# The SCORE Framework and all its parts are free software: you can redistribute
# them and/or modify them under the terms of the GNU Lesser General Public
# License version 3 as published by the Free Software Foundation which is in the
# file named COPYING.LESSER.txt.
#
# The SCORE Framework and all its parts are distributed without any WARRANTY;
# without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
# PARTICULAR PURPOSE. For more details see the GNU Lesser General Public
# License.
#
# If you have not received a copy of the GNU Lesser General Public License see
# http://www.gnu.org/licenses/.
#
# The License-Agreement realised between you as Licensee and STRG.AT GmbH as
# Licenser including the issue of its valid conclusion and its pre- and
# post-contractual effects is governed by the laws of Austria. Any disputes
# concerning this License-Agreement including the issue of its valid conclusion
# and its pre- and post-contractual effects are exclusively decided by the
# competent court, in whose district STRG.AT GmbH has its registered seat, at
# the discretion of STRG.AT GmbH also the competent court, in whose district the
# Licensee has his registered seat, an establishment or assets.

"""
Exploration of a finitely generated group through balls in its word metric:
ping-pong certification, limit cone and growth indicator estimates, tangent
forms and exceptional directions.
"""

import logging
import math
import warnings

import numpy as np
from scipy import stats
from scipy.linalg import null_space
from scipy.spatial import ConvexHull, QhullError

from .exceptions import (
    BallTooLarge, BoundaryTooClose, DegenerateCone, PingPongViolation,
    TooFewSamples)
from .lie import (
    ChamberVector, GroupElement, LinearForm, block_slices, cartan_projection,
    jordan_projection, normalize_theta, simple_roots, theta_basis,
    theta_projector)
from .pool import WorkerPool
from .report import write_csv


log = logging.getLogger(__name__)

RADII = np.linspace(0.49, 0.01, 49)
EXCEPTIONAL_TOLERANCE = 1e-3
STENCIL_STEP = 0.05
MIN_SAMPLES = 50
FIT_START = 0.4
FIT_POINTS = 20


def _unit_rows(vectors):
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return vectors / norms


def _top_eigenvector(matrix):
    values, vectors = np.linalg.eig(matrix)
    order = np.argsort(-np.abs(values))
    if abs(values[order[0]]) <= abs(values[order[1]]) * (1 + 1e-9) or \
            abs(values[order[0]].imag) > 1e-12:
        return None
    vector = vectors[:, order[0]].real
    return vector / np.linalg.norm(vector)


def _sample_lines(size, count, rng):
    if size == 2:
        angles = np.linspace(0, np.pi, count, endpoint=False)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    return _unit_rows(rng.normal(size=(count, size)))


def _line_distance(x, y):
    """
    Sine of the angle between unit representatives, for rows of *x*.
    """
    cos = np.clip(np.abs(x @ y), 0.0, 1.0)
    return np.sqrt(1.0 - cos ** 2)


class PingPongCertificate:
    """
    Outcome of :func:`ping_pong_certificate`: the largest verified radius of
    the attracting neighbourhoods per block (``None`` for failed blocks).
    """

    def __init__(self, radii):
        self.radii = tuple(radii)

    @property
    def passed(self):
        return any(r is not None for r in self.radii)

    def as_dict(self):
        return {'radii': list(self.radii), 'passed': self.passed}


def _block_radius(letters, samples, rng):
    attracting = {}
    normals = {}
    for letter, block in letters.items():
        top = _top_eigenvector(block)
        normal = _top_eigenvector(block.T)
        if top is None or normal is None:
            return None
        attracting[letter] = top
        normals[letter] = normal
    lines = _sample_lines(len(next(iter(attracting.values()))), samples, rng)
    for radius in RADII:
        if _block_passes(letters, attracting, normals, lines, radius):
            return float(radius)
    return None


def _block_passes(letters, attracting, normals, lines, radius):
    for s in letters:
        for t in letters:
            if t == s:
                continue
            if _line_distance(attracting[s][None], attracting[t])[0] \
                    <= 2 * radius:
                return False
            if t != -s and abs(attracting[t] @ normals[s]) <= 2 * radius:
                return False
        outside = lines[np.abs(lines @ normals[s]) >= radius]
        if not len(outside):
            continue
        images = _unit_rows(outside @ letters[s].T)
        if np.any(_line_distance(images, attracting[s]) >= radius):
            return False
    return True


def ping_pong_certificate(generators, samples=720, seed=0):
    """
    Checks the ping-pong property of *generators* on the projective space of
    every block. Around the attracting line of every letter ``s`` a ball of
    radius ``r`` (sine metric) is placed, around its repelling hyperplane a
    slab of the same width; ``s`` must map the complement of its slab into
    its ball, and balls must avoid the slabs of all letters except their own
    inverse. The check is numerical: containment is tested on sampled lines.
    """
    rng = np.random.default_rng(seed)
    radii = []
    for sl in block_slices(generators.blocks):
        letters = {letter: generators.letter(letter).entries[sl, sl]
                   for letter in generators.alphabet}
        radii.append(_block_radius(letters, samples, rng))
    certificate = PingPongCertificate(radii)
    log.debug('Ping-pong radii per block: %r', certificate.radii)
    if not certificate.passed:
        raise PingPongViolation('No block passed the ping-pong test')
    return certificate


def reduced_word_count(rank, radius):
    return 1 + sum(2 * rank * (2 * rank - 1) ** (length - 1)
                   for length in range(1, radius + 1))


class WordBall:
    """
    All reduced words up to length :attr:`radius`, in canonical order
    (length first, then lexicographic in the alphabet order), together with
    their Cartan (:attr:`mu`) and Jordan (:attr:`lam`) projections as arrays.
    """

    def __init__(self, generators, radius, elements, mu, lam):
        self.generators = generators
        self.radius = radius
        self.elements = elements
        self.mu = mu
        self.lam = lam
        self.lengths = np.array([len(e.word) for e in elements])

    def __len__(self):
        return len(self.elements)

    @property
    def blocks(self):
        return self.generators.blocks

    def nontrivial(self):
        return self.lengths > 0

    def to_csv(self, path):
        n = self.generators.blocks
        size = sum(n)
        header = ['word'] + \
            ['g%d%d' % (i, j) for i in range(size) for j in range(size)] + \
            ['mu%d' % i for i in range(size)] + \
            ['lambda%d' % i for i in range(size)]
        rows = []
        for element, mu, lam in zip(self.elements, self.mu, self.lam):
            word = ' '.join(str(s) for s in element.word)
            rows.append([word] + list(element.entries.ravel()) +
                        list(mu) + list(lam))
        return write_csv(path, header, rows)


def _subtree(generators, first, radius):
    found = []
    stack = [generators.letter(first)]
    while stack:
        element = stack.pop()
        found.append(element)
        if len(element.word) == radius:
            continue
        last = element.word[-1]
        for letter in reversed(generators.alphabet):
            if letter == -last:
                continue
            stack.append(element @ generators.letter(letter))
    return found


def enumerate_ball(generators, radius, cap=200000, pool=None,
                   certify=True):
    """
    Enumerates the ball of *radius* in the free group on *generators*. Work
    is split by first letter and merged in canonical word order.
    """
    if radius < 1:
        raise ValueError('Radius must be at least 1')
    if certify:
        ping_pong_certificate(generators)
    count = reduced_word_count(generators.rank, radius)
    if count > cap:
        raise BallTooLarge('Ball of radius %d has %d elements, cap is %d' %
                           (radius, count, cap))
    pool = pool or WorkerPool()
    parts = pool.map(lambda first: _subtree(generators, first, radius),
                     generators.alphabet)
    order = {letter: index for index, letter in
             enumerate(generators.alphabet)}
    elements = [GroupElement.identity(generators.blocks)]
    elements.extend(e for part in parts for e in part)
    elements.sort(key=lambda e: (len(e.word),
                                 tuple(order[s] for s in e.word)))
    mu = np.array([cartan_projection(e).coords for e in elements])
    lam = np.array([jordan_projection(e).coords for e in elements])
    log.info('Enumerated %d elements up to length %d', len(elements),
             radius)
    return WordBall(generators, radius, elements, mu, lam)


class ConeEstimate:
    """
    A convex cone in :math:`\\mathfrak a_\\Theta`, given by the unit *rays*
    it was built from and inward facet *normals* (``<n, x> >= 0`` on the
    cone). All vectors are ambient coordinate vectors.
    """

    def __init__(self, rays, normals, centroid, theta, blocks,
                 degenerate=False):
        self.rays = rays
        self.normals = normals
        self.centroid = centroid
        self.theta = theta
        self.blocks = blocks
        self.degenerate = degenerate
        if len(normals):
            self.interior_margin = float(np.min(normals @ centroid))
        else:
            self.interior_margin = 0.0

    @property
    def dimension(self):
        return theta_basis(self.theta, self.blocks).shape[1]

    def contains(self, v, slack=1e-9):
        coords = v.coords if isinstance(v, ChamberVector) else \
            np.asarray(v, dtype=float)
        projected = theta_projector(self.theta, self.blocks) @ coords
        if np.linalg.norm(coords - projected) > 1e-8 * max(
                1.0, np.linalg.norm(coords)):
            return False
        unit = projected / np.linalg.norm(projected)
        if unit @ self.centroid <= 0:
            return False
        if self.degenerate:
            return bool(np.linalg.norm(unit - self.centroid) <= 1e-6)
        return bool(np.all(self.normals @ unit >= -slack))

    def as_dict(self):
        return {
            'rays': len(self.rays),
            'normals': self.normals,
            'centroid': self.centroid,
            'degenerate': self.degenerate,
            'interior_margin': self.interior_margin,
        }


def _projected_rays(ball, theta, source='lam'):
    projector = theta_projector(theta, ball.blocks)
    data = getattr(ball, source)[ball.nontrivial()] @ projector
    norms = np.linalg.norm(data, axis=1)
    return data[norms > 1e-12], norms[norms > 1e-12]


def limit_cone_estimate(ball, theta=None, strict=False):
    """
    Estimates the limit cone as the convex cone spanned by the normalized
    Jordan projections of the nontrivial elements of *ball*.

    A degenerate estimate (all rays coincide) is returned with
    :attr:`ConeEstimate.degenerate` set, or raises :class:`DegenerateCone` if
    *strict* is given.
    """
    blocks = ball.blocks
    theta = normalize_theta(theta, blocks)
    data, norms = _projected_rays(ball, theta)
    rays = data / norms[:, None]
    basis = theta_basis(theta, blocks)
    coords = rays @ basis
    mean = coords.mean(axis=0)
    mean /= np.linalg.norm(mean)
    spread = float(np.max(np.linalg.norm(coords - mean, axis=1)))
    rank = basis.shape[1]
    normals = np.zeros((0, rank))
    degenerate = rank == 1 or spread < 1e-9
    if not degenerate and rank == 2:
        perpendicular = np.array([-mean[1], mean[0]])
        angles = np.arctan2(coords @ perpendicular, coords @ mean)
        low, high = angles.min(), angles.max()
        edge_low = np.cos(low) * mean + np.sin(low) * perpendicular
        edge_high = np.cos(high) * mean + np.sin(high) * perpendicular
        normals = np.array([
            [-edge_low[1], edge_low[0]],
            [edge_high[1], -edge_high[0]],
        ])
    elif not degenerate:
        slice_basis = null_space(mean[None, :])
        heights = coords @ mean
        points = (coords / heights[:, None]) @ slice_basis
        try:
            hull = ConvexHull(points)
        except QhullError:
            degenerate = True
        else:
            found = []
            for equation in hull.equations:
                normal = -(slice_basis @ equation[:-1] + equation[-1] * mean)
                found.append(normal / np.linalg.norm(normal))
            normals = np.unique(np.round(np.array(found), 14), axis=0)
    if degenerate:
        message = 'Limit cone estimate is a single ray'
        if strict:
            raise DegenerateCone(message)
        if rank > 1:
            warnings.warn(message)
    centroid = basis @ mean
    cone = ConeEstimate(rays, normals @ basis.T if len(normals) else
                        np.zeros((0, basis.shape[0])), centroid, theta,
                        blocks, degenerate)
    log.info('Limit cone: %d rays, degenerate=%s, margin=%.4g', len(rays),
             degenerate, cone.interior_margin)
    return cone


class GrowthFit:

    def __init__(self, slope, stderr, count, window):
        self.slope = slope
        self.stderr = stderr
        self.count = count
        self.window = window

    def as_dict(self):
        return {'value': self.slope, 'stderr': self.stderr,
                'count': self.count, 'window': list(self.window)}


def completeness_radius(ball, theta=None):
    """
    The norm below which the ball contains every group element whose
    projection lies below that norm, estimated as the smallest norm among
    words of maximal length.
    """
    theta = normalize_theta(theta, ball.blocks)
    projector = theta_projector(theta, ball.blocks)
    longest = ball.mu[ball.lengths == ball.radius] @ projector
    return float(np.min(np.linalg.norm(longest, axis=1)))


def growth_indicator_estimate(ball, direction, aperture=0.3, theta=None,
                              min_samples=MIN_SAMPLES):
    """
    Slope of ``log #{g : mu_theta(g) in cone(direction, aperture),
    |mu_theta(g)| <= t}`` against ``t``, fitted over the upper 60% of the
    radii the ball covers completely.
    """
    if not 0 < aperture < np.pi / 4:
        raise ValueError('Aperture must lie in (0, pi/4)')
    theta = normalize_theta(theta, ball.blocks)
    unit = np.asarray(getattr(direction, 'coords', direction), dtype=float)
    unit = unit / np.linalg.norm(unit)
    data, norms = _projected_rays(ball, theta, 'mu')
    angles = np.arccos(np.clip((data / norms[:, None]) @ unit, -1, 1))
    inside = np.sort(norms[angles <= aperture])
    t_max = completeness_radius(ball, theta)
    inside = inside[inside <= t_max]
    if len(inside) < min_samples:
        raise TooFewSamples('Only %d elements in the cone window' %
                            len(inside))
    grid = np.linspace(FIT_START * t_max, t_max, FIT_POINTS)
    counts = np.searchsorted(inside, grid, side='right')
    keep = counts > 0
    if keep.sum() < 3:
        raise TooFewSamples('Cone window is empty at small radii')
    fit = stats.linregress(grid[keep], np.log(counts[keep]))
    log.debug('Growth fit along %s: slope %.5g +- %.2g over %d elements',
              np.array2string(unit, precision=4), fit.slope, fit.stderr,
              len(inside))
    return GrowthFit(float(fit.slope), float(fit.stderr), len(inside),
                     (float(grid[0]), float(grid[-1])))


class GrowthIndicator:
    """
    The growth indicator estimated on unit directions of a limit cone
    estimate. Values are computed on demand by :meth:`evaluate` and cached.
    """

    def __init__(self, ball, theta=None, aperture=0.3, cone=None,
                 directions=None):
        self.ball = ball
        self.theta = normalize_theta(theta, ball.blocks)
        self.aperture = aperture
        self.cone = cone or limit_cone_estimate(ball, self.theta)
        self.radius_used = ball.radius
        if directions is None:
            directions = [self.cone.centroid]
        self.directions = [self._unit(d) for d in directions]
        self._cache = {}

    @staticmethod
    def _unit(direction):
        coords = np.asarray(getattr(direction, 'coords', direction),
                            dtype=float)
        return coords / np.linalg.norm(coords)

    def fit(self, direction):
        unit = self._unit(direction)
        key = tuple(np.round(unit, 12))
        if key not in self._cache:
            self._cache[key] = growth_indicator_estimate(
                self.ball, unit, self.aperture, self.theta)
        return self._cache[key]

    def evaluate(self, direction):
        return self.fit(direction).slope

    @property
    def values(self):
        return [self.evaluate(d) for d in self.directions]

    def gradient(self, direction):
        """
        Gradient at the unit vector of *direction*: tangential part by
        central differences on the sphere (one Richardson step), radial part
        from 1-homogeneity.
        """
        unit = self._unit(direction)
        basis = theta_basis(self.theta, self.ball.blocks)
        y = basis.T @ unit
        if basis.shape[1] == 1:
            return unit.copy(), None
        value = self.evaluate(unit)
        gradient = value * y
        for tangent in null_space(y[None, :]).T:
            estimates = []
            for step in (STENCIL_STEP, STENCIL_STEP / 2):
                values = []
                for sign in (1, -1):
                    point = basis @ (np.cos(step) * y +
                                     sign * np.sin(step) * tangent)
                    if not self.cone.contains(point):
                        raise BoundaryTooClose(
                            'Gradient stencil leaves the limit cone')
                    values.append(self.evaluate(point))
                estimates.append((values[0] - values[1]) / (2 * step))
            gradient += ((4 * estimates[1] - estimates[0]) / 3) * tangent
        return basis @ gradient, value

    def concavity_defect(self, first, second):
        """
        Chord average minus midpoint value along the arc between two
        directions; concavity means a non-positive defect up to fit noise.
        """
        first, second = self._unit(first), self._unit(second)
        middle = self._unit(first + second)
        chord = 0.5 * (self.evaluate(first) + self.evaluate(second))
        midpoint = self.evaluate(middle) * np.linalg.norm(
            0.5 * (first + second))
        return chord - midpoint, self.fit(middle).stderr


def tangent_form(direction, indicator):
    """
    The linear form tangent to the growth indicator at *direction*,
    normalized to take the value 1 there.
    """
    coords = np.asarray(getattr(direction, 'coords', direction), dtype=float)
    norm = np.linalg.norm(coords)
    gradient, value = indicator.gradient(coords)
    if value is None:
        return LinearForm(gradient / norm, indicator.ball.blocks)
    return LinearForm(gradient / (value * norm), indicator.ball.blocks)


def exceptional_test(direction, indicator, theta=None):
    """
    Returns ``(exceptional, margin)`` where *margin* is the smallest
    ``|alpha(grad)| / |grad|`` over the roots of *theta*. A single root
    never gives an exceptional direction.
    """
    theta = normalize_theta(theta, indicator.ball.blocks)
    gradient, _ = indicator.gradient(direction)
    roots = simple_roots(indicator.ball.blocks)
    norm = np.linalg.norm(gradient)
    margin = min(abs(float(roots[t - 1] @ gradient)) / norm for t in theta)
    exceptional = len(theta) > 1 and margin < EXCEPTIONAL_TOLERANCE
    if exceptional:
        warnings.warn('Direction is exceptional (margin %.3g)' % margin)
    return exceptional, margin


def unit_gradient_rescale(direction, indicator):
    """
    The multiple ``c * v`` of the unit *direction* ``v`` whose gradient norm
    equals the indicator value.
    """
    coords = np.asarray(getattr(direction, 'coords', direction), dtype=float)
    unit = coords / np.linalg.norm(coords)
    gradient, value = indicator.gradient(unit)
    if value is None:
        factor = 1.0
    else:
        factor = float(np.linalg.norm(gradient) / value)
    return ChamberVector(factor * unit, indicator.ball.blocks, center=True)


def angle_between(v1, v2):
    v1 = np.asarray(getattr(v1, 'coords', v1), dtype=float)
    v2 = np.asarray(getattr(v2, 'coords', v2), dtype=float)
    cos = v1 @ v2 / (np.linalg.norm(v1) * np.linalg.norm(v2))
    return math.acos(max(-1.0, min(1.0, cos)))
