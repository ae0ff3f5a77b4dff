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
Symbolic coding of a ping-pong group: the subshift of reduced words, its
metrics, cylinders, the vector valued first return cocycle and the scalar
roof functions derived from it, and primitive periodic orbits.

Symbols are integer indices into the model's alphabet. For group models the
alphabet is the generator alphabet ``1, ..., k, -1, ..., -k``.
"""

import collections
import logging

import numpy as np
from scipy import stats

from .exceptions import (
    CapExceeded, NonPositiveRoof, NotConverged, NotMixing, ResolutionTooLow)
from .explorer import ping_pong_certificate
from .lie import (
    ChamberVector, FlagPoint, HolonomyDatum, block_mask, iwasawa_frames,
    jordan_projection, normalize_theta, theta_projector)
from .pool import WorkerPool
from .report import write_csv


log = logging.getLogger(__name__)

PERIOD_CAP = 18


def is_topologically_mixing(transition):
    """
    Returns the smallest ``N_T <= N**2`` such that every entry of
    ``T**N_T`` is positive, or ``None``.
    """
    transition = np.asarray(transition) > 0
    size = transition.shape[0]
    power = transition.copy()
    for exponent in range(1, size * size + 1):
        if power.all():
            return exponent
        power = (power.astype(np.int64) @ transition.astype(np.int64)) > 0
    return None


class SubshiftModel:
    """
    A one-sided subshift of finite type with transition matrix *transition*
    and metric base *beta0*.
    """

    def __init__(self, transition, beta0=0.5, alphabet=None,
                 generators=None):
        transition = (np.asarray(transition) > 0).astype(np.int8)
        if transition.ndim != 2 or \
                transition.shape[0] != transition.shape[1]:
            raise ValueError('Transition matrix must be square')
        if not 0 < beta0 < 1:
            raise ValueError('beta0 must lie in (0, 1)')
        if not transition.any(axis=0).all() or \
                not transition.any(axis=1).all():
            raise NotMixing('Transition matrix has an empty row or column')
        self.mixing_exponent = is_topologically_mixing(transition)
        if self.mixing_exponent is None:
            raise NotMixing('Transition matrix is not topologically mixing')
        transition.setflags(write=False)
        self.transition = transition
        self.beta0 = float(beta0)
        self.size = transition.shape[0]
        self.alphabet = tuple(alphabet) if alphabet is not None else \
            tuple(range(self.size))
        self.generators = generators
        self.successors = [np.flatnonzero(row) for row in transition]

    def admissible(self, word):
        return all(self.transition[a, b] for a, b in zip(word, word[1:]))

    def words(self, length):
        """
        All admissible words of *length* as rows of an integer array, in
        lexicographic order.
        """
        words = np.arange(self.size)[:, None]
        for _ in range(length - 1):
            rows, symbols = np.nonzero(self.transition[words[:, -1]])
            words = np.column_stack([words[rows], symbols])
        return words

    def random_words(self, count, length, rng, prefix=()):
        """
        Samples admissible words by the uniform Markov chain over successors.
        """
        words = np.empty((count, length), dtype=np.int64)
        prefix = tuple(prefix)
        words[:, :len(prefix)] = prefix
        start = len(prefix)
        if start == 0:
            words[:, 0] = rng.integers(self.size, size=count)
            start = 1
        for j in range(start, length):
            for i in range(count):
                choices = self.successors[words[i, j - 1]]
                words[i, j] = choices[rng.integers(len(choices))]
        return words

    def letters(self, word):
        return tuple(self.alphabet[s] for s in word)


def build_sft(generators, beta0=0.5, certify=True):
    """
    The subshift of reduced words: letter ``s`` may not be followed by its
    inverse.
    """
    if certify:
        ping_pong_certificate(generators)
    alphabet = generators.alphabet
    size = len(alphabet)
    transition = np.ones((size, size), dtype=np.int8)
    for i, s in enumerate(alphabet):
        transition[i, alphabet.index(-s)] = 0
    return SubshiftModel(transition, beta0, alphabet, generators)


def full_shift(size, beta0=0.5):
    return SubshiftModel(np.ones((size, size)), beta0)


def _disagreement(x, y):
    for j, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return j
    if len(x) == len(y):
        return None
    raise ResolutionTooLow('Sequences agree on all %d available symbols' %
                           min(len(x), len(y)))


def metric_d(x, y, beta0=0.5):
    """
    ``beta0 ** j`` for the first index ``j`` where *x* and *y* disagree;
    ``0`` for identical sequences.
    """
    j = _disagreement(tuple(x), tuple(y))
    return 0.0 if j is None else beta0 ** j


def metric_D(u, v, beta0=0.5):
    """
    Diameter of the smallest cylinder containing both sequences; ``1`` for
    sequences in different first-symbol cylinders.
    """
    j = _disagreement(tuple(u), tuple(v))
    if j is None:
        return 0.0
    if j == 0:
        return 1.0
    return Cylinder.diameter_at(j - 1, beta0)


class Cylinder:
    """
    The set of sequences starting with *word*.
    """

    __slots__ = ('word', 'model')

    def __init__(self, word, model):
        word = tuple(int(s) for s in word)
        if not word:
            raise ValueError('Cylinder words must be nonempty')
        if not model.admissible(word):
            raise ValueError('Word %r is not admissible' % (word,))
        self.word = word
        self.model = model

    @staticmethod
    def diameter_at(depth, beta0):
        return beta0 ** (depth + 1)

    @property
    def depth(self):
        return len(self.word) - 1

    @property
    def diameter(self):
        return self.diameter_at(self.depth, self.model.beta0)

    def children(self):
        return [Cylinder(self.word + (int(s),), self.model)
                for s in self.model.successors[self.word[-1]]]

    def representative(self, length):
        """
        A sequence of *length* symbols inside the cylinder: the periodic
        extension of the word when it closes up, the greedy admissible
        continuation otherwise.
        """
        return extend_word(self.word, length, self.model)

    def __repr__(self):
        return 'Cylinder(%r)' % (self.word,)

    def __eq__(self, other):
        return isinstance(other, Cylinder) and self.word == other.word

    def __hash__(self):
        return hash(self.word)


def extend_word(word, length, model):
    word = tuple(int(s) for s in word)
    if len(word) >= length:
        return word
    if model.transition[word[-1], word[0]]:
        repeats = -(-length // len(word))
        return (word * repeats)[:length]
    extended = list(word)
    while len(extended) < length:
        extended.append(int(model.successors[extended[-1]][0]))
    return tuple(extended)


def _word_array(words, length, model):
    return np.array([extend_word(w, length, model)[:length] for w in words],
                    dtype=np.int64)


FirstReturn = collections.namedtuple(
    'FirstReturn', ('vector', 'gap', 'bound', 'holonomy'))


class RoofCocycle:
    """
    The first return vector cocycle ``K`` of a group model truncated at
    *depth_cutoff*: ``K(u)`` is the Iwasawa cocycle of the first letter of
    ``u`` at the flag coded by the remaining letters, projected to
    ``a_theta``. Birkhoff sums of ``K`` along a periodic sequence telescope
    to the Jordan projection of the period's group element.
    """

    def __init__(self, model, theta=None, depth_cutoff=12, tolerance=1e-9,
                 forms=()):
        if model.generators is None:
            raise ValueError('Roof cocycles need a group model')
        self.model = model
        self.generators = model.generators
        self.blocks = model.generators.blocks
        self.theta = normalize_theta(theta, self.blocks)
        self.depth_cutoff = int(depth_cutoff)
        self.tolerance = float(tolerance)
        self.forms = list(forms)
        self.vector_values = {}
        self._projector = theta_projector(self.theta, self.blocks)
        self._letters = np.stack([self.generators.letter(a).entries
                                  for a in model.alphabet])
        rng = np.random.default_rng(0)
        self.origin = FlagPoint.from_matrix(
            rng.normal(size=self._letters.shape[1:]) *
            block_mask(self.blocks), self.blocks)

    def _truncated(self, words, depth):
        count = len(words)
        frame = np.broadcast_to(self.origin.frame,
                                (count,) + self.origin.frame.shape).copy()
        for j in range(depth, 0, -1):
            frame, _ = iwasawa_frames(self._letters[words[:, j]], frame,
                                       self.blocks)
        _, sigma = iwasawa_frames(self._letters[words[:, 0]], frame,
                                   self.blocks)
        return sigma @ self._projector

    def vectors(self, words, depth=None):
        """
        ``K`` at depth *depth* for every word (extended to ``depth + 1``
        symbols if needed), together with the gap to depth ``depth - 1``.
        """
        depth = self.depth_cutoff if depth is None else int(depth)
        if depth > self.depth_cutoff:
            raise ValueError('Depth %d exceeds the cutoff %d' %
                             (depth, self.depth_cutoff))
        words = _word_array(words, depth + 1, self.model)
        current = self._truncated(words, depth)
        previous = self._truncated(words, depth - 1)
        gaps = np.max(np.abs(current - previous), axis=1)
        return current, gaps

    def first_return_vector(self, cylinder, depth=None):
        """
        ``K`` at the representative of *cylinder*, with the Cauchy gap
        between the two deepest truncations and a geometric truncation bound.
        """
        depth = self.depth_cutoff if depth is None else int(depth)
        word = cylinder.representative(depth + 1)
        values = []
        for d in (depth - 2, depth - 1, depth):
            vector, _ = self.vectors([word], d)
            values.append(vector[0])
        gap = float(np.max(np.abs(values[2] - values[1])))
        previous = float(np.max(np.abs(values[1] - values[0])))
        if gap > self.tolerance:
            raise NotConverged('First return vector of %r changed by %.3g '
                               'at depth %d' % (cylinder.word, gap, depth),
                               gap)
        ratio = min(max(gap / previous, 1e-6), 0.99) if previous > 0 \
            else self.model.beta0
        bound = gap * ratio / (1 - ratio)
        vector = ChamberVector(values[2], self.blocks, center=True)
        self.vector_values[cylinder.word] = vector
        holonomy = HolonomyDatum(vector, np.eye(len(vector)), self.theta)
        return FirstReturn(vector, gap, bound, holonomy)

    def roof(self, form, cylinder):
        """
        The scalar roof of *form* at the representative of *cylinder*.
        """
        if not any(form is f for f in self.forms):
            self.forms.append(form)
        return float(CocycleRoof(self, form).evaluate([cylinder.word])[0])


class ConstantRoof:

    def __init__(self, model, value):
        if value <= 0:
            raise NonPositiveRoof('Constant roof must be positive',
                                  value=value)
        self.model = model
        self.value = float(value)

    def evaluate(self, words):
        return np.full(len(words), self.value)

    def scaled(self, factor):
        return ConstantRoof(self.model, self.value * factor)


class FunctionRoof:
    """
    A roof given by a Python function of the word. The function must only
    depend on a bounded number of leading symbols.
    """

    def __init__(self, model, function, factor=1.0):
        self.model = model
        self.function = function
        self.factor = factor

    def evaluate(self, words):
        values = np.array([self.factor * self.function(tuple(w))
                           for w in words], dtype=float)
        _check_positive(words, values)
        return values

    def scaled(self, factor):
        return FunctionRoof(self.model, self.function, self.factor * factor)


class CocycleRoof:
    """
    The roof ``form(K)`` of a linear form composed with a roof cocycle.
    """

    def __init__(self, cocycle, form, depth=None):
        self.cocycle = cocycle
        self.model = cocycle.model
        self.form = form
        self.depth = cocycle.depth_cutoff if depth is None else depth

    def evaluate(self, words):
        vectors, _ = self.cocycle.vectors(words, self.depth)
        values = self.form.evaluate(vectors)
        _check_positive(words, values)
        return values

    def scaled(self, factor):
        return CocycleRoof(self.cocycle, self.form.scaled(factor),
                           self.depth)


def _check_positive(words, values):
    bad = np.flatnonzero(~(values > 0))
    if len(bad):
        raise NonPositiveRoof('Roof is not positive at %r' %
                              (tuple(words[bad[0]]),),
                              tuple(words[bad[0]]), float(values[bad[0]]))


def roof(cocycle, form, cylinder):
    return cocycle.roof(form, cylinder)


def birkhoff_sum(roof, word, k):
    """
    ``sum(roof(shift**j word) for j < k)``.
    """
    if k == 0:
        return 0.0
    word = tuple(word)
    if k > len(word):
        raise ValueError('Word has only %d symbols' % len(word))
    return float(np.sum(roof.evaluate([word[j:] for j in range(k)])))


class PeriodicOrbit:
    """
    A primitive periodic orbit, represented by the Lyndon word of its
    rotation class.
    """

    def __init__(self, word, model):
        self.word = tuple(word)
        self.model = model
        self.element = None
        self.lam = None
        if model.generators is not None:
            self.element = model.generators.element(model.letters(self.word))
            self.lam = jordan_projection(self.element)

    @property
    def period(self):
        return len(self.word)

    def length(self, form, theta=None):
        """
        The scalar period ``form(lambda_theta(g))`` of the orbit.
        """
        if self.lam is None:
            raise ValueError('Orbit of a model without generators')
        coords = self.lam.coords
        if theta is not None:
            coords = coords @ theta_projector(theta, self.lam.blocks)
        return float(form(coords))

    def periodic_word(self, length):
        return extend_word(self.word, length, self.model)

    def __repr__(self):
        return 'PeriodicOrbit(%r)' % (self.word,)


def lyndon_words(model, first, length):
    """
    Lyndon words of *length* starting with *first* whose transitions,
    including the closing one, are admissible (FKM generation with pruning).
    """
    k = model.size
    transition = model.transition
    word = [0] * (length + 1)
    word[1] = first
    found = []

    def generate(t, p):
        if t > length:
            if p == length and transition[word[length], word[1]]:
                found.append(tuple(word[1:]))
            return
        for symbol in range(word[t - p], k):
            if not transition[word[t - 1], symbol]:
                continue
            word[t] = symbol
            generate(t + 1, p if symbol == word[t - p] else t)

    generate(2, 1)
    return found


def periodic_orbits(model, max_period, cap=PERIOD_CAP, pool=None):
    """
    One representative of every primitive periodic orbit with period up to
    *max_period*, ordered by period and then lexicographically.
    """
    if max_period > cap:
        raise CapExceeded('Period %d exceeds the cap %d' % (max_period, cap))
    pool = pool or WorkerPool()

    def job(first):
        words = []
        for length in range(1, max_period + 1):
            words.extend(lyndon_words(model, first, length))
        return words

    parts = pool.map(job, range(model.size))
    words = sorted((w for part in parts for w in part),
                   key=lambda w: (len(w), w))
    log.info('Found %d primitive orbits up to period %d', len(words),
             max_period)
    return [PeriodicOrbit(w, model) for w in words]


def write_orbits_csv(path, orbits, form=None):
    header = ['word', 'period', 'trace']
    size = len(orbits[0].lam) if orbits and orbits[0].lam is not None else 0
    header += ['lambda%d' % i for i in range(size)]
    if form is not None:
        header.append('length')
    rows = []
    for orbit in orbits:
        row = [' '.join(str(s) for s in orbit.model.letters(orbit.word)),
               orbit.period,
               orbit.element.trace() if orbit.element is not None else '']
        if orbit.lam is not None:
            row += list(orbit.lam.coords)
        if form is not None:
            row.append(orbit.length(form))
        rows.append(row)
    return write_csv(path, header, rows)


class HyperbolicityFit:

    def __init__(self, c0, kappa1, kappa2):
        self.c0 = c0
        self.kappa1 = kappa1
        self.kappa2 = kappa2

    def as_dict(self):
        return {'c0': self.c0, 'kappa1': self.kappa1, 'kappa2': self.kappa2}


def hyperbolicity_fit(model, samples=200, length=16, seed=0):
    """
    Fits ``c0 * kappa2**j <= d(shift**j u, shift**j v) / d(u, v) <=
    kappa1**j`` on sampled pairs sharing a common prefix.
    """
    rng = np.random.default_rng(seed)
    steps = []
    logs = []
    for _ in range(samples):
        common = int(rng.integers(2, length - 2))
        u = model.random_words(1, length, rng)[0]
        v = model.random_words(1, length, rng, prefix=u[:common])[0]
        if tuple(u) == tuple(v):
            continue
        try:
            base = metric_d(u, v, model.beta0)
        except ResolutionTooLow:
            continue
        for j in range(1, common):
            steps.append(j)
            logs.append(np.log(metric_d(u[j:], v[j:], model.beta0) / base))
    steps = np.array(steps)
    logs = np.array(logs)
    fit = stats.linregress(steps, logs)
    kappa2 = float(np.exp(fit.slope))
    c0 = float(np.exp(np.min(logs - fit.slope * steps)))
    kappa1 = float(np.exp(np.max(logs / steps)))
    return HyperbolicityFit(min(c0, 1.0), kappa1, kappa2)


def cylinder_contraction_fit(model, depth=4):
    """
    Returns ``(p0, rho)``: the smallest refinement step and the largest ratio
    of subcylinder to cylinder diameter over all cylinders up to *depth*.
    """
    ratio = 0.0
    for k in range(depth + 1):
        for word in model.words(k + 1):
            parent = Cylinder(word, model)
            for child in parent.children():
                ratio = max(ratio, child.diameter / parent.diameter)
    return 1, ratio


def roof_lipschitz(roof, samples=200, length=None, seed=0):
    """
    Fits the roof constant ``C_tau`` with ``0 < roof <= C_tau / 2`` and
    ``Lip(roof) <= C_tau / 2`` on depth-one cylinders, from sampled pairs.
    """
    model = roof.model
    depth = getattr(roof, 'depth', 8)
    length = length or depth + 4
    rng = np.random.default_rng(seed)
    left = model.random_words(samples, length, rng)
    right = np.array([
        model.random_words(1, length, rng,
                           prefix=u[:int(rng.integers(2, length))])[0]
        for u in left])
    values_left = roof.evaluate(left)
    values_right = roof.evaluate(right)
    quotient = 0.0
    for u, v, a, b in zip(left, right, values_left, values_right):
        try:
            distance = metric_d(u, v, model.beta0)
        except ResolutionTooLow:
            continue
        if distance > 0:
            quotient = max(quotient, abs(a - b) / distance)
    top = float(max(values_left.max(), values_right.max()))
    return 2 * max(quotient, top), quotient
