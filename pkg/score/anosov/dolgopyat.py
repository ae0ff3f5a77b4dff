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
Dolgopyat operators of a normalized transfer operator and numerical checks
of the cancellation mechanism behind them.

All lengths and diameters are measured in the symbolic metric with base
``beta0``: a cylinder of ``k`` symbols has diameter ``beta0 ** k`` and the
shift expands distances by exactly ``1 / beta0``.
"""

import itertools
import logging
import math

import numpy as np

from .exceptions import (
    LedgerInfeasible, LnicFailure, MechanismFailure, NotInCone)
from .pool import WorkerPool
from .symbolic import (
    Cylinder, cylinder_contraction_fit, extend_word, hyperbolicity_fit,
    metric_d, roof_lipschitz)


log = logging.getLogger(__name__)

LNIC_THRESHOLD = 1e-6
FIT_MARGIN = 0.01
DOMINATION_TOLERANCE = 1e-12


def smallest_p1(rho):
    p1 = 1
    while 0.5 - 2 * rho ** (p1 - 1) < 1.0 / 16:
        p1 += 1
    return p1


class ConstantsLedger:
    """
    The constants of the Dolgopyat construction. :meth:`check` evaluates
    every inequality they must satisfy and raises
    :class:`LedgerInfeasible` naming the first one that fails. Quantities
    that under- or overflow doubles (``mu``, ``kappa2 ** m``) are compared
    through their logarithms.
    """

    def __init__(self, epsilon, epsilon1, rho, p0, p1, c0, kappa1, kappa2,
                 A0, E, m, log_mu, T, delta_hat=1.0):
        self.epsilon = epsilon
        self.epsilon1 = epsilon1
        self.rho = rho
        self.p0 = p0
        self.p1 = p1
        self.c0 = c0
        self.kappa1 = kappa1
        self.kappa2 = kappa2
        self.A0 = A0
        self.E = E
        self.m = m
        self.log_mu = log_mu
        self.T = T
        self.delta_hat = delta_hat

    @property
    def mu(self):
        return math.exp(self.log_mu)

    def log_section_bound(self):
        return math.log(max(
            8 * self.A0,
            4 * self.E * self.epsilon1 * self.rho ** self.p1 / self.c0,
            512 * self.E / (self.c0 * self.epsilon * self.rho)))

    def log_mu_bound(self, m=None):
        m = self.m if m is None else m
        first = math.log(2 * self.E * self.epsilon1 * self.c0) + \
            (self.p0 * self.p1 + 1) * math.log(self.rho) - \
            m * math.log(self.kappa1)
        third = 2 * math.log(self.epsilon * self.rho * self.epsilon1 / 64) \
            - math.log(256) - 2 * m * self.T
        return min(first, math.log(0.25), third)

    def inequalities(self):
        return [
            ('rho < 1', self.rho < 1),
            ('c0 <= 1 < kappa2 <= kappa1',
             self.c0 <= 1 < self.kappa2 <= self.kappa1),
            ('1/2 - 2 rho^(p1-1) >= 1/16',
             0.5 - 2 * self.rho ** (self.p1 - 1) >= 1.0 / 16),
            ('E > 2 A0 > 4', self.E > 2 * self.A0 > 4),
            ('epsilon1 < min(delta_hat, pi c0 (kappa2 - 1) / (2 T))',
             self.epsilon1 < min(self.delta_hat, math.pi * self.c0 *
                                 (self.kappa2 - 1) / (2 * self.T))),
            ('kappa2^m > max(8 A0, 4 E epsilon1 rho^p1 / c0, '
             '512 E / (c0 epsilon rho))',
             self.m * math.log(self.kappa2) > self.log_section_bound()),
            ('mu < min(2 E epsilon1 c0 rho^(p0 p1 + 1) / kappa1^m, 1/4, '
             '(epsilon rho epsilon1 / 64)^2 / (256 e^(2 m T)))',
             self.log_mu < self.log_mu_bound()),
        ]

    def check(self):
        for name, holds in self.inequalities():
            if not holds:
                raise LedgerInfeasible('Ledger violates %s' % name, name)
        return True

    def as_dict(self):
        return {
            'epsilon': self.epsilon, 'epsilon1': self.epsilon1,
            'rho': self.rho, 'p0': self.p0, 'p1': self.p1, 'c0': self.c0,
            'kappa1': self.kappa1, 'kappa2': self.kappa2, 'A0': self.A0,
            'E': self.E, 'm': self.m, 'log_mu': self.log_mu, 'T': self.T,
            'delta_hat': self.delta_hat,
        }


def build_ledger(normalized, epsilon, a_grid=(0.0,), m0=1, lasota_yorke=None,
                 samples=200, seed=0):
    """
    Fits the hyperbolicity and roof constants of the model behind
    *normalized* and chooses the smallest section length ``m >= m0`` and a
    ``mu`` satisfying every ledger inequality.
    """
    disc = normalized.disc
    model = disc.model
    fit = hyperbolicity_fit(model, samples=samples, seed=seed)
    kappa2 = fit.kappa2
    kappa1 = max(fit.kappa1, kappa2 * (1 + FIT_MARGIN))
    c0 = min(fit.c0, 1 - FIT_MARGIN)
    p0, rho = cylinder_contraction_fit(model)
    p1 = smallest_p1(rho)
    c_tau, _ = roof_lipschitz(disc.roof, samples=samples, seed=seed)
    sup = max(float(np.max(np.abs(normalized.potential(a))))
              for a in a_grid)
    T = max(sup, 2 * c_tau)
    A0 = 1.01 * 2 / c0 * math.exp(T / (c0 * (kappa2 - 1))) * \
        max(1.0, T / (kappa2 - 1))
    if lasota_yorke is not None:
        A0 = max(A0, lasota_yorke)
    E = 2.02 * A0
    delta_hat = 1.0
    epsilon1 = 0.9 * min(delta_hat, math.pi * c0 * (kappa2 - 1) / (2 * T))
    ledger = ConstantsLedger(epsilon, epsilon1, rho, p0, p1, c0, kappa1,
                             kappa2, A0, E, m0, 0.0, T, delta_hat)
    m = max(int(m0), 1)
    while m * math.log(kappa2) <= ledger.log_section_bound():
        m += 1
    ledger.m = m
    ledger.log_mu = ledger.log_mu_bound(m) - math.log(2)
    ledger.check()
    log.info('Ledger: m=%d, log mu=%.4g, A0=%.4g', m, ledger.log_mu, A0)
    return ledger


def _bridge(model, start, target, length):
    """
    The lexicographically smallest admissible word of *length* symbols from
    *start* to *target*.
    """
    transition = model.transition.astype(np.int64)
    reach = [np.eye(model.size, dtype=bool)]
    for _ in range(length):
        reach.append((transition @ reach[-1].astype(np.int64)) > 0)
    if not reach[length - 1][start, target]:
        return None
    word = [start]
    for remaining in range(length - 2, -1, -1):
        for symbol in model.successors[word[-1]]:
            if reach[remaining][symbol, target]:
                word.append(int(symbol))
                break
    return tuple(word)


def build_sections(model, first, m, count=None):
    """
    Prefixes ``p_j`` of *m* symbols such that ``p_j u`` is admissible for
    every ``u`` starting with *first*. The prefixes end in a common symbol
    and differ in the symbol before it.
    """
    if m < 3:
        raise ValueError('Sections need at least three symbols')
    ends = [e for e in range(model.size) if model.transition[e, first]]
    for end in ends:
        middles = [s for s in range(model.size) if model.transition[s, end]]
        prefixes = []
        for middle in middles:
            for start in range(model.size):
                filler = _bridge(model, start, middle, m - 1)
                if filler is not None:
                    prefixes.append(filler + (end,))
                    break
        if len(prefixes) >= 2:
            return prefixes[:count] if count else prefixes
    raise ValueError('No two distinct sections found')


def _lnic_pairs(model, first, scan_depth, length):
    for depth in range(1, scan_depth + 1):
        for prefix in model.words(depth):
            if prefix[0] != first:
                continue
            options = model.successors[prefix[-1]]
            for a, b in itertools.combinations(options, 2):
                u = extend_word(tuple(prefix) + (int(a),), length, model)
                v = extend_word(tuple(prefix) + (int(b),), length, model)
                yield u, v


def section_differences(roof, sections, words, m):
    """
    ``tau_m(p_j u) - tau_m(p_0 u)`` for every section ``j >= 1`` (columns)
    and every word ``u`` (rows).
    """
    sums = []
    for prefix in sections:
        shifted = []
        for u in words:
            sequence = tuple(prefix) + tuple(u)
            shifted.extend(sequence[i:] for i in range(m))
        values = roof.evaluate(shifted).reshape(len(words), m)
        sums.append(values.sum(axis=1))
    sums = np.array(sums).T
    return sums[:, 1:] - sums[:, :1]


class LnicResult:

    def __init__(self, epsilon, sections, pairs, witness):
        self.epsilon = epsilon
        self.sections = sections
        self.pairs = pairs
        self.witness = witness

    def as_dict(self):
        return {'epsilon': self.epsilon, 'sections': self.sections,
                'pairs': self.pairs, 'witness': self.witness}


def lnic_scan(roof, m, first=0, scan_depth=3, sections=None, strict=True):
    """
    The largest ``epsilon`` such that every scanned pair ``(u, v)`` of
    sequences starting with *first* has a section ``j`` with
    ``|D_j(u) - D_j(v)| >= epsilon d(u, v)``, where ``D_j`` is the
    difference of the ``m``-step roof sums along section ``j`` and section
    ``0``. Pairs disagree within *scan_depth* symbols.
    """
    model = roof.model
    if sections is None:
        sections = build_sections(model, first, m)
    length = getattr(roof, 'depth', 0) + scan_depth + 2
    pairs = list(_lnic_pairs(model, first, scan_depth, length))
    left = section_differences(roof, sections, [p[0] for p in pairs], m)
    right = section_differences(roof, sections, [p[1] for p in pairs], m)
    distances = np.array([metric_d(u, v, model.beta0) for u, v in pairs])
    ratios = np.max(np.abs(left - right), axis=1) / distances
    worst = int(np.argmin(ratios))
    epsilon = float(ratios[worst])
    result = LnicResult(epsilon, sections, len(pairs), pairs[worst])
    log.info('LNIC constant %.4g over %d pairs', epsilon, len(pairs))
    if strict and epsilon < LNIC_THRESHOLD:
        raise LnicFailure('LNIC constant %.3g is below %g' %
                          (epsilon, LNIC_THRESHOLD), epsilon)
    return result


class DolgopyatStructure:
    """
    Cylinders ``C_l`` of diameter at most ``epsilon1 / |b|``, their
    refinements ``D_k`` by ``p0 p1`` symbols, the section prefixes ``v_j``
    and the sets ``X_{j,k} = v_j(D_k)``, all inside the first-symbol
    cylinder of *first*.
    """

    def __init__(self, b, m, ledger, model, first, c_words, d_words,
                 d_parent, sections):
        self.b = b
        self.m = m
        self.ledger = ledger
        self.model = model
        self.first = first
        self.c_words = c_words
        self.d_words = d_words
        self.d_parent = d_parent
        self.sections = np.array(sections, dtype=np.int64)

    @property
    def j0(self):
        return len(self.sections) - 1

    @property
    def xi(self):
        return [(j, k) for j in range(len(self.sections))
                for k in range(len(self.d_words))]

    def x_words(self, j, k):
        return tuple(self.sections[j].tolist()) + \
            tuple(self.d_words[k].tolist())

    def c_diameter(self):
        return Cylinder.diameter_at(self.c_words.shape[1] - 1,
                                    self.model.beta0)

    def x_diameter(self):
        length = self.m + self.d_words.shape[1]
        return Cylinder.diameter_at(length - 1, self.model.beta0)

    def log_beta_lipschitz(self):
        """
        Logarithms of the Lipschitz constant of ``beta_J`` and of its
        bound ``mu |b| kappa1^m / (epsilon1 c0 rho^(p0 p1 + 1))``.
        """
        ledger = self.ledger
        length = self.m + self.d_words.shape[1]
        actual = ledger.log_mu - (length - 1) * math.log(self.model.beta0)
        bound = ledger.log_mu + math.log(abs(self.b)) + \
            self.m * math.log(ledger.kappa1) - math.log(
                ledger.epsilon1 * ledger.c0) - \
            (ledger.p0 * ledger.p1 + 1) * math.log(ledger.rho)
        return actual, bound

    def check_sandwich(self):
        ledger = self.ledger
        upper = ledger.epsilon1 / abs(self.b)
        diameter = self.c_diameter()
        if not ledger.rho * upper <= diameter <= upper:
            return False
        lower = ledger.epsilon1 * ledger.c0 * ledger.rho ** (
            ledger.p0 * ledger.p1 + 1) / (abs(self.b) * ledger.kappa1 **
                                          self.m)
        return self.x_diameter() >= lower

    def disjoint(self):
        """
        Exact check that the section images and the sets ``X_{j,k}`` are
        pairwise disjoint. Words of one family share their length, so the
        cylinders are disjoint iff the words are distinct.
        """
        prefixes = set(tuple(p) for p in self.sections.tolist())
        if len(prefixes) != len(self.sections):
            return False
        x_words = set(self.x_words(j, k) for j, k in self.xi)
        return len(x_words) == len(self.xi)

    def as_dict(self):
        actual, bound = self.log_beta_lipschitz()
        return {
            'b': self.b, 'm': self.m, 'C': len(self.c_words),
            'D': len(self.d_words), 'sections': self.sections.tolist(),
            'sandwich': self.check_sandwich(),
            'log_beta_lipschitz': actual,
            'log_beta_lipschitz_bound': bound,
            'ledger': self.ledger.as_dict(),
        }


def build_structure(b, ledger, model, first=0, m=None, sections=None):
    """
    Builds the cylinder families of the Dolgopyat operators at frequency
    *b* (``|b| > 1``).
    """
    if abs(b) <= 1:
        raise ValueError('Dolgopyat structures need |b| > 1')
    ledger.check()
    m = ledger.m if m is None else m
    target = ledger.epsilon1 / abs(b)
    depth = 0
    while Cylinder.diameter_at(depth, model.beta0) > target:
        depth += 1
    all_words = model.words(depth + 1)
    c_words = all_words[all_words[:, 0] == first]
    extension = ledger.p0 * ledger.p1
    tails = model.words(extension)
    d_rows = []
    d_parent = []
    for index, word in enumerate(c_words):
        for tail in tails[model.transition[word[-1], tails[:, 0]] > 0]:
            d_rows.append(np.concatenate([word, tail]))
            d_parent.append(index)
    d_words = np.array(d_rows)
    d_parent = np.array(d_parent)
    if sections is None:
        sections = build_sections(model, first, m)
    structure = DolgopyatStructure(b, m, ledger, model, first, c_words,
                                   d_words, d_parent, sections)
    log.debug('Structure at b=%g: %d C-cylinders, %d D-cylinders', b,
              len(c_words), len(d_words))
    return structure


class ConeFunction:
    """
    A positive function on the discretization in the cone ``C_B``:
    ``|h(u) - h(v)| <= B h(u) D(u, v)`` for sequences in a common first
    symbol cylinder.
    """

    def __init__(self, values, B, norms):
        values = np.asarray(values, dtype=float)
        if not np.all(values > 0):
            raise NotInCone('Cone functions must be positive')
        constant = cone_constant(values, values, norms)
        if constant > B * (1 + DOMINATION_TOLERANCE):
            raise NotInCone('Cone constant %.4g exceeds %.4g' %
                            (constant, B))
        self.values = values
        self.B = B
        self.norms = norms
        self.constant = constant


def cone_constant(values, weights, norms):
    """
    An upper bound of ``|H(u) - H(v)| / (h(u) D(u, v))`` over pairs sharing
    their first symbol, for ``H = values`` and ``h = weights``.
    """
    best = 0.0
    for j, groups in enumerate(norms.groups, 1):
        counts = np.array([len(g) for g in groups])
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        order = np.concatenate(groups)
        sub = values[order]
        low = np.minimum.reduceat(weights[order], starts)
        if np.iscomplexobj(sub):
            centre = np.add.reduceat(sub, starts) / counts
            spread = 2 * np.maximum.reduceat(
                np.abs(sub - np.repeat(centre, counts)), starts)
        else:
            spread = np.maximum.reduceat(sub, starts) - \
                np.minimum.reduceat(sub, starts)
        best = max(best, float(np.max(spread / low)) / norms.beta0 ** j)
    return best


class SectionTables:
    """
    Per section ``j`` and basis word ``u``: the basis index of ``v_j u``
    and the branch indices of the ``m`` windows of ``v_j u``, from which the
    ``m``-step potential sums are read off the discretized tables.
    """

    def __init__(self, structure, disc):
        depth = disc.depth
        if depth < structure.d_words.shape[1]:
            raise ValueError('Discretization depth %d is below the D depth '
                             '%d' % (depth, structure.d_words.shape[1]))
        branch_index = {b: i for i, b in enumerate(disc.branches)}
        basis_index = {tuple(w): i for i, w in enumerate(disc.basis)}
        self.inside = disc.basis[:, 0] == structure.first
        words = [tuple(w) for w in disc.basis[self.inside]]
        m = structure.m
        self.windows = []
        self.targets = []
        for prefix in structure.sections:
            windows = np.empty((len(words), m), dtype=np.int64)
            targets = np.empty(len(words), dtype=np.int64)
            for row, u in enumerate(words):
                sequence = tuple(int(s) for s in prefix) + u
                targets[row] = basis_index[sequence[:depth]]
                for i in range(m):
                    windows[row, i] = branch_index[
                        sequence[i:i + depth + 1]]
            self.windows.append(windows)
            self.targets.append(targets)
        self.rows = np.flatnonzero(self.inside)
        self.membership = np.full(disc.size, -1, dtype=np.int64)
        d_index = {tuple(w): k for k, w in enumerate(structure.d_words)}
        length = structure.d_words.shape[1]
        for row in self.rows:
            self.membership[row] = d_index.get(
                tuple(disc.basis[row, :length]), -1)


class DolgopyatOperator:
    """
    ``N_{a,J} h = L_a^m (beta_J h)`` on the discretization of *normalized*.
    """

    def __init__(self, normalized, structure, a=0.0):
        self.normalized = normalized
        self.structure = structure
        self.a = a
        self.tables = SectionTables(structure, normalized.disc)
        potential = normalized.potential(a)
        tau = normalized.disc.tau
        self.section_potential = [potential[w].sum(axis=1)
                                  for w in self.tables.windows]
        self.section_roof = [tau[w].sum(axis=1)
                             for w in self.tables.windows]
        self.real = normalized.real_operator(a)

    def iterate(self, values, b=None):
        operator = self.real if b is None else \
            self.normalized.operator(b, self.a)
        for _ in range(self.structure.m):
            values = operator @ values
        return values

    def branch_terms(self, values, j, b=None):
        """
        ``exp(xi tau_m(v_j u)) values(v_j u)`` for ``u`` in the first-symbol
        cylinder of the structure.
        """
        weight = self.section_potential[j]
        if b is not None:
            weight = weight + 1j * b * self.section_roof[j]
        return np.exp(weight) * values[self.tables.targets[j]]

    def apply(self, values, J, mu=None):
        mu = self.structure.ledger.mu if mu is None else mu
        result = self.iterate(np.asarray(values, dtype=float))
        if not J or mu == 0:
            return result
        members = self.tables.membership[self.tables.rows]
        correction = np.zeros(len(self.tables.rows))
        for j, k in J:
            mask = members == k
            correction[mask] += self.branch_terms(values, j)[mask].real
        result = result.copy()
        result[self.tables.rows] -= mu * correction
        return result


def apply_dolgopyat(h, J, operator, mu=None):
    """
    ``N_{a,J} h`` for a cone function *h*; returns a :class:`ConeFunction`
    in the cone of the same parameter.
    """
    values = operator.apply(h.values, J, mu)
    return ConeFunction(values, h.B, h.norms)


def select_dense_subset(operator, H, h, b, mu=None):
    """
    Chooses ``J``: for every ``D_k`` add ``(0, k)`` if for some section
    ``j`` the pair of branch terms of ``H`` is dominated by the terms of
    ``h`` with ``(1 - mu)`` on section ``0``, otherwise add ``(j, k)`` if
    the same holds with ``(1 - mu)`` on section ``j``. Returns ``(J,
    dense)`` where *dense* tells if every ``C_l`` contains a chosen
    ``D_k``.
    """
    structure = operator.structure
    mu = structure.ledger.mu if mu is None else mu
    members = operator.tables.membership[operator.tables.rows]
    twisted = [operator.branch_terms(H, j, b)
               for j in range(len(structure.sections))]
    plain = [operator.branch_terms(h, j)
             for j in range(len(structure.sections))]
    J = []
    for k in range(len(structure.d_words)):
        mask = members == k
        if not mask.any():
            continue
        chosen = None
        for j in range(1, len(structure.sections)):
            pair = np.abs(twisted[0][mask] + twisted[j][mask])
            if np.all(pair <= (1 - mu) * plain[0][mask].real +
                      plain[j][mask].real):
                chosen = (0, k)
                break
            if np.all(pair <= plain[0][mask].real +
                      (1 - mu) * plain[j][mask].real):
                chosen = (j, k)
                break
        if chosen is not None:
            J.append(chosen)
    covered = set(structure.d_parent[k] for _, k in J)
    dense = len(covered) == len(structure.c_words)
    return J, dense


def random_cone_pair(norms, size, B, rng, scale=0.5):
    """
    A positive *h* with log-Lipschitz data well inside ``C_B`` and ``H = h
    e^{i theta}`` for a Lipschitz phase field.
    """
    log_h = np.zeros(size)
    phase = np.zeros(size)
    for j, groups in enumerate(norms.groups, 1):
        weight = scale * norms.beta0 ** j
        counts = [len(g) for g in groups]
        order = np.concatenate(groups)
        log_h[order] += weight * np.repeat(
            rng.uniform(-1, 1, len(groups)), counts)
        phase[order] += weight * np.repeat(
            rng.uniform(-1, 1, len(groups)), counts)
    h = np.exp(log_h)
    return h * np.exp(1j * phase), h


def cancellation(operator, H, h, b):
    """
    The largest relative cancellation ``1 - |sum of twisted branch terms| /
    (sum of plain branch terms)`` between section ``0`` and some section
    ``j`` that holds uniformly on a ``D_k``.
    """
    structure = operator.structure
    members = operator.tables.membership[operator.tables.rows]
    twisted = [operator.branch_terms(H, j, b)
               for j in range(len(structure.sections))]
    plain = [operator.branch_terms(h, j).real
             for j in range(len(structure.sections))]
    best = 0.0
    for k in range(len(structure.d_words)):
        mask = members == k
        if not mask.any():
            continue
        for j in range(1, len(structure.sections)):
            ratio = np.abs(twisted[0][mask] + twisted[j][mask]) / \
                (plain[0][mask] + plain[j][mask])
            best = max(best, 1 - float(np.max(ratio)))
    return best


def damping_margin(operator, H, h, b):
    """
    The largest ``mu`` for which :func:`select_dense_subset` still finds a
    dense ``J`` for the pair ``(H, h)``: per ``D_k`` the slack
    ``(h_0 + h_j - |H_0 + H_j|) / h_0`` (or ``/ h_j``) of its best section
    ``j``, maximized over the ``D_k`` of every ``C_l`` and minimized over
    the ``C_l``. Zero without cancellation.
    """
    structure = operator.structure
    members = operator.tables.membership[operator.tables.rows]
    twisted = [operator.branch_terms(H, j, b)
               for j in range(len(structure.sections))]
    plain = [operator.branch_terms(h, j).real
             for j in range(len(structure.sections))]
    best = np.zeros(len(structure.c_words))
    for k in range(len(structure.d_words)):
        mask = members == k
        if not mask.any():
            continue
        for j in range(1, len(structure.sections)):
            room = plain[0][mask] + plain[j][mask] - \
                np.abs(twisted[0][mask] + twisted[j][mask])
            slack = max(float(np.min(room / plain[0][mask])),
                        float(np.min(room / plain[j][mask])))
            parent = structure.d_parent[k]
            best[parent] = max(best[parent], slack)
    return float(min(1.0, np.min(best)))


class MechanismReport:

    def __init__(self, structure, lnic_epsilon=None):
        self.structure = structure
        self.lnic_epsilon = lnic_epsilon
        self.rows = []

    @property
    def contraction(self):
        return max(r['contraction'] for r in self.rows)

    @property
    def cause(self):
        if self.lnic_epsilon is not None and \
                self.lnic_epsilon < LNIC_THRESHOLD:
            return 'lnic'
        for row in self.rows:
            if row['cause'] is not None:
                return row['cause']
        return None

    def as_dict(self):
        return {'structure': self.structure.as_dict(), 'rows': self.rows,
                'contraction': self.contraction,
                'lnic_epsilon': self.lnic_epsilon, 'cause': self.cause}


def _check_pair(operator, norms, H, h, bound, index, mu, strict=True):
    b = operator.structure.b
    J, dense = select_dense_subset(operator, H, h, b, mu)
    plain = operator.iterate(h)
    image = operator.apply(h, J, mu)
    twisted = operator.iterate(H, b)
    cone = max(cone_constant(image, image, norms),
               cone_constant(twisted, image, norms))
    if cone > bound:
        raise MechanismFailure('Cone constant %.4g exceeds %.4g' %
                               (cone, bound), 'cone', index)
    if np.any(np.abs(twisted) > image * (1 + DOMINATION_TOLERANCE)):
        raise MechanismFailure('Twisted iterate is not dominated',
                               'domination', index)
    size = norms.norm2(h)
    factor = norms.norm2(image) / size
    damping = (norms.norm2(plain) - norms.norm2(image)) / size
    if strict and not factor < 1:
        raise MechanismFailure('L2 factor %.6g is not below one' % factor,
                               'contraction', index)
    margin = float(np.min(image - np.abs(twisted)))
    return factor, damping, cone, margin, dense


def _verify_at(normalized, structure, a, samples, seed, window_low, mu):
    rng = np.random.default_rng(seed)
    b = structure.b
    bound = structure.ledger.E * abs(b)
    norms = normalized.norms(b)
    size = normalized.disc.size
    operator = DolgopyatOperator(normalized, structure, a)
    ones = np.ones(size)
    gain = cancellation(operator, ones.astype(complex), ones, b)
    if mu == 'measured':
        measured = damping_margin(operator, ones.astype(complex), ones, b)
        mu = max(structure.ledger.mu, measured / 2)
    elif mu is None:
        mu = structure.ledger.mu
    constant_factor, constant_damping, constant_cone, _, _ = _check_pair(
        operator, norms, ones.astype(complex), ones, bound, 'constant', mu,
        strict=False)
    factors, dampings, cones, margins, dense = [], [], [constant_cone], [], 0
    for index in range(samples):
        H, h = random_cone_pair(norms, size, bound, rng)
        if cone_constant(H, h, norms) > bound:
            raise MechanismFailure('Sample violates the premise',
                                   'premise', index)
        factor, damping, cone, margin, is_dense = _check_pair(
            operator, norms, H, h, bound, index, mu)
        factors.append(factor)
        dampings.append(damping)
        cones.append(cone)
        margins.append(margin)
        dense += is_dense
    differences = [operator.section_roof[j] - operator.section_roof[0]
                   for j in range(1, len(structure.sections))]
    spread = abs(b) * max(float(np.ptp(d)) for d in differences)
    contraction = max(factors) if factors else constant_factor
    log.info('Mechanism at a=%g, b=%g, mu=%.3g: L2 factor %.6f, constant '
             'pair %.15f', a, b, mu, contraction, constant_factor)
    return {
        'a': a, 'b': b, 'm': structure.m, 'mu': mu,
        'contraction': contraction,
        'damping': min(dampings) if dampings else constant_damping,
        'constant_factor': constant_factor,
        'constant_damping': constant_damping,
        'cause': None if constant_factor < 1 else 'damping',
        'cone': max(cones), 'cone_bound': bound,
        'domination_margin': min(margins) if margins else None,
        'dense_fraction': dense / samples if samples else None,
        'gain': gain,
        'window': [window_low, spread, math.pi],
        'window_holds': window_low <= spread <= math.pi,
    }


def verify_mechanism(normalized, structure, a_grid=(0.0,), samples=256,
                     seed=0, lnic_epsilon=None, pool=None, mu=None):
    """
    Checks the Dolgopyat operators of *structure* at every ``a``: first on
    the constant pair ``H = h = 1``, then on *samples* random pairs with
    ``|H| <= h`` in the cone ``C_{E|b|}``. For each pair the dense subset
    ``J`` is selected and the cone property of ``N h`` and of the twisted
    iterate, domination ``|L_xi^m H| <= N h`` and an ``L2`` contraction
    factor below one are asserted. Failures raise
    :class:`MechanismFailure` with the check name and the sample index.

    *mu* is the damping depth: the ledger value by default, a float, or
    ``'measured'`` for half the :func:`damping_margin` of the constant pair
    (never below the ledger value). Every row reports the damping
    ``(||L^m h|| - ||N h||) / ||h||`` next to the factor. The constant pair
    is undamped by the plain iterate, so its factor drops below one only
    through ``J``; when it does not, the row cause is ``'damping'``.

    The report also carries the cancellation gain of the constant pair and
    the window statistics of the section differences. Without cancellation
    and with an LNIC constant below threshold the cause is reported as
    ``'lnic'``.
    """
    pool = pool or WorkerPool()
    ledger = structure.ledger
    epsilon = ledger.epsilon if lnic_epsilon is None else lnic_epsilon
    window_low = epsilon * ledger.rho * ledger.epsilon1 / 16
    seeds = np.random.SeedSequence(seed).spawn(len(a_grid))
    rows = pool.map(
        lambda job: _verify_at(normalized, structure, job[0], samples,
                               job[1], window_low, mu),
        list(zip(a_grid, seeds)))
    report = MechanismReport(structure, lnic_epsilon)
    report.rows = rows
    return report


def contraction_profile(normalized, ledger, model, b, ms, samples=16, seed=0,
                        mu=None):
    """
    The sampled ``L2`` contraction factor at ``a = 0`` for every section
    length in *ms*, on identical sample pairs. Returns ``[(m, factor)]``.
    """
    profile = []
    for m in ms:
        structure = build_structure(b, ledger, model, m=m)
        report = verify_mechanism(normalized, structure, samples=samples,
                                  seed=seed, mu=mu)
        profile.append((m, report.contraction))
        log.debug('Contraction at m=%d: %.12f', m, report.contraction)
    return profile


def strong_triangle_check(samples=10000, seed=0):
    """
    Largest excess of ``|w1 + w2|`` over ``(1 - alpha^2 / (16 L)) |w1| +
    |w2|`` for random complex pairs at angle at least ``alpha`` with
    ``|w1| <= L |w2|``; never positive.
    """
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(1e-3, np.pi, samples)
    bound = rng.uniform(1.0, 10.0, samples)
    r2 = rng.uniform(0.1, 1.0, samples)
    r1 = rng.uniform(0.0, 1.0, samples) * bound * r2
    angle = rng.uniform(alpha, np.pi) * rng.choice([-1, 1], samples)
    w1 = r1 * np.exp(1j * rng.uniform(0, 2 * np.pi, samples))
    w2 = r2 * (w1 / np.where(r1 > 0, r1, 1)) * np.exp(1j * angle)
    w2 = np.where(r1 > 0, w2, r2)
    excess = np.abs(w1 + w2) - ((1 - alpha ** 2 / (16 * bound)) * r1 + r2)
    return float(np.max(excess))
