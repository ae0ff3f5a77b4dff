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
Transfer operators of roof functions on a cylinder discretization.

A discretization of depth ``n`` represents functions that are constant on
cylinders of ``n`` symbols. The transfer operator sums over the preimages
``yu`` of a word ``u`` under the shift; the roof is evaluated on those
``n + 1`` symbol branch words.
"""

import fractions
import logging
import math

import numpy as np
from scipy import optimize, sparse, stats

from .exceptions import (
    BracketFailure, LatticeRoofDetected, PowerIterationStall,
    RateNotResolved)
from .pool import WorkerPool
from .symbolic import extend_word, lyndon_words


log = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-12
POWER_MAX_ITERATIONS = 100000
LATTICE_TOLERANCE = 1e-9
LATTICE_DENOMINATOR = 12


class OperatorDiscretization:
    """
    The branch structure of the transfer operator of *roof* at *depth*.
    :meth:`matrix` assembles the operator for any complex parameter.
    """

    def __init__(self, roof, depth):
        if depth < 2:
            raise ValueError('Discretization depth must be at least 2')
        model = roof.model
        self.roof = roof
        self.model = model
        self.depth = depth
        self.basis = model.words(depth)
        index = {tuple(w): i for i, w in enumerate(self.basis)}
        rows, cols, branches = [], [], []
        for i, word in enumerate(self.basis):
            for y in np.flatnonzero(model.transition[:, word[0]]):
                branch = (int(y),) + tuple(int(s) for s in word)
                rows.append(i)
                cols.append(index[branch[:depth]])
                branches.append(branch)
        self.rows = np.array(rows)
        self.cols = np.array(cols)
        self.branches = branches
        self.tau = roof.evaluate(branches)
        self.tau_basis = roof.evaluate([tuple(w) for w in self.basis])
        log.debug('Discretization of depth %d: %d cylinders, %d branches',
                  depth, len(self.basis), len(branches))

    @property
    def size(self):
        return len(self.basis)

    def matrix_from_weights(self, log_weights):
        """
        The operator whose branch ``yu -> u`` carries ``exp(log_weights)``.
        """
        data = np.exp(log_weights)
        return sparse.csr_matrix((data, (self.rows, self.cols)),
                                 shape=(self.size, self.size))

    def matrix(self, xi):
        """
        The operator with potential ``xi * roof``.
        """
        return self.matrix_from_weights(xi * self.tau)


def discretize(roof, xi, depth):
    """
    Returns ``(discretization, matrix)`` for potential ``xi * roof``.
    """
    disc = OperatorDiscretization(roof, depth)
    return disc, disc.matrix(xi)


class RpfData:
    """
    Leading eigenvalue *lambda_a*, positive eigenvector *h* and eigenmeasure
    *nu* (a probability vector) with ``nu @ h == 1``.
    """

    def __init__(self, lambda_a, h, nu, a, gap, residual):
        self.lambda_a = lambda_a
        self.h = h
        self.nu = nu
        self.a = a
        self.gap = gap
        self.residual = residual

    def as_dict(self):
        return {'lambda': self.lambda_a, 'a': self.a, 'gap': self.gap,
                'residual': self.residual}


def _power_iteration(matrix, tolerance, max_iterations):
    vector = np.ones(matrix.shape[0])
    for iteration in range(1, max_iterations + 1):
        image = matrix @ vector
        value = float(image @ vector / (vector @ vector))
        residual = float(np.max(np.abs(image - value * vector)) /
                         (value * np.max(np.abs(vector))))
        if residual < tolerance:
            log.debug('Power iteration converged after %d steps',
                      iteration)
            return value, vector / np.max(vector), residual
        vector = image / np.max(np.abs(image))
    raise PowerIterationStall('Power iteration stalled at residual %.3g' %
                              residual, residual)


def _second_eigenvalue(matrix, value, h, nu, steps=400, seed=0):
    rng = np.random.default_rng(seed)
    vector = rng.normal(size=matrix.shape[0])
    vector -= h * (nu @ vector)
    logs = []
    for _ in range(steps):
        image = matrix @ vector
        image -= h * (nu @ image)
        norm = np.linalg.norm(image)
        if norm == 0:
            return 0.0
        logs.append(math.log(norm / np.linalg.norm(vector)))
        vector = image / norm
    return math.exp(np.mean(logs[steps // 2:]))


def rpf_solve(matrix, a=0.0, tolerance=POWER_TOLERANCE,
              max_iterations=POWER_MAX_ITERATIONS):
    """
    Leading eigen-triple of a real non-negative operator by power iteration
    on the operator and its transpose. The spectral gap ``|lambda_2| /
    lambda`` is estimated by iterating the deflated operator.
    """
    if isinstance(matrix, OperatorDiscretization):
        matrix = matrix.matrix(-a)
    value, h, residual = _power_iteration(matrix, tolerance, max_iterations)
    _, nu, _ = _power_iteration(matrix.T.tocsr(), tolerance, max_iterations)
    nu = nu / nu.sum()
    h = h / (nu @ h)
    gap = _second_eigenvalue(matrix, value, h, nu) / value
    return RpfData(value, h, nu, a, gap, residual)


class PressureValue:

    def __init__(self, value, error):
        self.value = value
        self.error = error

    def __float__(self):
        return self.value


def pressure(roof, scale, depth, disc=None):
    """
    The pressure of the potential ``scale * roof`` at *depth*, with the
    difference to depth ``depth - 1`` as error estimate.
    """
    disc = disc or OperatorDiscretization(roof, depth)
    coarse = OperatorDiscretization(roof, depth - 1)
    value = math.log(rpf_solve(disc.matrix(scale)).lambda_a)
    previous = math.log(rpf_solve(coarse.matrix(scale)).lambda_a)
    return PressureValue(value, abs(value - previous))


def pressure_function(disc):
    def evaluate(a):
        return math.log(rpf_solve(disc.matrix(-a)).lambda_a)
    return evaluate


def solve_delta(disc):
    """
    The root of ``a -> P(-a roof)``, bracketed on ``[1e-6, log N / min
    roof + 1]`` where the pressure is checked to decrease.
    """
    evaluate = pressure_function(disc)
    low = 1e-6
    high = math.log(disc.model.size) / float(np.min(disc.tau)) + 1
    points = np.linspace(low, high, 5)
    values = [evaluate(p) for p in points]
    if not values[0] > 0 > values[-1]:
        raise BracketFailure('Pressure does not change sign on [%g, %g]' %
                             (low, high))
    if np.any(np.diff(values) >= 0):
        raise BracketFailure('Pressure is not decreasing on the bracket')
    delta = optimize.brentq(evaluate, low, high, xtol=1e-14, rtol=1e-14)
    log.info('Critical exponent %.10g at depth %d', delta, disc.depth)
    return delta


def pressure_derivative(disc, delta, step=1e-4):
    """
    Returns the central difference of ``a -> P(-(delta + a) roof)`` at 0
    and the exact derivative ``-nu(roof * L h) / lambda`` of the discrete
    operator.
    """
    evaluate = pressure_function(disc)
    numeric = (evaluate(delta + step) - evaluate(delta - step)) / (2 * step)
    rpf = rpf_solve(disc.matrix(-delta))
    weighted = disc.matrix_from_weights(-delta * disc.tau).multiply(
        sparse.csr_matrix((disc.tau, (disc.rows, disc.cols)),
                          shape=(disc.size, disc.size)))
    exact = -float(rpf.nu @ (weighted @ rpf.h)) / rpf.lambda_a
    return numeric, exact


class NormalizedOperator:
    """
    The transfer operators of the normalized potentials ``tau^(a) =
    -(delta + a) roof + log h_a - log h_a o shift - log lambda_a``. Every
    real operator fixes the constant function; :attr:`nu` is the
    equilibrium measure at ``a = 0``.
    """

    def __init__(self, disc, delta, rpf):
        self.disc = disc
        self.delta = delta
        self.h0 = rpf.h
        self.lambda0 = rpf.lambda_a
        self.nu = rpf.h * rpf.nu
        self.nu = self.nu / self.nu.sum()
        self.coboundary = self._coboundary(rpf)
        self._potentials = {0.0: -delta * disc.tau + self.coboundary}

    def _coboundary(self, rpf):
        return np.log(rpf.h[self.disc.cols]) - \
            np.log(rpf.h[self.disc.rows]) - math.log(rpf.lambda_a)

    def potential(self, a=0.0):
        a = float(a)
        if a not in self._potentials:
            data = self.rpf(a)
            self._potentials[a] = -(self.delta + a) * self.disc.tau + \
                self.coboundary + self._coboundary(data)
        return self._potentials[a]

    def operator(self, b=0.0, a=0.0):
        """
        The normalized operator at ``xi = a + ib``.
        """
        return self.disc.matrix_from_weights(
            self.potential(a) + 1j * b * self.disc.tau)

    def real_operator(self, a=0.0):
        return self.disc.matrix_from_weights(self.potential(a))

    def rpf(self, a=0.0):
        """
        Eigen-data of the operator of ``-(delta + a) roof`` conjugated by
        the normalization at ``a = 0``; its eigenvalue is ``exp(P_a - P_0)``.
        """
        return rpf_solve(self.disc.matrix_from_weights(
            -(self.delta + a) * self.disc.tau + self.coboundary), a)

    def potential_lipschitz_in_a(self, step=1e-3):
        """
        The constant ``A_tau`` with ``|tau^(a) - tau^(0)| <= A_tau |a|``,
        from a difference quotient on both sides of zero.
        """
        return max(float(np.max(np.abs(self.potential(s) -
                                       self.potential(0.0)))) / step
                   for s in (-step, step))

    def norms(self, b=0.0):
        return NormContext(self.disc.basis, self.nu, self.disc.model.beta0,
                           b)


def normalize(disc, delta, a=0.0):
    """
    Builds the normalized operator at the critical exponent *delta* and
    returns ``(operator, potential)`` for parameter *a*.
    """
    rpf = rpf_solve(disc.matrix(-delta))
    normalized = NormalizedOperator(disc, delta, rpf)
    return normalized, normalized.potential(a)


class NormContext:
    """
    ``L2(nu)``, sup and Lipschitz norms of functions on the discretization;
    the Lipschitz seminorm uses the cylinder metric ``D``.
    """

    def __init__(self, basis, nu, beta0, b=0.0):
        self.nu = nu
        self.beta0 = beta0
        self.b = b
        self.groups = []
        for j in range(1, basis.shape[1]):
            _, inverse = np.unique(basis[:, :j], axis=0, return_inverse=True)
            inverse = np.asarray(inverse).reshape(-1)
            order = np.argsort(inverse, kind='stable')
            bounds = np.flatnonzero(np.diff(inverse[order])) + 1
            self.groups.append(np.split(order, bounds))

    def norm2(self, values):
        return float(math.sqrt(math.fsum(self.nu * np.abs(values) ** 2)))

    def sup(self, values):
        return float(np.max(np.abs(values)))

    def lip(self, values):
        best = 0.0
        for j, groups in enumerate(self.groups, 1):
            oscillation = 0.0
            for group in groups:
                if len(group) < 2:
                    continue
                sub = values[group]
                oscillation = max(oscillation, float(np.max(np.abs(
                    sub[:, None] - sub[None, :]))))
            best = max(best, oscillation / self.beta0 ** j)
        return best

    def norm1b(self, values):
        return self.sup(values) + self.lip(values) / max(1.0, abs(self.b))


class NormRecord:

    __slots__ = ('k', 'norm2', 'sup', 'lip')

    def __init__(self, k, norm2, sup, lip):
        self.k = k
        self.norm2 = norm2
        self.sup = sup
        self.lip = lip

    def row(self):
        return [self.k, self.norm2, self.sup, self.lip]


def complex_iterate(normalized, values, b, k, a=0.0, lipschitz=True):
    """
    Applies the normalized operator at ``a + ib`` *k* times and logs the
    norms after every step.
    """
    operator = normalized.operator(b, a)
    norms = normalized.norms(b)
    values = np.asarray(values, dtype=complex)
    records = [NormRecord(0, norms.norm2(values), norms.sup(values),
                          norms.lip(values) if lipschitz else None)]
    for step in range(1, k + 1):
        values = operator @ values
        records.append(NormRecord(step, norms.norm2(values),
                                  norms.sup(values),
                                  norms.lip(values) if lipschitz else None))
    return values, records


def detect_lattice(periods, tolerance=LATTICE_TOLERANCE,
                   max_denominator=LATTICE_DENOMINATOR):
    """
    Returns the spacing of a lattice containing all *periods*, or ``None``.
    """
    periods = np.asarray(periods, dtype=float)
    smallest = float(np.min(periods))
    denominators = []
    for period in periods:
        ratio = period / smallest
        approx = fractions.Fraction(ratio).limit_denominator(max_denominator)
        if abs(ratio - float(approx)) > tolerance * ratio:
            return None
        denominators.append(approx.denominator)
    common = 1
    for d in denominators:
        common = common * d // math.gcd(common, d)
    return smallest / common


def cycle_periods(roof, words):
    """
    Birkhoff sums of *roof* over one period of each periodic word.
    """
    depth = getattr(roof, 'depth', 0)
    periods = []
    for word in words:
        sequence = extend_word(word, 2 * len(word) + depth + 1, roof.model)
        shifted = [sequence[j:] for j in range(len(word))]
        periods.append(math.fsum(roof.evaluate(shifted)))
    return np.array(periods)


def orbit_periods(roof, max_period=6):
    """
    The roof periods of all primitive periodic orbits up to *max_period*.
    """
    model = roof.model
    words = []
    for first in range(model.size):
        for length in range(1, max_period + 1):
            words.extend(lyndon_words(model, first, length))
    return cycle_periods(roof, words)


class SpectralTable:

    def __init__(self, rows):
        self.rows = rows

    @property
    def gap(self):
        return min(row['eta'] for row in self.rows)

    def as_dict(self):
        return {'rows': self.rows, 'gap': self.gap}


def spectral_bound_estimate(normalized, b_grid, k_max, k0=None,
                            periods=None, pool=None):
    """
    For every ``b`` the decay rate ``eta = -slope`` of
    ``log |L_{ib}^k 1|_2`` over ``k0 <= k <= k_max``. Lattice roofs are
    rejected before any iteration.
    """
    if periods is None:
        periods = orbit_periods(normalized.disc.roof)
    spacing = detect_lattice(periods)
    if spacing is not None:
        raise LatticeRoofDetected('Roof periods lie in the lattice %.10g Z'
                                  % spacing, spacing)
    k0 = k0 if k0 is not None else max(1, k_max // 4)
    pool = pool or WorkerPool()

    def job(b):
        ones = np.ones(normalized.disc.size)
        _, records = complex_iterate(normalized, ones, b, k_max,
                                     lipschitz=False)
        ks = np.array([r.k for r in records[k0:]])
        logs = np.log([r.norm2 for r in records[k0:]])
        fit = stats.linregress(ks, logs)
        return {'b': float(b), 'eta': float(-fit.slope),
                'r2': float(fit.rvalue ** 2)}

    rows = pool.map(job, b_grid)
    log.info('Spectral bound over %d frequencies: min eta %.4g', len(rows),
             min(r['eta'] for r in rows))
    return SpectralTable(rows)


def gibbs_ratios(disc, rpf, xi, k):
    """
    ``nu(C[w]) * lambda**k / exp(S_k(xi roof)(w))`` over all cylinders of
    the discretization; the Gibbs property bounds them above and below.
    """
    if not 0 < k < disc.depth:
        raise ValueError('Need 0 < k < depth')
    sums = np.zeros(disc.size)
    words = [tuple(w) for w in disc.basis]
    for j in range(k):
        sums += xi * disc.roof.evaluate([w[j:] for w in words])
    return rpf.nu * rpf.lambda_a ** k / np.exp(sums)


def lasota_yorke_fit(normalized, kappa2, samples=32, k_max=8, a=0.0,
                     seed=0):
    """
    Fits ``A0`` with ``Lip(log L^k h) <= A0 (Lip(log h) / kappa2**k + 1)``
    over random positive functions *h*.
    """
    rng = np.random.default_rng(seed)
    operator = normalized.real_operator(a)
    norms = normalized.norms()
    constant = 0.0
    for _ in range(samples):
        scale = rng.uniform(0.1, 2.0)
        values = np.exp(scale * rng.uniform(-1, 1) *
                        rng.normal(size=normalized.disc.size) * 0.1)
        start = norms.lip(np.log(values))
        for k in range(1, k_max + 1):
            values = operator @ values
            bound = start / kappa2 ** k + 1
            constant = max(constant, norms.lip(np.log(values)) / bound)
    return max(constant, 1.0)


class CorrelationResult:

    def __init__(self, times, values, errors, rate=None, rate_stderr=None):
        self.times = times
        self.values = values
        self.errors = errors
        self.rate = rate
        self.rate_stderr = rate_stderr

    def as_dict(self):
        return {'times': self.times, 'values': self.values,
                'errors': self.errors, 'rate': self.rate,
                'rate_stderr': self.rate_stderr}


def _transition_tables(normalized):
    """
    Cumulative branch probabilities of the normalized real operator per
    row, padded to the largest branch count.
    """
    disc = normalized.disc
    weights = np.exp(normalized.potential(0.0))
    width = np.bincount(disc.rows, minlength=disc.size).max()
    targets = np.zeros((disc.size, width), dtype=np.int64)
    cumulative = np.ones((disc.size, width))
    fill = np.zeros(disc.size, dtype=np.int64)
    for row, col, weight in zip(disc.rows, disc.cols, weights):
        targets[row, fill[row]] = col
        cumulative[row, fill[row]] = weight
        fill[row] += 1
    for row in range(disc.size):
        count = fill[row]
        cumulative[row, :count] = np.cumsum(cumulative[row, :count])
        cumulative[row, :count] /= cumulative[row, count - 1]
        cumulative[row, count:] = 1.0
        targets[row, count:] = targets[row, count - 1]
    return targets, cumulative


def _sample_chunk(normalized, tables, phi1, phi2, times, count, steps,
                  seed):
    disc = normalized.disc
    targets, cumulative = tables
    rng = np.random.default_rng(seed)
    states = np.empty((steps + 1, count), dtype=np.int64)
    states[0] = rng.choice(disc.size, size=count, p=normalized.nu)
    for j in range(1, steps + 1):
        draws = rng.random(count)
        column = (cumulative[states[j - 1]] < draws[:, None]).sum(axis=1)
        states[j] = targets[states[j - 1], column]
    path = states[::-1]
    tau = disc.tau_basis
    start = path[0]
    weights = tau[start]
    heights = rng.random(count) * tau[start]
    first = phi2(disc.basis[start], heights / tau[start])
    base = phi1(disc.basis[start], heights / tau[start])
    sums = [math.fsum(weights), math.fsum(weights * first),
            math.fsum(weights * base)]
    products = []
    squares = []
    for t in times:
        position = np.zeros(count, dtype=np.int64)
        remaining = heights + t
        current = tau[path[0]]
        while True:
            moving = remaining >= current
            if not moving.any():
                break
            if np.any(position[moving] >= steps):
                raise ValueError('Chain too short for flow time %g' % t)
            remaining = np.where(moving, remaining - current, remaining)
            position = np.where(moving, position + 1, position)
            current = tau[path[position, np.arange(count)]]
        words = disc.basis[path[position, np.arange(count)]]
        later = phi1(words, remaining / current)
        product = weights * later * first
        products.append(math.fsum(product))
        squares.append(math.fsum(weights * (later * first) ** 2))
    return sums, products, squares


def correlation_estimate(normalized, phi1, phi2, t_grid, samples=20000,
                         chunks=8, seed=0, pool=None, fit_rate=True):
    """
    Monte-Carlo estimate of ``m(phi1 o a_t * phi2) - m(phi1) m(phi2)`` for
    the suspension flow of the roof over the equilibrium measure.
    Observables are functions of the depth-``n`` word array and the roof
    fraction. Every chunk draws from its own spawned seed stream and partial
    sums are combined in chunk order, so the result does not depend on the
    number of workers.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    tables = _transition_tables(normalized)
    steps = int(math.ceil(t_grid.max() /
                          float(np.min(normalized.disc.tau_basis)))) + 2
    sizes = [samples // chunks + (1 if i < samples % chunks else 0)
             for i in range(chunks)]
    streams = np.random.SeedSequence(seed).spawn(chunks)
    pool = pool or WorkerPool()
    parts = pool.map(lambda job: _sample_chunk(
        normalized, tables, phi1, phi2, t_grid, job[0], steps, job[1]),
        list(zip(sizes, streams)))
    total = math.fsum(p[0][0] for p in parts)
    mean2 = math.fsum(p[0][1] for p in parts) / total
    mean1 = math.fsum(p[0][2] for p in parts) / total
    values = []
    errors = []
    for i in range(len(t_grid)):
        moment = math.fsum(p[1][i] for p in parts) / total
        second = math.fsum(p[2][i] for p in parts) / total
        values.append(moment - mean1 * mean2)
        errors.append(math.sqrt(max(second - moment ** 2, 0.0) / samples))
    result = CorrelationResult(list(t_grid), values, errors)
    if fit_rate:
        fit_correlation_rate(result)
    return result


def fit_correlation_rate(result):
    """
    Fits an exponential rate to the leading points of the correlation curve
    that stand out of the noise by three standard errors.
    """
    times = []
    logs = []
    for t, value, error in zip(result.times, result.values, result.errors):
        if abs(value) <= 3 * error or value == 0:
            break
        times.append(t)
        logs.append(math.log(abs(value)))
    if len(times) < 3 or logs[0] - min(logs) < 1.0:
        raise RateNotResolved('Correlations hit the noise floor before '
                              'decaying one e-fold')
    fit = stats.linregress(times, logs)
    result.rate = float(-fit.slope)
    result.rate_stderr = float(fit.stderr)
    return result
