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
Zeta functions of the primitive periodic orbits of a roof suspension:
truncated Selberg and Ruelle products, the cycle expanded dynamical
determinant, a winding number scan for its zeros and the prime orbit
counting function compared with the offset logarithmic integral.
"""

import logging
import math

import numpy as np
from scipy import integrate, optimize, special, stats

from .exceptions import (
    AnosovError, BracketFailure, DomainError, HorizonExceeded,
    LatticeRoofDetected, TruncationInsufficient, WindingAmbiguous)
from .pool import WorkerPool
from .report import write_csv
from .symbolic import (
    CocycleRoof, RoofCocycle, build_sft, extend_word, periodic_orbits)
from .thermo import cycle_periods, detect_lattice


log = logging.getLogger(__name__)

TRUNCATION_TOLERANCE = 1e-6
IDENTITY_TOLERANCE = 1e-9
CAPACITY_FRACTION = 0.7


def _pointwise_tau_min(roof, words):
    model = roof.model
    depth = getattr(roof, 'depth', 0)
    points = [extend_word(w[j:] + w[:j], 2 * len(w) + depth + 1, model)
              for w in words for j in range(len(w))]
    return float(np.min(roof.evaluate(points)))


class OrbitTable:
    """
    Primitive periodic orbits up to symbolic period :attr:`max_period` with
    their flow periods. :attr:`tau_min` is the smallest roof value seen on
    the orbits; every orbit of symbolic period ``p`` has flow period at
    least ``p * tau_min``.
    """

    def __init__(self, words, periods, transition, delta=None,
                 max_period=None, tau_min=None):
        periods = np.asarray(periods, dtype=float)
        if len(periods) != len(words):
            raise ValueError('Need one period per orbit')
        if not np.all(periods > 0):
            raise ValueError('Orbit periods must be positive')
        self.words = [tuple(w) for w in words]
        self.periods = periods
        self.lengths = np.array([len(w) for w in self.words])
        self.transition = np.asarray(transition)
        self.max_period = int(max_period if max_period is not None
                              else self.lengths.max())
        self.tau_min = float(tau_min if tau_min is not None
                             else np.min(periods / self.lengths))
        self.delta = delta
        radius = max(abs(np.linalg.eigvals(self.transition)))
        self.entropy = math.log(radius)

    @classmethod
    def from_roof(cls, roof, max_period, delta=None, pool=None):
        model = roof.model
        orbits = periodic_orbits(model, max_period, pool=pool)
        words = [o.word for o in orbits]
        periods = cycle_periods(roof, words)
        return cls(words, periods, model.transition, delta, max_period,
                   _pointwise_tau_min(roof, words))

    @classmethod
    def from_group(cls, generators, form, max_period, theta=None,
                   delta=None, pool=None, roof=None, roof_depth=12):
        """
        The table of conjugacy classes of cyclically reduced words, with
        periods ``form(lambda_theta(g))``. :attr:`tau_min` is the pointwise
        minimum of *roof* over the orbits, by default the cocycle roof of
        *form* truncated at *roof_depth*.
        """
        model = build_sft(generators, certify=False)
        if roof is None:
            roof = CocycleRoof(RoofCocycle(model, theta, roof_depth), form)
        orbits = periodic_orbits(model, max_period, pool=pool)
        words = [o.word for o in orbits]
        periods = [orbit.length(form, theta) for orbit in orbits]
        return cls(words, periods, model.transition, delta, max_period,
                   _pointwise_tau_min(roof, words))

    def rescaled(self, c):
        """
        The table of the direction scaled by *c*: the flow runs *c* times
        faster, so every period is divided by *c*.
        """
        delta = None if self.delta is None else self.delta * c
        return OrbitTable(self.words, self.periods / c, self.transition,
                          delta, self.max_period, self.tau_min / c)

    @property
    def horizon(self):
        return (self.max_period + 1) * self.tau_min

    def truncated(self, max_period):
        keep = self.lengths <= max_period
        return (self.periods[keep], self.lengths[keep])

    def __len__(self):
        return len(self.words)


class ZetaEvaluation:

    def __init__(self, xi, value, truncation, bound):
        self.xi = xi
        self.value = value
        self.truncation = truncation
        self.bound = bound

    def as_dict(self):
        return {'xi': [self.xi.real, self.xi.imag],
                'value': [self.value.real, self.value.imag],
                'truncation': list(self.truncation), 'bound': self.bound}


def _log_factor(z):
    return np.log1p(-z)


def _orbit_tail(table, sigma, P):
    """
    Bound on ``sum |log(1 - e^(-xi l))|`` over orbits of symbolic period
    above *P*, from ``tr T^p <= N r^p`` and ``l >= p tau_min``.
    """
    size = table.transition.shape[0]
    radius = math.exp(table.entropy)
    ratio = radius * math.exp(-sigma * table.tau_min)
    if ratio >= 1 or math.exp(-sigma * (P + 1) * table.tau_min) > 0.5:
        return math.inf
    return 2 * size * ratio ** (P + 1) / ((P + 1) * (1 - ratio))


def _check_bound(bound, value, what):
    relative = math.expm1(bound) if bound < 700 else math.inf
    if not relative <= TRUNCATION_TOLERANCE:
        raise TruncationInsufficient(
            '%s truncation bound %.3g exceeds %g relative' %
            (what, relative, TRUNCATION_TOLERANCE), relative * abs(value))
    return relative * abs(value)


def _log_selberg(xi, periods, K):
    total = 0j
    for k in range(K):
        total += np.sum(_log_factor(np.exp(-(xi + k) * periods)))
    return total


def selberg_zeta(xi, table, P=None, K=16):
    """
    ``prod_{k < K} prod_orbits (1 - e^{-(xi + k) l})`` over orbits of
    symbolic period at most *P*, with a bound on the distance to the full
    product.
    """
    xi = complex(xi)
    P = table.max_period if P is None else min(P, table.max_period)
    periods, _ = table.truncated(P)
    value = np.exp(_log_selberg(xi, periods, K))
    sigma = xi.real
    bound = sum(_orbit_tail(table, sigma + k, P) for k in range(K))
    decay = np.exp(-(sigma + K) * periods)
    if np.any(decay > 0.5):
        bound = math.inf
    else:
        bound += float(np.sum(2 * decay / -np.expm1(-periods)))
        bound += _orbit_tail(table, sigma + K, P) / \
            -math.expm1(-(P + 1) * table.tau_min)
    error = _check_bound(bound, value, 'Selberg zeta')
    return ZetaEvaluation(xi, complex(value), (P, K), error)


def ruelle_zeta(xi, table, P=None, K=16):
    """
    ``prod_orbits (1 - e^{-xi l})^{-1}``, checked against the quotient of
    Selberg products ``Z(xi + 1) / Z(xi)`` corrected by their last factor.
    """
    xi = complex(xi)
    P = table.max_period if P is None else min(P, table.max_period)
    periods, _ = table.truncated(P)
    log_value = -np.sum(_log_factor(np.exp(-xi * periods)))
    value = complex(np.exp(log_value))
    quotient = _log_selberg(xi + 1, periods, K) - \
        _log_selberg(xi, periods, K) - \
        np.sum(_log_factor(np.exp(-(xi + K) * periods)))
    if abs(np.exp(quotient - log_value) - 1) > IDENTITY_TOLERANCE:
        raise AnosovError('Ruelle zeta disagrees with the Selberg quotient')
    bound = _orbit_tail(table, xi.real, P)
    error = _check_bound(bound, value, 'Ruelle zeta')
    return ZetaEvaluation(xi, value, (P, K), error)


def _trace_terms(table, P):
    """
    For each ``n <= P`` the multiplicities and periods of the periodic
    points of symbolic period ``n``: an orbit of primitive period ``p``
    dividing ``n`` contributes ``p`` points of period ``l n / p``.
    """
    periods, lengths = table.truncated(P)
    terms = []
    for n in range(1, P + 1):
        mask = n % lengths == 0
        terms.append((lengths[mask].astype(float),
                      periods[mask] * (n // lengths[mask])))
    return terms


def dynamical_determinant(xi, table, P=None):
    """
    The cycle expansion ``sum_{n <= P} c_n`` of ``exp(-sum_n t_n / n)``
    with ``t_n = sum_{sigma^n x = x} e^{-xi l_n(x)}``, through Newton's
    identities ``c_n = -(1/n) sum_k t_k c_{n-k}``. *xi* may be an array.
    """
    P = table.max_period if P is None else min(P, table.max_period)
    xi = np.asarray(xi, dtype=complex)
    flat = xi.reshape(-1)
    traces = [np.exp(-np.outer(flat, lengths)) @ counts
              for counts, lengths in _trace_terms(table, P)]
    coefficients = [np.ones_like(flat)]
    for n in range(1, P + 1):
        total = np.zeros_like(flat)
        for k in range(1, n + 1):
            total += traces[k - 1] * coefficients[n - k]
        coefficients.append(-total / n)
    value = np.sum(coefficients, axis=0).reshape(xi.shape)
    return value if value.shape else complex(value)


def leading_zero(table, P=None, points=400):
    """
    The right-most real zero of the truncated dynamical determinant.
    """
    high = table.entropy / table.tau_min + 1
    grid = np.linspace(high, 1e-6, points)
    values = dynamical_determinant(grid, table, P).real
    signs = np.sign(values)
    change = np.flatnonzero(signs[1:] != signs[:-1])
    if not len(change):
        raise BracketFailure('No sign change of the determinant on (0, %g]'
                             % high)
    i = change[0]
    zero = optimize.brentq(
        lambda x: dynamical_determinant(x, table, P).real,
        grid[i + 1], grid[i], xtol=1e-14, rtol=1e-14)
    log.info('Leading zero of the determinant at %.10g', zero)
    return zero


class GapScan:
    """
    Winding numbers of the truncated determinant around the boxes of a
    grid. :attr:`zero_free` is the smallest abscissa right of which no box
    except the one holding the leading zero winds.
    """

    def __init__(self, xs, ys, counts, leading):
        self.xs = xs
        self.ys = ys
        self.counts = counts
        self.leading = leading
        boxes = []
        for i, j in zip(*np.nonzero(counts)):
            boxes.append((float(xs[i]), float(xs[i + 1]), float(ys[j]),
                          float(ys[j + 1]), int(counts[i, j])))
        self.zeros = boxes
        others = [box[1] for box in boxes
                  if not (box[0] <= leading <= box[1] and box[2] <= 0 <=
                          box[3])]
        self.zero_free = max(others) if others else float(xs[0])

    def count_in(self, x0, x1, y0, y1):
        """
        Number of zeros in boxes lying inside the given rectangle.
        """
        inside_x = (self.xs[:-1] >= x0 - 1e-12) & (self.xs[1:] <= x1 + 1e-12)
        inside_y = (self.ys[:-1] >= y0 - 1e-12) & (self.ys[1:] <= y1 + 1e-12)
        return int(self.counts[np.ix_(inside_x, inside_y)].sum())

    @property
    def gap(self):
        return self.leading - self.zero_free

    def as_dict(self):
        return {'zeros': self.zeros, 'zero_free': self.zero_free,
                'leading': self.leading, 'gap': self.gap}


def _phase_increments(values):
    steps = np.angle(values[..., 1:] / values[..., :-1])
    if np.any(np.abs(steps) > 0.75 * np.pi):
        raise WindingAmbiguous('Phase jumps by more than 3 pi / 4 along an '
                               'edge; refine the grid')
    return steps.sum(axis=-1)


def gap_scan(table, strip=0.5, side=0.02, height=40.0, right=0.5, P=None,
             samples=8, noise=1e-10, pool=None):
    """
    Counts the zeros of the truncated determinant in boxes of *side*
    covering ``[d - strip, d + right] x [0, height]`` around the leading
    zero ``d``. The real axis and ``d`` lie inside boxes, never on edges.
    Lattice roofs are rejected.
    """
    spacing = detect_lattice(table.periods)
    if spacing is not None:
        raise LatticeRoofDetected('Orbit periods lie in the lattice %.10g Z'
                                  % spacing, spacing)
    leading = leading_zero(table, P)
    nx = int(math.ceil((strip + right) / side))
    ny = int(math.ceil(height / side))
    left = leading - side / 2 - side * int(math.ceil(strip / side))
    xs = left + side * np.arange(nx + 2)
    ys = -side / 2 + side * np.arange(ny + 1)
    t = np.linspace(0, 1, samples + 1)

    def evaluate(points):
        values = dynamical_determinant(points, table, P)
        scale = max(1.0, float(np.max(np.abs(values))))
        if np.min(np.abs(values)) < noise * scale:
            raise WindingAmbiguous('Determinant modulus dips below %g on a '
                                   'box edge' % (noise * scale))
        return values

    def horizontal(j):
        points = xs[:-1, None] + side * t[None, :] + 1j * ys[j]
        return _phase_increments(evaluate(points))

    def vertical(i):
        points = xs[i] + 1j * (ys[:-1, None] + side * t[None, :])
        return _phase_increments(evaluate(points))

    pool = pool or WorkerPool()
    rows = np.array(pool.map(horizontal, range(len(ys))))
    cols = np.array(pool.map(vertical, range(len(xs))))
    total = rows[:-1, :].T + cols[1:, :] - rows[1:, :].T - cols[:-1, :]
    winding = total / (2 * np.pi)
    counts = np.rint(winding).astype(int)
    if np.any(np.abs(winding - counts) > 0.1):
        raise WindingAmbiguous('Winding numbers are not integral')
    scan = GapScan(xs, ys, counts, leading)
    log.info('Gap scan: %d zero boxes, zero free right of %.6g',
             len(scan.zeros), scan.zero_free)
    return scan


def li(x):
    """
    The offset logarithmic integral ``int_2^x dt / log t``, by adaptive
    quadrature in ``u = log t``.
    """
    if not x > 2:
        raise DomainError('Li is evaluated for x > 2, got %r' % (x,))
    upper = math.log(x)
    value, error = integrate.quad(lambda u: math.exp(u) / u, math.log(2),
                                  upper, epsabs=1e-12, epsrel=1e-13,
                                  limit=200)
    reference = special.expi(upper) - special.expi(math.log(2))
    if abs(value - reference) > 1e-9 * max(1.0, abs(value)):
        log.warning('Li(%g): quadrature %.15g and Ei difference %.15g '
                    'disagree', x, value, reference)
    return value


class CountRecord:

    __slots__ = ('T', 'count', 'li', 'residual')

    def __init__(self, T, count, li, residual):
        self.T = T
        self.count = count
        self.li = li
        self.residual = residual

    def row(self):
        return [self.T, self.count, self.li, self.residual]


def prime_orbit_count(table, T, delta=None):
    """
    The number of primitive orbits with period at most *T*, compared with
    ``Li(e^{delta T})``. The table is complete below its horizon.
    """
    if T >= table.horizon:
        raise HorizonExceeded('T = %g is beyond the table horizon %g' %
                              (T, table.horizon), table.horizon)
    count = int(np.count_nonzero(table.periods <= T))
    delta = table.delta if delta is None else delta
    if delta is None:
        return CountRecord(T, count, None, None)
    x = math.exp(delta * T)
    main = li(x) if x > 2 else None
    residual = None if main is None else count - main
    return CountRecord(T, count, main, residual)


def counting_table(table, t_grid, delta=None):
    """
    Count records for the admissible times of *t_grid*: below the horizon
    and with ``e^{delta T}`` at most 70% of the table size.
    """
    delta = table.delta if delta is None else delta
    records = []
    for T in t_grid:
        if T >= table.horizon:
            log.debug('Skipping T=%g beyond the horizon', T)
            continue
        if delta is not None and \
                math.exp(delta * T) > CAPACITY_FRACTION * len(table):
            log.debug('Skipping T=%g beyond the table capacity', T)
            continue
        records.append(prime_orbit_count(table, T, delta))
    return records


def write_counting_csv(path, records):
    return write_csv(path, ['T', 'count', 'Li', 'residual'],
                     [r.row() for r in records])


class PowerSavingFit:

    def __init__(self, slope, stderr, interval, delta):
        self.slope = slope
        self.stderr = stderr
        self.interval = interval
        self.delta = delta

    @property
    def saving(self):
        return self.delta - self.slope

    def as_dict(self):
        return {'slope': self.slope, 'stderr': self.stderr,
                'interval': list(self.interval), 'delta': self.delta,
                'saving': self.saving}


def power_saving_fit(records, delta):
    """
    Fits ``log |residual| ~ slope T`` with a 95% confidence interval.
    """
    points = [(r.T, math.log(abs(r.residual))) for r in records
              if r.residual is not None and r.residual != 0]
    if len(points) < 3:
        raise ValueError('Need at least three nonzero residuals')
    ts, logs = np.array(points).T
    fit = stats.linregress(ts, logs)
    half = stats.t.ppf(0.975, len(ts) - 2) * fit.stderr
    return PowerSavingFit(float(fit.slope), float(fit.stderr),
                          (float(fit.slope - half), float(fit.slope + half)),
                          delta)
