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

from score.init import ConfiguredModule, InitializationError, parse_bool
import logging
import math
import os
import re
import warnings

import numpy as np

from . import groups
from .dolgopyat import (
    LNIC_THRESHOLD, build_ledger, build_sections, build_structure,
    contraction_profile, lnic_scan, strong_triangle_check, verify_mechanism)
from .exceptions import (
    LatticeRoofDetected, LedgerInfeasible, LnicFailure, RateNotResolved,
    TruncationInsufficient)
from .explorer import (
    GrowthIndicator, completeness_radius, enumerate_ball, exceptional_test,
    limit_cone_estimate, tangent_form)
from .lie import (
    FlagPoint, GeneratorSet, LinearForm, act, block_mask,
    busemann_weyl_identity_check, cartan_projection, diagonalizing_frame,
    is_loxodromic, iwasawa_cocycle,
    jordan_projection, normalize_blocks, normalize_theta,
    opposition_involution, proper_discontinuity_witness, theta_basis,
    weyl_permutations)
from .pool import WorkerPool
from .report import stamp, write_json
from .symbolic import (
    CocycleRoof, RoofCocycle, build_sft, periodic_orbits, write_orbits_csv)
from .thermo import (
    OperatorDiscretization, correlation_estimate, fit_correlation_rate,
    normalize, solve_delta, spectral_bound_estimate)
from .zeta import (
    OrbitTable, counting_table, gap_scan, leading_zero, power_saving_fit,
    prime_orbit_count, selberg_zeta, write_counting_csv)


__version__ = '0.1.0'

log = logging.getLogger(__name__)

LIE_TOLERANCE = 1e-8
LEDGER_ROUNDS = 5
PROFILE_STEPS = (0, 2, 4)


defaults = {
    'blocks': '2',
    'generators': '',
    'rho': '',
    'theta': '',
    'directions': '',
    'forms': '',
    'certify': True,
    'ball_radius': 6,
    'ball_cap': 200000,
    'cylinder_depth': 6,
    'roof_depth': 12,
    'roof_tolerance': 1e-9,
    'beta0': 0.5,
    'seed': 0,
    'workers': 1,
    'output': '.',
    'aperture': 0.3,
    'dolgopyat.m0': 3,
    'dolgopyat.b_grid': '2',
    'dolgopyat.a_grid': '-0.005 0 0.01',
    'dolgopyat.samples': 256,
    'dolgopyat.sections': None,
    'dolgopyat.mu': 'measured',
    'orbits.max_period': 8,
    'orbits.k_cutoff': 16,
    'orbits.t_grid': '',
    'orbits.scan_height': 4.0,
    'spectral.b_grid': '1 2 4 8',
    'spectral.k_max': 40,
    'mix.t_grid': '0 0.25 0.5 0.75 1 1.5 2 3',
    'mix.samples': 20000,
}


def init(confdict):
    """
    Initializes this module according to the :ref:`SCORE module initialization
    guidelines <module_initialization>` with the following configuration keys:

    :confkey:`blocks` :confdefault:`2`
        Block sizes of the ambient group, separated by commas. ``2`` is
        :math:`SL_2(\\mathbb R)`, ``2, 2`` the block-diagonal product of two
        copies.

    :confkey:`generators` :confdefault:`""`
        One generator matrix per line, rows separated by ``;`` and entries
        by whitespace or commas. Without generators a stock group matching
        :confkey:`blocks` is used (a Schottky pair, its symmetric
        self-joining or a pair in :math:`SL_3(\\mathbb R)`).

    :confkey:`rho` :confdefault:`""`
        Images of the generators under a second representation, in the same
        format. When present, the group is the block-diagonal self-joining
        and :confkey:`blocks` is derived from the two matrix sizes.

    :confkey:`theta` :confdefault:`""`
        Simple root indices (1-based) spanning :math:`\\Theta`. Empty means
        all simple roots.

    :confkey:`directions` :confdefault:`""`
        Directions in the limit cone, ``;``-separated coordinate vectors.
        Empty means the centroid of the estimated limit cone.

    :confkey:`forms` :confdefault:`""`
        Explicit linear forms, ``;``-separated coefficient vectors. They
        replace the tangent forms of :confkey:`directions`.

    :confkey:`certify` :confdefault:`True`
        Whether generators have to pass the ping-pong certificate.

    :confkey:`ball_radius` :confdefault:`6`
        Word length of the ball used for cone and growth estimates.

    :confkey:`ball_cap` :confdefault:`200000`
        Largest number of elements a word ball may hold.

    :confkey:`cylinder_depth` :confdefault:`6`
        Cylinder depth of the transfer operator discretization.

    :confkey:`roof_depth` :confdefault:`12`
        Truncation depth of the first return vector.

    :confkey:`roof_tolerance` :confdefault:`1e-9`
        Largest accepted change of the first return vector between
        successive depths.

    :confkey:`beta0` :confdefault:`0.5`
        Base of the symbolic metric, in ``(0, 1)``.

    :confkey:`seed` :confdefault:`0`
        Root seed of every random stream.

    :confkey:`workers` :confdefault:`1`
        Number of worker threads.

    :confkey:`output` :confdefault:`"."`
        Directory receiving the reports.

    :confkey:`aperture` :confdefault:`0.3`
        Half-angle of the cones the growth indicator is fitted on.

    :confkey:`dolgopyat.m0` :confdefault:`3`
        Smallest section length tried by the constants ledger.

    :confkey:`dolgopyat.b_grid` :confdefault:`"2"`
        Frequencies ``|b| > 1`` the Dolgopyat operators are verified at.

    :confkey:`dolgopyat.a_grid` :confdefault:`"-0.005 0 0.01"`
        Real parts ``a`` the Dolgopyat operators are verified at.

    :confkey:`dolgopyat.samples` :confdefault:`256`
        Random cone pairs per frequency and real part.

    :confkey:`dolgopyat.sections` :confdefault:`None`
        Number of sections, at least 2. ``None`` uses one section per
        possible middle symbol.

    :confkey:`dolgopyat.mu` :confdefault:`measured`
        Damping depth of the Dolgopyat operators. ``ledger`` uses the value
        of the constants ledger, which vanishes in double precision for
        realistic section lengths. ``measured`` uses half the largest depth
        at which the constant pair still admits a dense subset. A number in
        ``[0, 1/4]`` is used as given.

    :confkey:`orbits.max_period` :confdefault:`8`
        Largest symbolic period of enumerated orbits.

    :confkey:`orbits.k_cutoff` :confdefault:`16`
        Number of factors of the Selberg product.

    :confkey:`orbits.t_grid` :confdefault:`""`
        Times the prime orbit count is evaluated at. Every time must lie
        below the horizon of the orbit table. Empty picks a grid below the
        horizon.

    :confkey:`orbits.scan_height` :confdefault:`4.0`
        Height of the zero scan of the dynamical determinant.

    :confkey:`spectral.b_grid` :confdefault:`"1 2 4 8"`
        Frequencies of the spectral bound estimate.

    :confkey:`spectral.k_max` :confdefault:`40`
        Number of operator iterations of the spectral bound estimate.

    :confkey:`mix.t_grid` :confdefault:`"0 0.25 0.5 0.75 1 1.5 2 3"`
        Flow times of the correlation estimate.

    :confkey:`mix.samples` :confdefault:`20000`
        Monte-Carlo samples of the correlation estimate.
    """
    conf = defaults.copy()
    conf.update(confdict)
    return ConfiguredAnosovModule(RunConfig.parse(conf))


def _fail(key, message):
    import score.anosov
    raise InitializationError(
        score.anosov, 'Invalid value for "%s": %s' % (key, message))


def _text(value):
    if value is None:
        return ''
    return str(value).strip()


def _numbers(key, value, kind=float):
    if isinstance(value, (list, tuple, np.ndarray)):
        items = list(value)
    else:
        items = [v for v in re.split(r'[\s,]+', _text(value)) if v]
    try:
        return tuple(kind(v) for v in items)
    except (TypeError, ValueError):
        _fail(key, _text(value))


def _number(key, value, kind=float, minimum=None, maximum=None):
    if isinstance(value, str) and value.strip() in ('', 'None'):
        _fail(key, 'a value is required')
    try:
        number = kind(value)
    except (TypeError, ValueError):
        _fail(key, repr(value))
    if kind is float and not math.isfinite(number):
        _fail(key, 'must be finite')
    if minimum is not None and number < minimum:
        _fail(key, 'must be at least %r' % (minimum,))
    if maximum is not None and number > maximum:
        _fail(key, 'must be at most %r' % (maximum,))
    return number


def _vectors(key, value):
    if isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = [p for p in _text(value).split(';') if p.strip()]
    return tuple(np.array(_numbers(key, p), dtype=float) for p in parts)


def _matrices(key, value):
    if isinstance(value, (list, tuple)):
        return tuple(np.array(m, dtype=float) for m in value)
    matrices = []
    for line in _text(value).splitlines():
        if not line.strip():
            continue
        rows = [_numbers(key, row) for row in line.split(';')]
        if any(len(row) != len(rows) for row in rows):
            _fail(key, 'matrix %r is not square' % line.strip())
        matrices.append(np.array(rows, dtype=float))
    return tuple(matrices)


def _format_numbers(values):
    return ' '.join(repr(float(v)) for v in values)


def _format_matrices(matrices):
    lines = ['; '.join(_format_numbers(row) for row in matrix)
             for matrix in matrices]
    return ''.join('\n' + line for line in lines)


class RunConfig:
    """
    The parsed configuration of a run. :meth:`confdict` emits string values
    that :meth:`parse` reads back into an equal object.
    """

    def __init__(self, **fields):
        self.__dict__.update(fields)

    @classmethod
    def parse(cls, conf):
        generators = _matrices('generators', conf['generators'])
        rho = _matrices('rho', conf['rho'])
        blocks = _numbers('blocks', conf['blocks'], int)
        if not blocks:
            _fail('blocks', 'need at least one block')
        if rho:
            if len(rho) != len(generators):
                _fail('rho', 'need one image per generator')
            derived = (generators[0].shape[0], rho[0].shape[0])
            if blocks != derived and blocks != (2,):
                warnings.warn('Ignoring value of "blocks" for a '
                              'self-joining')
            blocks = derived
        try:
            blocks = normalize_blocks(blocks)
        except ValueError as e:
            _fail('blocks', str(e))
        if not generators and blocks not in ((2,), (2, 2), (3,)):
            _fail('generators', 'no stock group for blocks %r' % (blocks,))
        theta = _numbers('theta', conf['theta'], int) or None
        try:
            normalize_theta(theta, blocks)
        except Exception as e:
            _fail('theta', str(e))
        sections = conf['dolgopyat.sections']
        if _text(sections) in ('', 'None'):
            sections = None
        else:
            sections = _number('dolgopyat.sections', sections, int, 2)
        damping = _text(conf['dolgopyat.mu']).lower()
        if damping not in ('measured', 'ledger'):
            damping = _number('dolgopyat.mu', damping, float, 0.0, 0.25)
        config = cls(
            blocks=blocks,
            generators=generators,
            rho=rho,
            theta=theta,
            directions=_vectors('directions', conf['directions']),
            forms=_vectors('forms', conf['forms']),
            certify=parse_bool(conf['certify']),
            ball_radius=_number('ball_radius', conf['ball_radius'], int, 1),
            ball_cap=_number('ball_cap', conf['ball_cap'], int, 1),
            cylinder_depth=_number('cylinder_depth', conf['cylinder_depth'],
                                   int, 2),
            roof_depth=_number('roof_depth', conf['roof_depth'], int, 1),
            roof_tolerance=_number('roof_tolerance', conf['roof_tolerance'],
                                   float, 0.0),
            beta0=_number('beta0', conf['beta0'], float, 1e-6, 1 - 1e-6),
            seed=_number('seed', conf['seed'], int, 0),
            workers=_number('workers', conf['workers'], int, 1),
            output=_text(conf['output']) or '.',
            aperture=_number('aperture', conf['aperture'], float, 1e-3,
                             math.pi / 2),
            m0=_number('dolgopyat.m0', conf['dolgopyat.m0'], int, 3),
            dolgopyat_b_grid=_numbers('dolgopyat.b_grid',
                                      conf['dolgopyat.b_grid']),
            a_grid=_numbers('dolgopyat.a_grid', conf['dolgopyat.a_grid']),
            dolgopyat_samples=_number('dolgopyat.samples',
                                      conf['dolgopyat.samples'], int, 0),
            sections=sections,
            damping=damping,
            max_period=_number('orbits.max_period',
                               conf['orbits.max_period'], int, 1, 18),
            k_cutoff=_number('orbits.k_cutoff', conf['orbits.k_cutoff'],
                             int, 1),
            orbits_t_grid=_numbers('orbits.t_grid', conf['orbits.t_grid']),
            scan_height=_number('orbits.scan_height',
                                conf['orbits.scan_height'], float, 0.0),
            spectral_b_grid=_numbers('spectral.b_grid',
                                     conf['spectral.b_grid']),
            k_max=_number('spectral.k_max', conf['spectral.k_max'], int, 2),
            mix_t_grid=_numbers('mix.t_grid', conf['mix.t_grid']),
            mix_samples=_number('mix.samples', conf['mix.samples'], int, 1),
        )
        if any(abs(b) <= 1 for b in config.dolgopyat_b_grid):
            _fail('dolgopyat.b_grid', 'frequencies need |b| > 1')
        if not config.a_grid:
            _fail('dolgopyat.a_grid', 'need at least one value')
        if not config.mix_t_grid or min(config.mix_t_grid) < 0:
            _fail('mix.t_grid', 'need non-negative times')
        try:
            config.generator_set()
        except ValueError as e:
            _fail('generators', str(e))
        return config

    def gamma0_images(self):
        if self.generators:
            return list(self.generators)
        if self.blocks == (3,):
            return [g.entries for g in groups.sl3_pair().generators]
        return groups.schottky_pair()

    def rho_images(self):
        """
        The second representation of a self-joining, ``None`` for a group
        given directly.
        """
        if self.rho:
            return list(self.rho)
        if not self.generators and self.blocks == (2, 2):
            a, b = groups.schottky_pair()
            return [b, a]
        return None

    def generator_set(self):
        rho = self.rho_images()
        if rho is not None:
            return GeneratorSet.self_joining(self.gamma0_images(), rho)
        return GeneratorSet(self.gamma0_images(), self.blocks)

    def confdict(self):
        return {
            'blocks': ', '.join(str(b) for b in self.blocks),
            'generators': _format_matrices(self.generators),
            'rho': _format_matrices(self.rho),
            'theta': ', '.join(str(t) for t in self.theta or ()),
            'directions': '; '.join(_format_numbers(d)
                                    for d in self.directions),
            'forms': '; '.join(_format_numbers(f) for f in self.forms),
            'certify': str(self.certify).lower(),
            'ball_radius': str(self.ball_radius),
            'ball_cap': str(self.ball_cap),
            'cylinder_depth': str(self.cylinder_depth),
            'roof_depth': str(self.roof_depth),
            'roof_tolerance': repr(self.roof_tolerance),
            'beta0': repr(self.beta0),
            'seed': str(self.seed),
            'workers': str(self.workers),
            'output': self.output,
            'aperture': repr(self.aperture),
            'dolgopyat.m0': str(self.m0),
            'dolgopyat.b_grid': _format_numbers(self.dolgopyat_b_grid),
            'dolgopyat.a_grid': _format_numbers(self.a_grid),
            'dolgopyat.samples': str(self.dolgopyat_samples),
            'dolgopyat.sections': str(self.sections),
            'dolgopyat.mu': str(self.damping),
            'orbits.max_period': str(self.max_period),
            'orbits.k_cutoff': str(self.k_cutoff),
            'orbits.t_grid': _format_numbers(self.orbits_t_grid),
            'orbits.scan_height': repr(self.scan_height),
            'spectral.b_grid': _format_numbers(self.spectral_b_grid),
            'spectral.k_max': str(self.k_max),
            'mix.t_grid': _format_numbers(self.mix_t_grid),
            'mix.samples': str(self.mix_samples),
        }

    def _key(self):
        key = []
        for name in sorted(self.__dict__):
            value = self.__dict__[name]
            if isinstance(value, tuple) and value and \
                    isinstance(value[0], np.ndarray):
                value = tuple((v.shape, tuple(v.ravel())) for v in value)
            key.append((name, value))
        return tuple(key)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self._key() == other._key()

    def __repr__(self):
        return 'RunConfig(blocks=%r, generators=%d)' % (
            self.blocks, len(self.gamma0_images()))


class RoofSpec:
    """
    A roof together with the direction and form it was built from.
    """

    def __init__(self, direction, form, roof, exceptional=False,
                 margin=None):
        self.direction = direction
        self.form = form
        self.roof = roof
        self.exceptional = exceptional
        self.margin = margin

    def as_dict(self):
        return {'direction': self.direction, 'form': self.form.coeffs,
                'exceptional': self.exceptional, 'margin': self.margin}


def _first_symbol_observable(words, fraction):
    return np.where(words[:, 0] == 0, 1.0, -0.5) * \
        np.sin(np.pi * fraction) ** 2


def _flow_observable(words, fraction):
    return np.cos(2 * np.pi * fraction) + (words[:, 0] == words[:, 1])


class ConfiguredAnosovModule(ConfiguredModule):
    """
    This module's :class:`configuration class <score.init.ConfiguredModule>`.
    Every command method runs one pipeline, writes its report to
    :attr:`RunConfig.output` and returns the stamped payload.
    """

    def __init__(self, config):
        super().__init__("score.anosov")
        self.config = config
        self.pool = WorkerPool(config.workers)
        self._generators = None
        self._model = None
        self._cocycle = None
        self._ball = None
        self._indicator = None

    @property
    def generators(self):
        if self._generators is None:
            self._generators = self.config.generator_set()
        return self._generators

    @property
    def model(self):
        if self._model is None:
            self._model = build_sft(self.generators, self.config.beta0,
                                    self.config.certify)
        return self._model

    @property
    def cocycle(self):
        if self._cocycle is None:
            self._cocycle = RoofCocycle(
                self.model, self.config.theta, self.config.roof_depth,
                self.config.roof_tolerance)
        return self._cocycle

    def ball(self):
        if self._ball is None:
            self._ball = enumerate_ball(
                self.generators, self.config.ball_radius,
                self.config.ball_cap, self.pool, self.config.certify)
        return self._ball

    def indicator(self):
        if self._indicator is None:
            directions = list(self.config.directions) or None
            self._indicator = GrowthIndicator(
                self.ball(), self.config.theta, self.config.aperture,
                directions=directions)
        return self._indicator

    def roof_specs(self):
        """
        The roofs of the configured forms; otherwise the simple root for a
        one-dimensional :math:`\\mathfrak a_\\Theta` and the tangent forms
        of the configured directions.
        """
        config = self.config
        blocks = self.generators.blocks
        theta = normalize_theta(config.theta, blocks)
        specs = []
        if config.forms:
            for coeffs in config.forms:
                form = LinearForm(coeffs, blocks)
                specs.append(RoofSpec(None, form,
                                      CocycleRoof(self.cocycle, form)))
        elif theta_basis(theta, blocks).shape[1] == 1:
            form = LinearForm.root(theta[0], blocks)
            direction = theta_basis(theta, blocks)[:, 0]
            specs.append(RoofSpec(direction, form,
                                  CocycleRoof(self.cocycle, form)))
        else:
            indicator = self.indicator()
            for direction in indicator.directions:
                exceptional, margin = exceptional_test(
                    direction, indicator, theta)
                form = tangent_form(direction, indicator)
                specs.append(RoofSpec(direction, form,
                                      CocycleRoof(self.cocycle, form),
                                      exceptional, margin))
        return specs

    def _emit(self, name, payload):
        config = self.config
        stamped = stamp(payload, __version__, config.seed,
                        config.cylinder_depth, config.beta0)
        path = write_json(os.path.join(config.output, name + '.json'),
                          stamped)
        log.info('Wrote %s', path)
        return stamped

    def _path(self, name):
        return os.path.join(self.config.output, name)

    def dump_config(self):
        """
        The configuration as INI text with a ``[score.anosov]`` section.
        """
        lines = ['[score.anosov]']
        for key, value in self.config.confdict().items():
            lines.append('%s = %s' % (key, value.replace('\n', '\n    ')))
        return '\n'.join(lines) + '\n'

    def liecheck(self):
        """
        Runs the invariant suite of the Lie-theoretic layer on the
        configured generators and returns the residual of every check.
        """
        generators = self.generators
        blocks = generators.blocks
        checks = []

        def record(name, residual, tolerance=LIE_TOLERANCE, **extra):
            check = {'check': name, 'residual': float(residual),
                     'tolerance': tolerance,
                     'passed': bool(residual <= tolerance)}
            check.update(extra)
            checks.append(check)

        rng = np.random.default_rng(self.config.seed)
        xi = FlagPoint.from_matrix(rng.normal(size=(sum(blocks),) * 2) *
                                   block_mask(blocks), blocks)
        for g in generators.generators:
            letter = g.word[0]
            lam = jordan_projection(g)
            record('jordan_power', (jordan_projection(g.power(5)) -
                                    lam * 5).norm(), letter=letter)
            record('cartan_limit', (cartan_projection(g.power(64)) / 64 -
                                    lam).norm(), 1e-1, letter=letter)
            record('opposition', (jordan_projection(g.inv()) -
                                  opposition_involution(lam)).norm(),
                   letter=letter)
            h = generators.letter(letter % generators.rank + 1)
            composite = iwasawa_cocycle(g @ h, xi) - (
                iwasawa_cocycle(g, act(h, xi)) + iwasawa_cocycle(h, xi))
            record('cocycle', composite.norm(), letter=letter)
            if is_loxodromic(g):
                frame = diagonalizing_frame(g)
                attracting = FlagPoint.from_matrix(frame.entries, blocks)
                record('attracting_flag',
                       (iwasawa_cocycle(g, attracting) - lam).norm(),
                       letter=letter)
                residual = max(busemann_weyl_identity_check(g, w)
                               for w in weyl_permutations(blocks))
                record('busemann_weyl', residual, 1e-6, letter=letter)
        rho = self.config.rho_images()
        if rho is not None:
            witness = proper_discontinuity_witness(
                self.config.gamma0_images(), rho)
            record('witness', witness.max_abs_value, 1e-6,
                   slope=witness.slope)
        passed = all(c['passed'] for c in checks)
        log.info('Lie checks: %d run, passed=%s', len(checks), passed)
        return self._emit('liecheck', {'checks': checks, 'passed': passed})

    def entropy(self):
        """
        The critical exponent of every configured direction, with the
        difference to one cylinder depth less as extrapolation error.
        """
        depth = self.config.cylinder_depth
        rows = []
        for roof_spec in self.roof_specs():
            delta = solve_delta(OperatorDiscretization(roof_spec.roof, depth))
            coarse = solve_delta(OperatorDiscretization(roof_spec.roof,
                                                        depth - 1))
            row = roof_spec.as_dict()
            row.update({'delta': delta, 'error': abs(delta - coarse)})
            rows.append(row)
        return self._emit('entropy', {'directions': rows})

    def cone(self):
        """
        Limit cone, growth indicator values and exceptional tests of the
        configured directions. The word ball is written as CSV.
        """
        ball = self.ball()
        theta = normalize_theta(self.config.theta, ball.blocks)
        cone = limit_cone_estimate(ball, theta)
        indicator = self.indicator()
        rows = []
        for direction in indicator.directions:
            fit = indicator.fit(direction)
            row = {'direction': direction, 'value': fit.slope,
                   'stderr': fit.stderr, 'samples': fit.count}
            if theta_basis(theta, ball.blocks).shape[1] > 1:
                exceptional, margin = exceptional_test(direction, indicator,
                                                       theta)
                row.update({'exceptional': exceptional, 'margin': margin,
                            'form': tangent_form(direction, indicator)})
            rows.append(row)
        ball.to_csv(self._path('ball.csv'))
        return self._emit('cone', {
            'elements': len(ball),
            'cone': cone,
            'completeness_radius': completeness_radius(ball, theta),
            'directions': rows,
        })

    def _sections(self, roof, m):
        if self.config.sections is None:
            return None
        return build_sections(roof.model, 0, m, self.config.sections)

    def lnic(self):
        """
        The LNIC constant of every configured direction at section length
        ``dolgopyat.m0``. Raises :class:`LnicFailure` after writing the
        report if any constant is below threshold.
        """
        m = self.config.m0
        rows = []
        for roof_spec in self.roof_specs():
            result = lnic_scan(roof_spec.roof, m,
                               sections=self._sections(roof_spec.roof, m),
                               strict=False)
            row = roof_spec.as_dict()
            row.update(result.as_dict())
            rows.append(row)
        payload = self._emit('lnic', {'m': m, 'directions': rows})
        worst = min(r['epsilon'] for r in rows)
        if worst < LNIC_THRESHOLD:
            raise LnicFailure('LNIC constant %.3g is below %g' %
                              (worst, LNIC_THRESHOLD), worst)
        return payload

    def _ledger(self, normalized, roof):
        """
        Alternates ledger fits and LNIC scans until the scan at the ledger's
        section length confirms the LNIC constant the ledger was built on.
        """
        config = self.config
        m = config.m0
        scan = lnic_scan(roof, m, sections=self._sections(roof, m),
                         strict=False)
        for _ in range(LEDGER_ROUNDS):
            if scan.epsilon < LNIC_THRESHOLD:
                return None, scan
            ledger = build_ledger(normalized, scan.epsilon, config.a_grid,
                                  m, seed=config.seed)
            confirmed = lnic_scan(roof, ledger.m,
                                  sections=self._sections(roof, ledger.m),
                                  strict=False)
            if confirmed.epsilon >= ledger.epsilon:
                return ledger, confirmed
            scan, m = confirmed, ledger.m
        raise LedgerInfeasible('LNIC constant did not stabilize within %d '
                               'ledger rounds' % LEDGER_ROUNDS, 'lnic')

    def dolgopyat(self):
        """
        Builds the constants ledger and the Dolgopyat structures of every
        configured frequency and verifies the mechanism. A roof failing
        LNIC is reported with cause ``'lnic'`` and raises
        :class:`LnicFailure`; an infeasible ledger raises
        :class:`LedgerInfeasible` naming the violated inequality.
        """
        config = self.config
        rows = []
        failure = None
        for roof_spec in self.roof_specs():
            disc = OperatorDiscretization(roof_spec.roof, config.cylinder_depth)
            delta = solve_delta(disc)
            normalized, _ = normalize(disc, delta)
            ledger, scan = self._ledger(normalized, roof_spec.roof)
            row = roof_spec.as_dict()
            row.update({'delta': delta, 'lnic': scan})
            rows.append(row)
            if ledger is None:
                row['cause'] = 'lnic'
                failure = scan.epsilon
                continue
            row['ledger'] = ledger
            operators = {disc.depth: normalized}
            mechanisms = []
            for b in config.dolgopyat_b_grid:
                structure = build_structure(b, ledger, self.model,
                                            sections=scan.sections)
                depth = max(disc.depth, structure.d_words.shape[1])
                if depth not in operators:
                    operators[depth], _ = normalize(
                        OperatorDiscretization(roof_spec.roof, depth), delta)
                report = verify_mechanism(
                    operators[depth], structure, config.a_grid,
                    config.dolgopyat_samples, config.seed, scan.epsilon,
                    self.pool, mu=None if config.damping == 'ledger'
                    else config.damping)
                mechanism = report.as_dict()
                mechanism['disjoint'] = structure.disjoint()
                mechanisms.append(mechanism)
            row['mechanisms'] = mechanisms
            b = config.dolgopyat_b_grid[0]
            row['profile'] = contraction_profile(
                operators[max(operators)], ledger, self.model, b,
                [ledger.m + step for step in PROFILE_STEPS],
                samples=min(config.dolgopyat_samples, 16), seed=config.seed)
        payload = self._emit('dolgopyat', {
            'directions': rows,
            'strong_triangle': strong_triangle_check(seed=config.seed),
        })
        if failure is not None:
            raise LnicFailure('LNIC constant %.3g is below %g' %
                              (failure, LNIC_THRESHOLD), failure)
        return payload

    def orbits(self):
        """
        Orbit table, zeta values, leading zero, zero scan and prime orbit
        counts of the first configured direction. Writes the orbit and
        counting tables as CSV.
        """
        config = self.config
        roof_spec = self.roof_specs()[0]
        theta = normalize_theta(config.theta, self.generators.blocks)
        disc = OperatorDiscretization(roof_spec.roof, config.cylinder_depth)
        delta = solve_delta(disc)
        table = OrbitTable.from_group(self.generators, roof_spec.form,
                                      config.max_period, theta, delta,
                                      self.pool, roof=roof_spec.roof)
        orbits = periodic_orbits(self.model, config.max_period,
                                 pool=self.pool)
        write_orbits_csv(self._path('orbits.csv'), orbits, roof_spec.form)
        if config.orbits_t_grid:
            records = [prime_orbit_count(table, T, delta)
                       for T in config.orbits_t_grid]
        else:
            grid = np.linspace(0.2, 0.95, 16) * table.horizon
            records = counting_table(table, grid, delta)
        write_counting_csv(self._path('counting.csv'), records)
        try:
            fit = power_saving_fit(records, delta)
        except ValueError as e:
            log.warning('No power saving fit: %s', e)
            fit = None
        zero = leading_zero(table)
        try:
            zeta = selberg_zeta(delta + 1, table, K=config.k_cutoff)
        except TruncationInsufficient as e:
            zeta = {'error': str(e), 'bound': e.bound}
        try:
            scan = gap_scan(table, height=config.scan_height,
                            pool=self.pool)
        except LatticeRoofDetected as e:
            scan = {'lattice': e.spacing}
        return self._emit('orbits', {
            'direction': roof_spec.direction,
            'form': roof_spec.form.coeffs,
            'delta': delta,
            'orbits': len(table),
            'horizon': table.horizon,
            'entropy': table.entropy,
            'leading_zero': zero,
            'selberg': zeta,
            'gap_scan': scan,
            'counts': [dict(zip(('T', 'count', 'li', 'residual'), r.row()))
                       for r in records],
            'power_saving': fit,
        })

    def mix(self):
        """
        Spectral bound of the normalized operators and a Monte-Carlo
        estimate of the correlation decay of the first configured
        direction.
        """
        config = self.config
        roof_spec = self.roof_specs()[0]
        disc = OperatorDiscretization(roof_spec.roof, config.cylinder_depth)
        delta = solve_delta(disc)
        normalized, _ = normalize(disc, delta)
        try:
            spectral = spectral_bound_estimate(
                normalized, config.spectral_b_grid, config.k_max,
                pool=self.pool)
        except LatticeRoofDetected as e:
            spectral = {'lattice': e.spacing}
        result = correlation_estimate(
            normalized, _first_symbol_observable, _flow_observable,
            config.mix_t_grid, config.mix_samples, seed=config.seed,
            pool=self.pool, fit_rate=False)
        try:
            result = fit_correlation_rate(result)
        except RateNotResolved as e:
            log.warning('%s', e)
        return self._emit('mix', {
            'direction': roof_spec.direction,
            'delta': delta,
            'spectral': spectral,
            'correlations': result,
        })


