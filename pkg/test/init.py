from score.anosov import _init as anosov_init
from score.anosov._init import ConfiguredAnosovModule, RunConfig, defaults, init
from score.anosov.dolgopyat import LNIC_THRESHOLD, ConstantsLedger, LnicResult
from score.anosov.exceptions import HorizonExceeded
from score.anosov.explorer import reduced_word_count
from score.init import InitializationError
import configparser
import json
import math
import numpy as np
import pytest


def test_defaults():
    mod = init({})
    config = mod.config
    assert config.blocks == (2,)
    assert config.generators == ()
    assert config.theta is None
    assert config.seed == defaults['seed']
    assert config.workers == defaults['workers']
    assert config.a_grid == (-0.005, 0.0, 0.01)
    assert config.dolgopyat_b_grid == (2.0,)
    assert config.sections is None
    assert config.certify is True
    assert mod.generators.rank == 2
    assert config.rho_images() is None


def test_stock_self_joining():
    config = init({'blocks': '2, 2'}).config
    assert config.blocks == (2, 2)
    assert len(config.rho_images()) == 2
    assert config.generator_set().blocks == (2, 2)


def test_explicit_generators():
    mod = init({'generators': '2 0; 0 0.5\n1.25 0.75; 0.75 1.25',
                'certify': 'false'})
    assert mod.config.certify is False
    assert len(mod.config.generators) == 2
    assert np.allclose(mod.generators.letter(1).entries,
                       [[2, 0], [0, 0.5]])


def test_config_round_trip():
    config = init({'blocks': '2, 2', 'theta': '1', 'seed': '7',
                   'dolgopyat.sections': '3',
                   'directions': '1 -1 0.5 -0.5',
                   'orbits.t_grid': '1.5, 2.5'}).config
    assert RunConfig.parse(dict(config.confdict())) == config


def test_dump_config_is_ini():
    mod = init({'generators': '2 0; 0 0.5\n1.25 0.75; 0.75 1.25',
                'beta0': '0.4', 'mix.t_grid': '0 1 2'})
    parser = configparser.ConfigParser()
    parser.read_string(mod.dump_config())
    confdict = dict(parser.items('score.anosov'))
    assert init(confdict).config == mod.config


@pytest.mark.parametrize('key, value', [
    ('generators', '1 0; 0'),
    ('generators', '2 0; 0 1'),
    ('blocks', '4'),
    ('blocks', ''),
    ('theta', '5'),
    ('beta0', '1.5'),
    ('cylinder_depth', '1'),
    ('dolgopyat.b_grid', '1'),
    ('dolgopyat.a_grid', ''),
    ('dolgopyat.sections', '1'),
    ('dolgopyat.mu', 'abc'),
    ('orbits.max_period', '19'),
    ('mix.t_grid', '-1 0'),
    ('seed', 'abc'),
])
def test_invalid_values(key, value):
    with pytest.raises(InitializationError) as info:
        init({key: value})
    assert key in str(info.value)


def test_rho_needs_one_image_per_generator():
    with pytest.raises(InitializationError):
        init({'generators': '2 0; 0 0.5\n1.25 0.75; 0.75 1.25',
              'rho': '2 0; 0 0.5'})


def test_rho_overrides_blocks():
    generators = '2 0; 0 0.5\n1.25 0.75; 0.75 1.25'
    rho = '1.25 0.75; 0.75 1.25\n2 0; 0 0.5'
    with pytest.warns(UserWarning):
        config = init({'generators': generators, 'rho': rho,
                       'blocks': '3'}).config
    assert config.blocks == (2, 2)


@pytest.mark.timeout(120)
def test_liecheck_report(tmp_path):
    mod = init({'output': str(tmp_path)})
    payload = mod.liecheck()
    assert payload['passed']
    names = set(c['check'] for c in payload['checks'])
    assert {'jordan_power', 'cartan_limit', 'opposition', 'cocycle',
            'attracting_flag', 'busemann_weyl'} <= names
    with open(str(tmp_path / 'liecheck.json')) as fp:
        written = json.load(fp)
    assert written['passed'] is True
    assert written['seed'] == 0
    assert written['version'] == '0.1.0'


@pytest.mark.timeout(120)
def test_entropy_report(tmp_path):
    mod = init({'output': str(tmp_path), 'cylinder_depth': '3',
                'roof_depth': '8', 'roof_tolerance': '1e-6'})
    payload = mod.entropy()
    row, = payload['directions']
    assert 0 < row['delta'] < math.log(3)
    assert row['error'] >= 0
    assert (tmp_path / 'entropy.json').exists()


@pytest.mark.timeout(120)
def test_orbit_counts_beyond_horizon(tmp_path):
    mod = init({'output': str(tmp_path), 'cylinder_depth': '3',
                'roof_depth': '8', 'roof_tolerance': '1e-6',
                'orbits.max_period': '3', 'orbits.t_grid': '1000'})
    with pytest.raises(HorizonExceeded):
        mod.orbits()
    assert (tmp_path / 'orbits.csv').exists()


@pytest.mark.timeout(120)
def test_cone_report(tmp_path):
    mod = init({'output': str(tmp_path), 'ball_radius': '5'})
    payload = mod.cone()
    assert payload['elements'] == reduced_word_count(2, 5)
    assert len(payload['directions']) >= 1
    assert all(row['samples'] > 0 for row in payload['directions'])
    assert (tmp_path / 'ball.csv').exists()
    assert (tmp_path / 'cone.json').exists()


@pytest.mark.timeout(120)
def test_lnic_report(tmp_path):
    mod = init({'output': str(tmp_path), 'roof_depth': '8',
                'roof_tolerance': '1e-6'})
    payload = mod.lnic()
    assert payload['m'] == 3
    row, = payload['directions']
    assert row['epsilon'] >= LNIC_THRESHOLD
    assert row['pairs'] > 0
    assert (tmp_path / 'lnic.json').exists()


@pytest.mark.timeout(300)
def test_mix_report(tmp_path):
    mod = init({'output': str(tmp_path), 'cylinder_depth': '3',
                'roof_depth': '8', 'roof_tolerance': '1e-6',
                'mix.samples': '2000', 'mix.t_grid': '0 0.5 1',
                'spectral.b_grid': '1 2', 'spectral.k_max': '12'})
    payload = mod.mix()
    assert 0 < payload['delta'] < math.log(3)
    assert 'correlations' in payload
    assert (tmp_path / 'mix.json').exists()


class StubStructure:

    def __init__(self, b):
        self.b = b
        self.d_words = np.zeros((1, 3 if abs(b) < 4 else 4), dtype=int)

    def disjoint(self):
        return True


class StubReport:

    def __init__(self, b):
        self.b = b

    def as_dict(self):
        return {'b': self.b, 'contraction': 0.5, 'cause': None}


@pytest.mark.timeout(120)
@pytest.mark.parametrize('damping, mu', [
    ('measured', 'measured'),
    ('ledger', None),
    ('0.1', 0.1),
])
def test_dolgopyat_over_frequency_grid(tmp_path, monkeypatch, damping, mu):
    calls = []

    def ledger(self, normalized, roof):
        constants = ConstantsLedger(0.05, 0.9, 0.5, 1, 4, 0.99, 2.02, 2.0,
                                    20.0, 50.0, 21, -100.0, 1.0)
        return constants, LnicResult(0.05, [(0, 1, 0), (0, 2, 0)], 3, None)

    def verify(normalized, structure, *args, **kwargs):
        calls.append((structure.b, normalized.disc.depth, kwargs['mu']))
        return StubReport(structure.b)

    def profile(normalized, ledger, model, b, ms, samples, seed):
        return [(m, 0.9) for m in ms]

    monkeypatch.setattr(ConfiguredAnosovModule, '_ledger', ledger)
    monkeypatch.setattr(anosov_init, 'build_structure',
                        lambda b, ledger, model, sections: StubStructure(b))
    monkeypatch.setattr(anosov_init, 'verify_mechanism', verify)
    monkeypatch.setattr(anosov_init, 'contraction_profile', profile)
    mod = init({'output': str(tmp_path), 'cylinder_depth': '3',
                'roof_depth': '8', 'roof_tolerance': '1e-6',
                'dolgopyat.b_grid': '2 8', 'dolgopyat.mu': damping})
    payload = mod.dolgopyat()
    assert calls == [(2.0, 3, mu), (8.0, 4, mu)]
    row, = payload['directions']
    assert [m['b'] for m in row['mechanisms']] == [2.0, 8.0]
    assert all(m['disjoint'] for m in row['mechanisms'])
    assert row['profile'] == [(21, 0.9), (23, 0.9), (25, 0.9)]
    assert (tmp_path / 'dolgopyat.json').exists()


def test_damping_depth_values():
    assert init({}).config.damping == 'measured'
    assert init({'dolgopyat.mu': 'Ledger'}).config.damping == 'ledger'
    assert init({'dolgopyat.mu': '0.1'}).config.damping == 0.1
    with pytest.raises(InitializationError):
        init({'dolgopyat.mu': '0.5'})
