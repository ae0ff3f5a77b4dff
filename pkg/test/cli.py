from score.anosov._init import ConfiguredAnosovModule
from score.anosov.cli import build_parser, load_confdict, main
from score.anosov.exceptions import LedgerInfeasible, LnicFailure
import pytest


def write_config(tmp_path, text):
    path = tmp_path / 'anosov.conf'
    path.write_text(text)
    return str(path)


def test_parser():
    args = build_parser().parse_args(['lnic', '--seed', '3', '-vv'])
    assert args.command == 'lnic'
    assert args.seed == 3
    assert args.verbose == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(['unknown'])


def test_load_confdict(tmp_path):
    path = write_config(tmp_path, '[score.anosov]\nblocks = 2, 2\n')
    assert load_confdict(path)['blocks'] == '2, 2'
    assert load_confdict(None) == {}
    other = write_config(tmp_path, '[other]\nkey = value\n')
    assert load_confdict(other) == {}


def test_invalid_configuration(tmp_path):
    path = write_config(tmp_path, '[score.anosov]\nbeta0 = 2\n')
    assert main(['entropy', '--config', path]) == 1


def test_unreadable_configuration(tmp_path):
    path = write_config(tmp_path, 'no section header\n')
    assert main(['entropy', '--config', path]) == 1


def test_lnic_failure_exit_code(tmp_path, monkeypatch):
    def fail(self):
        raise LnicFailure('LNIC constant 0 is below 1e-06', 0.0)
    monkeypatch.setattr(ConfiguredAnosovModule, 'lnic', fail)
    assert main(['lnic', '--out', str(tmp_path)]) == 3


def test_ledger_exit_code(tmp_path, monkeypatch):
    def fail(self):
        raise LedgerInfeasible('Ledger violates rho < 1', 'rho < 1')
    monkeypatch.setattr(ConfiguredAnosovModule, 'dolgopyat', fail)
    assert main(['dolgopyat', '--out', str(tmp_path)]) == 4


def test_failed_lie_checks(tmp_path, monkeypatch):
    def checks(self):
        return {'passed': False,
                'checks': [{'check': 'cocycle', 'passed': False}]}
    monkeypatch.setattr(ConfiguredAnosovModule, 'liecheck', checks)
    assert main(['liecheck', '--out', str(tmp_path)]) == 2


def test_overrides_reach_configuration(tmp_path, monkeypatch):
    seen = {}

    def entropy(self):
        seen['config'] = self.config
        return {}
    monkeypatch.setattr(ConfiguredAnosovModule, 'entropy', entropy)
    path = write_config(tmp_path, '[score.anosov]\nseed = 1\nworkers = 2\n')
    assert main(['entropy', '--config', path, '--seed', '5', '--depth', '4',
                 '--out', str(tmp_path)]) == 0
    config = seen['config']
    assert config.seed == 5
    assert config.workers == 2
    assert config.cylinder_depth == 4
    assert config.output == str(tmp_path)


@pytest.mark.timeout(300)
def test_orbit_horizon_exit_code(tmp_path):
    path = write_config(tmp_path, '[score.anosov]\n'
                                  'cylinder_depth = 3\n'
                                  'roof_depth = 8\n'
                                  'orbits.max_period = 3\n'
                                  'orbits.t_grid = 1000\n')
    assert main(['orbits', '--config', path, '--out', str(tmp_path)]) == 5
