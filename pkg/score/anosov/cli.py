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
Command line front end. Exit codes: 0 success, 1 configuration error,
2 failed verification, 3 LNIC failure, 4 infeasible ledger, 5 orbit table
horizon exceeded.
"""

from score.init import InitializationError, parse_config_file
import argparse
import configparser
import logging
import sys

from ._init import init
from .exceptions import AnosovError


log = logging.getLogger(__name__)

SECTION = 'score.anosov'
COMMANDS = ('liecheck', 'entropy', 'cone', 'lnic', 'dolgopyat', 'orbits',
            'mix')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='score-anosov',
        description='Numerical checks of mixing and orbit counting for '
                    'Anosov subgroups.')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', metavar='PATH',
                        help='INI file with a [score.anosov] section')
    parser.add_argument('--out', metavar='DIR', help='report directory')
    parser.add_argument('--seed', type=int, metavar='N')
    parser.add_argument('--workers', type=int, metavar='K',
                        help='worker threads; Monte-Carlo results do not '
                             'depend on it')
    parser.add_argument('--depth', type=int, metavar='N',
                        help='cylinder depth of the operator discretization')
    parser.add_argument('--verbose', '-v', action='count', default=0)
    return parser


def load_confdict(path):
    if path is None:
        return {}
    config = parse_config_file(path, return_configparser=True)
    if not config.has_section(SECTION):
        return {}
    return dict(config.items(SECTION))


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        confdict = load_confdict(args.config)
    except (OSError, configparser.Error) as e:
        log.error('Could not read configuration: %s', e)
        return 1
    overrides = {'output': args.out, 'seed': args.seed,
                 'workers': args.workers, 'cylinder_depth': args.depth}
    confdict.update({k: v for k, v in overrides.items() if v is not None})
    try:
        conf = init(confdict)
    except InitializationError as e:
        log.error('%s', e)
        return 1
    try:
        payload = getattr(conf, args.command)()
    except AnosovError as e:
        log.error('%s failed: %s', args.command, e)
        return e.exit_code
    if args.command == 'liecheck' and not payload['passed']:
        failed = [c['check'] for c in payload['checks'] if not c['passed']]
        log.error('Failed checks: %s', ', '.join(failed))
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
