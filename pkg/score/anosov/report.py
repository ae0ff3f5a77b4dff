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
JSON and CSV emission shared by all commands.
"""

import csv
import json
import math
import numbers
import os

import numpy as np


SIGNIFICANT_DIGITS = 12


def round_significant(value, digits=SIGNIFICANT_DIGITS):
    if value == 0 or not math.isfinite(value):
        return value
    return float('%.*g' % (digits, value))


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return round_significant(value)
    if hasattr(value, 'as_dict'):
        return _plain(value.as_dict())
    if hasattr(value, 'coords'):
        return _plain(value.coords)
    if hasattr(value, 'coeffs'):
        return _plain(value.coeffs)
    return value


def stamp(payload, version, seed, depth, beta0):
    """
    Returns a copy of *payload* carrying the reproducibility stamp.
    """
    stamped = dict(payload)
    stamped.update({
        'version': version,
        'seed': seed,
        'depth': depth,
        'beta0': beta0,
    })
    return stamped


def dumps(payload):
    return json.dumps(_plain(payload), sort_keys=True, ensure_ascii=False,
                      indent=2)


def write_json(path, payload):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fp:
        fp.write(dumps(payload))
        fp.write('\n')
    return path


def write_csv(path, header, rows):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_plain(v) for v in row])
    return path
