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
Stock generator sets. They are used when no generators are configured and
serve as the reference groups of the test suite.
"""

import numpy as np

from .lie import GeneratorSet


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def schottky_pair(translation=1.5, angle=np.pi / 4):
    """
    Two hyperbolic elements of :math:`SL_2(\\mathbb R)`: ``diag(e^t, e^-t)``
    and its conjugate by the rotation through *angle*.
    """
    a = np.diag([np.exp(translation), np.exp(-translation)])
    r = rotation(angle)
    return [a, r @ a @ r.T]


def schottky(translation=1.5, angle=np.pi / 4):
    return GeneratorSet(schottky_pair(translation, angle))


def self_joining(gamma0, rho):
    return GeneratorSet.self_joining(gamma0, rho)


def symmetric_joining(translation=1.5, angle=np.pi / 4):
    """
    The self-joining with generators ``(A, B)`` and ``(B, A)``. Swapping the
    two letters and the two factors is a symmetry of the group.
    """
    a, b = schottky_pair(translation, angle)
    return GeneratorSet.self_joining([a, b], [b, a])


def deformed_joining(translation=1.5, deformed=1.8, angle=np.pi / 3):
    """
    The self-joining of the standard Schottky pair with a deformation of
    different translation length and rotation angle.
    """
    return GeneratorSet.self_joining(schottky_pair(translation),
                                     schottky_pair(deformed, angle))


def sl3_pair(scale=1.2, seed=3):
    """
    Two loxodromic elements of :math:`SL_3(\\mathbb R)`: a diagonal one and
    its conjugate by a seeded random rotation.
    """
    a = np.diag(np.exp([scale, 0.3 * scale, -1.3 * scale]))
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return GeneratorSet([a, q @ a @ q.T])
