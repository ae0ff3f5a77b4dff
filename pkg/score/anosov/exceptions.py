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

class AnosovError(Exception):
    """
    Base class for all errors raised by :mod:`score.anosov`.

    The class attribute :attr:`exit_code` is the process exit code the
    command line front end uses when the error aborts a command.
    """

    exit_code = 2


class SingularMatrix(AnosovError):
    """
    A singular value underflowed while computing a projection.
    """


class DegenerateFlag(AnosovError):
    """
    Orthonormalization of a flag frame lost rank.
    """


class NotTransverse(AnosovError):
    """
    Two flags are not in general position.
    """


class NotLoxodromic(AnosovError):
    """
    An element does not have distinct eigenvalue moduli.
    """


class NoLoxodromicFound(AnosovError):
    """
    No loxodromic element was found among the words that were searched.
    """


class EmptyTheta(AnosovError):
    """
    An empty set of simple roots was passed where a nonempty one is needed.
    """


class PingPongViolation(AnosovError):
    """
    The generators failed the numerical ping-pong certificate.
    """


class BallTooLarge(AnosovError):
    """
    A word ball would exceed the configured element cap.
    """


class DegenerateCone(AnosovError):
    """
    All rays of a limit cone estimate coincide.
    """


class TooFewSamples(AnosovError):
    """
    A cone window contains too few group elements for a slope fit.
    """


class BoundaryTooClose(AnosovError):
    """
    A finite-difference stencil leaves the estimated limit cone.
    """


class ResolutionTooLow(AnosovError):
    """
    Two sequences agree on every symbol available but are not known to be
    equal.
    """


class NotConverged(AnosovError):
    """
    The truncated first return vector did not stabilize at the cutoff depth.
    """

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class NonPositiveRoof(AnosovError):
    """
    A roof function took a non-positive value.
    """

    def __init__(self, message, word=None, value=None):
        super().__init__(message)
        self.word = word
        self.value = value


class CapExceeded(AnosovError):
    """
    The requested period exceeds the configured enumeration cap.
    """


class NotMixing(AnosovError):
    """
    A transition matrix is not topologically mixing.
    """


class PowerIterationStall(AnosovError):
    """
    Power iteration did not reach the residual tolerance.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BracketFailure(AnosovError):
    """
    The pressure function has no sign change on the entropy bracket.
    """


class LatticeRoofDetected(AnosovError):
    """
    All periodic orbit periods lie in a common lattice.
    """

    def __init__(self, message, spacing=None):
        super().__init__(message)
        self.spacing = spacing


class RateNotResolved(AnosovError):
    """
    A correlation curve hit its noise floor before decaying one e-fold.
    """


class LnicFailure(AnosovError):
    """
    The local non-integrability constant fell below its threshold.
    """

    exit_code = 3

    def __init__(self, message, epsilon=None):
        super().__init__(message)
        self.epsilon = epsilon


class LedgerInfeasible(AnosovError):
    """
    The constants ledger violates one of its inequalities.
    """

    exit_code = 4

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality


class NotInCone(AnosovError):
    """
    A function is not a member of the required cone.
    """


class MechanismFailure(AnosovError):
    """
    A Dolgopyat mechanism check failed.
    """

    def __init__(self, message, check=None, witness=None):
        super().__init__(message)
        self.check = check
        self.witness = witness


class TruncationInsufficient(AnosovError):
    """
    The tail bound of a truncated zeta product is too large.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class WindingAmbiguous(AnosovError):
    """
    The argument principle cannot be applied reliably on a rectangle.
    """


class DomainError(AnosovError):
    """
    A function was evaluated outside of its domain.
    """


class HorizonExceeded(AnosovError):
    """
    A counting threshold lies beyond the orbit table's completeness horizon.
    """

    exit_code = 5

    def __init__(self, message, horizon=None):
        super().__init__(message)
        self.horizon = horizon
