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
Numerical Lie theory for :math:`G = SL_n(\\mathbb R)` and block products of
such groups.

A group is described by its tuple of *blocks*: ``(3,)`` is
:math:`SL_3(\\mathbb R)`, ``(2, 2)`` is :math:`SL_2 \\times SL_2` realized
block-diagonally inside :math:`SL_4`. Chamber coordinates, simple roots, the
opposition involution and the Weyl group are all taken blockwise, so the
Cartan subspace of a product is the direct sum of the factors' subspaces.
"""

import itertools
import logging
import math

import mpmath
import numpy as np

from .exceptions import (
    DegenerateFlag, EmptyTheta, NoLoxodromicFound, NotLoxodromic,
    NotTransverse, SingularMatrix)


log = logging.getLogger(__name__)

DET_TOLERANCE = 1e-10
SUM_TOLERANCE = 1e-10
ORTHO_TOLERANCE = 1e-10
PIVOT_TOLERANCE = 1e-10
HOLONOMY_TOLERANCE = 1e-8
WORD_TOLERANCE = 1e-8


def normalize_blocks(blocks, size=None):
    if blocks is None:
        if size is None:
            raise ValueError('Need either blocks or a matrix size')
        return (int(size),)
    if isinstance(blocks, int):
        return (blocks,)
    blocks = tuple(int(b) for b in blocks)
    if any(b < 2 for b in blocks):
        raise ValueError('Every block must have size >= 2: %r' % (blocks,))
    if size is not None and sum(blocks) != size:
        raise ValueError('Blocks %r do not add up to %d' % (blocks, size))
    return blocks


def block_slices(blocks):
    slices = []
    start = 0
    for size in blocks:
        slices.append(slice(start, start + size))
        start += size
    return slices


def block_mask(blocks):
    """
    The 0/1 matrix of the block-diagonal pattern of *blocks*.
    """
    size = sum(blocks)
    mask = np.zeros((size, size))
    for sl in block_slices(blocks):
        mask[sl, sl] = 1.0
    return mask


def simple_roots(blocks):
    """
    Returns the simple roots of the block group as coefficient vectors:
    root number ``i`` (1-based, counted across blocks) is
    :math:`x_j - x_{j+1}` for consecutive coordinates of one block.
    """
    blocks = normalize_blocks(blocks)
    n = sum(blocks)
    roots = []
    for sl in block_slices(blocks):
        for j in range(sl.start, sl.stop - 1):
            root = np.zeros(n)
            root[j] = 1.0
            root[j + 1] = -1.0
            roots.append(root)
    return roots


def all_roots(blocks):
    return tuple(range(1, len(simple_roots(blocks)) + 1))


def normalize_theta(theta, blocks):
    count = len(simple_roots(blocks))
    if theta is None:
        return tuple(range(1, count + 1))
    theta = tuple(sorted(set(int(t) for t in theta)))
    if not theta:
        raise EmptyTheta('theta must contain at least one simple root')
    for t in theta:
        if not 1 <= t <= count:
            raise ValueError('Simple root index %d out of range 1..%d' %
                             (t, count))
    return theta


def oppose_theta(theta, blocks):
    """
    The image :math:`i\\Theta` of a set of simple roots under the opposition
    involution (``α_j ↦ α_{n-j}`` inside every block).
    """
    blocks = normalize_blocks(blocks)
    theta = normalize_theta(theta, blocks)
    mapping = {}
    index = 1
    for size in blocks:
        for j in range(size - 1):
            mapping[index + j] = index + (size - 2 - j)
        index += size - 1
    return tuple(sorted(mapping[t] for t in theta))


def _center(coords, blocks):
    coords = np.array(coords, dtype=float)
    for sl in block_slices(blocks):
        coords[sl] -= coords[sl].mean()
    return coords


class ChamberVector:
    """
    A point of the Cartan subspace :math:`\\mathfrak a`, i.e. a real vector
    whose coordinates sum to zero inside every block. If *positive* is set,
    the vector is asserted to lie in the closed positive Weyl chamber
    :math:`\\mathfrak a^+` (coordinates non-increasing inside every block).
    """

    __slots__ = ('coords', 'blocks', 'positive')

    def __init__(self, coords, blocks=None, positive=False, center=False):
        coords = np.array(coords, dtype=float).reshape(-1)
        blocks = normalize_blocks(blocks, len(coords))
        if center:
            coords = _center(coords, blocks)
        scale = max(1.0, float(np.max(np.abs(coords))) if len(coords) else 1.)
        for sl in block_slices(blocks):
            if abs(coords[sl].sum()) > SUM_TOLERANCE * scale:
                raise ValueError(
                    'Chamber coordinates must sum to zero: %r' % (coords,))
            if positive and np.any(np.diff(coords[sl]) > 1e-12 * scale):
                raise ValueError(
                    'Coordinates are not in the positive chamber: %r' %
                    (coords,))
        coords.setflags(write=False)
        self.coords = coords
        self.blocks = blocks
        self.positive = positive

    @classmethod
    def zero(cls, blocks):
        blocks = normalize_blocks(blocks)
        return cls(np.zeros(sum(blocks)), blocks, positive=True)

    def __add__(self, other):
        return ChamberVector(self.coords + other.coords, self.blocks)

    def __sub__(self, other):
        return ChamberVector(self.coords - other.coords, self.blocks)

    def __neg__(self):
        return ChamberVector(-self.coords, self.blocks)

    def __mul__(self, factor):
        return ChamberVector(self.coords * float(factor), self.blocks,
                             positive=self.positive and factor >= 0)

    __rmul__ = __mul__

    def __truediv__(self, factor):
        return self * (1.0 / factor)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, index):
        return self.coords[index]

    def __repr__(self):
        return 'ChamberVector(%s)' % np.array2string(self.coords,
                                                     precision=6)

    def norm(self):
        return float(np.linalg.norm(self.coords))

    def unit(self):
        norm = self.norm()
        if norm == 0:
            raise ValueError('Cannot normalize the zero vector')
        return self / norm

    def distance(self, other):
        return float(np.max(np.abs(self.coords - other.coords)))


def trace_inner(v1, v2):
    """
    The trace form on :math:`\\mathfrak a`, which is a positive multiple of
    the Killing form on every simple factor.
    """
    return float(np.dot(_coords(v1), _coords(v2)))


def _coords(v):
    if isinstance(v, ChamberVector):
        return v.coords
    return np.asarray(v, dtype=float)


class LinearForm:
    """
    A linear form :math:`\\psi \\in \\mathfrak a^*`, stored through the trace
    pairing. Coefficients are reduced modulo the constant vectors of every
    block, which makes the representation unique.
    """

    __slots__ = ('coeffs', 'blocks')

    def __init__(self, coeffs, blocks=None):
        coeffs = np.array(coeffs, dtype=float).reshape(-1)
        blocks = normalize_blocks(blocks, len(coeffs))
        coeffs = _center(coeffs, blocks)
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.blocks = blocks

    @classmethod
    def dual(cls, v):
        """
        The form :math:`\\langle v, \\cdot \\rangle / \\langle v, v \\rangle`,
        which takes the value 1 at *v*.
        """
        coords = _coords(v)
        blocks = v.blocks if isinstance(v, ChamberVector) else None
        return cls(coords / np.dot(coords, coords), blocks)

    @classmethod
    def root(cls, index, blocks):
        return cls(simple_roots(blocks)[index - 1], blocks)

    def __call__(self, v):
        return float(np.dot(self.coeffs, _coords(v)))

    def evaluate(self, vectors):
        """
        Evaluates the form on an array of coordinate vectors.
        """
        return np.asarray(vectors, dtype=float) @ self.coeffs

    def scaled(self, factor):
        return LinearForm(self.coeffs * float(factor), self.blocks)

    def __repr__(self):
        return 'LinearForm(%s)' % np.array2string(self.coeffs, precision=6)


def _orthonormalize(matrices, check=True):
    """
    Modified Gram-Schmidt with one re-orthogonalization pass on a stack of
    square matrices of shape ``(..., n, n)`` with positive determinant.

    Returns ``(q, logs)`` where the columns of *q* are orthonormal, span the
    same flag as the input columns and ``logs`` holds the logarithms of the
    diagonal of the triangular factor. The last column is completed to an
    oriented frame and its logarithm is taken from ``det = 1``, which keeps
    ill-conditioned (but unimodular) inputs accurate.
    """
    a = np.array(matrices, dtype=float)
    n = a.shape[-1]
    q = np.zeros_like(a)
    logs = np.zeros(a.shape[:-1])
    for j in range(n - 1):
        v = a[..., :, j].copy()
        original = np.linalg.norm(v, axis=-1)
        for _ in range(2):
            for i in range(j):
                c = np.sum(q[..., :, i] * v, axis=-1)
                v -= c[..., None] * q[..., :, i]
        norm = np.linalg.norm(v, axis=-1)
        if check and np.any(~(norm > PIVOT_TOLERANCE * original)):
            raise DegenerateFlag(
                'Orthonormalization lost rank in column %d' % (j + 1))
        q[..., :, j] = v / norm[..., None]
        logs[..., j] = np.log(norm)
    if n == 2:
        q[..., 0, 1] = -q[..., 1, 0]
        q[..., 1, 1] = q[..., 0, 0]
    else:
        basis = q[..., :, :n - 1]
        _, _, vh = np.linalg.svd(np.swapaxes(basis, -1, -2))
        q[..., :, n - 1] = vh[..., -1, :]
        flip = np.linalg.det(q) < 0
        q[flip, :, n - 1] *= -1
    logs[..., n - 1] = -np.sum(logs[..., :n - 1], axis=-1)
    return q, logs


class FlagPoint:
    """
    A point of the full flag manifold, represented by an orthogonal frame
    whose column span filtration is the flag. For block groups the frame is
    block diagonal.
    """

    __slots__ = ('frame', 'blocks')

    def __init__(self, frame, blocks=None):
        frame = np.array(frame, dtype=float)
        blocks = normalize_blocks(blocks, frame.shape[0])
        if not np.allclose(frame.T @ frame, np.eye(frame.shape[0]),
                           rtol=0, atol=ORTHO_TOLERANCE):
            raise ValueError('Flag frames must be orthogonal')
        frame.setflags(write=False)
        self.frame = frame
        self.blocks = blocks

    @classmethod
    def standard(cls, blocks):
        """
        The flag :math:`e^+` spanned by the standard basis in order.
        """
        blocks = normalize_blocks(blocks)
        return cls(np.eye(sum(blocks)), blocks)

    @classmethod
    def opposite(cls, blocks):
        """
        The opposite flag :math:`e^- = w_0 e^+`.
        """
        blocks = normalize_blocks(blocks)
        return cls(_longest_element(blocks), blocks)

    @classmethod
    def from_matrix(cls, matrix, blocks=None):
        """
        The flag spanned by the columns of an invertible *matrix*.
        """
        matrix = np.asarray(matrix, dtype=float)
        blocks = normalize_blocks(blocks, matrix.shape[0])
        frame = np.zeros_like(matrix)
        for sl in block_slices(blocks):
            sub = matrix[sl, sl]
            if np.linalg.det(sub) < 0:
                sub = sub.copy()
                sub[:, -1] *= -1
            frame[sl, sl] = _orthonormalize(sub)[0]
        return cls(frame, blocks)

    def transverse_to(self, other, tolerance=1e-8):
        for sl in block_slices(self.blocks):
            a = self.frame[sl, sl]
            b = other.frame[sl, sl]
            size = a.shape[0]
            for j in range(1, size):
                cross = np.hstack([a[:, :j], b[:, :size - j]])
                if abs(np.linalg.det(cross)) < tolerance:
                    return False
        return True

    def __repr__(self):
        return 'FlagPoint(%s)' % np.array2string(self.frame, precision=4)


def _longest_element(blocks):
    n = sum(blocks)
    w0 = np.zeros((n, n))
    for sl in block_slices(blocks):
        size = sl.stop - sl.start
        for j in range(size):
            w0[sl.start + size - 1 - j, sl.start + j] = 1.0
        if _permutation_sign(list(range(size))[::-1]) < 0:
            w0[sl.start, sl.stop - 1] = -1.0
    return w0


def _permutation_sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def reduce_word(word):
    """
    Freely reduces a word of signed generator indices.
    """
    reduced = []
    for letter in word:
        if reduced and reduced[-1] == -letter:
            reduced.pop()
        else:
            reduced.append(letter)
    return tuple(reduced)


def _inverse(entries, blocks):
    inverse = np.zeros_like(entries)
    for sl in block_slices(blocks):
        sub = entries[sl, sl]
        if sub.shape[0] == 2:
            inverse[sl, sl] = np.array([[sub[1, 1], -sub[0, 1]],
                                        [-sub[1, 0], sub[0, 0]]])
            inverse[sl, sl] /= np.linalg.det(sub)
        else:
            inverse[sl, sl] = np.linalg.inv(sub)
    return inverse


class GroupElement:
    """
    An element of the block group: a unimodular matrix, optionally tagged with
    the reduced word in the generators that produced it.

    The inverse matrix is carried along. Products of tagged elements multiply
    both, so the inverse of a long word is built from inverses of generators
    instead of inverting an ill-conditioned product.
    """

    __slots__ = ('entries', 'inverse', 'word', 'blocks')

    def __init__(self, entries, word=(), blocks=None, inverse=None,
                 check=True):
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError('Group elements must be square matrices')
        blocks = normalize_blocks(blocks, entries.shape[0])
        if check:
            mask = np.zeros_like(entries, dtype=bool)
            for sl in block_slices(blocks):
                mask[sl, sl] = True
                sub = entries[sl, sl]
                scale = max(1.0, float(np.linalg.norm(sub)) ** len(sub))
                det = np.linalg.det(sub)
                if not abs(det - 1.0) <= DET_TOLERANCE * scale:
                    raise ValueError('Determinant must be 1, got %r' % det)
            if np.any(entries[~mask] != 0):
                raise ValueError('Entries outside the diagonal blocks')
        if inverse is None:
            inverse = _inverse(entries, blocks)
        else:
            inverse = np.array(inverse, dtype=float)
        entries.setflags(write=False)
        inverse.setflags(write=False)
        self.entries = entries
        self.inverse = inverse
        self.word = tuple(word)
        self.blocks = blocks

    @classmethod
    def identity(cls, blocks):
        blocks = normalize_blocks(blocks)
        return cls(np.eye(sum(blocks)), (), blocks, check=False)

    @classmethod
    def diagonal(cls, logs, blocks=None):
        """
        The element :math:`a_v = \\exp(v)` for a chamber vector *v*.
        """
        coords = _coords(logs)
        blocks = normalize_blocks(
            blocks if blocks is not None else getattr(logs, 'blocks', None),
            len(coords))
        return cls(np.diag(np.exp(coords)), (), blocks,
                   inverse=np.diag(np.exp(-coords)), check=False)

    @property
    def size(self):
        return self.entries.shape[0]

    def __matmul__(self, other):
        return GroupElement(self.entries @ other.entries,
                            reduce_word(self.word + other.word),
                            self.blocks,
                            inverse=other.inverse @ self.inverse,
                            check=False)

    def inv(self):
        return GroupElement(self.inverse, tuple(-s for s in reversed(
                            self.word)), self.blocks, inverse=self.entries,
                            check=False)

    def power(self, k):
        if k < 0:
            return self.inv().power(-k)
        result = GroupElement.identity(self.blocks)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def block(self, index):
        sl = block_slices(self.blocks)[index]
        return self.entries[sl, sl]

    def trace(self):
        return float(np.trace(self.entries))

    def __repr__(self):
        return 'GroupElement(word=%r)' % (self.word,)


class GeneratorSet:
    """
    A finite list of generators. Letters are signed 1-based indices, the
    alphabet is ordered ``1, ..., k, -1, ..., -k``.
    """

    def __init__(self, matrices, blocks=None):
        elements = []
        for index, matrix in enumerate(matrices, 1):
            if isinstance(matrix, GroupElement):
                matrix = matrix.entries
            elements.append(GroupElement(matrix, (index,), blocks))
        if not elements:
            raise ValueError('Need at least one generator')
        self.generators = tuple(elements)
        self.blocks = elements[0].blocks
        self.alphabet = tuple(range(1, len(elements) + 1)) + \
            tuple(-i for i in range(1, len(elements) + 1))

    @classmethod
    def self_joining(cls, gamma0, rho):
        """
        The block-diagonal generators ``(g, rho(g))`` of the self-joining of
        two representations given by their generator images.
        """
        if len(gamma0) != len(rho):
            raise ValueError('Both representations need the same rank')
        matrices = []
        for g, r in zip(gamma0, rho):
            g = np.asarray(getattr(g, 'entries', g), dtype=float)
            r = np.asarray(getattr(r, 'entries', r), dtype=float)
            n0, n1 = g.shape[0], r.shape[0]
            joined = np.zeros((n0 + n1, n0 + n1))
            joined[:n0, :n0] = g
            joined[n0:, n0:] = r
            matrices.append(joined)
        return cls(matrices, (gamma0_size(gamma0), gamma0_size(rho)))

    @property
    def rank(self):
        return len(self.generators)

    def letter(self, letter):
        element = self.generators[abs(letter) - 1]
        return element if letter > 0 else element.inv()

    def element(self, word):
        result = GroupElement.identity(self.blocks)
        for letter in word:
            result = result @ self.letter(letter)
        return result

    def verify(self, g, tolerance=WORD_TOLERANCE):
        """
        Checks that the word of *g* reproduces its entries.
        """
        if not g.word:
            return True
        expected = self.element(g.word).entries
        scale = max(1.0, float(np.max(np.abs(expected))))
        return bool(np.max(np.abs(expected - g.entries)) <= tolerance * scale)


def gamma0_size(matrices):
    first = matrices[0]
    return np.asarray(getattr(first, 'entries', first)).shape[0]


class HolonomyDatum:
    """
    The :math:`\\mathfrak a_\\Theta`-part of a first return together with the
    compact rotation block, which is stored but not processed further.
    """

    __slots__ = ('vector', 'rotation', 'theta')

    def __init__(self, vector, rotation, theta=None):
        theta = normalize_theta(theta, vector.blocks)
        roots = simple_roots(vector.blocks)
        scale = max(1.0, vector.norm())
        for index, root in enumerate(roots, 1):
            if index in theta:
                continue
            if abs(float(np.dot(root, vector.coords))) > \
                    HOLONOMY_TOLERANCE * scale:
                raise ValueError('Holonomy vector is not in a_Theta')
        self.vector = vector
        self.rotation = np.asarray(rotation, dtype=float)
        self.theta = theta


def _spectral_halves(forward, backward, log_moduli):
    """
    Combines the top half of a spectrum read from *forward* with the bottom
    half read from *backward* (the inverse); the middle coordinate of odd
    sizes is fixed by the trace-zero condition.
    """
    n = forward.shape[0]
    top = log_moduli(forward)
    bottom = -log_moduli(backward)[::-1]
    half = n // 2
    coords = np.empty(n)
    coords[:half] = top[:half]
    coords[n - half:] = bottom[n - half:]
    if n % 2:
        coords[half] = -(coords[:half].sum() + coords[n - half:].sum())
    return coords


def _log_singular_values(matrix):
    values = np.linalg.svd(matrix, compute_uv=False)
    if not np.all(np.isfinite(values)) or values[-1] <= 0 or \
            values[0] == np.inf:
        raise SingularMatrix('Singular values underflowed')
    with np.errstate(divide='raise'):
        try:
            return np.log(values)
        except FloatingPointError:
            raise SingularMatrix('Singular values underflowed')


def _eigenvalue_moduli(matrix, inverse):
    n = matrix.shape[0]
    if n == 2:
        roots = np.roots([1.0, -np.trace(matrix), 1.0])
    elif n == 3:
        roots = np.roots([1.0, -np.trace(matrix), np.trace(inverse), -1.0])
    else:
        roots = np.linalg.eigvals(matrix)
    return np.sort(np.log(np.abs(roots)))[::-1]


def cartan_projection(g):
    """
    The Cartan projection :math:`\\mu(g)`: sorted logarithms of singular
    values, per block.
    """
    coords = np.empty(g.size)
    for sl in block_slices(g.blocks):
        coords[sl] = _spectral_halves(g.entries[sl, sl], g.inverse[sl, sl],
                                      _log_singular_values)
    return ChamberVector(_center(coords, g.blocks), g.blocks, positive=True)


def jordan_projection(g):
    """
    The Jordan projection :math:`\\lambda(g)`: sorted logarithms of the
    eigenvalue moduli, per block. Complex pairs contribute their common
    modulus twice.
    """
    coords = np.empty(g.size)
    for sl in block_slices(g.blocks):
        forward = g.entries[sl, sl]
        backward = g.inverse[sl, sl]
        coords[sl] = _spectral_halves(
            forward, backward,
            lambda m: _eigenvalue_moduli(
                m, backward if m is forward else forward))
    coords = _center(coords, g.blocks)
    for sl in block_slices(g.blocks):
        coords[sl] = np.sort(coords[sl])[::-1]
    return ChamberVector(coords, g.blocks, positive=True)


def is_loxodromic(g, tolerance=1e-9):
    coords = jordan_projection(g).coords
    for sl in block_slices(g.blocks):
        if np.any(np.diff(coords[sl]) > -tolerance):
            return False
    return True


def iwasawa_frames(entries, frame, blocks):
    """
    Factors ``entries @ frame = k exp(sigma) n`` blockwise and returns the new
    frame *k* together with *sigma*.
    """
    new_frame = np.zeros_like(frame)
    sigma = np.zeros(frame.shape[:-1])
    for sl in block_slices(blocks):
        q, logs = _orthonormalize(entries[..., sl, sl] @ frame[..., sl, sl])
        new_frame[..., sl, sl] = q
        sigma[..., sl] = logs
    return new_frame, sigma


def iwasawa_cocycle(g, xi):
    """
    The Iwasawa cocycle :math:`\\sigma(g, \\xi)`: the :math:`A`-part of
    :math:`gk` where :math:`k` is the frame of *xi*.
    """
    _, sigma = iwasawa_frames(g.entries, xi.frame, g.blocks)
    return ChamberVector(sigma, g.blocks, center=True)


def act(g, xi):
    """
    The flag :math:`g\\xi`.
    """
    frame, _ = iwasawa_frames(g.entries, xi.frame, g.blocks)
    return FlagPoint(frame, g.blocks)


def busemann(xi, g, h):
    """
    The Busemann cocycle
    :math:`\\beta_\\xi(g, h) = \\sigma(g^{-1}, \\xi) - \\sigma(h^{-1}, \\xi)`
    on the full flag manifold. Use :func:`project_theta` for the
    :math:`\\Theta`-version.
    """
    return iwasawa_cocycle(g.inv(), xi) - iwasawa_cocycle(h.inv(), xi)


def opposition_involution(v):
    """
    :math:`i = -\\mathrm{Ad}_{w_0}`: reverses and negates the coordinates of
    every block.
    """
    coords = np.empty(len(v.coords))
    for sl in block_slices(v.blocks):
        coords[sl] = -v.coords[sl][::-1]
    return ChamberVector(coords, v.blocks, positive=v.positive)


def theta_runs(theta, blocks):
    """
    The coordinate runs on which vectors of :math:`\\mathfrak a_\\Theta` are
    constant: coordinates ``j`` and ``j + 1`` of a block share a run unless
    the simple root between them belongs to *theta*.
    """
    blocks = normalize_blocks(blocks)
    theta = set(normalize_theta(theta, blocks))
    runs = []
    index = 1
    for sl in block_slices(blocks):
        run = [sl.start]
        for j in range(sl.start, sl.stop - 1):
            if index in theta:
                runs.append(run)
                run = [j + 1]
            else:
                run.append(j + 1)
            index += 1
        runs.append(run)
    return runs


def theta_projector(theta, blocks):
    """
    The matrix of the orthogonal projection onto :math:`\\mathfrak a_\\Theta`
    (trace form), acting on coordinate vectors.
    """
    blocks = normalize_blocks(blocks)
    n = sum(blocks)
    projector = np.zeros((n, n))
    for run in theta_runs(theta, blocks):
        for i in run:
            for j in run:
                projector[i, j] = 1.0 / len(run)
    return projector


def theta_basis(theta, blocks):
    """
    An orthonormal basis of :math:`\\mathfrak a_\\Theta` as columns.
    """
    blocks = normalize_blocks(blocks)
    projector = theta_projector(theta, blocks)
    centering = np.zeros_like(projector)
    for sl in block_slices(blocks):
        size = sl.stop - sl.start
        centering[sl, sl] = np.eye(size) - 1.0 / size
    values, vectors = np.linalg.eigh(centering @ projector @ centering)
    basis = vectors[:, values > 0.5]
    for j in range(basis.shape[1]):
        pivot = np.argmax(np.abs(basis[:, j]))
        if basis[pivot, j] < 0:
            basis[:, j] *= -1
    return basis


def project_theta(v, theta):
    """
    Orthogonal projection of *v* onto
    :math:`\\mathfrak a_\\Theta = \\bigcap_{\\alpha \\in \\Pi - \\Theta}
    \\ker\\alpha`.
    """
    theta = normalize_theta(theta, v.blocks)
    coords = v.coords.copy()
    for run in theta_runs(theta, v.blocks):
        coords[run] = coords[run].mean()
    return ChamberVector(coords, v.blocks, positive=v.positive)


def _null_vector(matrix):
    _, values, vh = np.linalg.svd(matrix)
    return values, vh[-1]


def _transverse_normal_form(xi, eta, rng):
    """
    Solves for ``g`` with ``g e+ = xi`` and ``g e- = eta``. The columns of
    ``g`` are the lines :math:`\\xi_j \\cap \\eta_{n-j+1}`; the remaining
    diagonal freedom is drawn from *rng*.
    """
    blocks = xi.blocks
    n = sum(blocks)
    g = np.zeros((n, n))
    for sl in block_slices(blocks):
        a = xi.frame[sl, sl]
        b = eta.frame[sl, sl]
        size = a.shape[0]
        columns = []
        for j in range(1, size + 1):
            stacked = np.hstack([a[:, :j], -b[:, :size - j + 1]])
            values, null = _null_vector(stacked)
            if values[-1] < 1e-8:
                raise NotTransverse('Flags are not in general position')
            column = a[:, :j] @ null[:j]
            columns.append(column / np.linalg.norm(column))
        block = np.column_stack(columns)
        det = np.linalg.det(block)
        if abs(det) < 1e-12:
            raise NotTransverse('Flags are not in general position')
        if det < 0:
            block[:, 0] *= -1
            det = -det
        block /= det ** (1.0 / size)
        scales = np.exp(rng.normal(size=size))
        scales /= np.exp(np.log(scales).mean())
        g[sl, sl] = block * scales
    return GroupElement(g, (), blocks, check=False)


def hopf_coordinates(g):
    """
    The Hopf parameterization :math:`g \\mapsto (g^+, g^-,
    \\beta_{g^+}(e, g))`.
    """
    plus = FlagPoint.from_matrix(g.entries, g.blocks)
    minus = FlagPoint.from_matrix(g.entries @ _longest_element(g.blocks),
                                  g.blocks)
    return plus, minus, busemann(plus, GroupElement.identity(g.blocks), g)


def gromov_product(xi, eta, theta=None, seed=0):
    """
    The Gromov product :math:`[\\xi, \\eta]_\\Theta =
    \\beta^\\Theta_{g^+}(e, g) + i\\beta^{i\\Theta}_{g^-}(e, g)` for any
    :math:`g` with :math:`(g^+, g^-) = (\\xi, \\eta)`; *seed* selects the
    solution :math:`g`, which does not affect the result.
    """
    blocks = xi.blocks
    theta = normalize_theta(theta, blocks)
    g = _transverse_normal_form(xi, eta, np.random.default_rng(seed))
    identity = GroupElement.identity(blocks)
    plus = FlagPoint.from_matrix(g.entries, blocks)
    minus = FlagPoint.from_matrix(g.entries @ _longest_element(blocks),
                                  blocks)
    first = project_theta(busemann(plus, identity, g), theta)
    second = project_theta(busemann(minus, identity, g),
                           oppose_theta(theta, blocks))
    return first + opposition_involution(second)


def weyl_permutations(blocks):
    """
    All elements of the Weyl group as permutations of the coordinates
    (blockwise permutations).
    """
    blocks = normalize_blocks(blocks)
    factors = []
    for sl in block_slices(blocks):
        factors.append(list(itertools.permutations(range(sl.start,
                                                         sl.stop))))
    result = []
    for combo in itertools.product(*factors):
        result.append(tuple(itertools.chain.from_iterable(combo)))
    return result


def apply_weyl(w, v):
    """
    :math:`\\mathrm{Ad}_w(v)` for a permutation *w* (``w[j]`` is the image of
    coordinate ``j``).
    """
    coords = np.empty(len(v.coords))
    for j, target in enumerate(w):
        coords[target] = v.coords[j]
    return ChamberVector(coords, v.blocks)


def _inverse_permutation(w):
    inverse = [0] * len(w)
    for j, target in enumerate(w):
        inverse[target] = j
    return tuple(inverse)


def _mp_matrix(array):
    return mpmath.matrix([[mpmath.mpf(float(x)) for x in row]
                          for row in np.asarray(array)])


def _mp_log_r(matrix):
    _, r = mpmath.qr(matrix)
    return [mpmath.log(abs(r[j, j])) for j in range(matrix.rows)]


def _mp_frame(matrix):
    q, r = mpmath.qr(matrix)
    for j in range(matrix.rows):
        if r[j, j] < 0:
            for i in range(matrix.rows):
                q[i, j] = -q[i, j]
    return q


def _mp_diagonalize(block):
    """
    Eigen-decomposition at the working precision with eigenvalues ordered by
    decreasing modulus. Returns ``(h, log_moduli)`` with ``det h = 1``.
    """
    values, vectors = mpmath.eig(block)
    size = block.rows
    order = sorted(range(size), key=lambda j: -abs(values[j]))
    moduli = [abs(values[j]) for j in order]
    for j in range(size):
        if abs(mpmath.im(values[order[j]])) > mpmath.mpf(10) ** (-20):
            raise NotLoxodromic('Element has non-real eigenvalues')
    for j in range(size - 1):
        if moduli[j] - moduli[j + 1] <= mpmath.mpf(10) ** (-8) * moduli[j]:
            raise NotLoxodromic('Eigenvalue moduli are not distinct')
    h = mpmath.matrix(size, size)
    for col, j in enumerate(order):
        for i in range(size):
            h[i, col] = mpmath.re(vectors[i, j])
    det = mpmath.det(h)
    if det < 0:
        for i in range(size):
            h[i, 0] = -h[i, 0]
        det = -det
    h = h * (det ** (-mpmath.mpf(1) / size))
    return h, [mpmath.log(m) for m in moduli]


def diagonalizing_frame(g):
    """
    Returns ``h`` with :math:`g = h (ma) h^{-1}`, eigenvalues ordered by
    decreasing modulus and ``det h = 1`` in every block.
    """
    if not is_loxodromic(g):
        raise NotLoxodromic('Only loxodromic elements are diagonalized')
    h = np.zeros_like(g.entries)
    for sl in block_slices(g.blocks):
        values, vectors = np.linalg.eig(g.entries[sl, sl])
        if np.any(np.abs(values.imag) > 1e-12 * np.abs(values)):
            raise NotLoxodromic('Element has non-real eigenvalues')
        order = np.argsort(-np.abs(values))
        block = vectors[:, order].real
        det = np.linalg.det(block)
        if det < 0:
            block[:, 0] *= -1
            det = -det
        h[sl, sl] = block / det ** (1.0 / block.shape[0])
    return GroupElement(h, (), g.blocks, check=False)


def _working_precision(g, powers):
    spread = 0.0
    for sl in block_slices(g.blocks):
        values = np.linalg.svd(g.entries[sl, sl], compute_uv=False)
        spread = max(spread, math.log10(values[0] / values[-1]))
    return 30 + int(math.ceil(2 * powers * max(spread, 1.0)))


def busemann_weyl_identity_check(g, w, h=None, powers=20):
    """
    Returns :math:`\\max_{1 \\le k \\le K} \\|\\beta_{(hw^{-1})^+}(h, g^kh) -
    k\\mathrm{Ad}_w(\\lambda(g))\\|` for a loxodromic *g* with
    :math:`g = h a h^{-1}` and a Weyl permutation *w*.

    Powers of *g* are badly conditioned, so the check runs in extended
    precision. If *h* is omitted it is computed from *g* at that precision; a
    given *h* must diagonalize *g* exactly (the identity for diagonal *g*).
    """
    if not is_loxodromic(g):
        raise NotLoxodromic('Weyl identity needs a loxodromic element')
    blocks = g.blocks
    w_inverse = _inverse_permutation(w)
    residual = 0.0
    with mpmath.workdps(_working_precision(g, powers)):
        for sl in block_slices(blocks):
            block = _mp_matrix(g.entries[sl, sl])
            size = block.rows
            if h is None:
                hb, lam = _mp_diagonalize(block)
            else:
                hb = _mp_matrix(h.entries[sl, sl])
                diagonal = hb ** -1 * block * hb
                lam = [mpmath.log(abs(diagonal[j, j])) for j in range(size)]
            local = [w[j] - sl.start for j in range(sl.start, sl.stop)]
            permutation = mpmath.zeros(size, size)
            for j in range(size):
                permutation[w_inverse[sl.start + j] - sl.start, j] = 1
            frame = _mp_frame(hb * permutation)
            adjoint = [None] * size
            for j, target in enumerate(local):
                adjoint[target] = lam[j]
            hinv = hb ** -1
            base = _mp_log_r(hinv * frame)
            ginv = block ** -1
            power = mpmath.eye(size)
            for k in range(1, powers + 1):
                power = power * ginv
                logs = _mp_log_r(hinv * power * frame)
                for j in range(size):
                    beta = base[j] - logs[j]
                    residual = max(residual,
                                   float(abs(beta - k * adjoint[j])))
    log.debug('Busemann-Weyl residual %.3g for w=%r', residual, w)
    return residual


class WitnessReport:
    """
    Result of :func:`proper_discontinuity_witness`.
    """

    def __init__(self, gamma, weyl, fixed_point, form, values, slope):
        self.gamma = gamma
        self.weyl = weyl
        self.fixed_point = fixed_point
        self.form = form
        self.values = values
        self.slope = slope

    @property
    def max_abs_value(self):
        return max(abs(v) for v in self.values)

    def as_dict(self):
        return {
            'gamma': list(self.gamma.word),
            'weyl': list(self.weyl),
            'form': list(self.form.coeffs),
            'values': list(self.values),
            'slope': self.slope,
        }


def proper_discontinuity_witness(gamma0, rho_images, weyl=None, gamma=None,
                                 powers=20, max_length=4):
    """
    Builds the self-joining of two representations of a free group (given by
    generator images), picks a loxodromic element :math:`\\gamma` and returns
    the fixed flag :math:`x = h w^{-1} e^+` together with a form
    :math:`\\psi` vanishing on :math:`\\mathrm{Ad}_w(\\lambda(\\gamma))`,
    evaluated as :math:`\\psi(\\beta_x(e, \\gamma^k))` for
    :math:`k = 1, \\ldots, K`.

    With the default mixed Weyl element (identity on the first factor, the
    flip on the second) the values vanish for every ``k``, so the orbit of
    :math:`(x, y, 0)` is constant.
    """
    generators = GeneratorSet.self_joining(gamma0, rho_images)
    blocks = generators.blocks
    if weyl is None:
        first = block_slices(blocks)[0]
        weyl = tuple(range(first.stop)) + tuple(
            reversed(range(first.stop, sum(blocks))))
    if gamma is not None:
        element = generators.element(gamma) \
            if not isinstance(gamma, GroupElement) else gamma
        if not is_loxodromic(element):
            raise NotLoxodromic('Chosen element is not loxodromic')
    else:
        element = _first_loxodromic(generators, max_length)
    lam = jordan_projection(element)
    target = apply_weyl(weyl, lam)
    coeffs = lam.coords - (np.dot(lam.coords, target.coords) /
                           np.dot(target.coords, target.coords)) \
        * target.coords
    form = LinearForm(coeffs / np.linalg.norm(coeffs), blocks)
    w_inverse = _inverse_permutation(weyl)
    values = []
    with mpmath.workdps(_working_precision(element, powers)):
        frames = []
        sigmas = [[mpmath.mpf(0)] * sum(blocks) for _ in range(powers)]
        for sl in block_slices(blocks):
            block = _mp_matrix(element.entries[sl, sl])
            size = block.rows
            hb, _ = _mp_diagonalize(block)
            permutation = mpmath.zeros(size, size)
            for j in range(size):
                permutation[w_inverse[sl.start + j] - sl.start, j] = 1
            frame = _mp_frame(hb * permutation)
            frames.append(frame)
            ginv = block ** -1
            power = mpmath.eye(size)
            for k in range(powers):
                power = power * ginv
                logs = _mp_log_r(power * frame)
                for j in range(size):
                    sigmas[k][sl.start + j] = -logs[j]
        for k in range(powers):
            values.append(float(sum(mpmath.mpf(float(c)) * s for c, s in
                                    zip(form.coeffs, sigmas[k]))))
    fixed = np.zeros((sum(blocks), sum(blocks)))
    for sl, frame in zip(block_slices(blocks), frames):
        fixed[sl, sl] = np.array(frame.tolist(), dtype=float)
    fixed_point = FlagPoint.from_matrix(fixed, blocks)
    ks = np.arange(1, powers + 1)
    slope = float(np.polyfit(ks, values, 1)[0])
    log.info('Witness for %r: max |psi(beta)| = %.3g, slope %.3g',
             element.word, max(abs(v) for v in values), slope)
    return WitnessReport(element, weyl, fixed_point, form, values, slope)


def _first_loxodromic(generators, max_length):
    words = [()]
    for _ in range(max_length):
        longer = []
        for word in words:
            for letter in generators.alphabet:
                if word and word[-1] == -letter:
                    continue
                candidate = word + (letter,)
                element = generators.element(candidate)
                if is_loxodromic(element):
                    return element
                longer.append(candidate)
        words = longer
    raise NoLoxodromicFound('No loxodromic word up to length %d' %
                            max_length)
