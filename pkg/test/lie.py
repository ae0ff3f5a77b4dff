from score.anosov.exceptions import EmptyTheta, NotLoxodromic
from score.anosov.groups import schottky, schottky_pair, sl3_pair
from score.anosov.lie import (
    ChamberVector, FlagPoint, GeneratorSet, GroupElement, LinearForm,
    act, block_mask, busemann_weyl_identity_check, cartan_projection,
    iwasawa_cocycle, jordan_projection, normalize_theta, oppose_theta,
    opposition_involution, proper_discontinuity_witness, weyl_permutations)
import numpy as np
import pytest


def test_diagonal_projections():
    g = GroupElement(np.diag([np.exp(2), np.exp(-2)]))
    assert np.allclose(jordan_projection(g).coords, [2, -2])
    assert np.allclose(cartan_projection(g).coords, [2, -2])


def test_determinant_is_checked():
    with pytest.raises(ValueError):
        GroupElement([[2.0, 0.0], [0.0, 1.0]])


def test_chamber_coordinates_sum_to_zero():
    with pytest.raises(ValueError):
        ChamberVector([1.0, 1.0])
    v = ChamberVector([3.0, 1.0], center=True)
    assert np.allclose(v.coords, [1, -1])


def test_chamber_arithmetic():
    v = ChamberVector([1.0, 0.0, -1.0])
    w = ChamberVector([2.0, -1.0, -1.0])
    assert np.allclose((v + w).coords, [3, -1, -2])
    assert np.allclose((w - v).coords, [1, -1, 0])
    assert np.allclose((v * 2).coords, [2, 0, -2])
    assert (v * 3).norm() == pytest.approx(3 * v.norm())


def test_empty_theta():
    with pytest.raises(EmptyTheta):
        normalize_theta((), (3,))


def test_theta_out_of_range():
    with pytest.raises(ValueError):
        normalize_theta((3,), (3,))


def test_opposition_on_theta():
    assert oppose_theta((1,), (3,)) == (2,)
    assert oppose_theta((1,), (2,)) == (1,)
    assert oppose_theta((1, 2), (3,)) == (1, 2)


def test_dual_form_is_one_on_its_vector():
    v = ChamberVector([1.5, 0.2, -1.7])
    assert LinearForm.dual(v)(v) == pytest.approx(1.0)


def test_inverse_and_words():
    generators = schottky()
    g = generators.element((1, 2, -1))
    assert g.word == (1, 2, -1)
    assert generators.verify(g)
    product = g @ g.inv()
    assert product.word == ()
    assert np.allclose(product.entries, np.eye(2))


def test_jordan_projection_of_powers():
    for g in sl3_pair().generators:
        lam = jordan_projection(g)
        assert (jordan_projection(g.power(5)) - lam * 5).norm() < 1e-8


def test_cartan_projection_approaches_jordan():
    g = schottky().element((1, 2))
    lam = jordan_projection(g)
    assert (cartan_projection(g.power(64)) / 64 - lam).norm() < 0.1


def test_inverse_is_opposite():
    for g in sl3_pair().generators:
        lam = jordan_projection(g)
        assert (jordan_projection(g.inv()) -
                opposition_involution(lam)).norm() < 1e-8


def test_iwasawa_cocycle_identity():
    generators = sl3_pair()
    g, h = generators.generators
    rng = np.random.default_rng(1)
    xi = FlagPoint.from_matrix(rng.normal(size=(3, 3)))
    composite = iwasawa_cocycle(g @ h, xi) - (
        iwasawa_cocycle(g, act(h, xi)) + iwasawa_cocycle(h, xi))
    assert composite.norm() < 1e-8


def test_flag_transversality():
    standard = FlagPoint.from_matrix(np.eye(3))
    opposite = FlagPoint.from_matrix(np.eye(3)[:, ::-1])
    assert standard.transverse_to(opposite)
    assert opposite.transverse_to(standard)
    assert not standard.transverse_to(standard)


def test_busemann_weyl_identity():
    g = schottky().element((1, 2))
    for w in weyl_permutations(g.blocks):
        assert busemann_weyl_identity_check(g, w) < 1e-7


def test_busemann_weyl_identity_with_given_frame():
    g = GroupElement(np.diag([np.exp(2), np.exp(-2)]))
    h = GroupElement(np.eye(2))
    for w in [(0, 1), (1, 0)]:
        assert busemann_weyl_identity_check(g, w, h=h) < 1e-7


def test_busemann_weyl_needs_loxodromic():
    with pytest.raises(NotLoxodromic):
        busemann_weyl_identity_check(GroupElement(np.eye(2)), (0, 1))


def test_weyl_group_size():
    assert len(weyl_permutations((3,))) == 6
    assert len(weyl_permutations((2, 2))) == 4


def test_self_joining_blocks():
    a, b = schottky_pair()
    joined = GeneratorSet.self_joining([a, b], [b, a])
    assert joined.blocks == (2, 2)
    assert joined.rank == 2
    g = joined.element((1,))
    assert np.allclose(g.block(0), a)
    assert np.allclose(g.block(1), b)


@pytest.mark.timeout(120)
def test_proper_discontinuity_witness():
    a, b = schottky_pair()
    witness = proper_discontinuity_witness([a, b], [b, a])
    assert witness.max_abs_value < 1e-6


def test_block_mask():
    mask = block_mask((2, 1))
    assert np.array_equal(mask, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
