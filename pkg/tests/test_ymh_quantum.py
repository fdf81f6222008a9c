import math

import numpy as np
import pytest
import scipy.linalg

from chaoscope import ymh_quantum as yq
from chaoscope.errors import EigensolverError
from chaoscope.ymh_classical import YmhParams

P = YmhParams(1.0, 1.0)
W = math.sqrt(2.0)


def position_squared(n_keep, n_work=None):
    """(a + a^+)^2 on levels 0..n_keep-1, squared in a larger space then cut."""
    n_work = n_work or n_keep + 3
    a = np.diag(np.sqrt(np.arange(1, n_work)), 1)
    x = a + a.T
    return (x @ x)[:n_keep, :n_keep]


def test_basis_layout():
    b = yq.OscillatorBasis.build(W, "ee", 4)
    assert b.states == [(0, 0), (0, 2), (0, 4), (2, 0), (2, 2), (2, 4), (4, 0), (4, 2), (4, 4)]
    assert b.dimension == 9
    assert yq.OscillatorBasis.build(W, "ee", 66).dimension == 1156
    for block in yq.BLOCKS:
        basis = yq.OscillatorBasis.build(W, block, 10)
        o1, o2 = block.offsets
        assert all(n1 % 2 == o1 and n2 % 2 == o2 and n1 <= 10 and n2 <= 10 for n1, n2 in basis.states)
        assert basis.dimension == yq._block_dim(block, 10)
        idx = basis.index(basis.n1, basis.n2)
        np.testing.assert_array_equal(idx, np.arange(basis.dimension))
    assert yq.OscillatorBasis.build(W, "oo", 4).index(1, 2) == -1
    with pytest.raises(ValueError):
        yq.OscillatorBasis.build(W, "ee", 5)


def test_h0_elements():
    b = yq.OscillatorBasis.build(W, "eo", 4)
    assert yq.h0_element(b, (0, 0), (0, 0)) == W
    assert yq.h0_element(b, (2, 1), (2, 1)) == 4 * W
    assert yq.h0_element(b, (2, 1), (0, 1)) == 0.0


def test_v_elements():
    b = yq.OscillatorBasis.build(W, "ee", 4)
    s = 1.0 / (4 * W * W)
    assert yq.v_element(b, (0, 0), (0, 0)) == pytest.approx(s, rel=1e-15)
    assert yq.v_element(b, (2, 0), (0, 0)) == pytest.approx(math.sqrt(2) * s, rel=1e-15)
    assert yq.v_element(b, (2, 2), (0, 0)) == pytest.approx(2 * s, rel=1e-15)
    assert yq.v_element(b, (4, 0), (0, 0)) == 0.0
    assert yq.v_element(b, (0, 0), (2, 2)) == yq.v_element(b, (2, 2), (0, 0))


def test_small_block_by_hand():
    blk = yq.assemble_block(P, "ee", 2)
    m = blk.matrix
    assert m.shape == (4, 4)
    c = 0.5 / (4 * W * W)
    # states (0,0), (0,2), (2,0), (2,2)
    expected = np.array(
        [
            [W + c, c * math.sqrt(2), c * math.sqrt(2), c * 2],
            [c * math.sqrt(2), 3 * W + c * 5, c * 2, c * 5 * math.sqrt(2)],
            [c * math.sqrt(2), c * 2, 3 * W + c * 5, c * 5 * math.sqrt(2)],
            [c * 2, c * 5 * math.sqrt(2), c * 5 * math.sqrt(2), 5 * W + c * 25],
        ]
    )
    np.testing.assert_allclose(m, expected, rtol=1e-14)
    assert m[0, 0] == pytest.approx(W + 1.0 / (8 * W * W), rel=1e-15)


@pytest.mark.parametrize("block", list(yq.BLOCKS))
def test_matrix_symmetric_and_banded(block):
    blk = yq.assemble_block(YmhParams(1.3, 0.8), block, 12)
    m = blk.matrix
    assert np.array_equal(m, m.T)
    n1, n2 = blk.basis.n1, blk.basis.n2
    far = (np.abs(n1[:, None] - n1[None, :]) > 2) | (np.abs(n2[:, None] - n2[None, :]) > 2)
    assert np.all(m[far] == 0)
    # cross-check every entry against the element formulas
    for i, row in enumerate(blk.basis.states[:20]):
        for j, col in enumerate(blk.basis.states):
            ref = yq.h0_element(blk.basis, row, col) + 0.5 * 1.3**2 * yq.v_element(blk.basis, row, col)
            assert m[i, j] == pytest.approx(ref, rel=1e-14, abs=1e-15)


def test_zero_coupling_is_diagonal():
    blk = yq.assemble_block(YmhParams(0.0, 1.0), "ee", 6, omega=1.5)
    assert np.count_nonzero(blk.matrix - np.diag(np.diag(blk.matrix))) == 0
    ev = yq.diagonalize(blk)
    expected = np.sort(1.5 * (blk.basis.n1 + blk.basis.n2 + 1))
    np.testing.assert_allclose(ev, expected, rtol=1e-12)
    assert list(ev[:4] / 1.5) == pytest.approx([1, 3, 3, 5])


def test_zero_coupling_converges_immediately():
    spec = yq.converge_spectrum(YmhParams(0.0, 1.0), L=20, omega=1.0)
    assert spec.converged
    assert all(c == 46 for c in spec.final_cutoffs.values())  # first comparison: 30 -> 46


def test_default_omega_needs_positive_mass():
    with pytest.raises(ValueError):
        yq.assemble_block(YmhParams(1.0, 0.0), "ee", 4)


def test_diagonalize_two_by_two():
    a, b, c = 2.0, 0.7, -1.0
    fake = yq.QuantumBlock(yq.OscillatorBasis.build(1.0, "ee", 2), 0.0, np.array([[a, b], [b, c]]))
    ev = yq.diagonalize(fake)
    mid, rad = 0.5 * (a + c), math.hypot(0.5 * (a - c), b)
    np.testing.assert_allclose(ev, [mid - rad, mid + rad], rtol=1e-14)
    bad = yq.QuantumBlock(fake.basis, 0.0, np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(EigensolverError, match="ee"):
        yq.diagonalize(bad)


def test_eigen_residual():
    blk = yq.assemble_block(P, "oo", 20)
    ev, vec = scipy.linalg.eigh(blk.matrix)
    np.testing.assert_allclose(yq.diagonalize(blk), ev, rtol=1e-13)
    res = np.linalg.norm(blk.matrix @ vec - vec * ev, axis=0).max() / np.linalg.norm(blk.matrix, 2)
    assert res < 1e-10


def test_block_independence_oracle():
    cutoff, g = 6, 1.0
    x2 = position_squared(cutoff + 1)
    eye = np.eye(cutoff + 1)
    n = np.arange(cutoff + 1)
    h0 = W * (np.add.outer(n, n).ravel() + 1)
    full = np.diag(h0) + 0.5 * g * g / (4 * W * W) * np.kron(x2, x2)
    assert np.allclose(np.kron(x2, eye) @ np.kron(eye, x2), np.kron(x2, x2))
    reference = np.linalg.eigvalsh(full)
    merged = np.sort(np.concatenate([yq.diagonalize(yq.assemble_block(P, b, cutoff)) for b in yq.BLOCKS]))
    # odd-parity blocks stop at cutoff-1, which the full 0..cutoff grid also does
    np.testing.assert_allclose(merged, reference, rtol=1e-12)


def test_variational_monotonicity():
    prev = None
    for cutoff in (10, 14, 18, 22):
        ev = yq.diagonalize(yq.assemble_block(P, "ee", cutoff))[:20]
        if prev is not None:
            assert np.all(ev <= prev + 1e-12)
        prev = ev


def test_converged_spectrum():
    spec = yq.converge_spectrum(P, L=100)
    assert spec.converged
    assert spec.dimensions[yq.Parity.ee] <= 1600
    np.testing.assert_allclose(spec.levels[yq.Parity.eo], spec.levels[yq.Parity.oe], atol=1e-9, rtol=0)
    assert spec.levels[yq.Parity.ee][0] > 0
    for b in yq.BLOCKS:
        lv = spec.block_levels(b)
        assert lv.size == 100 and np.all(np.diff(lv) >= 0)
        assert spec.changes[b] < 1e-8


def test_single_level_converges_early():
    spec = yq.converge_spectrum(P, L=1, blocks=("ee",))
    assert spec.converged and spec.final_cutoffs[yq.Parity.ee] <= 46


def test_cap_reports_not_converged():
    spec = yq.converge_spectrum(P, L=100, max_dim=700, blocks=("ee",))
    assert not spec.converged
    assert spec.dimensions[yq.Parity.ee] <= 700
