import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wqed.errors import ParameterError, ResonantDenominator
from wqed.model import (GOLDEN, LatticeParams, TwoParticleBasis, apply_annihilation, apply_creation,
                        build_effective, build_h1, build_h2, build_sw_doublon, creation_matrix)

params_st = st.builds(
    LatticeParams,
    N=st.integers(1, 7),
    U=st.floats(0, 12),
    h=st.floats(0, 4),
    kappa=st.floats(0.01, 1),
    gamma=st.floats(0, 0.5),
)


def test_param_validation():
    for bad in ({"N": 0}, {"N": 3, "kappa": 0}, {"N": 3, "gamma": -1}, {"N": 3, "sigma": 0},
                {"N": 3, "U": -1}, {"N": 3, "h": -0.1}):
        with pytest.raises(ParameterError):
            LatticeParams(**bad)


def test_onsite_uses_one_based_sites():
    p = LatticeParams(N=15, h=1.0)
    assert p.onsite[0] == math.cos(2 * math.pi * GOLDEN)
    assert abs(p.onsite[0] - math.cos(2 * math.pi * 0.6180339887498949)) < 1e-15
    # independent high-precision value of cos(2 pi b)
    assert abs(p.onsite[0] - (-0.7373688780783197)) < 1e-15


def test_h1_examples():
    np.testing.assert_array_equal(build_h1(LatticeParams(N=2)).matrix, [[0, 1], [1, 0]])
    H = build_h1(LatticeParams(N=3, h=2, b=0.5)).matrix
    np.testing.assert_allclose(np.diag(H), [-2, 2, -2], atol=1e-14)
    np.testing.assert_array_equal(np.diag(H, 1), [1, 1])


def test_basis_order_and_size():
    b = TwoParticleBasis(3)
    assert b.states == ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
    assert b.index_of[(2, 3)] == 4
    assert TwoParticleBasis(15).d2 == 120
    assert math.comb(20 + 1, 2) == TwoParticleBasis(20).d2
    np.testing.assert_allclose(b.norm, [1 / math.sqrt(2), 1, 1, 1 / math.sqrt(2), 1, 1 / math.sqrt(2)])


def test_h2_two_sites():
    p = LatticeParams(N=2, U=3.0, h=0.7)
    e1, e2 = p.onsite
    s = math.sqrt(2)
    ref = [[2 * e1 + 3, s, 0], [s, e1 + e2, s], [0, s, 2 * e2 + 3]]
    np.testing.assert_allclose(build_h2(p).matrix, ref, atol=1e-14)


@given(params_st)
def test_closed_sectors_real_symmetric(p):
    for H in (build_h1(p).matrix, build_h2(p).matrix):
        assert np.isrealobj(H) or np.all(H.imag == 0)
        np.testing.assert_array_equal(H, H.T)


@given(params_st.map(lambda p: p.with_(U=0.0)))
def test_free_boson_sum_rule(p):
    e1 = np.linalg.eigvalsh(build_h1(p).matrix)
    pairs = np.sort([e1[m] + e1[n] for m in range(p.N) for n in range(m, p.N)])
    np.testing.assert_allclose(np.linalg.eigvalsh(build_h2(p).matrix), pairs, atol=1e-10)


def test_effective_examples():
    p = LatticeParams(N=1, h=0.4, kappa=0.3)
    np.testing.assert_allclose(build_effective(p, 1).matrix, [[p.onsite[0] - 0.3j]])
    p = LatticeParams(N=2, kappa=0.25)
    H = build_effective(p, 1).matrix
    np.testing.assert_allclose(H, [[-0.125j, 1], [1, -0.125j]])
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(H)), [-1 - 0.125j, 1 - 0.125j])


@given(params_st)
def test_effective_reduces_and_shifts(p):
    basis = TwoParticleBasis(p.N)
    closed = p.with_(kappa=1e-300, gamma=0.0)
    np.testing.assert_allclose(build_effective(closed, 2, basis=basis).matrix,
                               build_h2(p, basis).matrix, atol=1e-200)
    lossy = build_effective(p, 2, True, basis).matrix
    lossless = build_effective(p, 2, False, basis).matrix
    np.testing.assert_allclose(lossy - lossless, -1j * p.gamma * np.eye(basis.d2), atol=1e-15)
    np.testing.assert_array_equal(lossy, lossy.T)


def test_sw_examples():
    m = build_sw_doublon(LatticeParams(N=6, U=10))
    np.testing.assert_allclose(m.JD, 0.2)
    np.testing.assert_allclose(np.diag(m.matrix), 10)
    assert m.predicted_transition == pytest.approx(0.2)
    assert build_sw_doublon(LatticeParams(N=4, U=3.5)).predicted_transition == pytest.approx(4 / 7)
    p = LatticeParams(N=8, U=5, h=0.9)
    m = build_sw_doublon(p)
    np.testing.assert_allclose(np.diag(m.matrix).real, 2 * p.h * np.cos(2 * np.pi * p.b * np.arange(1, 9)) + 5)
    de = np.diff(p.onsite)
    np.testing.assert_allclose(np.diag(m.matrix, 1).real, 2 * 5 / (25 - de ** 2))
    assert m.hD == pytest.approx(1.8)


def test_sw_singular_denominator():
    # N = 2 with eps_2 - eps_1 = U exactly
    p = LatticeParams(N=2, h=1.0, b=0.5, U=2.0)
    assert abs(abs(np.diff(p.onsite)[0]) - 2.0) < 1e-12
    with pytest.raises(ResonantDenominator):
        build_sw_doublon(p)
    with pytest.raises(ParameterError):
        build_sw_doublon(LatticeParams(N=3, U=0))


def test_creation_examples():
    np.testing.assert_array_equal(apply_creation(1, np.array([1.0]), 3), [1, 0, 0])
    b = TwoParticleBasis(3)
    v = apply_creation(1, np.array([1.0, 0, 0]), 3, basis=b)
    assert v[b.index_of[(1, 1)]] == pytest.approx(math.sqrt(2)) and np.count_nonzero(v) == 1
    v = apply_creation(1, np.array([0, 1.0, 0]), 3, basis=b)
    assert v[b.index_of[(1, 2)]] == 1 and np.count_nonzero(v) == 1


@given(st.integers(1, 6), st.data())
def test_creation_annihilation_adjoint(N, data):
    site = data.draw(st.integers(1, N))
    seed = data.draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    b = TwoParticleBasis(N)
    for sector, dim_in, dim_out in ((0, 1, N), (1, N, b.d2)):
        v = rng.normal(size=dim_in) + 1j * rng.normal(size=dim_in)
        u = rng.normal(size=dim_out) + 1j * rng.normal(size=dim_out)
        lhs = np.vdot(u, apply_creation(site, v, N, sector, b))
        rhs = np.vdot(apply_annihilation(site, u, N, sector + 1, b), v)
        assert abs(lhs - rhs) < 1e-12 * (1 + abs(lhs))
    assert creation_matrix(site, N, 1, b).shape == (b.d2, N)
