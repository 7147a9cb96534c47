import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dieudonne.cli import product_example_modules
from dieudonne.errors import InvalidModuleError, ParameterError, PrecisionError
from dieudonne.omod import (
    ODieudonneModule,
    Signature,
    base_change,
    check_product_hasse,
    det_crystal_factor,
    dualize,
    hasse_contact_agreement,
    hodge_newton_split,
    hodge_polygon,
    hodge_polygon_of_signature,
    k_tau,
    module_from_ints,
    module_from_json,
    module_to_json,
    mu_ordinary,
    o_hodge_polygon,
    partial_hasse,
    product,
    random_invertible,
    random_module,
    random_signature,
    truncate,
)
from dieudonne.polygons import compare, contact_points, newton_polygon
from dieudonne.semilinear import inverse, matfrob, matmul
from dieudonne.witt import get_witt_ring

F = Fraction
CELLS = [(2, 2, 2, 3, 6), (3, 2, 2, 2, 5), (5, 1, 2, 2, 5), (2, 3, 3, 2, 6), (3, 3, 3, 2, 6)]


def module_for(cell, seed):
    p, f, m, h, r = cell
    rng = random.Random(seed)
    ring = get_witt_ring(p, m, r)
    return random_module(ring, f, random_signature(f, h, rng), rng)


cell_seed = st.tuples(st.sampled_from(CELLS), st.integers(0, 10**6))


# ---------------------------------------------------------------------------
# the product counterexample


@pytest.fixture(scope="module")
def product_example():
    return product_example_modules()


def test_product_example_signatures(product_example):
    assert product_example["G1"].signature().q_tau == (2, 1)
    assert product_example["G2"].signature().q_tau == (0, 2)
    assert product_example["G1xG2"].signature().q_tau == (2, 3)


def test_product_example_polygons(product_example):
    G1, G2, G = product_example["G1"], product_example["G2"], product_example["G1xG2"]
    assert o_hodge_polygon(G1).slopes == (0, F(1, 2))
    assert newton_polygon(G1).slopes == (0, F(1, 2))
    assert newton_polygon(G2).slopes == (F(1, 2), F(1, 2), 1)
    assert newton_polygon(G).slopes == (0, F(1, 2), F(1, 2), F(1, 2), 1)
    assert o_hodge_polygon(G).slopes == (0, 0, F(1, 2), 1, 1)
    assert contact_points(newton_polygon(G), o_hodge_polygon(G)) == (0, 1, 4, 5)


def test_product_example_hasse(product_example):
    tau = 1
    vals = [partial_hasse(product_example[n], tau).lattice_val for n in ("G1xG2", "G1", "G2")]
    assert vals == [1, 0, 0]
    assert mu_ordinary(product_example["G1"]).mu_ordinary and mu_ordinary(product_example["G2"]).mu_ordinary
    assert not mu_ordinary(product_example["G1xG2"]).mu_ordinary
    rep = check_product_hasse(product_example["G1"], product_example["G2"], tau)
    assert (rep.k1, rep.k2, rep.k) == (0, 2, 1) and not rep.additive and rep.multiplicative is None


def test_product_example_det_crystal(product_example):
    d, u = det_crystal_factor(product_example["G1"], 1)
    assert d == 1 and u.is_unit()


# ---------------------------------------------------------------------------
# validation


def test_rejects_non_bt():
    with pytest.raises(InvalidModuleError, match="not a BT-module"):
        module_from_ints(2, 1, 1, 4, [[[4, 0], [0, 1]]])


def test_rejects_broken_fv():
    with pytest.raises(InvalidModuleError):
        module_from_ints(3, 1, 1, 3, [[[1, 0], [0, 3]]], F=[[[1, 0], [0, 1]]])


def test_rejects_bad_f():
    with pytest.raises(ParameterError):
        module_from_ints(3, 2, 3, 3, [[[1]], [[1]], [[3]]])


def test_precision_guard():
    G = module_from_ints(2, 2, 2, 1, [[[1, 0], [0, 2]], [[2, 0], [0, 2]]])
    with pytest.raises(PrecisionError):
        partial_hasse(G, 1)


def test_reconstructed_F_satisfies_relations():
    M = module_from_ints(3, 2, 2, 4, [[[0, 3], [1, 0]], [[1, 0], [0, 1]]]).with_reconstructed_F()
    assert M.f_reconstructed
    M.validate()


# ---------------------------------------------------------------------------
# signature combinatorics


@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
def test_k_duality_identity(f, h, seed):
    sig = random_signature(f, h, random.Random(seed))
    for t in range(f):
        assert k_tau(sig, t) - k_tau(sig.dual(), t) == sig.d - f * sig.p_tau[t]


@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
def test_hodge_value_at_q_tau(f, h, seed):
    sig = random_signature(f, h, random.Random(seed))
    H = hodge_polygon_of_signature(sig)
    for t in range(f):
        assert H.value(sig.q_tau[t]) * f == k_tau(sig, t)


# ---------------------------------------------------------------------------
# random modules


@given(cell_seed)
def test_signature_and_hodge_of_random_module(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    assert o_hodge_polygon(M) == hodge_polygon_of_signature(M.signature())
    for t in range(M.f):
        assert hodge_polygon(M, t) == hodge_polygon_of_signature(M.signature(), t)


@given(cell_seed)
def test_mazur_and_equivalence(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    N, H = newton_polygon(M), o_hodge_polygon(M)
    assert compare(N, H) in ("above", "equal")
    for t in range(M.f):
        inv, touch = hasse_contact_agreement(M, t)
        assert inv == touch
    assert mu_ordinary(M).mu_ordinary == (N == H)


@given(cell_seed)
def test_newton_independent_of_tau(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    assert len({newton_polygon(M, t) for t in range(M.f)}) == 1


@given(cell_seed)
def test_duality(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    MD = dualize(M)
    assert MD.signature() == M.signature().dual()
    assert dualize(MD).V == M.V
    for t in range(M.f):
        assert partial_hasse(M, t).invertible == partial_hasse(MD, t).invertible


@given(cell_seed)
def test_truncation_stability(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    sig = M.signature()
    for t in range(M.f):
        k = k_tau(sig, t)
        ref = partial_hasse(M, t).scalar
        for s in range(k + 1, M.r + 1):
            assert partial_hasse(truncate(M, s), t).scalar == ref


@given(cell_seed)
def test_hasse_invertibility_is_basis_independent(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    rng = random.Random(seed + 1)
    ring, f = M.ring, M.f
    P = [random_invertible(ring, M.h, rng) for _ in range(f)]
    V2 = tuple(
        matmul(matmul(inverse(P[(t - 1) % f], ring), M.V[t], ring), matfrob(P[t], -1), ring) for t in range(f)
    )
    F2 = tuple(
        matmul(matmul(inverse(P[(t + 1) % f], ring), M.F[t], ring), matfrob(P[t], 1), ring) for t in range(f)
    )
    M2 = ODieudonneModule(ring, f, M.h, V2, F2)
    for t in range(f):
        a, b = partial_hasse(M, t), partial_hasse(M2, t)
        assert a.invertible == b.invertible
        assert (a.lattice_val > 0) == (b.lattice_val > 0)
    assert newton_polygon(M2) == newton_polygon(M)


@given(cell_seed)
def test_det_crystal_factor(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    if M.r > M.signature().d:
        d, u = det_crystal_factor(M, 0)
        assert d == M.signature().d and u.is_unit()


@given(cell_seed)
def test_hodge_newton_split(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    N, H = newton_polygon(M), o_hodge_polygon(M)
    for x in N.break_abscissas():
        if N.value(x) == H.value(x):
            s1, s2 = hodge_newton_split(M, x)
            assert s1.h == x and s2.h == M.h - x
        else:
            with pytest.raises(ParameterError):
                hodge_newton_split(M, x)


def test_hodge_newton_split_product_example(product_example):
    G = product_example["G1xG2"]
    s1, s2 = hodge_newton_split(G, 1)
    assert s1.q_tau == (1, 1) and s2.q_tau == (1, 2)
    with pytest.raises(ParameterError):
        hodge_newton_split(G, 2)


@pytest.mark.parametrize("seed", range(15))
def test_product_multiplicativity(seed):
    rng = random.Random(seed)
    p, f, m, h, r = rng.choice(CELLS)
    ring = get_witt_ring(p, m, r)
    while True:
        s1, s2 = random_signature(f, 1, rng), random_signature(f, rng.randint(1, 2), rng)
        M1, M2 = random_module(ring, f, s1, rng), random_module(ring, f, s2, rng)
        sig = product(M1, M2).signature()
        if max(k_tau(sig, t) for t in range(f)) < r and sig.d * m // f < r:
            break
    for t in range(f):
        rep = check_product_hasse(M1, M2, t)
        if rep.additive:
            assert rep.product.scalar == rep.factor1.scalar * rep.factor2.scalar


def test_base_change_preserves_invariants():
    M = module_for((2, 2, 2, 2, 5), 3)
    M4 = base_change(M, 4)
    assert M4.signature() == M.signature()
    assert newton_polygon(M4) == newton_polygon(M)
    for t in range(M.f):
        assert partial_hasse(M4, t).invertible == partial_hasse(M, t).invertible


@given(cell_seed)
def test_json_round_trip(cs):
    cell, seed = cs
    M = module_for(cell, seed)
    M2 = module_from_json(module_to_json(M))
    assert M2.V == M.V and M2.F == M.F


def test_json_precision_override(product_example):
    data = module_to_json(product_example["G1"])
    assert module_from_json(data, r=3).r == 3


def test_signature_validation():
    with pytest.raises(ParameterError):
        Signature((1, 0), (1, 3))
