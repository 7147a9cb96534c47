import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dieudonne.cli import deformation_example_displays, strata_display
from dieudonne.display import (
    Display,
    deformation_variables,
    deformed_v_sharp,
    direct_sum,
    display_from_json,
    display_of_module,
    display_to_json,
    hasse_series,
    lt_display,
    make_display,
    random_teichmuller_units,
    rescale_basis,
    special_base,
    special_fiber,
    universal_deformation,
    x_ord,
    x_ord_factors,
)
from dieudonne.errors import InvalidModuleError, ParameterError, PrecisionError
from dieudonne.omod import Signature, k_tau, mu_ordinary, partial_hasse, random_signature
from dieudonne.polygons import newton_polygon
from dieudonne.semilinear import matmul

sig_strategy = st.builds(
    lambda f, h, seed: random_signature(f, h, random.Random(seed)),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(0, 10**6),
)


def specialize(D0, codes):
    """Display over k obtained from the universal deformation at t = [a]."""
    base = D0.ring
    sig = D0.signature()
    it = iter(codes)
    HW = []
    for t in range(D0.f):
        u = (t + 1) % D0.f
        p, q = sig.p_tau[u], sig.q_tau[u]
        U = [[base.one if i == j else base.zero for j in range(D0.h)] for i in range(D0.h)]
        for i in range(p):
            for j in range(p, p + q):
                U[i][j] = base.teichmuller(base.const_poly(next(it)))
        HW.append(matmul(U, D0.HW[t], base))
    return make_display(base, D0.f, sig, HW)


@pytest.mark.parametrize("f,A", [(1, {0}), (2, {0}), (3, {0, 2}), (3, set())])
def test_lubin_tate_is_isoclinic(f, A):
    D = lt_display(A, special_base(2, 6 if f == 3 else 2, 4), f)
    M = special_fiber(D)
    assert newton_polygon(M).slopes == (Fraction(len(A), f),)
    assert mu_ordinary(M).mu_ordinary


@given(sig_strategy)
def test_x_ord_realizes_signature(sig):
    m = {1: 2, 2: 2, 3: 3}[sig.f]
    r_w = max(max(k_tau(sig, t) for t in range(sig.f)), sig.d * m // sig.f) + 1
    assume(r_w <= 5)
    D = x_ord(sig, special_base(3, m, r_w, 2))
    M = special_fiber(D)
    assert M.signature() == sig
    assert mu_ordinary(M).mu_ordinary
    assert sum(mult for _, mult in x_ord_factors(sig)) == sig.h


@given(sig_strategy)
def test_x_ord_hasse_series_is_unit(sig):
    m = {1: 2, 2: 2, 3: 3}[sig.f]
    r_w = max(k_tau(sig, t) for t in range(sig.f)) + 1
    assume(r_w <= 5)
    D = universal_deformation(x_ord(sig, special_base(2, m, r_w, 2)), deg=2)
    for t in range(sig.f):
        assert hasse_series(D, t).is_unit()


def test_direct_sum_signature():
    base = special_base(2, 2, 3)
    D = direct_sum(lt_display({0}, base, 2), lt_display({1}, base, 2))
    assert D.p_tau == (1, 1) and D.q_tau == (1, 1)


def test_display_rejects_singular_hw():
    base = special_base(2, 2, 3)
    with pytest.raises(InvalidModuleError):
        make_display(base, 1, Signature((1,), (1,)), [[[1, 1], [1, 1]]])


def test_display_rejects_bad_f():
    with pytest.raises(ParameterError):
        make_display(special_base(2, 3, 3), 2, Signature((1, 1), (0, 0)), [[[1]], [[1]]])


# ---------------------------------------------------------------------------
# strata example: Ha is the deformation coordinate


@pytest.mark.parametrize("f,k,n", [(2, 0, [0, 0]), (2, 1, [1, 0]), (3, 0, [0, 1, 1]), (3, 1, [0, 0, 1])])
def test_strata_hasse_is_coordinate(f, k, n):
    D0 = strata_display(2, f, k, n, r_w=3, deg=8)
    D = universal_deformation(D0)
    assert D.ring.vars == (f"t{k}_0_0",)
    hs = hasse_series(D, k)
    assert hs.valuation() == 1
    assert hs.series.terms == {(1,): 1}
    assert not partial_hasse(special_fiber(D0), k).invertible


def test_strata_specializations():
    D0 = strata_display(2, 2, 0, [0, 0], r_w=3)
    for a in range(4):
        M = special_fiber(specialize(D0, [a]))
        assert mu_ordinary(M).mu_ordinary == (a != 0)


def test_deformation_example():
    D0 = deformation_example_displays()["example"]
    assert deformation_variables(D0.signature()) == ("t1_0_0",)
    D = universal_deformation(D0)
    h0, h1 = hasse_series(D, 0), hasse_series(D, 1)
    assert h0.is_unit()
    assert h1.valuation() == 1 and h1.series.terms == {(1,): 1}
    for a in range(4):
        M = special_fiber(specialize(D0, [a]))
        assert mu_ordinary(M).mu_ordinary == (a != 0)


# ---------------------------------------------------------------------------
# structural checks


def test_deformed_v_sharp_matches():
    D0 = deformation_example_displays()["example"]
    D = universal_deformation(D0)
    for t in range(D.f):
        assert deformed_v_sharp(D0, D, t) == D.v_sharp(t)


def test_deformation_special_fiber_is_original():
    D0 = strata_display(2, 2, 0, [0, 0], r_w=3)
    D = universal_deformation(D0)
    assert special_fiber(D).V == special_fiber(D0).V


def test_no_variables_means_no_change():
    base = special_base(3, 2, 3)
    D0 = lt_display({0, 1}, base, 2)
    D = universal_deformation(D0)
    assert D.ring.vars == ()
    assert all(x.to_scalar() == y.to_scalar() for B, C in zip(D.HW, D0.HW) for r1, r2 in zip(B, C) for x, y in zip(r1, r2))


def test_variable_count_checked():
    D0 = strata_display(2, 2, 0, [0, 0])
    with pytest.raises(ParameterError):
        universal_deformation(D0, var_names=["x", "y"])
    assert universal_deformation(D0, var_names=["X"]).ring.vars == ("X",)


@pytest.mark.parametrize("seed", range(6))
def test_hasse_at_zero_matches_special_fiber(seed):
    rng = random.Random(seed)
    f = rng.choice([1, 2])
    sig = random_signature(f, 2, rng)
    base = special_base(2, 2, max(k_tau(sig, t) for t in range(f)) + 2, 4)
    D0 = x_ord(sig, base)
    D0 = rescale_basis(D0, random_teichmuller_units(D0, rng))
    D = universal_deformation(D0, deg=4)
    M = special_fiber(D0)
    for t in range(f):
        assert hasse_series(D, t).is_unit() == partial_hasse(M, t).invertible


@pytest.mark.parametrize("seed", range(4))
def test_rescaling_preserves_valuation(seed):
    rng = random.Random(seed)
    D0 = strata_display(2, 2, 0, [0, 0], r_w=3, deg=6)
    D = universal_deformation(D0, deg=6)
    E = rescale_basis(D, random_teichmuller_units(D, rng))
    for t in range(2):
        a, b = hasse_series(D, t, normalize=True), hasse_series(E, t, normalize=True)
        assert a.valuation() == b.valuation()
        assert b.unit_normalized


def test_precision_guard():
    D0 = strata_display(2, 3, 0, [0, 1, 1], r_w=2)
    with pytest.raises(PrecisionError):
        hasse_series(universal_deformation(D0), 0)


def test_json_round_trip():
    D = universal_deformation(deformation_example_displays()["example"], deg=4)
    data = display_to_json(D)
    assert display_to_json(display_from_json(data)) == data
    assert display_from_json(data).HW == D.HW


def test_display_of_special_fiber():
    D0 = deformation_example_displays(r_w=4)["example"]
    M = special_fiber(D0)
    E = display_of_module(M)
    assert E.r_w == 3 and E.signature() == D0.signature()
    assert all(
        x.to_scalar() == y.to_scalar().truncate(3)
        for B, C in zip(E.HW, D0.HW)
        for r1, r2 in zip(B, C)
        for x, y in zip(r1, r2)
    )


def test_display_of_module_needs_precision():
    M = special_fiber(deformation_example_displays(r_w=1)["example"])
    with pytest.raises(PrecisionError):
        display_of_module(M)
