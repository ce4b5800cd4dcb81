import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mherz.errors import CostGuardError, PredicateError, SupportWindowError
from mherz.grid import (
    AnnulusIndex,
    DyadicRectangle,
    GridFunction,
    GridRectangle,
    annulus_restrict,
    build_function,
    constant,
    indicator,
    make_grid,
    restrict_to_window,
)
from mherz.norms import (
    ExponentParams,
    NormBracket,
    RectangleFamily,
    annulus_lp_table,
    block_norm_bracket,
    bmo_mk_norm,
    bmo_norm,
    char_rect_norm_closed_form,
    conjugate_exponent,
    herz_norm,
    lp_norm,
    morrey_herz_norm,
    pairing_l1,
    pred_banach,
    pred_block,
    pred_char,
    pred_ms_herz,
    require_predicate,
)

G35 = make_grid(3, 5)
PR = ExponentParams(0.25, 2, 2, 0.5)


def masked_chi(spec, l1, l2):
    return restrict_to_window(indicator(spec, DyadicRectangle(l1, l2)))


def masked_noise(spec, seed):
    return restrict_to_window(build_function(spec, builtin="noise", seed=seed))


# -- exponents ----------------------------------------------------------------


def test_conjugate_exponent():
    assert conjugate_exponent(2.0) == 2.0
    assert conjugate_exponent(4.0) == pytest.approx(4.0 / 3.0)
    assert conjugate_exponent(1.0) == math.inf
    assert conjugate_exponent(math.inf) == 1.0
    # the conjugate of q <= 1 is infinity by convention
    assert conjugate_exponent(0.5) == math.inf


def test_predicates():
    assert pred_banach(ExponentParams(0, 1, 1))
    assert not pred_banach(ExponentParams(0, 0.5, 2))
    assert pred_ms_herz(PR)
    assert not pred_ms_herz(ExponentParams(0.6, 2, 2))  # alpha at/after 1 - 1/p
    assert pred_char(PR)
    assert not pred_char(ExponentParams(0.0, 2, 2, 0.9))
    assert pred_block(ExponentParams(-0.25, 2, 2, 0.5))
    assert not pred_block(PR)  # -alpha + n/p' = 0.25 < 0.5


def test_predicate_error_names_inequality():
    with pytest.raises(PredicateError, match="alpha"):
        require_predicate(ExponentParams(0.0, 2, 2, 0.9), "char")


def test_dual_params():
    d = PR.dual()
    assert d.alpha == -0.25 and d.p == 2.0 and d.q == 2.0 and d.lam == 0.5


def test_exponent_validation():
    with pytest.raises(ValueError):
        ExponentParams(0, -1, 2)
    with pytest.raises(ValueError):
        ExponentParams(0, 2, 2, -0.1)


# -- L^p ------------------------------------------------------------------------


def test_lp_unit_indicator():
    g = make_grid(2, 3)
    chi = indicator(g, DyadicRectangle(0, 0))
    assert lp_norm(chi, 2) == pytest.approx(1.0, abs=1e-14)


def test_lp_constant_closed_form():
    g = make_grid(2, 2)
    area = 16.0
    for p in (0.5, 1, 2, 3):
        assert lp_norm(constant(g, -2.5), p) == pytest.approx(
            2.5 * area ** (1 / p), rel=1e-13
        )
    assert lp_norm(constant(g, -2.5), math.inf) == 2.5


def test_lp_matches_direct_summation():
    g = make_grid(2, 2)
    rng = np.random.default_rng(0)
    f = GridFunction(g, rng.normal(size=(16, 16)))
    direct = (np.abs(f.values) ** 3).sum() * g.h**2
    assert lp_norm(f, 3) == pytest.approx(direct ** (1 / 3), rel=1e-12)


def test_lp_region_and_errors():
    g = make_grid(2, 2)
    f = constant(g, 1.0)
    r = GridRectangle(0, 4, 0, 4)
    assert lp_norm(f, 1, region=r) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="positive"):
        lp_norm(f, 0.0)


# -- Herz -------------------------------------------------------------------------


def test_herz_support_check():
    with pytest.raises(SupportWindowError, match="outside the annulus window"):
        herz_norm(constant(G35, 1.0), PR)


def test_herz_alpha0_qp_collapses_to_lp():
    chi = masked_chi(G35, 0, 0)
    pr = ExponentParams(0.0, 2, 2)
    assert herz_norm(chi, pr) == pytest.approx(lp_norm(chi, 2), rel=1e-13)


def test_herz_alpha0_qp_collapses_random():
    g22 = make_grid(2, 2)
    for seed in range(100):
        f = masked_noise(g22, seed)
        for p in (1.0, 2.0, 3.5):
            pr = ExponentParams(0.0, p, p)
            assert herz_norm(f, pr) == pytest.approx(lp_norm(f, p), rel=1e-12)


def test_herz_homogeneity():
    f = masked_noise(G35, 1)
    assert herz_norm(f.with_values(2.0 * f.values), PR) == pytest.approx(
        2.0 * herz_norm(f, PR), rel=1e-13
    )


def test_herz_continuum_closed_form_against_series_oracle():
    # independent oracle: direct partial geometric series, summed far past
    # float convergence
    alpha, p, q = 0.25, 2.0, 2.0
    beta = alpha + 1.0 / p
    pref = (1 - 0.5) ** (1 / p)

    def axis(l):
        return pref * sum(2.0 ** (i * q * beta) for i in range(l, l - 400, -1)) ** (1 / q)

    want = axis(0) * axis(0)
    got = char_rect_norm_closed_form(ExponentParams(alpha, p, q), 0, 0, "herz")
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(0.7734590803390136, rel=1e-12)


def test_herz_q_infinity_branch():
    chi = masked_chi(G35, 0, 0)
    pr = ExponentParams(0.25, 2, math.inf)
    table = annulus_lp_table(chi, 2.0)
    win = list(G35.window_range())
    want = max(
        2.0 ** ((win[i] + win[j]) * 0.25) * table[i, j]
        for i in range(len(win))
        for j in range(len(win))
    )
    assert herz_norm(chi, pr) == pytest.approx(want, rel=1e-13)


def test_herz_p_infinity_branch():
    chi = masked_chi(G35, 0, 0)
    pr = ExponentParams(0.25, math.inf, 2)
    assert herz_norm(chi, pr) > 0


# -- Morrey-Herz ---------------------------------------------------------------------


def test_morrey_lam0_equals_herz():
    for seed in range(5):
        f = masked_noise(G35, seed)
        pr = ExponentParams(0.25, 2, 2, 0.0)
        assert morrey_herz_norm(f, pr) == pytest.approx(herz_norm(f, pr), rel=1e-13)


def test_morrey_closed_form_agreement_full_window():
    for l1 in G35.window_range():
        for l2 in G35.window_range():
            got = morrey_herz_norm(masked_chi(G35, l1, l2), PR)
            want = char_rect_norm_closed_form(
                PR, l1, l2, "morrey-herz", window_floor=G35.window_low
            )
            assert got == pytest.approx(want, rel=1e-12), (l1, l2)


def test_morrey_monotone_in_absolute_value():
    rng = np.random.default_rng(2)
    f = masked_noise(G35, 10)
    g = f.with_values(f.values * rng.uniform(0, 1, size=f.values.shape))
    assert morrey_herz_norm(g, PR) <= morrey_herz_norm(f, PR) + 1e-12


def test_morrey_diagonal_variant_dominates():
    f = masked_noise(G35, 3)
    rect = morrey_herz_norm(f, PR, truncation="rectangular")
    diag = morrey_herz_norm(f, PR, truncation="diagonal")
    assert diag > 0 and rect > 0
    # every rectangular cut {i<=L1, j<=L2} sits inside the diagonal cut
    # {i+j <= L1+L2} at the same prefactor, so the diagonal sup dominates
    assert rect <= diag * (1 + 1e-12)
    with pytest.raises(ValueError, match="truncation"):
        morrey_herz_norm(f, PR, truncation="bogus")


def test_diagonal_ratio_exact():
    target = 2.0 ** (PR.alpha + PR.n / PR.p - PR.lam)
    vals = [char_rect_norm_closed_form(PR, l, 0, "morrey-herz") for l in range(-2, 3)]
    for a, b in zip(vals, vals[1:]):
        assert b / a == pytest.approx(target, rel=1e-12)


def test_closed_form_inadmissible_params():
    with pytest.raises(PredicateError):
        char_rect_norm_closed_form(ExponentParams(0.0, 2, 2, 0.9), 0, 0, "morrey-herz")
    with pytest.raises(PredicateError, match="alpha"):
        char_rect_norm_closed_form(ExponentParams(-0.6, 2, 2), 0, 0, "herz")


def test_closed_form_symbolic_dimensions():
    # n = m = 2 continuum value: prefactor (1 - 2**-2)**(1/p), beta = alpha + 2/p
    pr = ExponentParams(0.25, 2.0, 2.0, 0.5, n=2, m=2)
    beta = 0.25 + 1.0
    pref = 0.75**0.5

    def axis(l):
        return pref * sum(2.0 ** (i * 2 * beta) for i in range(l, l - 200, -1)) ** 0.5

    want = axis(1) * axis(0) * 2.0 ** (-(1 + 0) * 0.5)
    got = char_rect_norm_closed_form(pr, 1, 0, "morrey-herz")
    assert got == pytest.approx(want, rel=1e-12)


# -- norm axioms (property-based) -----------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(1.0, 4.0), st.floats(1.0, 4.0))
def test_triangle_inequality_banach_range(seed, p, q):
    g = make_grid(2, 2)
    rng = np.random.default_rng(seed)
    n = g.n_cells
    f = restrict_to_window(GridFunction(g, rng.normal(size=(n, n))))
    h = restrict_to_window(GridFunction(g, rng.normal(size=(n, n))))
    pr = ExponentParams(0.25, p, q)
    lhs = herz_norm(f.with_values(f.values + h.values), pr)
    assert lhs <= herz_norm(f, pr) + herz_norm(h, pr) + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(-1.5, 1.5))
def test_absolute_homogeneity(seed, scale):
    g = make_grid(2, 2)
    rng = np.random.default_rng(seed)
    f = restrict_to_window(GridFunction(g, rng.normal(size=(g.n_cells, g.n_cells))))
    pr = ExponentParams(0.25, 2, 2, 0.5)
    got = morrey_herz_norm(f.with_values(scale * f.values), pr)
    assert got == pytest.approx(abs(scale) * morrey_herz_norm(f, pr), rel=1e-10, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_lattice_monotonicity_all_norms(seed):
    g = make_grid(2, 2)
    rng = np.random.default_rng(seed)
    n = g.n_cells
    small = restrict_to_window(GridFunction(g, rng.normal(size=(n, n))))
    big = small.with_values(
        np.abs(small.values) * (1.0 + rng.uniform(0, 1, size=(n, n)))
    )
    pr = ExponentParams(0.25, 2, 2, 0.5)
    assert lp_norm(small, 2) <= lp_norm(big, 2) + 1e-12
    assert herz_norm(small, pr) <= herz_norm(big, pr) + 1e-12
    assert morrey_herz_norm(small, pr) <= morrey_herz_norm(big, pr) + 1e-12


def test_duality_pairing_constant_one():
    # two exact Hölder steps: int |fg| <= ||f||_dual ||g||, constant exactly 1
    worst = 0.0
    for seed in range(20):
        f = masked_noise(G35, [7, seed])
        g = masked_noise(G35, [8, seed])
        num = pairing_l1(f, g)
        den = herz_norm(f, PR.dual()) * herz_norm(g, PR)
        worst = max(worst, num / den)
    assert worst <= 1.0 + 1e-10


def test_duality_pairing_self_dual_point():
    # alpha = 0, p = q = 2 is self-dual: for a masked indicator the pairing
    # of the function with itself saturates the bound with ratio exactly 1
    chi = masked_chi(G35, 0, 0)
    pr = ExponentParams(0.0, 2, 2)
    num = pairing_l1(chi, chi)
    den = herz_norm(chi, pr) * herz_norm(chi, pr.dual())
    assert num == pytest.approx(den, rel=1e-13)
    zero = GridFunction(G35, np.zeros((256, 256)))
    assert pairing_l1(zero, chi) == 0.0


def test_duality_pairing_equality_on_single_annulus():
    # Hölder equality case: on one annulus the pairing saturates the bound
    g = make_grid(2, 3)
    one = constant(g, 1.0)
    f = annulus_restrict(one, AnnulusIndex(0, 1))
    h = f.with_values(np.abs(f.values) ** (2 - 1))  # |f|^(p-1) with p = 2
    pr = ExponentParams(0.25, 2, 2)
    num = pairing_l1(f, h)
    den = herz_norm(f, pr) * herz_norm(h, pr.dual())
    assert num == pytest.approx(den, rel=1e-12)


# -- block bracket ----------------------------------------------------------------------


PRB = ExponentParams(-0.25, 2, 2, 0.5)


def test_block_bracket_requires_block_predicate():
    with pytest.raises(PredicateError):
        block_norm_bracket(masked_chi(G35, 0, 0), PR)


def test_block_bracket_zero_function():
    z = GridFunction(G35, np.zeros((256, 256)))
    br = block_norm_bracket(z, PRB)
    assert br.lower == 0.0 and br.upper == 0.0


def test_block_bracket_single_block_bound():
    chi = masked_chi(G35, 0, 0)
    br = block_norm_bracket(chi, PRB)
    single = 2.0 ** ((0 + 0) * PRB.lam) * herz_norm(chi, PRB)
    assert br.upper <= single + 1e-12


def test_block_bracket_consistent_on_100_random():
    g22 = make_grid(2, 2)
    fam = [masked_chi(g22, l, l) for l in range(-1, 2)]
    for seed in range(100):
        g = masked_noise(g22, [21, seed])
        br = block_norm_bracket(g, PRB, fam)
        assert 0.0 <= br.lower <= br.upper


def test_block_bracket_empty_family_warns():
    br = block_norm_bracket(masked_chi(G35, 0, 0), PRB, [])
    assert br.lower == 0.0
    assert any("empty test family" in n for n in br.notes)


def test_block_bracket_monotone():
    f = masked_noise(G35, 77)
    smaller = f.with_values(f.values * 0.5)
    b1 = block_norm_bracket(smaller, PRB)
    b2 = block_norm_bracket(f, PRB)
    assert b1.upper <= b2.upper + 1e-12


def test_bracket_sandwiches_pairing():
    # int |fg| <= ||f||_MK(dual) * upper(g) with constant 1
    fam = [masked_chi(G35, l, l) for l in range(-1, 2)]
    dual = PRB.dual()
    for seed in range(10):
        g = masked_noise(G35, [31, seed])
        br = block_norm_bracket(g, PRB, fam)
        for f in fam:
            lhs = pairing_l1(f, g)
            rhs = morrey_herz_norm(f, dual) * br.upper
            assert lhs <= rhs * (1 + 1e-10)


def test_norm_bracket_validation():
    with pytest.raises(ValueError, match="inverted"):
        NormBracket(2.0, 1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        NormBracket(-1.0, 1.0)


# -- rectangle families -------------------------------------------------------------------


def test_family_kinds_and_bounds():
    g = make_grid(2, 2)
    dy = RectangleFamily("dyadic-sides", stride=1).rectangles(g)
    ex = RectangleFamily("exact-grid").rectangles(g)
    # dyadic-sides members are valid exact-grid members
    ex_set = {(r.ix0, r.ix1, r.iy0, r.iy1) for r in ex}
    assert all((r.ix0, r.ix1, r.iy0, r.iy1) in ex_set for r in dy)
    cen = RectangleFamily("dyadic-centered").rectangles(g)
    assert len(cen) == len(list(g.window_range())) ** 2
    with pytest.raises(ValueError, match="family kind"):
        RectangleFamily("bogus")


def test_family_member_cap():
    g = make_grid(3, 3)
    with pytest.raises(CostGuardError, match="max_members"):
        RectangleFamily("exact-grid", max_members=100).rectangles(g)


# -- oscillation norms -----------------------------------------------------------------------


def test_bmo_constant_is_zero():
    g = make_grid(2, 2)
    assert bmo_norm(constant(g, 3.0), RectangleFamily("exact-grid")) == 0.0


def test_bmo_square_indicator_half():
    g = make_grid(2, 2)
    chi = indicator(g, GridRectangle(6, 10, 6, 10))
    val = bmo_norm(chi, RectangleFamily("exact-grid"))
    # oscillation 2t(1-t) at overlap fraction t maximised at t = 1/2
    assert val == pytest.approx(0.5, abs=1e-12)
    # brute-force oracle over the same family
    best = 0.0
    for r in RectangleFamily("exact-grid").rectangles(g):
        sl = chi.values[r.ix0 : r.ix1, r.iy0 : r.iy1]
        best = max(best, float(np.abs(sl - sl.mean()).mean()))
    assert val == pytest.approx(best, rel=1e-12)


def test_bmo_shift_invariance():
    g = make_grid(2, 2)
    rng = np.random.default_rng(6)
    f = GridFunction(g, rng.normal(size=(16, 16)))
    fam = RectangleFamily("dyadic-sides", stride=1)
    a = bmo_norm(f, fam)
    b = bmo_norm(f.with_values(f.values + 17.0), fam)
    assert a == pytest.approx(b, rel=1e-12)


def test_bmo_mk_constant_zero_and_homogeneous():
    fam = RectangleFamily("dyadic-centered")
    c = constant(G35, 4.0)
    val, _ = bmo_mk_norm(c, PR, fam)
    assert val == 0.0
    f = build_function(G35, builtin="truncated_log")
    v1, _ = bmo_mk_norm(f, PR, fam)
    v2, _ = bmo_mk_norm(f.with_values(2.0 * f.values), PR, fam)
    assert v2 == pytest.approx(2.0 * v1, rel=1e-12)


def test_bmo_mk_requires_predicates():
    fam = RectangleFamily("dyadic-centered")
    with pytest.raises(PredicateError):
        bmo_mk_norm(constant(G35, 1.0), ExponentParams(0.0, 2, 2, 0.9), fam)
