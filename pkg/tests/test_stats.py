"""Sum statistics, KS distances, ECF, truncation and structural checks."""

import math

import numpy as np
import pytest
from scipy.stats import chi2

from fieldclt.fields import (
    CoeffTensor,
    Composite,
    IIDField,
    ProductIID,
    Provenance,
    Realization,
    SignFlipCocycle,
    Window,
    ZeroField,
    sample,
)
from fieldclt.limitlaw import Normal
from fieldclt.stats import (
    EmpiricalDist,
    convolution_check,
    ecf,
    has_fast_path,
    ks_distance,
    ks_one_sample,
    ks_two_sample,
    partial_sum,
    queue_condition_norm,
    replicate_stats,
    truncate_fC,
    truncation_martingale_defect,
    truncation_norms,
    v_statistic,
)

TENSOR = CoeffTensor((((1, 1, 1), 0.6), ((2, 2, 2), 0.8)), d=3)
W2 = Window((64, 64))
W3 = Window((24, 24, 24))


def ones_realization(lengths):
    w = Window(lengths)
    return Realization(w, np.ones(lengths), Provenance("none", 0, 0))


# ---------------------------------------------------------------------------
# statistics on a single realization


def test_partial_sum_of_ones_is_sqrt_cell_count():
    r = ones_realization((9, 16))
    assert partial_sum(r) == pytest.approx(math.sqrt(9 * 16), rel=1e-14)
    r3 = ones_realization((4, 9, 25))
    assert partial_sum(r3) == pytest.approx(30.0, rel=1e-14)


def test_v_statistic_of_ones():
    # each row sums to n, normalized square is n, averaged over m rows
    r = ones_realization((7, 16))
    assert v_statistic(r) == pytest.approx(16.0, rel=1e-14)


def test_v_statistic_requires_two_dimensions():
    with pytest.raises(ValueError):
        v_statistic(ones_realization((4, 4, 4)))


# ---------------------------------------------------------------------------
# replicate engine


FAST_SPECS = [ProductIID(d=2), ProductIID(d=3), SignFlipCocycle(), ZeroField(d=2)]


def test_has_fast_path():
    assert has_fast_path(ProductIID(d=2))
    assert has_fast_path(SignFlipCocycle())
    assert has_fast_path(Composite((ProductIID(d=2), ZeroField(d=2))))
    assert not has_fast_path(IIDField())
    assert not has_fast_path(Composite((ProductIID(d=2), IIDField())))


def test_fast_path_signflip_bit_exact():
    fast = replicate_stats(SignFlipCocycle(), W2, "partial_sum", 50, 7, path="fast")
    slow = replicate_stats(SignFlipCocycle(), W2, "partial_sum", 50, 7, path="generic")
    assert np.array_equal(fast.values, slow.values)


def test_fast_path_signflip_v_statistic_bit_exact():
    fast = replicate_stats(SignFlipCocycle(), W2, "v_statistic", 20, 7, path="fast")
    slow = replicate_stats(SignFlipCocycle(), W2, "v_statistic", 20, 7, path="generic")
    assert np.array_equal(fast.values, slow.values)


@pytest.mark.parametrize("kind", ["product", "chaos"])
def test_fast_path_matches_generic(kind):
    if kind == "chaos":
        from fieldclt.fields import ChaosField

        spec, window = ChaosField(TENSOR), Window((12, 12, 12))
    else:
        spec, window = ProductIID(d=2), Window((32, 32))
    fast = replicate_stats(spec, window, "partial_sum", 30, 11, path="fast")
    slow = replicate_stats(spec, window, "partial_sum", 30, 11, path="generic")
    assert np.allclose(fast.values, slow.values, rtol=1e-11, atol=1e-11)


def test_threads_do_not_change_values():
    one = replicate_stats(ProductIID(d=2), W2, "partial_sum", 64, 3, threads=1)
    four = replicate_stats(ProductIID(d=2), W2, "partial_sum", 64, 3, threads=4)
    assert np.array_equal(one.values, four.values)


def test_replicate_stats_validation():
    with pytest.raises(ValueError):
        replicate_stats(ProductIID(d=2), W3, "partial_sum", 10, 0)
    with pytest.raises(ValueError):
        replicate_stats(ProductIID(d=2), W2, "partial_sum", 1, 0)
    with pytest.raises(ValueError):
        replicate_stats(ProductIID(d=2), W2, "row_products", 10, 0)
    with pytest.raises(ValueError):
        replicate_stats(ProductIID(d=2), W2, "partial_sum", 10, 0, path="vectorized")


def test_report_moments_keys():
    rep = replicate_stats(IIDField(), Window((8, 8)), "partial_sum", 100, 5)
    m = rep.moments()
    for key in ("mean", "variance", "fourth_moment", "min", "max"):
        assert key in m
    assert m["min"] <= m["mean"] <= m["max"]


def test_composite_sum_decomposes():
    comp = Composite((ProductIID(d=2), IIDField()))
    rep = replicate_stats(comp, W2, "partial_sum", 16, 9)
    g = replicate_stats(ProductIID(d=2), W2, "partial_sum", 16, 9, component=1)
    h = replicate_stats(IIDField(), W2, "partial_sum", 16, 9, component=2)
    assert np.allclose(rep.values, g.values + h.values, atol=1e-10)


# ---------------------------------------------------------------------------
# KS distances


def test_ks_identical_samples_zero():
    a = np.array([3.0, 1.0, 2.0, -4.0])
    assert ks_two_sample(a, a.copy()) == 0.0


def test_ks_symmetry():
    gen = np.random.Generator(np.random.Philox(1))
    a, b = gen.standard_normal(300), gen.standard_normal(500) + 0.3
    assert ks_two_sample(a, b) == pytest.approx(ks_two_sample(b, a), abs=0.0)


def test_ks_invariant_under_monotone_exact_maps():
    gen = np.random.Generator(np.random.Philox(2))
    a = np.floor(gen.standard_normal(400) * 8)
    b = np.floor(gen.standard_normal(300) * 8)
    base = ks_two_sample(a, b)
    # affine integer map and power-of-two scaling are exact in floats
    assert ks_two_sample(3 * a + 7, 3 * b + 7) == base
    assert ks_two_sample(a / 4, b / 4) == base


def test_ks_one_sample_exact_small_case():
    # two points 0.25, 0.75 against uniform on [0, 1]
    d = ks_one_sample(np.array([0.25, 0.75]), lambda x: np.clip(x, 0, 1))
    assert d == pytest.approx(0.25, abs=1e-15)


def test_ks_distance_dispatch():
    gen = np.random.Generator(np.random.Philox(3))
    draws = gen.standard_normal(2000)
    d1 = ks_distance(EmpiricalDist(np.sort(draws)), Normal(1.0))
    assert d1 < 0.05
    d2 = ks_distance(EmpiricalDist(np.sort(draws)), EmpiricalDist(np.sort(draws)))
    assert d2 == 0.0


def test_empirical_dist_validation():
    with pytest.raises(ValueError):
        EmpiricalDist(np.array([1.0]))
    with pytest.raises(ValueError):
        EmpiricalDist(np.array([2.0, 1.0]))


def test_ecf_is_one_at_zero():
    grid = ecf(np.array([0.3, -1.2, 5.0]), np.array([0.0, 1.0]))
    assert grid.values[0] == 1.0
    assert grid.imag_abs[0] == 0.0


# ---------------------------------------------------------------------------
# truncation operator


@pytest.mark.parametrize("spec", [ProductIID(d=2), SignFlipCocycle()], ids=["product", "signflip"])
@pytest.mark.parametrize("level", [0.5, 2.0, 8.0])
def test_truncation_preserves_martingale_difference(spec, level):
    trunc = truncate_fC(spec, level)
    assert truncation_martingale_defect(trunc) <= 1e-8


def test_truncation_norms_monotone_and_bounded():
    levels = [2.0, 4.0, 8.0]
    diffs, tails = [], []
    for C in levels:
        d, t = truncation_norms(truncate_fC(ProductIID(d=2), C))
        diffs.append(d)
        tails.append(t)
        assert d <= 4.0 * t + 1e-12
    assert diffs[0] > diffs[1] > diffs[2]
    assert tails[0] > tails[1] > tails[2]


def test_truncation_norms_node_count_stable():
    a = truncation_norms(truncate_fC(ProductIID(d=2), 3.0), node_count=64)
    b = truncation_norms(truncate_fC(ProductIID(d=2), 3.0), node_count=128)
    assert abs(a[0] - b[0]) < 1e-9
    assert abs(a[1] - b[1]) < 1e-9


def test_truncation_signflip_atoms():
    # |cell| = 1 exactly, so truncation either removes everything or nothing
    below = truncation_norms(truncate_fC(SignFlipCocycle(), 0.5))
    assert below == (1.0, 1.0)
    above = truncation_norms(truncate_fC(SignFlipCocycle(), 1.5))
    assert above == (0.0, 0.0)


# ---------------------------------------------------------------------------
# conditioning norms


def test_queue_condition_norm_cases():
    assert queue_condition_norm(IIDField(), 0) == 1.0
    assert queue_condition_norm(IIDField(), 1) == 0.0
    assert queue_condition_norm(IIDField(), 5) == 0.0
    assert queue_condition_norm(SignFlipCocycle(), 3) == 1.0
    assert queue_condition_norm(ProductIID(d=2), 2) == 1.0
    with pytest.raises(ValueError):
        queue_condition_norm(IIDField(), -1)
    with pytest.raises(ValueError):
        queue_condition_norm(ZeroField(d=2), 1)


# ---------------------------------------------------------------------------
# convolution factorization


def test_convolution_check_zero_part_is_exact():
    t = np.array([0.0, 0.5, 1.0])
    res = convolution_check(ProductIID(d=2), ZeroField(d=2), Window((16, 16)), 64, 21, t)
    # adding the zero field leaves every composite sum equal to its g part
    assert np.array_equal(res["ecf_composite"].values, res["ecf_g"].values)
    gaps = np.abs(res["ecf_composite"].values - res["ecf_g"].values * res["ecf_h"].values)
    assert res["max_factorization_gap"] == pytest.approx(np.max(gaps))
    assert res["max_factorization_gap"] == 0.0


def test_convolution_check_matches_composite_field():
    t = np.array([0.0, 1.0])
    g, h = ProductIID(d=2), IIDField()
    res = convolution_check(g, h, Window((16, 16)), 48, 33, t)
    comp = replicate_stats(Composite((g, h)), Window((16, 16)), "partial_sum", 48, 33)
    direct = ecf(comp.values, t)
    assert np.allclose(res["ecf_composite"].values, direct.values, atol=1e-12)


def test_convolution_check_detects_shared_randomness():
    # summing a field with itself is 2 S_g, whose cf differs from cf_g^2
    t = np.array([1.0, 2.0])
    res = convolution_check(ProductIID(d=2), ProductIID(d=2), Window((32, 32)), 800, 13, t)
    doubled = replicate_stats(
        ProductIID(d=2), Window((32, 32)), "partial_sum", 800, 13, component=1
    )
    cf_doubled = ecf(2.0 * doubled.values, t)
    gap = np.max(np.abs(cf_doubled.values - res["ecf_g"].values * res["ecf_h"].values))
    assert gap > 0.05


# ---------------------------------------------------------------------------
# distributional invariants of the sampled sums


@pytest.mark.parametrize(
    "spec,var",
    [
        (IIDField(), 1.0),
        (ProductIID(d=2), 1.0),
        (SignFlipCocycle(), 1.0),
        (Composite((ProductIID(d=2), IIDField())), 2.0),
        (ZeroField(d=2), 0.0),
    ],
    ids=["iid", "product", "signflip", "composite", "zero"],
)
def test_sum_variance_matches_cell_variance(spec, var):
    # heavy fourth moments (up to ~9) make the variance estimate noisy;
    # 0.15 is about four standard errors at this replicate count
    rep = replicate_stats(spec, Window((48, 48)), "partial_sum", 6000, 17)
    assert rep.values.mean() == pytest.approx(0.0, abs=0.1)
    assert rep.values.var() == pytest.approx(var, abs=0.15)


def test_chaos_sum_variance_is_coefficient_norm():
    from fieldclt.fields import ChaosField

    rep = replicate_stats(ChaosField(TENSOR), Window((16, 16, 16)), "partial_sum", 3000, 19)
    assert rep.values.var() == pytest.approx(1.0, rel=0.08)  # 0.6^2 + 0.8^2


def test_disjoint_window_sums_are_orthogonal():
    # split each replicate's window into left and right halves by hand
    w = Window((32, 64))
    left = np.empty(400)
    right = np.empty(400)
    for rep in range(400):
        r = sample(ProductIID(d=2), w, 23, rep)
        left[rep] = r.values[:, :32].sum() / math.sqrt(32 * 32)
        right[rep] = r.values[:, 32:].sum() / math.sqrt(32 * 32)
    corr = np.corrcoef(left, right)[0, 1]
    assert abs(corr) < 3.0 / math.sqrt(400)


def test_v_statistic_chi_square_for_shared_column_driver():
    # product rows are u_i times one shared column sum, so the row-average
    # of squared normalized sums tends to that sum squared: chi-square(1)
    rep = replicate_stats(ProductIID(d=2), Window((96, 96)), "v_statistic", 1500, 29)
    d = ks_one_sample(rep.dist().samples, chi2(1).cdf)
    assert d < 0.05


def test_v_statistic_concentrates_for_independent_rows():
    # independent rows average m independent chi-squares: law of large numbers
    rep = replicate_stats(IIDField(), Window((96, 96)), "v_statistic", 800, 29)
    assert rep.values.mean() == pytest.approx(1.0, abs=0.05)
    assert rep.values.var() < 0.05


def test_mixture_identity_for_product_sums():
    # conditionally on the row drivers the sum is centered normal, so the
    # cf is a mixture of gaussians with the squared row-average variance
    rep = replicate_stats(ProductIID(d=2), Window((64, 64)), "partial_sum", 4000, 31)
    t = np.array([0.5, 1.0, 2.0])
    got = ecf(rep.values, t).values
    want = (1 + t * t) ** -0.5
    assert np.max(np.abs(got - want)) < 0.05
