import numpy as np
import pytest
from scipy import stats as sps

from gsgp_red.stats import average_ranks, median, median_exact, wilcoxon_signed_rank


def test_average_ranks():
    np.testing.assert_array_equal(average_ranks([3, 1, 3, 2]), [3.5, 1, 3.5, 2])


def test_spec_examples():
    res = wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [0] * 6)
    assert res.w_minus == 0 and res.reject and res.direction == 1 and res.method == "exact"
    assert res.p_value == pytest.approx(2 / 64)
    sym = wilcoxon_signed_rank([1, -1, 2, -2, 3, -3], [0] * 6)
    assert sym.w_plus == sym.w_minus and not sym.reject
    same = wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])
    assert same.inconclusive and not same.reject and same.p_value is None


def test_direction_negative():
    res = wilcoxon_signed_rank(np.zeros(8), np.arange(1, 9))
    assert res.reject and res.direction == -1


@pytest.mark.parametrize("n", [6, 12, 20, 25])
def test_exact_matches_scipy_without_ties(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        x, y = rng.normal(size=n), rng.normal(size=n)
        ours = wilcoxon_signed_rank(x, y)
        ref = sps.wilcoxon(x, y, method="exact")
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)
        assert ours.statistic == ref.statistic


def test_normal_approximation_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=60).round(1)
        y = (rng.normal(size=60) + 0.2).round(1)
        ours = wilcoxon_signed_rank(x, y)
        assert ours.method == "normal"
        ref = sps.wilcoxon(x, y, method="approx", correction=True, zero_method="wilcox")
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6)


def test_length_mismatch():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2], [1])


def test_medians():
    assert median([3, 1, 2]) == 2
    assert median([4, 1, 2, 3]) == 2.5
    assert median_exact([10**80, 1, 3]) == "3"
    assert median_exact([1, 2]) == "1.5"
    assert median_exact([2**200, 2**200 + 2]) == str(2**200 + 1)
    with pytest.raises(ValueError):
        median([])
