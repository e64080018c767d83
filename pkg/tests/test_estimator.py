import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockbalance.estimator import (
    BUILTIN_COEFFICIENTS,
    PARTS,
    EstimatorCoefficients,
    TimingSample,
    block_weights,
    fit_coefficients,
    part_features,
    predict_parts,
    quantity_matrix,
    relative_errors,
    summary_stats,
    wl_bh,
    wl_coup1,
    wl_coup2,
    wl_lbm,
    wl_rb,
    wl_total,
)
from blockbalance.grid import BlockQuantities

T2 = BUILTIN_COEFFICIENTS
ZERO = EstimatorCoefficients.zeros()
C32 = 32768


def test_builtin_table_values():
    assert T2.lbm == (9.99e-06, 1.57e-04, -8.23e-02)
    assert T2.bh == (6.65e-06, 7.06e-04, -1.09e-01)
    assert T2.coup1 == (3.08e-06, 2.42e-07, 1.41e-02, 2.78e-02, -1.40e-01)
    assert T2.coup2 == (5.99e-06, 3.90e-06, -8.80e-03, 2.51e-02, -1.30e-01)
    assert T2.rb == (1.16e-06, 9.62e-04, 2.75e-04, 1.48e-03, 1.88e-02)


# expected values recomputed with exact decimal arithmetic from the table
@pytest.mark.parametrize(
    "fn, q, expected",
    [
        (wl_lbm, BlockQuantities(C=C32, F=C32, B=0), 5.38962832),
        (wl_lbm, BlockQuantities(C=C32, F=0, B=0), 0.24505232),
        (wl_bh, BlockQuantities(C=C32, F=C32, B=0), 0.10890720),
        (wl_bh, BlockQuantities(C=C32, F=C32, B=1000), 0.81490720),
        (wl_coup1, BlockQuantities(C=C32, F=30000, B=0, P_L=5, P_S=2), 0.09428544),
        (wl_coup2, BlockQuantities(C=C32, F=30000, B=0, P_L=5, P_S=2), 0.18948032),
        (wl_rb, BlockQuantities(C=C32, F=C32, B=0, S=10), 0.188),
        (wl_rb, BlockQuantities(C=C32, F=C32, B=0, P_L=4, P_S=2, K=3, S=10), 0.27679760),
        (wl_total, BlockQuantities(C=C32, F=0, B=0, S=10), 0.56916528),
    ],
)
def test_hand_evaluated_predictions(fn, q, expected):
    assert fn(q, T2) == pytest.approx(expected, abs=1e-9)


def test_zero_subcycles_zero_rigid_body_cost():
    assert wl_rb(BlockQuantities(C=8, F=8, B=0, P_L=3, P_S=1, K=2, S=0), T2) == 0.0


quantities = st.builds(
    lambda c, f, b, pl, ps, k, s: BlockQuantities(C=c, F=min(f, c), B=min(b, f, c), P_L=pl, P_S=ps, K=k, S=s),
    st.integers(1, 10**5), st.integers(0, 10**5), st.integers(0, 10**5),
    st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 20),
)


@given(quantities)
def test_zero_coefficients_predict_zero(q):
    assert wl_total(q, ZERO) == 0.0


@given(quantities)
def test_vectorised_predictions_match_scalar_functions(q):
    pred = predict_parts(quantity_matrix([q]), T2)
    scalar = {"lbm": wl_lbm, "bh": wl_bh, "coup1": wl_coup1, "coup2": wl_coup2, "rb": wl_rb}
    for part in PARTS:
        assert pred[part][0] == pytest.approx(scalar[part](q, T2), rel=1e-12, abs=1e-12)


@given(quantities, quantities)
def test_predictions_are_linear_in_coefficients(q, _):
    doubled = T2 + T2
    assert wl_total(q, doubled) == pytest.approx(2 * wl_total(q, T2), rel=1e-12, abs=1e-12)


def test_block_weights_clamp_to_floor():
    q = BlockQuantities(C=1, F=0, B=0, S=1)  # negative raw prediction
    assert wl_total(q, T2) < 0
    assert block_weights([q], T2, floor=1e-3)[0] == 1e-3
    with pytest.raises(ValueError):
        block_weights([q], T2, floor=0)


def _samples(qs, coeffs):
    pred = predict_parts(quantity_matrix(qs), coeffs)
    return [TimingSample(q, *(float(pred[p][i]) for p in PARTS), block_id=i) for i, q in enumerate(qs)]


def _rich_quantities(n, seed=0):
    rng = np.random.default_rng(seed)
    qs = []
    for _ in range(n):
        c = int(rng.choice([24**3, 32**3, 48**3]))
        f = int(rng.integers(c // 2, c + 1))
        b = int(rng.integers(0, f // 4))
        qs.append(BlockQuantities(C=c, F=f, B=b, P_L=int(rng.integers(0, 20)), P_S=int(rng.integers(0, 20)),
                                  K=int(rng.integers(0, 30)), S=10))
    return qs


def test_fit_recovers_coefficients_exactly():
    samples = _samples(_rich_quantities(400), T2)
    fit = fit_coefficients(samples)
    for part in PARTS:
        np.testing.assert_allclose(fit.part(part), T2.part(part), rtol=1e-6)


def test_all_zero_timings_fit_zero():
    qs = _rich_quantities(50)
    samples = [TimingSample(q, 0.0, 0.0, 0.0, 0.0, 0.0) for q in qs]
    fit = fit_coefficients(samples)
    for part in PARTS:
        assert np.all(fit.part(part) == 0)


def test_rank_deficient_fit_still_reproduces_training_data():
    # constant C makes the C column collinear with the intercept
    qs = [BlockQuantities(C=C32, F=f, B=f // 10, P_L=f % 7, P_S=f % 5, K=f % 3, S=10)
          for f in range(1000, C32, 997)]
    samples = _samples(qs, T2)
    fit = fit_coefficients(samples)
    Q = quantity_matrix(qs)
    got, want = predict_parts(Q, fit), predict_parts(Q, T2)
    for part in PARTS:
        np.testing.assert_allclose(got[part], want[part], atol=1e-9)


def test_fit_needs_enough_samples():
    samples = _samples(_rich_quantities(4), T2)
    with pytest.raises(ValueError, match="coup1"):
        fit_coefficients(samples)


def test_fit_rejects_non_finite_timing():
    samples = _samples(_rich_quantities(10), T2)
    s = samples[3]
    samples[3] = TimingSample(s.quantities, s.m_lbm, math.nan, s.m_coup1, s.m_coup2, s.m_rb)
    with pytest.raises(ValueError, match="m_bh"):
        fit_coefficients(samples)


def test_relative_errors_definitions():
    qs = _rich_quantities(20)
    samples = _samples(qs, T2)
    errs = relative_errors(samples, T2)
    for key in (*PARTS, "tot"):
        np.testing.assert_allclose(errs[key], 0, atol=1e-12)

    # shift each part's measurement so that WL_X = m_X + 0.1 m_tot
    shifted = []
    for s in samples:
        m = [s.measured(p) for p in PARTS]
        tot = sum(m)
        # solve m' = m - 0.1 * tot' with tot' = tot - 0.5 tot'
        new_tot = tot / 1.5
        shifted.append(TimingSample(s.quantities, *(x - 0.1 * new_tot for x in m)))
    errs = relative_errors(shifted, T2)
    for part in PARTS:
        np.testing.assert_allclose(errs[part], 0.1, rtol=1e-9)


def test_relative_errors_reject_zero_runtime():
    q = BlockQuantities(C=8, F=8, B=0)
    with pytest.raises(ValueError, match="zero total"):
        relative_errors([TimingSample(q, 0.0, 0.0, 0.0, 0.0, 0.0)], T2)


@pytest.mark.parametrize(
    "values, med, mad",
    [([1, 2, 3], 2, 1), ([5], 5, 0), ([1, 1, 1, 9], 1, 0)],
)
def test_summary_stats(values, med, mad):
    assert summary_stats(values) == (med, mad)


def test_summary_stats_reject_empty():
    with pytest.raises(ValueError):
        summary_stats([])


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.floats(-100, 100))
def test_summary_stats_shift_equivariant(values, shift):
    med, mad = summary_stats(values)
    med2, mad2 = summary_stats([v + shift for v in values])
    assert med2 == pytest.approx(med + shift, abs=1e-6)
    assert mad2 == pytest.approx(mad, abs=1e-6)


def test_coefficients_dict_round_trip():
    assert EstimatorCoefficients.from_dict(T2.as_dict()) == T2
    with pytest.raises(ValueError):
        EstimatorCoefficients(lbm=(1.0, 2.0), bh=T2.bh, coup1=T2.coup1, coup2=T2.coup2, rb=T2.rb)


def test_rb_features_put_intercept_inside_subcycles():
    Q = quantity_matrix([BlockQuantities(C=8, F=8, B=0, P_L=2, P_S=1, K=4, S=3)])
    np.testing.assert_array_equal(part_features("rb", Q)[0], [27, 6, 3, 12, 3])
