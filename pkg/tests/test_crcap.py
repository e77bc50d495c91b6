import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_source
from outage_cr.crcap import (
    AuxChannel,
    CapacityResult,
    OptimizerOptions,
    ResourceCapError,
    brute_force_cr_capacity,
    brute_force_many,
    converse_bound_check,
    cr_capacity,
    info_pair,
    simplex_grid,
)
from outage_cr.source import JointSource, conditional_entropy_x_given_y, dsbs, entropy_x, mutual_info_xy

GOLDEN = json.loads((Path(__file__).parent / "golden" / "oracle_dsbs01_c02.json").read_text())


def test_info_pair_examples():
    i_ux, i_uy = info_pair(AuxChannel.identity(2), dsbs(0.1))
    assert i_ux == pytest.approx(1.0, abs=1e-12)
    assert i_uy == pytest.approx(mutual_info_xy(dsbs(0.1)), abs=1e-12)
    assert i_uy == pytest.approx(0.531004, abs=1e-6)
    assert info_pair(AuxChannel.constant(2), dsbs(0.1)) == (0.0, 0.0)
    same_columns = AuxChannel(np.array([[0.3, 0.3], [0.7, 0.7]]))
    assert info_pair(same_columns, dsbs(0.1)) == pytest.approx((0.0, 0.0), abs=1e-12)
    with pytest.raises(ValueError):
        info_pair(AuxChannel.identity(3), dsbs(0.1))


def test_aux_channel_validation():
    with pytest.raises(ValueError):
        AuxChannel(np.array([[0.5, 0.5], [0.6, 0.5]]))
    with pytest.raises(ValueError):
        AuxChannel(np.array([[1.5, 1.0], [-0.5, 0.0]]))
    aux = AuxChannel.from_columns([[2.0, 1.0], [2.0, 3.0]])
    np.testing.assert_allclose(aux.w, [[0.5, 0.25], [0.5, 0.75]])


def test_identical_components_give_full_entropy():
    src = JointSource(np.diag([0.2, 0.5, 0.3]))
    for budget in (0.0, 0.4, 2.0):
        res = cr_capacity(src, budget)
        assert res.value == pytest.approx(entropy_x(src), abs=1e-9)
        assert res.excess <= budget + 1e-9


def test_saturation_confirmed_by_oracle(rng):
    for _ in range(5):
        src = random_source(rng)
        budget = conditional_entropy_x_given_y(src)
        main = cr_capacity(src, budget)
        oracle = brute_force_cr_capacity(src, budget, grid_steps=21, card_u=3)
        assert main.value == pytest.approx(entropy_x(src), abs=1e-9)
        assert oracle.value == pytest.approx(entropy_x(src), abs=1e-9)


def test_independent_components_value_equals_budget():
    src = JointSource(np.full((2, 2), 0.25))
    res = cr_capacity(src, 0.3)
    assert res.value == pytest.approx(0.3, abs=1e-6)
    oracle = brute_force_cr_capacity(src, 0.3, grid_steps=41, card_u=3)
    assert 0.3 - 5e-3 <= oracle.value <= 0.3 + 1e-9


def test_brute_force_examples():
    assert brute_force_cr_capacity(dsbs(0.0), 1.0, grid_steps=11, card_u=2).value == pytest.approx(1.0, abs=1e-12)
    assert brute_force_cr_capacity(dsbs(0.1), 0.0, grid_steps=21, card_u=3).value <= 2e-2


def test_oracle_golden_value():
    res = brute_force_cr_capacity(dsbs(0.1), GOLDEN["budget_bits"], GOLDEN["grid_steps"], GOLDEN["card_u"])
    assert res.value == pytest.approx(GOLDEN["value_bits"], abs=1e-12)
    main = cr_capacity(dsbs(0.1), GOLDEN["budget_bits"])
    assert main.value >= GOLDEN["value_bits"] - 5e-3
    assert main.value <= GOLDEN["value_bits"] + 5e-3


def test_oracle_resource_cap():
    with pytest.raises(ResourceCapError):
        brute_force_cr_capacity(dsbs(0.1), 0.1, grid_steps=101, card_u=3, max_points=1000)


def test_simplex_grid():
    g = simplex_grid(3, 5)
    assert g.shape == (15, 3)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert len({tuple(r) for r in g}) == 15


def test_budget_must_be_nonnegative():
    with pytest.raises(ValueError):
        cr_capacity(dsbs(0.1), -0.1)
    with pytest.raises(ValueError):
        brute_force_cr_capacity(dsbs(0.1), -0.1)


def test_deterministic_for_fixed_seed():
    a = cr_capacity(dsbs(0.15), 0.2, OptimizerOptions(seed=4))
    b = cr_capacity(dsbs(0.15), 0.2, OptimizerOptions(seed=4))
    assert a.value == b.value
    np.testing.assert_array_equal(a.argmax.w, b.argmax.w)


def test_converse_check_examples(rng):
    src = dsbs(0.1)
    assert converse_bound_check(cr_capacity(src, 0.2), src, 0.2)
    assert converse_bound_check(cr_capacity(dsbs(0.0), 0.0), dsbs(0.0), 0.0)
    good = cr_capacity(src, 0.2)
    corrupted = CapacityResult(good.value, good.argmax, 0.2 + 0.1, 0.2, 0)
    assert not converse_bound_check(corrupted, src, 0.2)
    too_big = CapacityResult(entropy_x(src) + 0.01, good.argmax, 0.0, 0.2, 0)
    assert not converse_bound_check(too_big, src, 0.2)
    for _ in range(100):
        s = random_source(rng)
        budget = float(rng.uniform(0, 1))
        assert converse_bound_check(brute_force_cr_capacity(s, budget, grid_steps=11, card_u=3), s, budget)


def test_monotone_in_budget(rng):
    for _ in range(3):
        src = random_source(rng, 2, 3)
        budgets = np.linspace(0, conditional_entropy_x_given_y(src) * 1.1, 8)
        values = [cr_capacity(src, c).value for c in budgets]
        assert all(b >= a - 1e-6 for a, b in zip(values, values[1:]))


def test_oracle_dominance_and_feasibility(rng):
    for _ in range(4):
        src = random_source(rng)
        budgets = [0.05, 0.2, 0.4]
        for c, oracle in zip(budgets, brute_force_many(src, budgets, grid_steps=21, card_u=3)):
            res = cr_capacity(src, c)
            assert res.value >= oracle.value - 5e-3
            assert res.excess <= c + 1e-6
            np.testing.assert_allclose(res.argmax.w.sum(axis=0), 1.0, atol=1e-9)
            assert res.argmax.size_u == src.size_x + 1


columns = arrays(float, (3, 2), elements=st.floats(0, 1, allow_nan=False)).filter(lambda a: np.all(a.sum(0) > 1e-6))
sources = arrays(float, (2, 3), elements=st.floats(0, 1, allow_nan=False)).filter(lambda a: a.sum() > 1e-6)


@settings(max_examples=200, deadline=None)
@given(columns, sources)
def test_data_processing(w, weights):
    aux = AuxChannel.from_columns(w)
    i_ux, i_uy = info_pair(aux, JointSource.normalized(weights))
    assert i_ux - i_uy >= -1e-9


def test_warped_grid_is_a_symmetric_simplex_grid():
    uniform = simplex_grid(3, 9)
    warped = simplex_grid(3, 9, warp=2.0)
    assert warped.shape == uniform.shape
    np.testing.assert_allclose(warped.sum(axis=1), 1.0)
    assert {tuple(r) for r in np.eye(3)} <= {tuple(r) for r in warped}
    swapped = {tuple(np.round(r[[1, 0, 2]], 12)) for r in warped}
    assert swapped == {tuple(np.round(r, 12)) for r in warped}
    assert np.min(warped[warped > 0]) < np.min(uniform[uniform > 0])
    with pytest.raises(ValueError):
        simplex_grid(3, 9, warp=0.0)


def naive_oracle(src, budget, steps, card_u, warp):
    grid = simplex_grid(card_u, steps, warp)
    best = 0.0
    for a in grid:
        for b in grid:
            i_ux, i_uy = info_pair(AuxChannel(np.column_stack([a, b])), src)
            if i_ux - i_uy <= budget + 1e-9:
                best = max(best, i_ux)
    return best


@pytest.mark.parametrize("warp", [1.0, 2.0])
def test_symmetry_reduced_enumeration_matches_full(rng, warp):
    for _ in range(3):
        src = random_source(rng)
        for budget in (0.0, 0.15, 0.4):
            fast = brute_force_cr_capacity(src, budget, grid_steps=9, card_u=3, warp=warp).value
            assert fast == pytest.approx(naive_oracle(src, budget, 9, 3, warp), abs=1e-12)


def test_warped_oracle_tracks_near_boundary_optimum():
    # optimum has entries of order 1e-3, which a uniform 41-level grid cannot resolve
    src = JointSource(np.array([[0.00616355, 0.51827268], [0.40142261, 0.07414116]]))
    main = cr_capacity(src, 0.25).value
    uniform = brute_force_cr_capacity(src, 0.25, grid_steps=41, card_u=3).value
    warped = brute_force_cr_capacity(src, 0.25, grid_steps=41, card_u=3, warp=2.0).value
    assert main - uniform > 5e-3
    assert 0 <= main - warped <= 1e-3
