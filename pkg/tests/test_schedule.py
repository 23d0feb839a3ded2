from math import fsum

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from relaxproj.diagnostics import random_beta
from relaxproj.errors import InputError
from relaxproj.operator import active_indices, coefficients
from relaxproj.schedule import (
    BlockPartition,
    ConstantSchedule,
    CyclicSchedule,
    PaperIntermittent3,
    PaperN2,
    PaperPerturb3,
    TabulatedSchedule,
    beta_at,
    greedy_blocks,
    j_at,
    nullify_offcontrol,
    restrict_to_j,
    schedule_from_json,
    series_report,
    series_trace,
)

# direct summation of the closed forms, independent of the schedule code
H_1000 = 7.485470860550345  # sum_{n<=1000} 1/n
TWO_ZETA2_1000 = 3.2878691333631194  # sum_{n<=1000} 2/n^2
PERTURB3_TAIL_1000 = 3.285868131029788  # sum_{2<=n<=1000} 1/floor(n/2)^2


def test_frozen_sums_match_fsum():
    assert fsum(1 / n for n in range(1, 1001)) == H_1000
    assert fsum(2 / n**2 for n in range(1, 1001)) == TWO_ZETA2_1000
    assert fsum(1 / (n // 2) ** 2 for n in range(2, 1001)) == PERTURB3_TAIL_1000


def test_beta_at_examples():
    assert_allclose(beta_at(PaperN2(), 4).weights, [0.25, 1.5])
    assert_allclose(beta_at(PaperPerturb3(), 4).weights, [0.25, 0.5, 1.0])
    assert_allclose(beta_at(PaperPerturb3(), 5).weights, [0.5, 0.25, 1.0])
    assert_allclose(beta_at(ConstantSchedule([0.5, 0.5]), 17).weights, [0.5, 0.5])


def test_paper_start_indices():
    assert_allclose(beta_at(PaperN2(), 1).weights, [1.0, 0.0])
    assert_allclose(beta_at(PaperPerturb3(), 1).weights, [0, 0, 0])
    assert_allclose(beta_at(PaperPerturb3(), 2).weights, [1, 1, 0])
    for n in range(1, 6):
        assert_allclose(beta_at(PaperIntermittent3(), n).weights, [0, 0, 0])
    assert_allclose(beta_at(PaperIntermittent3(), 6).weights, [1, 0.5, 0.25])
    assert_allclose(beta_at(PaperIntermittent3(), 8).weights, [0.25, 0.5, 1])


def test_j_at_examples():
    sched = PaperPerturb3()
    assert j_at(sched, 4) == {1, 2}
    assert j_at(sched, 5) == {0, 2}
    # at m = 1 the third weight is zero, so it drops out of the control set
    assert j_at(sched, 2) == {1}
    inter = PaperIntermittent3()
    assert j_at(inter, 8) == {2}
    assert j_at(inter, 9) == {0}
    assert j_at(inter, 10) == {1}
    assert j_at(ConstantSchedule([0.5, 0]), 3) == active_indices([0.5, 0])


def test_tabulated_past_horizon():
    sched = TabulatedSchedule([[0.5, 0.5], [1, 0]])
    assert_allclose(sched.beta_at(2).weights, [1, 0])
    with pytest.raises(InputError, match="horizon"):
        sched.beta_at(3)
    with pytest.raises(InputError):
        sched.beta_at(0)


def test_greedy_blocks_examples():
    assert greedy_blocks(PaperN2(), 10).boundaries == (2, 3, 4, 5, 6, 7, 8, 9, 10)
    assert greedy_blocks(CyclicSchedule(3), 9).boundaries == (3, 6, 9)
    assert len(greedy_blocks(ConstantSchedule([1.0, 0.0]), 100)) == 0


def test_greedy_blocks_drop_partial_window():
    assert greedy_blocks(CyclicSchedule(3), 10).boundaries == (3, 6, 9)


def test_block_partition_validation():
    with pytest.raises(InputError):
        BlockPartition((3, 3))
    with pytest.raises(InputError):
        BlockPartition((0, 2))
    assert [list(w) for w in BlockPartition((2, 5)).windows()] == [[1, 2], [3, 4, 5]]


def test_series_paper_n2():
    sched = PaperN2()
    rep = series_report(sched, greedy_blocks(sched, 1000), 1000)
    assert rep.cum_nu == pytest.approx(H_1000, abs=1e-12)
    assert rep.cum_mu == pytest.approx(TWO_ZETA2_1000, abs=1e-12)
    # first greedy block merges n = 1, 2 with minimum 1/2
    assert rep.nu_blocks[0] == pytest.approx(0.5)
    assert rep.sum_nu_blocks == pytest.approx(H_1000 - 1.0, abs=1e-12)
    unit = series_report(sched, BlockPartition(tuple(range(1, 1001))), 1000)
    assert unit.sum_nu_blocks == pytest.approx(H_1000, abs=1e-12)
    assert rep.analytic == {"cum_nu": "diverges", "cum_mu": "converges"}


def test_series_paper_perturb3_tail():
    sched = PaperPerturb3()
    rep = series_report(sched, greedy_blocks(sched, 1000), 1000)
    assert rep.off_control_tail == pytest.approx(PERTURB3_TAIL_1000, abs=1e-12)
    assert rep.off_control_tail < 3.3


def test_series_paper_intermittent3():
    sched = PaperIntermittent3()
    blocks = greedy_blocks(sched, 300)
    rep = series_report(sched, blocks, 300)
    assert rep.beta_j_blocks == [1.0] * len(blocks)
    assert rep.max_s <= 1.75
    fixed = series_report(sched, BlockPartition.fixed(3, 300), 300)
    # blocks before the schedule starts carry no control entries
    assert fixed.beta_j_blocks[0] == 0.0
    assert set(fixed.beta_j_blocks[1:]) == {1.0}


@pytest.mark.parametrize("sched", [PaperN2(), PaperPerturb3(), PaperIntermittent3(), CyclicSchedule(4, 1.5)])
def test_partial_sums_nondecreasing(sched):
    tr = series_trace(sched, 400)
    for arr in (tr.cum_nu, tr.cum_mu, tr.off_control_tail):
        assert np.all(arr >= 0)
        assert np.all(np.diff(arr) >= 0)
    short = series_report(sched, greedy_blocks(sched, 200), 200)
    long = series_report(sched, greedy_blocks(sched, 400), 400)
    assert long.cum_nu >= short.cum_nu
    assert long.sum_nu_blocks >= short.sum_nu_blocks
    assert long.off_control_tail >= short.off_control_tail


def test_restrict_to_j_examples():
    restricted = restrict_to_j(PaperPerturb3())
    for m in (1, 2, 5):
        assert_allclose(restricted.beta_at(2 * m).weights, [0, 1 / m, 2 - 2 / m])
    same = restrict_to_j(ConstantSchedule([0.3, 0.7]))
    assert_allclose(same.beta_at(1).weights, [0.3, 0.7])
    masked = restrict_to_j(ConstantSchedule([0.3, 0.7], j=[1]))
    assert_allclose(masked.beta_at(1).weights, [0, 0.7])


@pytest.mark.parametrize("sched", [PaperPerturb3(), PaperIntermittent3()])
def test_restriction_properties(sched):
    restricted = restrict_to_j(sched)
    total_change = 0.0
    for n in range(1, 301):
        b, bt = sched.beta_at(n), restricted.beta_at(n)
        assert np.all(bt.weights <= b.weights)
        assert bt.total <= b.total
        nu, nut = coefficients(b).nu, coefficients(bt).nu
        for i in sched.j_at(n):
            assert nut[i] >= nu[i] - 1e-12
        total_change += np.abs(b.weights - bt.weights).sum()
    tail = series_trace(sched, 300).off_control.sum()
    assert total_change == pytest.approx(tail, abs=1e-12)


def test_nullify_single_block():
    sched = TabulatedSchedule([[0.1, 0.5]], [[1]])
    out = nullify_offcontrol(sched, p=1, horizon=1)
    assert_allclose(out.schedule.beta_at(1).weights, [0, 0.5])
    assert out.mass == pytest.approx(0.1)
    assert out.passes == 1 and out.converged


def test_nullify_noop_without_control_rule():
    sched = CyclicSchedule(3, 1.0)
    out = nullify_offcontrol(sched, p=3, horizon=30)
    assert out.mass == 0 and out.passes == 0 and out.nullified == []
    for n in range(1, 31):
        assert out.schedule.beta_at(n) == sched.beta_at(n)


def test_nullify_intermittent3_zeroes_smallest_first():
    sched = PaperIntermittent3()
    out = nullify_offcontrol(sched, p=3, horizon=30, eps=0.25)
    assert out.converged and out.passes <= 3 * 3
    # direct enumeration: every off-control coefficient of every full block
    expected = fsum(
        sched.beta_at(n).weights[i]
        for n in range(1, 31)
        for i in active_indices(sched.beta_at(n)) - sched.j_at(n)
    )
    assert out.mass == pytest.approx(expected, abs=1e-12)
    # the first pass removes the 1/m^2 entry of each block that has one
    first_pass = out.nullified[: 8]
    for n, i in first_pass:
        m = n // 3
        assert sched.beta_at(n).weights[i] == pytest.approx(1 / m**2)
    for n in range(1, 31):
        j = sched.j_at(n)
        new = out.schedule.beta_at(n).weights
        assert np.all(new <= sched.beta_at(n).weights)
        for i in j:
            assert new[i] == sched.beta_at(n).weights[i]


def test_nullify_rejects_sum_near_two():
    with pytest.raises(InputError, match="2 - eps"):
        nullify_offcontrol(PaperIntermittent3(), p=3, horizon=30, eps=0.5)
    with pytest.raises(InputError):
        nullify_offcontrol(PaperN2(), p=1, horizon=10, eps=0.2)


def test_nullify_trailing_partial_block_untouched():
    sched = PaperIntermittent3()
    out = nullify_offcontrol(sched, p=3, horizon=31, eps=0.25)
    assert out.schedule.beta_at(31) == sched.beta_at(31)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_nu_beta_comparison_bounds(seed, n):
    rng = np.random.default_rng(seed)
    beta = random_beta(rng, n)
    s = beta.sum()
    if s >= 2:
        return
    eps = 2 - s
    nu = coefficients(beta).nu
    assert np.all(2 * eps / (2 + eps) * beta <= nu + 1e-12)
    assert np.all(nu <= 2 * beta + 1e-12)


def test_schedule_json_roundtrip():
    scheds = [
        ConstantSchedule([0.5, 0.5], j=[0]),
        CyclicSchedule(3, 1.5),
        TabulatedSchedule([[0.5, 0.5], [1, 0]], [[0, 1], None]),
        PaperN2(),
        PaperPerturb3(),
        PaperIntermittent3(),
    ]
    for sched in scheds:
        back = schedule_from_json(sched.to_json())
        assert back.to_json() == sched.to_json()
        for n in range(1, 3):
            assert back.beta_at(n) == sched.beta_at(n)
            assert back.j_at(n) == sched.j_at(n)


@pytest.mark.parametrize(
    "obj, n_sets, match",
    [
        ({"kind": "nope"}, None, "unknown schedule kind"),
        ({"kind": "paper_n2"}, 3, "N=2"),
        ({"kind": "tabulated", "rows": [{"beta": [1.5, 1.0]}]}, None, r"rows\[0\]\.beta.*sum"),
        ({"kind": "constant"}, None, "beta"),
        ({"kind": "cyclic", "weight": 2.5}, 2, "weight"),
    ],
)
def test_schedule_json_errors(obj, n_sets, match):
    with pytest.raises(InputError, match=match):
        schedule_from_json(obj, n_sets)
