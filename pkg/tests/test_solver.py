import numpy as np
import pytest
import sympy as sp

import imcsim.solver as solver_mod
from imcsim.cells import BiasConfig, CellState, calibrate
from imcsim.mvm import CrossbarInstance
from imcsim.solver import (
    ColumnNetwork,
    NonConvergence,
    oracle_solve,
    solve_array,
    solve_batch,
    solve_column,
)

UNIT = 4e-6


def net_from(inp, w, r_segment=19.67, r_driver=100.0, r_sink=100.0, variation=None):
    return ColumnNetwork.from_bits(inp, w, r_segment=r_segment, r_driver=r_driver, r_sink=r_sink,
                                   v_bl=0.25, v_wl=0.7, variation=variation)


def test_zero_parasitics_on_cells(sram):
    rng = np.random.default_rng(0)
    w = rng.integers(0, 2, 128)
    sol = solve_column(net_from(np.ones(128, int), w, 0, 0, 0), sram)
    k = int(w.sum())
    leak = (128 - k) * 4.7e-12 * 0.25
    assert sol.i_out == pytest.approx(k * UNIT + leak, rel=1e-9)
    full = solve_column(net_from(np.ones(16, int), np.ones(16, int), 0, 0, 0), sram)
    assert full.i_out == pytest.approx(16 * UNIT, rel=1e-9)


def test_all_leakage_column(sram):
    sol = solve_column(net_from(np.zeros(128, int), np.zeros(128, int), 0, 0, 0), sram)
    assert sol.i_out == pytest.approx(128 * 5.5e-13, rel=1e-9)


def six_resistor_reference(rd, rw, rs, g0, g1, v):
    b0, s0, b1, s1 = sp.symbols("b0 s0 b1 s1")
    eqs = [
        (v - b0) / rd - (b0 - b1) / rw - g0 * (b0 - s0),
        (b0 - b1) / rw - g1 * (b1 - s1),
        g0 * (b0 - s0) - (s0 - s1) / rw,
        (s0 - s1) / rw + g1 * (b1 - s1) - s1 / rs,
    ]
    sol = sp.solve(eqs, [b0, s0, b1, s1], rational=True)
    return float(sol[s1] / rs), [float(sol[x]) for x in (b0, s0, b1, s1)]


def test_two_row_linear_network_closed_form():
    table = (1.6e-5, 1e-4, 2.5e-4, 4e-4)
    tech = calibrate("SRAM8T", 1.6e-5, BiasConfig(), table=table)
    net = ColumnNetwork(2, 20.0, 100.0, 50.0, [CellState(0, 1), CellState(0, 0)], np.zeros(2), 0.25)
    i_ref, v_ref = six_resistor_reference(sp.Integer(100), sp.Integer(20), sp.Integer(50),
                                          sp.Rational(25, 100000), sp.Rational(4, 10000), sp.Rational(1, 4))
    sol = solve_column(net, tech)
    assert sol.i_out == pytest.approx(i_ref, rel=1e-12)
    assert np.allclose([sol.bl_voltages[0], sol.sl_voltages[0], sol.bl_voltages[1], sol.sl_voltages[1]],
                       v_ref, rtol=1e-12, atol=0)
    # linear network: one Newton step
    assert sol.newton_iters == 1
    orc = oracle_solve(net, tech)
    assert orc.i_out == pytest.approx(i_ref, rel=1e-12)


def test_linear_network_matches_dense_linear_solve():
    table = (1.6e-5, 1e-4, 2.5e-4, 4e-4)
    tech = calibrate("SRAM8T", 1.6e-5, BiasConfig(), table=table)
    rng = np.random.default_rng(3)
    n = 12
    inp = np.zeros(n, int)
    w = rng.integers(0, 2, n)
    mult = rng.uniform(0.5, 1.5, n)
    net = net_from(inp, w, 7.0, 30.0, 40.0, variation=mult)
    g = np.where(w == 1, 2.5e-4, 4e-4) * mult
    # assemble the nodal matrix directly: unknowns [b0..bn-1, s0..sn-1]
    gw, gd, gs = 1 / 7.0, 1 / 30.0, 1 / 40.0
    a = np.zeros((2 * n, 2 * n))
    rhs = np.zeros(2 * n)
    for i in range(n):
        a[i, i] += g[i]; a[i, n + i] -= g[i]; a[n + i, n + i] += g[i]; a[n + i, i] -= g[i]
        if i + 1 < n:
            for off in (0, n):
                a[off + i, off + i] += gw; a[off + i + 1, off + i + 1] += gw
                a[off + i, off + i + 1] -= gw; a[off + i + 1, off + i] -= gw
    a[0, 0] += gd; rhs[0] = gd * 0.25
    a[2 * n - 1, 2 * n - 1] += gs
    v = np.linalg.solve(a, rhs)
    for sol in (solve_column(net, tech), oracle_solve(net, tech)):
        assert np.allclose(sol.bl_voltages, v[:n], atol=1e-13)
        assert np.allclose(sol.sl_voltages, v[n:], atol=1e-13)


@pytest.mark.parametrize("rd,rs,rw", [(100, 100, 19.67), (0, 100, 19.67), (100, 0, 19.67), (0, 0, 19.67),
                                      (100, 100, 0), (37, 0, 0)])
def test_fast_matches_oracle(sram, rd, rs, rw):
    rng = np.random.default_rng(int(rd + 2 * rs + rw))
    n = 64
    net = net_from(rng.integers(0, 2, n), rng.integers(0, 2, n), rw, rd, rs,
                   variation=rng.uniform(0.7, 1.3, n))
    a, o = solve_column(net, sram), oracle_solve(net, sram)
    assert np.abs(a.bl_voltages - o.bl_voltages).max() <= 1e-10
    assert np.abs(a.sl_voltages - o.sl_voltages).max() <= 1e-10
    assert a.i_out == pytest.approx(o.i_out, rel=1e-9, abs=1e-15)
    assert a.max_residual <= 1e-13


def test_kcl_and_bounds(sram, fefet):
    rng = np.random.default_rng(11)
    for tech in (sram, fefet):
        for _ in range(5):
            net = net_from(rng.integers(0, 2, 128), rng.integers(0, 2, 128))
            sol = solve_column(net, tech)
            assert abs(sol.i_in - sol.i_out) <= 1e-12
            assert abs(sol.i_out - sol.cell_currents.sum()) <= 1e-13
            assert sol.max_residual <= 1e-13
            for v in (sol.bl_voltages, sol.sl_voltages):
                assert v.min() >= 0 and v.max() <= 0.25


def test_deterministic(sram):
    rng = np.random.default_rng(5)
    net = net_from(rng.integers(0, 2, 128), rng.integers(0, 2, 128))
    a, b = solve_column(net, sram), solve_column(net, sram)
    assert np.array_equal(a.bl_voltages, b.bl_voltages)
    assert np.array_equal(a.sl_voltages, b.sl_voltages)
    assert a.i_out == b.i_out


def test_single_on_cell_position_effect(sram):
    n = 128
    currents = []
    for row in range(n):
        inp = np.zeros(n, int)
        inp[row] = 1
        w = np.zeros(n, int)
        w[row] = 1
        currents.append(solve_column(net_from(inp, w), sram).i_out)
    # row 0 is next to the driver; moving toward the ADC must not lose current
    assert np.all(np.diff(currents) >= 0)
    assert currents[-1] > currents[0]


def _xbar(w, inputs, tech, wire, bias):
    return CrossbarInstance(w, 1.0, wire, tech, bias, inputs=inputs)


def test_solve_array_single_column_matches(sram, wire, bias):
    rng = np.random.default_rng(2)
    w = rng.integers(0, 2, (128, 1))
    inp = rng.integers(0, 2, 128)
    col = solve_array(_xbar(w, inp, sram, wire, bias))
    ref = solve_column(net_from(inp, w[:, 0], wire.r_segment_sram, wire.r_driver, wire.r_sink), sram)
    assert len(col) == 1
    assert np.array_equal(col[0].bl_voltages, ref.bl_voltages)
    assert col[0].i_out == ref.i_out


def test_solve_array_column_permutation(sram, wire, bias):
    rng = np.random.default_rng(4)
    w = rng.integers(0, 2, (64, 12))
    inp = rng.integers(0, 2, 64)
    perm = rng.permutation(12)
    a = solve_array(_xbar(w, inp, sram, wire, bias))
    b = solve_array(_xbar(w[:, perm], inp, sram, wire, bias))
    assert np.allclose([a[p].i_out for p in perm], [s.i_out for s in b], rtol=1e-12, atol=0)


def test_solve_array_matches_per_column(sram, wire, bias):
    rng = np.random.default_rng(8)
    w = rng.integers(0, 2, (48, 6))
    inp = rng.integers(0, 2, 48)
    arr = solve_array(_xbar(w, inp, sram, wire, bias))
    for c in range(6):
        ref = solve_column(net_from(inp, w[:, c], wire.r_segment_sram, wire.r_driver, wire.r_sink), sram)
        assert np.abs(arr[c].bl_voltages - ref.bl_voltages).max() <= 1e-12
        assert arr[c].i_out == pytest.approx(ref.i_out, rel=1e-12)


def test_all_on_array_loses_current(sram, wire, bias):
    w = np.ones((128, 128), int)
    sols = solve_array(_xbar(w, np.ones(128, int), sram, wire, bias))
    assert all(s.i_out < 128 * UNIT for s in sols)


def test_nonconvergence_reports_column(sram, monkeypatch):
    monkeypatch.setattr(solver_mod, "MAX_ITERS", 1)
    on = np.ones((32, 3), bool)
    with pytest.raises(NonConvergence) as exc:
        solve_batch(sram, on, 0.0, 1.0, 0.7, r_segment=19.67, r_driver=100, r_sink=100, v_bl=0.25)
    assert exc.value.column == 0
    assert exc.value.residual > 1e-13


def test_network_validation():
    with pytest.raises(ValueError):
        ColumnNetwork(0, 1.0, 1.0, 1.0, [], np.zeros(0), 0.25)
    with pytest.raises(ValueError):
        net_from(np.ones(2, int), np.ones(2, int), r_segment=-1.0)
    with pytest.raises(ValueError):
        ColumnNetwork(2, 1.0, 1.0, 1.0, [CellState(1, 1)], np.zeros(2), 0.25)


def test_oracle_row_limit(sram):
    with pytest.raises(ValueError):
        oracle_solve(net_from(np.zeros(257, int), np.zeros(257, int)), sram)
