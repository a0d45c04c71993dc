import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.grid import (
    DCSolver,
    DisconnectedGridError,
    LoadProfile,
    SensorPlacement,
    dc_power_flow,
    generate_loads,
    load_case,
    observe,
    parse_case,
    place_sensors,
    read_trace,
    simulate,
    simulate_days,
)
from gridcast.grid.sensors import sensor_count
from gridcast.grid.simulate import _run_lengths

from conftest import TRIANGLE, TWO_BUS_INJECTED


def _injections(topo, demand):
    """Net injections for given per-bus demand, gen_share dispatch, slack balancing."""
    share = np.asarray(topo.gen_share)
    return share * demand.sum() - demand


# --- DC power flow ---------------------------------------------------------------


def test_two_bus_load_case_matches_hand_solution(two_bus, derived):
    theta, flows = dc_power_flow(two_bus, _injections(two_bus, np.array([0.0, 0.8])))
    np.testing.assert_allclose(theta, derived["two_bus"]["theta"], atol=1e-10, rtol=0)
    np.testing.assert_allclose(flows, derived["two_bus"]["flows"], atol=1e-10, rtol=0)


def test_two_bus_injection_case(derived):
    topo = parse_case(TWO_BUS_INJECTED)
    theta, flows = dc_power_flow(topo, [1.0, 0.0])
    np.testing.assert_allclose(theta, derived["two_bus_injected"]["theta"], atol=1e-10, rtol=0)
    np.testing.assert_allclose(flows, derived["two_bus_injected"]["flows"], atol=1e-10, rtol=0)


def test_triangle_case(derived):
    topo = parse_case(TRIANGLE)
    theta, flows = dc_power_flow(topo, [1.0, -1.0, 0.0])
    np.testing.assert_allclose(theta, derived["triangle"]["theta"], atol=1e-10, rtol=0)
    np.testing.assert_allclose(flows, derived["triangle"]["flows"], atol=1e-10, rtol=0)


def test_three_bus_with_unequal_reactances(three_bus, derived):
    theta, flows = dc_power_flow(three_bus, _injections(three_bus, np.array([0.0, 1.0, 1.0])))
    np.testing.assert_allclose(theta, derived["three_bus"]["theta"], atol=1e-10, rtol=0)
    np.testing.assert_allclose(flows, derived["three_bus"]["flows"], atol=1e-10, rtol=0)


def test_zero_injections_give_zero_state():
    topo = load_case("ieee30")
    theta, flows = dc_power_flow(topo, np.zeros(topo.n_buses))
    assert not theta.any() and not flows.any()


def test_slack_absorbs_imbalance():
    topo = load_case("toy5")
    P, _, _ = DCSolver(topo).solve(np.array([5.0, 0.3, -0.2, 0.1, -0.6]))
    assert P[0] == pytest.approx(0.4)
    assert abs(P.sum()) < 1e-12


def test_disconnected_grid_is_a_structured_error():
    topo = parse_case(TRIANGLE).without_lines([2, 3])
    with pytest.raises(DisconnectedGridError):
        dc_power_flow(topo, [0.0, 0.0, 0.0])


def test_removing_a_loaded_line_reroutes_flow():
    topo = load_case("ieee30")
    P = _injections(topo, np.asarray(topo.base_pd))
    _, before = dc_power_flow(topo, P)
    for c in topo.candidate_lines:
        r = topo.line_ids.index(c)
        assert before[r] != 0
        cut = topo.without_lines([c])
        _, after = dc_power_flow(cut, P)
        kept = [topo.line_ids.index(i) for i in cut.line_ids]
        assert np.abs(after - before[kept]).max() > 1e-6


# --- loads -------------------------------------------------------------------------


def test_loads_are_deterministic_per_seed():
    topo = load_case("toy5")
    a = generate_loads(topo, 1, 7, slot_seconds=60.0)
    b = generate_loads(topo, 1, 7, slot_seconds=60.0)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.q, b.q)
    c = generate_loads(topo, 1, 8, slot_seconds=60.0)
    assert not np.array_equal(a.p, c.p)


def test_afternoon_band_beats_night_band_on_every_loaded_bus():
    for case in ("toy5", "ieee30"):
        topo = load_case(case)
        loads = generate_loads(topo, 3, 1, slot_seconds=300.0)
        h = loads.hours()
        peak = loads.p[(h >= 14) & (h < 20)].mean(axis=0)
        night = loads.p[(h >= 2) & (h < 6)].mean(axis=0)
        loaded = np.asarray(topo.base_pd) > 0
        assert (peak[loaded] > night[loaded]).all()
        assert (peak[~loaded] == 0).all() and (night[~loaded] == 0).all()


def test_loads_reject_bad_arguments():
    topo = load_case("toy5")
    with pytest.raises(ValueError):
        generate_loads(topo, 0, 1)
    with pytest.raises(ValueError):
        generate_loads(topo, 1, 1, stress_fraction=1.5)
    with pytest.raises(ValueError):
        LoadProfile(-np.ones((2, 2)), np.zeros((2, 2)), 1.0)


@pytest.mark.parametrize("case", ["toy5", "ieee30"])
def test_no_stress_days_means_no_overloads(case):
    topo = load_case(case)
    loads = generate_loads(topo, 20, 3, slot_seconds=180.0, stress_fraction=0.0)
    traces = simulate_days(topo, loads, place_sensors(topo, 0.2, 0), 5)
    assert all(not tr.events for tr in traces)
    assert sum(tr.n_slots for tr in traces) == loads.n_slots
    rating = np.array([ln.rating for ln in topo.lines])
    peak = max(np.nanmax(np.abs(tr.state.flows) / rating) for tr in traces)
    assert peak < 1.0


def test_stress_days_trip_only_candidate_lines():
    topo = load_case("toy5")
    loads = generate_loads(topo, 10, 4, slot_seconds=180.0, stress_fraction=0.8)
    assert len(loads.stress_days) == 8
    traces = simulate_days(topo, loads, place_sensors(topo, 0.4, 0), 5)
    events = [ev for tr in traces for ev in tr.events]
    assert events
    assert {ev.line for ev in events} <= set(topo.candidate_lines)


# --- sensors -----------------------------------------------------------------------


def test_sensor_counts():
    ieee = load_case("ieee30")
    assert len(place_sensors(ieee, 0.20, 99).sensor_buses) == 6
    toy = load_case("toy5")
    assert len(place_sensors(toy, 0.05, 3).sensor_buses) == 1
    assert place_sensors(ieee, 0.2, 5) == place_sensors(ieee, 0.2, 5)


@pytest.mark.parametrize("pen", [0.0, -0.1, 1.01])
def test_sensor_penetration_range(pen):
    with pytest.raises(ValueError):
        place_sensors(load_case("toy5"), pen, 0)


@given(pen=st.floats(0.001, 1.0), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_placement_is_a_subset_of_the_right_size(pen, seed):
    topo = load_case("ieee30")
    placed = place_sensors(topo, pen, seed)
    assert len(placed.sensor_buses) == sensor_count(30, pen) == max(1, int(np.floor(pen * 30 + 0.5)))
    assert set(placed.sensor_buses) <= set(topo.buses)
    assert len(set(placed.sensor_buses)) == len(placed.sensor_buses)


# --- simulation --------------------------------------------------------------------


def _overload_topology():
    # triangle with candidate line 1 rated low; the others cannot overload
    text = TRIANGLE.replace("1 1 2 0.1 5.0", "1 1 2 0.1 0.5")
    return parse_case(text)


def _overload_loads(topo, start, stop, T, level=1.2):
    """Demand at bus 2 that puts line 1 at ``level`` x rating on slots [start, stop)."""
    unit = np.zeros(3)
    unit[1] = 1.0
    _, flows = dc_power_flow(topo, _injections(topo, unit))
    d = level * topo.line(1).rating / abs(flows[0])
    p = np.zeros((T, 3))
    p[:, 1] = 0.3 * d
    p[start:stop, 1] = d
    return LoadProfile(p, 0.1 * p, 1.0)


def test_sustained_overload_trips_once_at_the_expected_slot():
    topo = _overload_topology()
    tau = 10
    trace = simulate(topo, _overload_loads(topo, 5, 30, 40), SensorPlacement((1, 2, 3), 1.0), trip_slots=tau)
    assert len(trace.events) == 1
    ev = trace.events[0]
    assert (ev.line, ev.overload_start, ev.trip_time) == (1, 5, 5 + tau - 1)
    assert trace.n_slots == 40 and not trace.truncated
    # the line is gone after the trip
    assert np.isnan(trace.state.flows[ev.trip_time + 1:, 0]).all()
    assert not np.isnan(trace.state.flows[: ev.trip_time + 1, 0]).any()


def test_short_overload_does_not_trip():
    topo = _overload_topology()
    trace = simulate(topo, _overload_loads(topo, 5, 14, 40), SensorPlacement((2,), 1 / 3), trip_slots=10)
    assert trace.events == ()


def test_islanding_trip_truncates_the_trace(two_bus):
    T = 30
    p = np.zeros((T, 2))
    p[:, 1] = 1.5  # line rating is 1.0
    trace = simulate(two_bus, LoadProfile(p, p * 0.25, 1.0), SensorPlacement((2,), 0.5), trip_slots=4)
    assert trace.truncated
    assert trace.n_slots == 4
    assert trace.events[0].trip_time == 3


def test_trip_slots_must_allow_an_overload_before_the_trip(two_bus):
    p = np.ones((5, 2))
    with pytest.raises(ValueError):
        simulate(two_bus, LoadProfile(p, p, 1.0), SensorPlacement((2,), 0.5), trip_slots=1)


@pytest.fixture(scope="module")
def stressed_run():
    topo = load_case("ieee30")
    loads = generate_loads(topo, 6, 11, slot_seconds=180.0, stress_fraction=1.0)
    return topo, simulate_days(topo, loads, place_sensors(topo, 0.2, 1), 2, trip_slots=10)


def test_balance_and_flow_consistency_on_every_slot(stressed_run):
    topo, traces = stressed_run
    x = np.array([ln.reactance for ln in topo.lines])
    frm = [topo.bus_index(ln.from_bus) for ln in topo.lines]
    to = [topo.bus_index(ln.to_bus) for ln in topo.lines]
    for tr in traces:
        st_ = tr.state
        assert np.abs(st_.injections.sum(axis=1)).max() < 1e-8
        diff = st_.angles[:, frm] - st_.angles[:, to]
        live = ~np.isnan(st_.flows)
        assert np.abs(st_.flows[live] * np.broadcast_to(x, live.shape)[live] - diff[live]).max() < 1e-8


def test_events_replay_from_recorded_flows(stressed_run):
    topo, traces = stressed_run
    rating = {ln.id: ln.rating for ln in topo.lines}
    n_events = 0
    for tr in traces:
        for ev in tr.events:
            n_events += 1
            col = topo.line_ids.index(ev.line)
            f = np.abs(tr.state.flows[:, col])
            assert ev.trip_time - ev.overload_start + 1 == 10
            assert (f[ev.overload_start:ev.trip_time + 1] > rating[ev.line]).all()
            if ev.overload_start > 0:
                assert f[ev.overload_start - 1] <= rating[ev.line]
    assert n_events > 0


def test_measurements_follow_the_state(stressed_run):
    topo, traces = stressed_run
    tr = traces[0]
    idx = [topo.bus_index(b) for b in tr.sensor_buses]
    resid = tr.measurements[:, :, 1] - tr.state.angles[:, idx]
    assert 0 < resid.std() < 5e-3  # angle channel = state + small noise


def test_same_seed_is_bit_identical_and_noiseless_runs_ignore_the_seed():
    topo = load_case("toy5")
    loads = generate_loads(topo, 1, 2, slot_seconds=120.0, stress_fraction=1.0)
    sensors = place_sensors(topo, 0.6, 2)
    a = simulate(topo, loads, sensors, seed=9)
    b = simulate(topo, loads, sensors, seed=9)
    assert np.array_equal(a.measurements, b.measurements) and a.events == b.events
    c = simulate(topo, loads, sensors, noise_std=0.0, seed=1)
    d = simulate(topo, loads, sensors, noise_std=0.0, seed=2)
    assert np.array_equal(c.measurements, d.measurements)


def test_observe_matches_a_fresh_simulation():
    topo = load_case("toy5")
    loads = generate_loads(topo, 1, 5, slot_seconds=120.0, stress_fraction=1.0)
    base = simulate(topo, loads, SensorPlacement(topo.buses, 1.0), noise_std=0.0)
    sensors = place_sensors(topo, 0.4, 3)
    direct = simulate(topo, loads, sensors, seed=17)
    again = observe(base, topo, sensors, 17)
    assert np.array_equal(direct.measurements, again.measurements)
    assert direct.events == again.events and direct.sensor_buses == again.sensor_buses


def test_trace_csv_round_trip(tmp_path):
    topo = load_case("toy5")
    loads = generate_loads(topo, 1, 6, slot_seconds=300.0, stress_fraction=1.0)
    tr = simulate(topo, loads, place_sensors(topo, 0.4, 1), seed=3)
    assert tr.to_csv().splitlines()[0] == "slot,bus,vm,va,p,q"
    (tmp_path / "t.csv").write_text(tr.to_csv())
    (tmp_path / "e.json").write_text(tr.events_json())
    back = read_trace(tmp_path / "t.csv", tmp_path / "e.json", topo.candidate_lines)
    assert np.array_equal(back.measurements, tr.measurements)
    assert back.events == tr.events and back.sensor_buses == tr.sensor_buses


def test_trace_csv_with_gaps_is_rejected(tmp_path):
    (tmp_path / "t.csv").write_text("slot,bus,vm,va,p,q\n0,1,1,0,0,0\n0,2,1,0,0,0\n1,1,1,0,0,0\n")
    (tmp_path / "e.json").write_text("[]")
    with pytest.raises(ValueError, match="gaps"):
        read_trace(tmp_path / "t.csv", tmp_path / "e.json", [1])


@given(st.lists(st.lists(st.booleans(), min_size=3, max_size=3), min_size=0, max_size=40),
       st.lists(st.integers(0, 20), min_size=3, max_size=3))
def test_run_lengths_match_a_loop(rows, carry):
    over = np.array(rows, dtype=bool).reshape(len(rows), 3)
    got = _run_lengths(over, np.array(carry))
    count = list(carry)
    for t in range(len(rows)):
        for j in range(3):
            count[j] = count[j] + 1 if over[t, j] else 0
            assert got[t, j] == count[j]
