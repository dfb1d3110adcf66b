import pytest

from vnlsim.simcore import SchedulingError, Simulator, TraceRow, UnknownStreamError, format_detail


def kinds(sim):
    return [r.event_kind for r in sim.trace]


def test_equal_times_run_in_insertion_order():
    sim = Simulator()
    sim.schedule("X", {}, 5.0)
    sim.schedule("Y", {}, 5.0)
    sim.run()
    assert kinds(sim) == ["X", "Y"]


def test_schedule_in_past_is_rejected_and_names_the_time():
    sim = Simulator()
    sim.schedule("tick", {}, 4.0)
    sim.run()
    assert sim.now == 4.0
    with pytest.raises(SchedulingError, match="3.0"):
        sim.schedule("X", {}, 3.0)


def test_run_leaves_clock_at_last_event():
    sim = Simulator()
    sim.schedule("X", {}, 1.0)
    assert sim.run() == 1
    assert sim.now == 1.0


def test_run_until_with_no_events_advances_clock():
    sim = Simulator()
    assert sim.run_until(7.5) == 0
    assert sim.now == 7.5


def test_run_until_stops_at_horizon():
    sim = Simulator()
    for t in (1.0, 2.0, 3.0):
        sim.schedule("e", {"t": t}, t)
    assert sim.run_until(2.0) == 2
    assert [e.time for e in sim.pending()] == [3.0]


def test_follow_up_scheduled_by_handler_runs_in_order():
    sim = Simulator()
    sim.on("first", lambda s, ev: s.schedule("second", {}, 1.5))
    sim.schedule("first", {}, 1.0)
    sim.schedule("late", {}, 3.0)
    assert sim.run_until(2.0) == 2
    assert kinds(sim) == ["first", "second"]
    assert [r.time for r in sim.trace] == [1.0, 1.5]


def test_event_row_takes_node_from_payload():
    sim = Simulator()
    sim.schedule("ping", {"node": "n1", "size": 3, "ok": True, "x": 0.5}, 0.0)
    sim.schedule("pong", {}, 0.0)
    sim.run()
    assert sim.trace[0] == TraceRow(0.0, "n1", "ping", "size=3 ok=1 x=0.500000")
    assert sim.trace[1].node == "-"


def test_handler_log_rows_follow_event_row():
    sim = Simulator()
    sim.on("a", lambda s, ev: s.log("n", "note", v=None))
    sim.schedule("a", {}, 2.0)
    sim.run()
    assert [(r.event_kind, r.detail) for r in sim.trace] == [("a", ""), ("note", "v=-")]


def test_trace_order_is_total():
    sim = Simulator(3)
    rng = sim.register_stream("times")
    for _ in range(200):
        sim.schedule("e", {}, round(rng.random() * 10, 1))
    sim.run()
    times = [r.time for r in sim.trace]
    assert times == sorted(times)
    assert len(times) == 200


def test_streams_are_deterministic():
    a, b = Simulator(42), Simulator(42)
    for s in (a, b):
        s.register_stream("mobility")
    assert [a.draw_uniform("mobility") for _ in range(50)] == [b.draw_uniform("mobility") for _ in range(50)]


def test_streams_are_independent_of_interleaving():
    a, b = Simulator(9), Simulator(9)
    for s in (a, b):
        s.register_stream("mobility")
        s.register_stream("radio")
    mob_a = [a.draw_uniform("mobility") for _ in range(20)]
    rad_a = [a.draw_uniform("radio") for _ in range(20)]
    mob_b, rad_b = [], []
    for _ in range(20):
        rad_b.append(b.draw_uniform("radio"))
        mob_b.append(b.draw_uniform("mobility"))
    assert mob_a == mob_b and rad_a == rad_b


def test_different_seeds_differ():
    a, b = Simulator(1), Simulator(2)
    a.register_stream("s")
    b.register_stream("s")
    assert a.draw_uniform("s") != b.draw_uniform("s")


def test_uniform_mean_is_sane():
    sim = Simulator(123)
    sim.register_stream("u")
    draws = [sim.draw_uniform("u") for _ in range(10_000)]
    assert all(0.0 <= x < 1.0 for x in draws)
    assert 0.45 <= sum(draws) / len(draws) <= 0.55


def test_unknown_stream_raises():
    with pytest.raises(UnknownStreamError):
        Simulator().draw_uniform("nope")


def test_format_detail():
    assert format_detail({"a": 1, "b": 2.0, "c": "x"}) == "a=1 b=2.000000 c=x"
