import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aomrlm.engine import EventKind, RngStreams, SchedulingError, Simulator


def recording_sim():
    sim = Simulator()
    log = []
    for kind in EventKind:
        sim.on(kind, lambda e, log=log, sim=sim: log.append((sim.now, e.payload)))
    return sim, log


def test_event_at_now_fires_before_later():
    sim, log = recording_sim()
    sim.schedule(2.0, EventKind.TIMER_FIRE, payload="later")
    sim.schedule(0.0, EventKind.TIMER_FIRE, payload="now")
    sim.run(5.0)
    assert [p for _, p in log] == ["now", "later"]


def test_equal_times_fire_in_insertion_order():
    sim, log = recording_sim()
    for name in "abcde":
        sim.schedule(1.0, EventKind.PACKET_DELIVERY, payload=name)
    sim.run(1.0)
    assert "".join(p for _, p in log) == "abcde"


def test_past_event_is_an_error():
    sim, _ = recording_sim()
    sim.run(3.0)
    with pytest.raises(SchedulingError):
        sim.schedule(2.0, EventKind.TIMER_FIRE)


def test_empty_run_advances_clock():
    sim = Simulator()
    sim.run(7.5)
    assert sim.now == 7.5 and sim.dispatched == 0


def test_hello_chain_fires_five_times():
    sim = Simulator()
    fires = []

    def hello(event):
        fires.append(sim.now)
        sim.schedule_in(1.0, EventKind.TIMER_FIRE)

    sim.on(EventKind.TIMER_FIRE, hello)
    sim.schedule(1.0, EventKind.TIMER_FIRE)
    sim.run(5.0)
    assert fires == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_events_beyond_until_stay_queued():
    sim, log = recording_sim()
    sim.schedule(1.0, EventKind.TIMER_FIRE, payload=1)
    sim.schedule(9.0, EventKind.TIMER_FIRE, payload=9)
    sim.run(5.0)
    assert len(log) == 1 and len(sim) == 1
    sim.run(10.0)
    assert [p for _, p in log] == [1, 9]


def test_queue_matches_sorted_list_oracle():
    rng = random.Random(2024)
    for _ in range(1000):
        sim, log = recording_sim()
        times = [rng.choice([0.0, 0.5, 1.0, rng.uniform(0, 10)]) for _ in range(rng.randint(1, 30))]
        for i, t in enumerate(times):
            sim.schedule(t, rng.choice(list(EventKind)), payload=i)
        sim.run(10.0)
        oracle = [i for _, i in sorted((t, i) for i, t in enumerate(times))]
        assert [p for _, p in log] == oracle


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 5)), max_size=40), st.floats(0, 120))
def test_clock_monotone_and_nothing_skipped(plan, until):
    sim = Simulator()
    seen = []

    def handler(event):
        assert not seen or sim.now >= seen[-1][0]
        seen.append((sim.now, event.sequence))
        if event.payload:
            sim.schedule_in(event.payload, EventKind.TIMER_FIRE, payload=0.0)

    sim.on(EventKind.TIMER_FIRE, handler)
    for t, child in plan:
        sim.schedule(t, EventKind.TIMER_FIRE, payload=child)
    sim.run(until)
    sequences = [s for _, s in seen]
    assert len(sequences) == len(set(sequences))
    assert all(e[0] > until for e in sim._queue)


def test_rng_streams_are_reproducible_and_independent():
    a, b = RngStreams(5), RngStreams(5)
    assert [a.stream("mobility", 3).random() for _ in range(5)] == [b.stream("mobility", 3).random() for _ in range(5)]
    # drawing from one stream leaves another untouched
    c = RngStreams(5)
    c.stream("traffic").random()
    assert c.stream("topology").random() == RngStreams(5).stream("topology").random()
    assert RngStreams(5).stream("mac").random() != RngStreams(6).stream("mac").random()
    assert RngStreams(5).stream("mobility", 1).random() != RngStreams(5).stream("mobility", 2).random()
