import os

import pytest
from hypothesis import HealthCheck, settings

from aomrlm.scenario import Scenario
from aomrlm.simulation import Network
from aomrlm.world import Position

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


class FakeNet:
    """Records everything a router asks of the network; nothing is delivered."""

    def __init__(self, energies=None, default_energy=30.0):
        self.now = 0.0
        self.energies = dict(energies or {})
        self.default_energy = default_energy
        self.sent = []  # (sender, target or None, message)
        self.timers = []  # (node, delay, kind, data)
        self.delivered = []
        self.events = []

    def residual(self, node):
        return self.energies.get(node, self.default_energy)

    def broadcast(self, sender, message):
        self.sent.append((sender, None, message))

    def unicast(self, sender, target, message):
        self.sent.append((sender, target, message))

    def set_timer(self, node, delay, kind, data):
        self.timers.append((node, delay, kind, data))

    def data_delivered(self, packet):
        self.delivered.append(packet)

    def observe(self, name, **fields):
        self.events.append((name, fields))

    def take(self):
        out, self.sent = self.sent, []
        return out


def static_network(points, energies, protocol="aomr-lm", flows=(), hello=True, seed=0,
                   instrument=True, **overrides):
    """A motionless network at fixed positions; no random flows unless given."""
    scenario = Scenario(max_speed=0.0, flows="random:0", **overrides)
    return Network(
        scenario, len(points), seed, protocol,
        flows=list(flows), positions=[Position(*p) for p in points], energies=list(energies),
        instrument=instrument, hello=hello,
    )


@pytest.fixture
def fake_net():
    return FakeNet()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
