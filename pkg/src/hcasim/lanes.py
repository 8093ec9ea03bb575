"""Lane-level aggregation: occupancy, differential backlog, signal bits."""

from __future__ import annotations

from typing import Sequence

from .model import LaneState, Level1State, NetworkTopology


def compute_occupancy(state: Level1State) -> list[int]:
    """Vehicles currently on each lane."""
    return [len(lst) for lst in state.lane_vehicles]


def compute_backlog(occupancy: Sequence[int], topology: NetworkTopology) -> list[float]:
    """Differential backlog per lane.

    A lane's backlog is the exit-weighted sum of its occupancy surplus over
    each successor lane; lanes leaving the network have no successors and
    carry a backlog of zero.
    """
    out: list[float] = []
    for li, lane in enumerate(topology.lanes):
        o_l = occupancy[li]
        out.append(sum(w * (o_l - occupancy[t]) for t, w in lane.exits))
    return out


def apply_signal_indications(phases: Sequence[int], topology: NetworkTopology) -> list[int]:
    """Green/red bit per lane under the given active phase of each intersection.

    Lanes that leave the network have no signal and always read green.
    """
    gamma = [1] * len(topology.lanes)
    for li, lane in enumerate(topology.lanes):
        node = lane.downstream
        if node is not None:
            active = topology.intersections[node].phases[phases[node]]
            gamma[li] = 1 if li in active else 0
    return gamma


def lane_states(
    occupancy: Sequence[int], backlog: Sequence[float], gamma: Sequence[int]
) -> list[LaneState]:
    """Zip the three per-lane series into state records."""
    return [LaneState(o, d, g) for o, d, g in zip(occupancy, backlog, gamma)]
