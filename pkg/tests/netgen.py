"""Random valid network topologies for property and safety tests.

Networks are built in topological order, so all internal wiring points
forward: every node's inbound lanes come either from a fresh entry or from
an earlier node's output pool, every leftover output becomes a network exit.
A slice of lanes gets two-way exit splits to exercise the turn-draw path.
"""

from __future__ import annotations

import random

from hcasim import (
    IntersectionDescriptor,
    LaneDescriptor,
    NetworkTopology,
    SimConfig,
    derive_compatibility,
)


def random_topology(seed: int, v_max: int = 2) -> NetworkTopology:
    rng = random.Random(seed)
    n_nodes = rng.randint(1, 4)
    lengths: list[int] = []
    upstream: list[int | None] = []
    downstream: list[int | None] = []
    exit_lists: list[list[tuple[int, float]]] = []
    entries: list[tuple[int, int]] = []
    nodes: list[tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]] = []

    def new_lane(up: int | None) -> int:
        lengths.append(rng.randint(5, 25))
        upstream.append(up)
        downstream.append(None)
        exit_lists.append([])
        return len(lengths) - 1

    dangling: list[int] = []  # outputs of earlier nodes still unattached
    for i in range(n_nodes):
        inbound: list[int] = []
        for _ in range(rng.randint(2, 3)):
            if dangling and rng.random() < 0.6:
                li = dangling.pop(rng.randrange(len(dangling)))
            else:
                li = new_lane(None)
                entries.append((li, 0))
            downstream[li] = i
            inbound.append(li)
        # each inbound lane continues onto one or two fresh output lanes
        for li in inbound:
            if rng.random() < 0.3:
                a, b = new_lane(i), new_lane(i)
                w = rng.choice((0.3, 0.5, 0.7))
                exit_lists[li] = [(a, w), (b, round(1.0 - w, 10))]
                dangling += [a, b]
            else:
                a = new_lane(i)
                exit_lists[li] = [(a, 1.0)]
                dangling.append(a)
        inbound_t = tuple(inbound)
        if len(inbound) == 2:
            phases = ((inbound[0],), (inbound[1],))
        elif rng.random() < 0.5:
            phases = ((inbound[0],), (inbound[1], inbound[2]))
        else:
            phases = ((inbound[0], inbound[1]), (inbound[2],))
        nodes.append((inbound_t, phases))

    lanes = tuple(
        LaneDescriptor(
            length=lengths[li],
            upstream=upstream[li],
            downstream=downstream[li],
            exits=tuple(exit_lists[li]),
        )
        for li in range(len(lengths))
    )
    topo = NetworkTopology(
        lanes=lanes,
        intersections=tuple(
            IntersectionDescriptor(inbound_lanes=inb, phases=ph) for inb, ph in nodes
        ),
        entry_points=tuple(entries),
    )
    return derive_compatibility(topo, v_max)


def random_config(seed: int, horizon: int = 200) -> SimConfig:
    rng = random.Random(seed ^ 0x5EED)
    v_max = rng.choice((1, 2, 3))
    return SimConfig(
        topology=random_topology(seed, v_max),
        v_max=v_max,
        p=rng.choice((0.0, 0.1, 0.2, 0.5)),
        q=rng.choice((0.05, 0.2, 0.4)),
        alpha=rng.choice((0.0, 0.5, 1.0, 2.0)),
        strategy=rng.choice(("hca", "backpressure")),
        horizon=horizon,
        seed=seed,
    )
