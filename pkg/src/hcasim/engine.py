"""Run loop tying the three model levels together.

Step order, fixed by contract:

1. arrivals are drawn and placed, then every vehicle moves synchronously
   under the signal indications chosen at the end of the previous step;
2. lane occupancy and differential backlog are recomputed;
3. every intersection selects its next phase from the fresh backlogs and the
   previous step's neighbor states;
4. the chosen phases are written back to per-lane signal indications.

Stop delay then accumulates: one unit per vehicle standing still at the end
of the step, not counting vehicles placed this step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Sequence

from .lanes import apply_signal_indications, compute_backlog, compute_occupancy, lane_states
from .model import (
    ConfigError,
    IntersectionState,
    LaneState,
    Level1State,
    SimConfig,
    SimulationError,
    check_level1,
    config_digest,
    validate_topology,
)
from .model import NetworkTopology
from .signals import controller_strategy
from .vehicles import InjectionProcess, RngStream, advance_all


def trace_columns(topology: NetworkTopology) -> tuple[str, ...]:
    """Header of the per-step trace: step, each intersection's active phase,
    each lane's occupancy / backlog / signal indication, stopped count."""
    cols = ["step"]
    cols += [f"pi_{i}" for i in range(topology.n_intersections)]
    cols += [f"o_{l}" for l in range(topology.n_lanes)]
    cols += [f"delta_{l}" for l in range(topology.n_lanes)]
    cols += [f"gamma_{l}" for l in range(topology.n_lanes)]
    cols.append("stopped")
    return tuple(cols)


@dataclass(frozen=True)
class MetricsRecord:
    """End-of-run summary of one simulation."""

    total_stop_delay: int
    vehicles_injected: int
    vehicles_removed: int
    vehicles_in_network: int
    horizon: int
    seed: int
    config_digest: str


def count_stopped(
    state: Level1State,
    window: int | None = None,
    exclude_ids: frozenset[int] = frozenset(),
) -> int:
    """Vehicles standing still, optionally only within the last ``window``
    cells of each lane, skipping the given (freshly injected) ids."""
    total = 0
    for li, lst in enumerate(state.lane_vehicles):
        if window is not None:
            cutoff = state.lane_lengths[li] - window
            if exclude_ids:
                total += sum(
                    1
                    for v in lst
                    if v.speed == 0 and v.cell >= cutoff and v.id not in exclude_ids
                )
            else:
                total += sum(1 for v in lst if v.speed == 0 and v.cell >= cutoff)
        elif exclude_ids:
            total += sum(1 for v in lst if v.speed == 0 and v.id not in exclude_ids)
        else:
            total += sum(1 for v in lst if v.speed == 0)
    return total


class Simulation:
    """Owns the mutable state of one run and advances it step by step."""

    def __init__(self, config: SimConfig, check_invariants: bool = False):
        report = validate_topology(config.topology)
        if report:
            raise ConfigError("invalid topology: " + "; ".join(report))
        if config.strategy == "fixed_time":
            split = config.fixed_time_split or ()
            for ii, node in enumerate(config.topology.intersections):
                if all(split[j % len(split)] == 0 for j in range(len(node.phases))):
                    raise ConfigError(
                        f"intersection {ii}: fixed_time_split leaves every phase at zero"
                    )
        self.config = config
        self.topology = config.topology
        self.check_invariants = check_invariants
        self.state = Level1State.empty(config.topology)
        self.rng = RngStream(config.seed)
        self.injector = InjectionProcess(config.topology, config.resolved_intensities())
        self.selector = controller_strategy(config)
        self.node_states = [
            IntersectionState(0, 0) for _ in config.topology.intersections
        ]
        self.gamma = apply_signal_indications(
            [st.pi for st in self.node_states], config.topology
        )
        self.occupancy = compute_occupancy(self.state)
        self.backlog = compute_backlog(self.occupancy, config.topology)
        self.t = 0
        self.total_stop_delay = 0
        self.removed_total = 0
        self.last_stopped = 0

    def step(self) -> None:
        cfg = self.config
        placed = self.injector.inject(self.state, self.rng)
        removed = advance_all(
            self.state, self.topology, self.gamma, cfg.v_max, cfg.p, self.rng
        )
        self.removed_total += len(removed)

        self.occupancy = compute_occupancy(self.state)
        self.backlog = compute_backlog(self.occupancy, self.topology)

        self.node_states = self.selector.select(
            self.topology, self.backlog, self.node_states
        )
        self.gamma = apply_signal_indications(
            [st.pi for st in self.node_states], self.topology
        )

        self.last_stopped = count_stopped(
            self.state, cfg.stop_window, frozenset(placed) if placed else frozenset()
        )
        self.total_stop_delay += self.last_stopped
        self.t += 1
        if self.check_invariants:
            self._verify()

    def _verify(self) -> None:
        report = check_level1(self.state, self.topology, self.config.v_max)
        injected = self.injector.total_injected
        on_road = self.state.vehicle_count
        if injected != self.removed_total + on_road:
            report.append(
                f"conservation: injected {injected} != removed {self.removed_total} "
                f"+ on-road {on_road}"
            )
        for ii, st in enumerate(self.node_states):
            if not 0 <= st.pi < len(self.topology.intersections[ii].phases):
                report.append(f"intersection {ii}: active phase {st.pi} out of range")
            if st.tau < 0:
                report.append(f"intersection {ii}: negative elapsed time {st.tau}")
        if report:
            raise SimulationError(f"step {self.t}: " + "; ".join(report))

    def lane_states(self) -> list[LaneState]:
        return lane_states(self.occupancy, self.backlog, self.gamma)

    def metrics(self) -> MetricsRecord:
        return MetricsRecord(
            total_stop_delay=self.total_stop_delay,
            vehicles_injected=self.injector.total_injected,
            vehicles_removed=self.removed_total,
            vehicles_in_network=self.state.vehicle_count,
            horizon=self.t,
            seed=self.config.seed,
            config_digest=config_digest(self.config),
        )


def _write_trace_row(writer, sim: Simulation) -> None:
    # Fixed decimal formatting keeps traces byte-comparable across platforms.
    row: list[str] = [str(sim.t)]
    row += [str(st.pi) for st in sim.node_states]
    row += [str(o) for o in sim.occupancy]
    row += [f"{d:.6f}" for d in sim.backlog]
    row += [str(g) for g in sim.gamma]
    row.append(str(sim.last_stopped))
    writer.writerow(row)


def run(
    config: SimConfig,
    trace: str | IO[str] | None = None,
    check_invariants: bool = False,
) -> MetricsRecord:
    """Run a configuration to its horizon; optionally write a per-step trace CSV."""
    sim = Simulation(config, check_invariants=check_invariants)
    if trace is None:
        for _ in range(config.horizon):
            sim.step()
        return sim.metrics()

    own = isinstance(trace, str)
    fh: IO[str] = open(trace, "w", newline="") if own else trace  # type: ignore[assignment]
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_columns(sim.topology))
        for _ in range(config.horizon):
            sim.step()
            _write_trace_row(writer, sim)
    finally:
        if own:
            fh.close()
    return sim.metrics()
