"""Deterministic discrete-event simulator for clone detection on a ring road.

Every run is a pure function of its :class:`SimConfig`. Independent random
streams (topology, mobility, keys, adversary, channel, protocol) are spawned
from one seed so adding draws in one subsystem never perturbs another.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import baselines
from .field_poly import DEFAULT_MODULUS
from .generations import GenerationClock
from .keying import KeyShare
from .station import AdmissionRejected, AdmissionRequest, KeyResponse, RegistryEntry, ReplicaAlert, Station, hello_response

STATION = -1
PROTOCOLS = ("ppp", "broadcast", "rmulticast")
ADVERSARY_MODES = ("identity", "stolen-key")
PLACEMENTS = ("random", "far")

MESSAGE_SIZES = {
    "Hello": 32,
    "KeyRequest": 40,
    "KeyResponse": 40,
    "Claim": 48,
    "ForwardClaim": 48,
    "Alert": 24,
    "LeaderAnnounce": 16,
}


class ConfigError(ValueError):
    pass


# -- topology -------------------------------------------------------------------


@dataclass(frozen=True)
class Topology:
    n: int
    target_degree_D: int
    diameter_s: int
    adjacency: tuple[tuple[int, ...], ...]
    positions: np.ndarray = field(repr=False, compare=False)
    radius: float = 0.0
    road_length: float = 10_000.0

    @property
    def mean_degree(self) -> float:
        return sum(len(a) for a in self.adjacency) / self.n if self.n else 0.0


def adjacency_within(positions: np.ndarray, radius: float, road_length: float) -> tuple[tuple[int, ...], ...]:
    d = baselines.ring_distance(positions[:, None], positions[None, :], road_length)
    close = d <= radius
    np.fill_diagonal(close, False)
    return tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in close)


def diameter(adjacency) -> int:
    n = len(adjacency)
    if n <= 1:
        return 0
    rows = [i for i, nbrs in enumerate(adjacency) for _ in nbrs]
    cols = [j for nbrs in adjacency for j in nbrs]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    dist = shortest_path(graph, unweighted=True, directed=False)
    if np.isinf(dist).any():
        raise ValueError("graph is disconnected")
    return int(dist.max())


def _connecting_radius(positions: np.ndarray, road_length: float) -> float:
    """Smallest radius that connects points on a ring: all gaps but the largest are bridged."""
    if len(positions) < 2:
        return 0.0
    p = np.sort(positions)
    gaps = np.diff(np.concatenate([p, [p[0] + road_length]]))
    return float(np.sort(gaps)[-2]) if len(gaps) > 1 else 0.0


def place_nodes(n: int, rng: np.random.Generator, road_length: float) -> np.ndarray:
    """Stratified placement: one node uniform in each of n equal cells, cells shuffled over slots.

    Plain uniform placement leaves a largest gap near L*ln(n)/n, which beats
    the degree-tuned radius once n is a few hundred; stratifying caps it at 2L/n.
    """
    cell = road_length / n
    positions = (np.arange(n) + rng.uniform(0.0, 1.0, size=n)) * cell
    return positions[rng.permutation(n)]


def build_topology(n: int, target_degree_D: int, seed: int, road_length: float = 10_000.0) -> Topology:
    """Stratified placement on a ring road with the radio radius tuned to the target mean degree.

    The radius is the k-th smallest pairwise distance with k = round(D*n/2),
    which gives mean degree 2k/n; it is then raised to the connecting
    radius if that is larger.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if target_degree_D < 0 or (n > 1 and target_degree_D >= n) or (n == 1 and target_degree_D > 0):
        raise ConfigError(f"degree {target_degree_D} impossible with {n} nodes")
    rng = np.random.default_rng(seed)
    return topology_from_positions(place_nodes(n, rng, road_length), target_degree_D, road_length)


def topology_from_positions(positions: np.ndarray, target_degree_D: int, road_length: float) -> Topology:
    n = len(positions)
    radius = 0.0
    if n > 1:
        d = baselines.ring_distance(positions[:, None], positions[None, :], road_length)
        pair_d = np.sort(d[np.triu_indices(n, 1)])
        k = int(round(target_degree_D * n / 2))
        if k > 0:
            radius = float(pair_d[min(k, len(pair_d)) - 1])
        radius = max(radius, _connecting_radius(positions, road_length))
    adjacency = adjacency_within(positions, radius, road_length)
    return Topology(n, target_degree_D, diameter(adjacency), adjacency, positions.copy(), radius, road_length)


# -- node state and mobility ------------------------------------------------------


@dataclass(frozen=True)
class NodeState:
    id: int
    position: float
    velocity: float
    group: int = 0
    permission: int = 0
    share: Optional[KeyShare] = None
    generation_index: Optional[int] = None
    is_clone: bool = False
    clone_of: Optional[int] = None

    def __post_init__(self):
        if self.is_clone and (self.clone_of is None or self.clone_of != self.id):
            raise ValueError("a clone must carry its victim's id")


def step_mobility(state: NodeState, dt: int, road_length: float) -> NodeState:
    return dataclasses.replace(state, position=(state.position + state.velocity * dt) % road_length)


# -- configuration and trace -------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    degree_D: int = 8
    ticks: int = 100
    load: float = 0.0
    channel_capacity: float = 1.0
    clone_count: int = 0
    clone_injection_tick: int = 30
    protocol: str = "ppp"
    seed: int = 0
    degree_t: int = 2
    modulus_Q: int = DEFAULT_MODULUS
    generation_period: int = 20
    generations: int = 1
    round_ticks: int = 10
    road_length: float = 10_000.0
    v_min: float = 10.0
    v_max: float = 30.0
    witness_count: Optional[int] = None
    r_conflict: Optional[float] = None
    adversary: str = "identity"
    clone_placement: str = "random"
    key_ttl: Optional[int] = None
    hello_fanout: int = 2
    clone_join_attempts: int = 1
    audit_keys: bool = False

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.adversary not in ADVERSARY_MODES:
            raise ConfigError(f"unknown adversary mode {self.adversary!r}")
        if self.clone_placement not in PLACEMENTS:
            raise ConfigError(f"unknown clone placement {self.clone_placement!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.degree_D < 0 or (self.n > 1 and self.degree_D >= self.n):
            raise ConfigError(f"degree {self.degree_D} impossible with {self.n} nodes")
        for name in ("ticks", "clone_count", "clone_injection_tick", "degree_t"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("generation_period", "generations", "round_ticks", "clone_join_attempts"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.load < 0 or self.channel_capacity <= 0:
            raise ConfigError("load must be >= 0 and channel_capacity > 0")
        if self.road_length <= 0 or not 0 <= self.v_min <= self.v_max:
            raise ConfigError("bad road length or velocity range")
        if self.witness_count is not None and self.witness_count < 1:
            raise ConfigError("witness_count must be >= 1")
        if self.hello_fanout < 1:
            raise ConfigError("hello_fanout must be >= 1")


@dataclass
class Trace:
    config: SimConfig
    events: list[tuple[int, str]] = field(default_factory=list)
    per_tick: list[tuple[int, int, int, int]] = field(default_factory=list)
    sent_by_kind: dict[str, int] = field(default_factory=dict)
    messages_sent: int = 0
    messages_delivered: int = 0
    messages_dropped: int = 0
    protocol_messages: int = 0
    transmissions: int = 0
    bytes_total: int = 0
    node_peak_memory: list[int] = field(default_factory=list)
    station_peak_entries: int = 0
    alerts: list[tuple[int, int, str]] = field(default_factory=list)
    clones: list[tuple[int, int]] = field(default_factory=list)
    diameter_s: int = 0
    mean_degree: float = 0.0
    key_pairs_checked: int = 0
    key_violations: int = 0

    def log(self, tick: int, text: str) -> None:
        self.events.append((tick, text))

    def to_text(self) -> str:
        lines = [f"{t}\t{e}" for t, e in self.events]
        lines += [f"tick\t{t}\t{s}\t{d}\t{x}" for t, s, d, x in self.per_tick]
        lines += [f"alert\t{t}\t{s}\t{r}" for s, t, r in self.alerts]
        lines.append(
            f"totals\t{self.messages_sent}\t{self.messages_delivered}\t{self.messages_dropped}"
            f"\t{self.transmissions}\t{self.bytes_total}"
        )
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # -- derived outcomes --

    def first_alerts(self) -> dict[int, int]:
        first: dict[int, int] = {}
        for suspect, tick, _ in self.alerts:
            first.setdefault(suspect, tick)
        return first

    def detections(self) -> dict[int, Optional[int]]:
        """Victim id -> detection latency in ticks (None if missed)."""
        hits: dict[int, Optional[int]] = {}
        for victim, inject_tick in self.clones:
            latency = None
            for suspect, tick, _ in self.alerts:
                if suspect == victim and tick >= inject_tick:
                    latency = tick - inject_tick
                    break
            hits[victim] = latency
        return hits

    @property
    def clones_injected(self) -> int:
        return len(self.clones)

    @property
    def clones_detected(self) -> int:
        return sum(v is not None for v in self.detections().values())

    @property
    def mean_detection_latency(self) -> float:
        lat = [v for v in self.detections().values() if v is not None]
        return sum(lat) / len(lat) if lat else -1.0

    @property
    def false_positives(self) -> int:
        cloned = {v: t for v, t in self.clones}
        wrong = {
            s for s, t, _ in self.alerts if s not in cloned or t < cloned[s]
        }
        return len(wrong)

    @property
    def node_peak_memory_entries(self) -> int:
        return max(self.node_peak_memory, default=0)


# -- channel ----------------------------------------------------------------------


class Channel:
    """Shared medium with load-driven loss.

    Background traffic of ``load * n`` messages per tick contends for
    ``capacity * n`` slots. The saturated fraction ``max(0, 1 - capacity/load)``
    of everything offered in the tick is lost, each message independently,
    so causally chained protocol messages can be decided as they are sent.
    """

    def __init__(self, rng: np.random.Generator, load: float, capacity: float, n: int, trace: Trace):
        self.rng = rng
        self.load = load
        self.capacity = capacity
        self.n = n
        self.trace = trace
        self.loss = max(0.0, 1.0 - capacity / load) if load > 0 else 0.0
        self._tick = (0, 0, 0)

    def begin_tick(self) -> None:
        self._tick = [0, 0, 0]
        background = int(round(self.load * self.n))
        if background:
            dropped = int(self.rng.binomial(background, self.loss)) if self.loss else 0
            self._count(background, dropped)

    def end_tick(self, tick: int) -> None:
        self.trace.per_tick.append((tick, *self._tick))

    def _count(self, sent: int, dropped: int) -> None:
        self._tick[0] += sent
        self._tick[1] += sent - dropped
        self._tick[2] += dropped
        self.trace.messages_sent += sent
        self.trace.messages_delivered += sent - dropped
        self.trace.messages_dropped += dropped

    def deliver(self, count: int, kind: str) -> np.ndarray:
        if count == 0:
            return np.zeros(0, dtype=bool)
        if self.loss:
            mask = self.rng.random(count) >= self.loss
        else:
            mask = np.ones(count, dtype=bool)
        self._count(count, int(count - mask.sum()))
        self.trace.protocol_messages += count
        self.trace.sent_by_kind[kind] = self.trace.sent_by_kind.get(kind, 0) + count
        return mask

    def send(self, kind: str) -> bool:
        """One single-hop protocol message; accounts its transmission and bytes."""
        ok = bool(self.deliver(1, kind)[0])
        self.trace.transmissions += 1
        self.trace.bytes_total += MESSAGE_SIZES[kind]
        return ok


# -- simulation ---------------------------------------------------------------------


class Simulation:
    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.trace = Trace(config)
        seeds = np.random.SeedSequence(config.seed).spawn(6)
        topo_rng, self.mob_rng, key_rng, self.adv_rng, chan_rng, self.proto_rng = (
            np.random.default_rng(s) for s in seeds
        )
        n = config.n
        self.topology = topology_from_positions(
            place_nodes(n, topo_rng, config.road_length), config.degree_D, config.road_length
        )
        self.radius = self.topology.radius if self.topology.radius > 0 else config.road_length
        self.r_conflict = config.r_conflict if config.r_conflict is not None else 2.0 * self.radius
        self.trace.diameter_s = self.topology.diameter_s
        self.trace.mean_degree = self.topology.mean_degree

        self.ids: list[int] = list(range(1, n + 1))
        self.positions = self.topology.positions.copy()
        self.velocities = self.mob_rng.uniform(config.v_min, config.v_max, size=n)
        self.is_clone = [False] * n
        self.adjacency = self.topology.adjacency
        self.channel = Channel(chan_rng, config.load, config.channel_capacity, n, self.trace)

        self.clock = GenerationClock()
        self.station = Station(
            self.clock,
            config.degree_t,
            config.modulus_Q,
            seed=int(key_rng.integers(0, 2**63)),
            key_ttl=config.key_ttl,
            audit_keys=config.audit_keys,
        )
        self.generation_of_slot = [slot * config.generations // n for slot in range(n)]
        size = max(1, config.degree_t)
        self.group_of_slot = []
        for slot in range(n):
            gen = self.generation_of_slot[slot]
            first = next(s for s in range(n) if self.generation_of_slot[s] == gen)
            self.group_of_slot.append(gen * n + (slot - first) // size)
        self.nonces = [int(v) for v in key_rng.integers(0, 2**63, size=n)]
        self.shares: list[Optional[KeyShare]] = [None] * n
        self.verified: list[set[int]] = [set() for _ in range(n)]
        self.claim_tables: list[dict] = [{} for _ in range(n)]
        self.witness_tables: list[dict] = [{} for _ in range(n)]
        self.peak_memory = [0] * n
        self.clone_attempts: dict[int, int] = {}
        self.pending: dict[int, int] = {}
        self.g = config.witness_count or baselines.default_witness_count(n)
        self.trace.log(
            0,
            f"topology n={n} D={config.degree_D} s={self.topology.diameter_s} "
            f"radius={self.radius:.3f} mean_degree={self.topology.mean_degree:.3f}",
        )

    # -- public helpers --

    def node_state(self, slot: int) -> NodeState:
        node_id = self.ids[slot]
        gen = self.generation_of_slot[slot] if slot < self.config.n else self._victim_generation(node_id)
        return NodeState(
            id=node_id,
            position=float(self.positions[slot]),
            velocity=float(self.velocities[slot]),
            group=self._group_of(slot) if slot < self.config.n else 0,
            share=self.shares[slot],
            generation_index=gen,
            is_clone=self.is_clone[slot],
            clone_of=node_id if self.is_clone[slot] else None,
        )

    def inject_clone(self, victim: int, tick: int, position: Optional[float] = None) -> NodeState:
        if victim not in self.ids[: self.config.n]:
            raise KeyError(f"unknown victim {victim}")
        victim_slot = victim - 1
        L = self.config.road_length
        if position is None:
            if self.config.clone_placement == "far":
                offset = L / 2 + self.adv_rng.uniform(-L / 4, L / 4)
                position = (self.positions[victim_slot] + offset) % L
            else:
                position = self.adv_rng.uniform(0.0, L)
        velocity = self.adv_rng.uniform(self.config.v_min, self.config.v_max)
        self.ids.append(victim)
        self.positions = np.append(self.positions, position % L)
        self.velocities = np.append(self.velocities, velocity)
        self.is_clone.append(True)
        share = self.shares[victim_slot] if self.config.adversary == "stolen-key" else None
        self.shares.append(share)
        self.verified.append(set())
        self.claim_tables.append({})
        self.witness_tables.append({})
        self.peak_memory.append(0)
        self.trace.clones.append((victim, tick))
        self.trace.log(tick, f"inject clone of {victim} at {position % L:.3f} mode={self.config.adversary}")
        return self.node_state(len(self.ids) - 1)

    # -- run --

    def run(self) -> Trace:
        cfg = self.config
        for tick in range(cfg.ticks):
            self.channel.begin_tick()
            if tick > 0:
                self.positions = (self.positions + self.velocities) % cfg.road_length
                if tick % cfg.round_ticks == 0:
                    self._refresh()
            if cfg.protocol == "ppp":
                self._ppp_station_tick(tick)
            if tick == cfg.clone_injection_tick and cfg.clone_count:
                self._inject_clones(tick)
                self._refresh()
            if cfg.protocol == "ppp":
                self._ppp_tick(tick)
            elif tick % cfg.round_ticks == 0:
                if cfg.protocol == "broadcast":
                    self._broadcast_round(tick)
                else:
                    self._multicast_epoch(tick)
            self.channel.end_tick(tick)
        if cfg.protocol == "ppp":
            if cfg.audit_keys:
                for gen in self.clock.generations:
                    if not gen.erased:
                        self.station.audit_generation(gen.index)
            self.trace.station_peak_entries = self.station.peak_entries
            self.trace.key_pairs_checked = self.station.key_pairs_checked
            self.trace.key_violations = self.station.key_violations
        honest = [p for p, c in zip(self.peak_memory, self.is_clone) if not c]
        self.trace.node_peak_memory = honest
        return self.trace

    def _refresh(self) -> None:
        self.adjacency = adjacency_within(self.positions, self.radius, self.config.road_length)
        for v, nbrs in enumerate(self.adjacency):
            if self.verified[v]:
                self.verified[v] &= set(nbrs)

    def _record_memory(self) -> None:
        cfg = self.config
        for v in range(len(self.ids)):
            if cfg.protocol == "ppp":
                mem = (cfg.degree_t + 1 if self.shares[v] is not None else 0) + len(self.verified[v])
            elif cfg.protocol == "broadcast":
                mem = len(self.claim_tables[v])
            else:
                mem = sum(len(b) for b in self.witness_tables[v].values())
            if mem > self.peak_memory[v]:
                self.peak_memory[v] = mem

    def _inject_clones(self, tick: int) -> None:
        cfg = self.config
        if cfg.protocol == "ppp":
            eligible = [
                node_id
                for node_id in self.ids[: cfg.n]
                if node_id in self.station.registry and not self.station.registry[node_id].revoked
            ]
        else:
            eligible = list(self.ids[: cfg.n])
        count = min(cfg.clone_count, len(eligible))
        if count == 0:
            return
        victims = sorted(int(v) for v in self.adv_rng.choice(eligible, size=count, replace=False))
        for victim in victims:
            self.inject_clone(victim, tick)
            self.clone_attempts[len(self.ids) - 1] = 0

    # -- PPP ------------------------------------------------------------------

    def _group_of(self, slot: int) -> int:
        return self.group_of_slot[slot]

    def _victim_generation(self, node_id: int) -> Optional[int]:
        entry = self.station.registry.get(node_id)
        return entry.generation_index if entry is not None else None

    def _ppp_station_tick(self, tick: int) -> None:
        cfg = self.config
        self.clock.advance(tick)
        for index in self.station.close_expired():
            self.trace.log(tick, f"erase generation {index}")
        if tick % cfg.generation_period == 0 and tick // cfg.generation_period < cfg.generations:
            index = self.station.open_generation(cfg.generation_period)
            self.trace.log(tick, f"open generation {index} window [{tick},{tick + cfg.generation_period})")
            members = [s for s in range(cfg.n) if self.generation_of_slot[s] == index]
            size = max(1, cfg.degree_t)
            for k, start in enumerate(range(0, len(members), size)):
                group = members[start : start + size]
                first = tick + k % cfg.generation_period
                for slot in group:
                    self.pending[slot] = first

    def _admission_request(self, slot: int, tick: int) -> AdmissionRequest:
        return AdmissionRequest(
            node=self.ids[slot],
            position=float(self.positions[slot]),
            tick=tick,
            group=self._group_of(slot),
            generation=self.generation_of_slot[slot],
            nonce=self.nonces[slot],
        )

    def _ppp_tick(self, tick: int) -> None:
        cfg = self.config
        due = sorted(s for s, t in self.pending.items() if t == tick)
        # honest admissions, one group at a time
        groups: dict[int, list[int]] = {}
        for slot in due:
            groups.setdefault(self._group_of(slot), []).append(slot)
        for group_id in sorted(groups):
            slots = groups[group_id]
            gen = self.clock[self.generation_of_slot[slots[0]]]
            if not gen.contains(tick):
                for slot in slots:
                    del self.pending[slot]
                continue
            delivered = [s for s in slots if self.channel.send("KeyRequest")]
            if delivered:
                result = self.station.admit_group([self._admission_request(s, tick) for s in delivered])
                for _ in result.announcements:
                    self.channel.send("LeaderAnnounce")
                for slot, outcome in zip(delivered, result.results):
                    if isinstance(outcome, RegistryEntry) and self.channel.send("KeyResponse"):
                        self.shares[slot] = self.station.shares[outcome.node]
                        del self.pending[slot]
                        self.trace.log(tick, f"admit {outcome.node} gen={outcome.generation_index}")
            for slot in slots:
                if slot in self.pending:
                    self.pending[slot] = tick + 1
        self._log_alerts(tick)

        for slot in sorted(self.clone_attempts):
            if self.clone_attempts[slot] < cfg.clone_join_attempts and (
                self.clone_attempts[slot] == 0 or tick % cfg.round_ticks == 0
            ):
                self.clone_attempts[slot] += 1
                self._clone_join(slot, tick)

        if tick % cfg.round_ticks == 0:
            self._hello_round(tick)
            self._record_memory()

    def _clone_join(self, slot: int, tick: int) -> None:
        victim = self.ids[slot]
        entry = self.station.registry.get(victim)
        if self.config.adversary == "stolen-key" and entry is not None:
            if self.channel.send("KeyRequest"):
                nbr_hashes = [
                    self.station.registry[self.ids[v]].hash
                    for v in self.adjacency[slot]
                    if not self.is_clone[v] and self.ids[v] in self.station.registry
                ]
                target = nbr_hashes[0] if nbr_hashes else entry.hash
                reply = self.station.handle_key_request(victim, target, tick)
                self._log_alerts(tick)
                if isinstance(reply, KeyResponse):
                    self.channel.send("KeyResponse")
            return
        if not self.channel.send("KeyRequest"):
            return
        request = AdmissionRequest(
            node=victim,
            position=float(self.positions[slot]),
            tick=tick,
            generation=entry.generation_index if entry is not None else None,
        )
        try:
            outcome = self.station.admit_node(request)
        except AdmissionRejected as exc:
            self.trace.log(tick, f"clone of {victim} rejected: {exc}")
            return
        if isinstance(outcome, RegistryEntry):
            # the clone slipped in (victim revoked and window open); it now holds real key material
            if self.channel.send("KeyResponse"):
                self.shares[slot] = self.station.shares[victim]
        self._log_alerts(tick)

    def _log_alerts(self, tick: int) -> None:
        seen = len(self.trace.alerts)
        for alert in self.station.alerts[seen:]:
            self.trace.alerts.append((alert.suspect, alert.tick, alert.reason.value))
            self.trace.log(tick, f"alert {alert.suspect} {alert.reason.value}")

    def _hello_round(self, tick: int) -> None:
        cfg = self.config
        L = cfg.road_length
        registry = self.station.registry
        for u in range(len(self.ids)):
            node_id = self.ids[u]
            if self.is_clone[u]:
                entry = registry.get(node_id)
                if entry is None:
                    continue
            elif self.shares[u] is None:
                continue
            else:
                entry = registry[node_id]
            candidates = [
                v
                for v in self.adjacency[u]
                if u not in self.verified[v] and (self.is_clone[v] or self.shares[v] is not None)
            ]
            if not candidates:
                continue
            dist = baselines.ring_distance(self.positions[u], self.positions[candidates], L)
            order = sorted(range(len(candidates)), key=lambda i: (dist[i], candidates[i]))
            for i in order[: cfg.hello_fanout]:
                v = candidates[i]
                if not self.channel.send("Hello"):
                    continue
                if not self.channel.send("KeyRequest"):
                    continue
                challenge = int(self.proto_rng.integers(0, cfg.modulus_Q))
                if not self.channel.send("KeyResponse"):
                    continue
                if self.is_clone[v]:
                    continue
                recv_hash = registry[self.ids[v]].hash
                if self.shares[u] is not None:
                    response = hello_response(self.shares[u], recv_hash, challenge)
                else:
                    response = int(self.proto_rng.integers(0, cfg.modulus_Q))
                result = self.station.handle_hello(
                    node_id,
                    entry.generation_index,
                    entry.join_tick,
                    self.ids[v],
                    tick,
                    sender_hash=entry.hash,
                    challenge=challenge,
                    response=response,
                    position=float(self.positions[u]),
                )
                if result.verified:
                    self.verified[v].add(u)
                elif self.channel.send("Alert"):
                    self.station.receive_alert(result.alert)
                    self._log_alerts(tick)

    # -- baselines -------------------------------------------------------------

    def _account(self, kind: str, transmissions: int) -> None:
        self.trace.transmissions += transmissions
        self.trace.bytes_total += MESSAGE_SIZES[kind] * transmissions

    def _baseline_alerts(self, alerts) -> None:
        known = {s for s, _, _ in self.trace.alerts}
        for alert in alerts:
            if alert.suspect not in known:
                known.add(alert.suspect)
                self.trace.alerts.append((alert.suspect, alert.tick, "LocationConflict"))
                self.trace.log(alert.tick, f"alert {alert.suspect} LocationConflict witness={alert.witness}")

    def _broadcast_round(self, tick: int) -> None:
        messages, alerts = baselines.broadcast_round(
            self.adjacency,
            self.ids,
            self.positions,
            tick,
            self.claim_tables,
            road_length=self.config.road_length,
            r_conflict=self.r_conflict,
            v_max=self.config.v_max,
            verifiers=[not c for c in self.is_clone],
            deliver=self.channel.deliver,
        )
        self._account("Claim", len(messages))
        self._baseline_alerts(alerts)
        self._record_memory()

    def _multicast_epoch(self, tick: int) -> None:
        for table in self.witness_tables:
            table.clear()
        alerts = []
        for u in range(len(self.ids)):
            claim = baselines.LocationClaim(self.ids[u], float(self.positions[u]), tick, u)
            out = baselines.randomized_multicast_claim(
                claim,
                u,
                self.adjacency,
                self.positions,
                self.g,
                self.proto_rng,
                self.witness_tables,
                radius=self.radius,
                road_length=self.config.road_length,
                r_conflict=self.r_conflict,
                population=self.config.n,
                deliver=self.channel.deliver,
            )
            self._account("Claim", out.claims)
            self._account("ForwardClaim", out.transmissions - out.claims)
            alerts.extend(out.alerts)
        self._baseline_alerts(alerts)
        self._record_memory()


def run(config: SimConfig) -> Trace:
    return Simulation(config).run()
