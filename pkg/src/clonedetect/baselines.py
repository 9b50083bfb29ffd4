"""Comparison protocols: one-hop neighbour broadcast of location claims and
randomized multicast to witnesses.

Both work on slot indices (positions in the simulator's node arrays); a clone
occupies its own slot but reports the victim's id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Deliver = Callable[[int, str], np.ndarray]


def ring_distance(a, b, road_length: float):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % road_length
    return np.minimum(d, road_length - d)


def hop_estimate(a, b, radius: float, road_length: float):
    """Hops for geographic forwarding between two road positions (0 for the same spot)."""
    return np.ceil(ring_distance(a, b, road_length) / radius).astype(np.int64)


def _deliver_all(count: int, kind: str = "") -> np.ndarray:
    return np.ones(count, dtype=bool)


@dataclass(frozen=True)
class LocationClaim:
    subject: int
    position: float
    tick: int
    reporter: int


@dataclass(frozen=True)
class WitnessSet:
    claim_subject: int
    witnesses: frozenset

    @property
    def size(self) -> int:
        return len(self.witnesses)


@dataclass(frozen=True)
class BaselineAlert:
    suspect: int
    tick: int
    witness: int


# -- neighbour broadcast ------------------------------------------------------


def broadcast_round(
    adjacency: Sequence[Sequence[int]],
    ids: Sequence[int],
    positions: np.ndarray,
    tick: int,
    tables: list[dict],
    *,
    road_length: float,
    r_conflict: float,
    v_max: float = 0.0,
    verifiers: Optional[Sequence[bool]] = None,
    deliver: Deliver = _deliver_all,
) -> tuple[list[tuple[int, int]], list[BaselineAlert]]:
    """One claim round: every slot sends its id, position and neighbour list to each neighbour.

    ``tables[v]`` maps id -> (position, tick) as last heard by slot ``v``;
    tables persist across rounds. Two reports for one id conflict when they
    lie further apart than ``r_conflict`` plus the distance a vehicle could
    have covered since the older report.
    """
    messages = [(u, v) for u, nbrs in enumerate(adjacency) for v in nbrs]
    delivered = deliver(len(messages), "Claim")
    alerts: list[BaselineAlert] = []
    verifiers = [True] * len(adjacency) if verifiers is None else verifiers

    for v in range(len(adjacency)):
        if verifiers[v]:
            tables[v][ids[v]] = (float(positions[v]), tick)

    for (u, v), ok in zip(messages, delivered):
        if not ok or not verifiers[v]:
            continue
        table = tables[v]
        reports = [(ids[u], float(positions[u]))]
        reports.extend((ids[x], float(positions[x])) for x in adjacency[u])
        for node_id, pos in reports:
            seen = table.get(node_id)
            if seen is not None:
                old_pos, old_tick = seen
                limit = r_conflict + v_max * (tick - old_tick)
                if ring_distance(old_pos, pos, road_length) > limit:
                    alerts.append(BaselineAlert(node_id, tick, v))
            table[node_id] = (pos, tick)
    return messages, alerts


# -- randomized multicast -------------------------------------------------------


@dataclass
class MulticastOutcome:
    claims: int = 0
    claims_delivered: int = 0
    forwards: int = 0
    forwards_delivered: int = 0
    transmissions: int = 0
    witnesses: Optional[WitnessSet] = None
    alert: Optional[BaselineAlert] = None
    alerts: list = field(default_factory=list)


def default_witness_count(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def draw_witnesses(population: int, g: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(population, size=min(g, population), replace=False)


def randomized_multicast_claim(
    claim: LocationClaim,
    subject_slot: int,
    adjacency: Sequence[Sequence[int]],
    positions: np.ndarray,
    g: int,
    rng: np.random.Generator,
    witness_tables: list[dict],
    *,
    radius: float,
    road_length: float,
    r_conflict: float,
    population: Optional[int] = None,
    deliver: Deliver = _deliver_all,
) -> MulticastOutcome:
    """Send one location claim through randomized multicast.

    The subject broadcasts its claim to its neighbours; every neighbour that
    hears it forwards a copy to each of the claim's ``g`` witnesses, drawn
    uniformly without replacement from the first ``population`` slots.
    Witness tables map id -> list of (position, claimant slot) for the
    current epoch. A witness holding two claims for one id further apart
    than ``r_conflict`` raises an alert.
    """
    if g < 1:
        raise ValueError("witness count must be >= 1")
    population = len(adjacency) if population is None else population
    out = MulticastOutcome()
    witnesses = draw_witnesses(population, g, rng)
    out.witnesses = WitnessSet(claim.subject, frozenset(int(w) for w in witnesses))

    nbrs = np.asarray(adjacency[subject_slot], dtype=np.int64)
    out.claims = len(nbrs)
    out.transmissions += len(nbrs)
    heard = nbrs[deliver(len(nbrs), "Claim")] if len(nbrs) else nbrs
    out.claims_delivered = len(heard)
    if len(heard) == 0:
        return out

    hops = hop_estimate(positions[heard][:, None], positions[witnesses][None, :], radius, road_length)
    local = heard[:, None] == witnesses[None, :]
    remote = ~local
    n_remote = int(remote.sum())
    ok = local.copy()
    ok[remote] = deliver(n_remote, "ForwardClaim")
    out.forwards = int(local.size)
    out.forwards_delivered = int(ok.sum())
    out.transmissions += int(hops[remote].sum())

    received = witnesses[ok.any(axis=0)]
    for w in received:
        w = int(w)
        bucket = witness_tables[w].setdefault(claim.subject, [])
        if any(slot == subject_slot for _, slot in bucket):
            continue
        for other_pos, _ in bucket:
            if ring_distance(other_pos, claim.position, road_length) > r_conflict:
                alert = BaselineAlert(claim.subject, claim.tick, w)
                out.alerts.append(alert)
                if out.alert is None:
                    out.alert = alert
                break
        bucket.append((claim.position, subject_slot))
    return out


def collision_probability(n: int, g: int) -> float:
    """Exact probability that two independent uniform g-subsets of n items intersect."""
    if g <= 0:
        return 0.0
    g = min(g, n)
    return 1.0 - math.comb(n - g, g) / math.comb(n, g)


def birthday_collision_oracle(n: int, g: int, trials: int, seed: int = 0) -> float:
    """Monte-Carlo estimate of the witness-collision probability."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if g <= 0:
        return 0.0
    g = min(g, n)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        a = rng.choice(n, size=g, replace=False)
        b = rng.choice(n, size=g, replace=False)
        hits += bool(np.intersect1d(a, b, assume_unique=True).size)
    return hits / trials
