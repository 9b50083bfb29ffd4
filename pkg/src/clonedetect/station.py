"""Central base station: admission, group bootstrap, key requests, Hello adjudication.

The station is one sequential state machine. It owns the generation clock's
master material and the registry of admitted vehicles, and it is the only
place where replica alerts become revocations.
"""
from __future__ import annotations

import dataclasses
import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .field_poly import eval_bivariate
from .generations import Freshness, GenerationClock, verify_deployment_freshness
from .keying import HashFn, KeyShare, node_hash, pairwise_key

Position = float


class AlertReason(str, enum.Enum):
    DUPLICATE_ACTIVE_ID = "DuplicateActiveId"
    EXPIRED_GENERATION_JOIN = "ExpiredGenerationJoin"
    KEY_MISMATCH = "KeyMismatch"


class AdmissionRejected(RuntimeError):
    """No generation window is open for a request that names none."""


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    node: int
    key: int
    hash: int
    generation_index: int
    position: Position
    join_tick: int
    last_claim_tick: int
    revoked: bool = False
    nonce: Optional[int] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class AdmissionRequest:
    node: int
    position: Position
    tick: int
    group: int = 0
    permission: int = 0
    # generation the requester claims to belong to; None means "whatever is open now"
    generation: Optional[int] = None
    # per-vehicle retry token so an honest re-send is not mistaken for a clone
    nonce: Optional[int] = None


@dataclass(frozen=True)
class ReplicaAlert:
    suspect: int
    reason: AlertReason
    evidence: tuple[tuple[int, Position], ...]
    tick: int

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("an alert must cite evidence")


@dataclass(frozen=True)
class KeyResponse:
    requester: int
    target_hash: int
    key: int


@dataclass(frozen=True)
class HelloResult:
    verified: bool
    reason: Optional[str] = None
    alert: Optional[ReplicaAlert] = None

    def __bool__(self) -> bool:
        return self.verified


@dataclass(frozen=True)
class GroupAdmission:
    leader: int
    announcements: tuple[tuple[int, int], ...]
    results: tuple[Union[RegistryEntry, ReplicaAlert], ...]


def hello_response(share: KeyShare, receiver_hash: int, challenge: int) -> int:
    """What an honest sender returns for a Hello challenge: key + challenge mod Q."""
    return (pairwise_key(share, receiver_hash) + challenge) % share.poly.modulus


class Station:
    def __init__(
        self,
        clock: GenerationClock,
        degree_t: int,
        modulus: int,
        seed: int = 0,
        key_ttl: Optional[int] = None,
        hash_fn: HashFn = node_hash,
        audit_keys: bool = False,
    ):
        self.clock = clock
        self.degree_t = degree_t
        self.modulus = modulus
        self.key_ttl = key_ttl
        self.hash_fn = hash_fn
        self.audit_keys = audit_keys
        self.rng = np.random.default_rng(seed)
        self.registry: dict[int, RegistryEntry] = {}
        self.shares: dict[int, KeyShare] = {}
        self.alerts: list[ReplicaAlert] = []
        self.announcements: list[tuple[int, int]] = []
        self.key_pairs_checked = 0
        self.key_violations = 0
        self.peak_entries = 0
        self._flagged: set[int] = set()
        self._hashes: dict[int, set[int]] = {}

    # -- bookkeeping -------------------------------------------------------

    def memory_entries(self) -> int:
        return len(self.registry) + len(self.clock)

    def _touch_peak(self) -> None:
        self.peak_entries = max(self.peak_entries, self.memory_entries())

    def key_valid(self, entry: RegistryEntry, tick: int) -> bool:
        gen = self.clock[entry.generation_index]
        ttl = gen.period if self.key_ttl is None else self.key_ttl
        return tick < gen.window_end + ttl

    def is_active(self, node: int, tick: int) -> bool:
        entry = self.registry.get(node)
        return entry is not None and not entry.revoked and self.key_valid(entry, tick)

    def open_generation(self, period: int) -> int:
        seed = int(self.rng.integers(0, 2**63))
        gen = self.clock.open_generation(period, self.degree_t, self.modulus, seed)
        self._hashes[gen.index] = set()
        self._touch_peak()
        return gen.index

    def close_expired(self) -> list[int]:
        """Erase master material of every generation whose window has closed."""
        erased = []
        for gen in list(self.clock.generations):
            if not gen.erased and self.clock.current_tick >= gen.window_end:
                if self.audit_keys:
                    self.audit_generation(gen.index)
                self.clock.erase(gen.index)
                erased.append(gen.index)
        return erased

    # -- alerts ------------------------------------------------------------

    def receive_alert(self, alert: ReplicaAlert) -> Optional[ReplicaAlert]:
        """Adjudicate an alert; duplicates for an already flagged id are absorbed."""
        if alert.suspect in self._flagged:
            return None
        self._flagged.add(alert.suspect)
        self.alerts.append(alert)
        entry = self.registry.get(alert.suspect)
        if entry is not None:
            self.revoke(entry, alert)
        return alert

    def revoke(self, entry: RegistryEntry, alert: ReplicaAlert) -> RegistryEntry:
        if alert.suspect != entry.node:
            raise ValueError("alert does not reference this entry")
        current = self.registry.get(entry.node, entry)
        if current.revoked:
            return current
        revoked = dataclasses.replace(current, revoked=True)
        self.registry[entry.node] = revoked
        return revoked

    def _evidence(self, node: int, tick: int, position: Position) -> tuple[tuple[int, Position], ...]:
        entry = self.registry.get(node)
        ev = [(tick, position)]
        if entry is not None:
            ev.insert(0, (entry.last_claim_tick, entry.position))
        return tuple(ev)

    # -- admission ---------------------------------------------------------

    def admit_node(self, request: AdmissionRequest) -> Union[RegistryEntry, ReplicaAlert]:
        tick = request.tick
        existing = self.registry.get(request.node)
        if existing is not None and not existing.revoked:
            if request.nonce is not None and request.nonce == existing.nonce:
                return existing
            if self.key_valid(existing, tick):
                alert = ReplicaAlert(
                    request.node,
                    AlertReason.DUPLICATE_ACTIVE_ID,
                    self._evidence(request.node, tick, request.position),
                    tick,
                )
                return self.receive_alert(alert) or alert

        target = request.generation
        if target is None:
            target = self.clock.generation_of_tick(tick)
            if target is None:
                raise AdmissionRejected(f"no generation window open at tick {tick}")
        if not 0 <= target < len(self.clock):
            raise AdmissionRejected(f"generation {target} does not exist")
        gen = self.clock[target]
        if not gen.contains(tick) or gen.erased:
            alert = ReplicaAlert(
                request.node,
                AlertReason.EXPIRED_GENERATION_JOIN,
                self._evidence(request.node, tick, request.position),
                tick,
            )
            return self.receive_alert(alert) or alert

        hashes = self._hashes.setdefault(gen.index, set())
        while True:
            key = int(self.rng.integers(0, 2**64, dtype=np.uint64))
            h = self.hash_fn(request.node, key, self.modulus)
            if h not in hashes:
                break
        hashes.add(h)
        share = gen.derive_share(request.node, key, self.hash_fn)
        entry = RegistryEntry(
            node=request.node,
            key=key,
            hash=h,
            generation_index=gen.index,
            position=request.position,
            join_tick=tick,
            last_claim_tick=tick,
            nonce=request.nonce,
        )
        self.registry[request.node] = entry
        self.shares[request.node] = share
        self._flagged.discard(request.node)
        self._touch_peak()
        return entry

    def admit_group(self, requests: Sequence[AdmissionRequest]) -> GroupAdmission:
        if not requests:
            raise ValueError("empty group")
        if len({r.group for r in requests}) != 1:
            raise ValueError("requests span several groups")
        gens = {
            r.generation if r.generation is not None else self.clock.generation_of_tick(r.tick)
            for r in requests
        }
        if len(gens) != 1:
            raise ValueError(f"group mixes generations {sorted(g for g in gens if g is not None)}")
        leader = max(r.node for r in requests)
        announcements = tuple((leader, r.node) for r in requests if r.node != leader)
        self.announcements.extend(announcements)
        results = tuple(self.admit_node(r) for r in requests)
        return GroupAdmission(leader, announcements, results)

    # -- key material and Hello -------------------------------------------

    def handle_key_request(
        self, requester: Union[int, RegistryEntry], target_hash: int, current_tick: int
    ) -> Union[KeyResponse, Freshness]:
        node = requester.node if isinstance(requester, RegistryEntry) else requester
        entry = self.registry.get(node)
        if entry is None:
            raise ProtocolError(f"unknown requester {node}")
        if entry.revoked:
            return Freshness(False, "revoked")
        verdict = verify_deployment_freshness(
            self.clock[entry.generation_index], entry.join_tick, current_tick
        )
        if not verdict:
            if verdict.reason == "window-expired":
                self.receive_alert(
                    ReplicaAlert(
                        node,
                        AlertReason.EXPIRED_GENERATION_JOIN,
                        self._evidence(node, current_tick, entry.position),
                        current_tick,
                    )
                )
            return verdict
        self.registry[node] = dataclasses.replace(entry, last_claim_tick=current_tick)
        return KeyResponse(node, target_hash, pairwise_key(self.shares[node], target_hash))

    def handle_hello(
        self,
        sender: int,
        claimed_generation: int,
        claimed_join_tick: int,
        receiver: int,
        current_tick: int,
        *,
        sender_hash: Optional[int] = None,
        challenge: Optional[int] = None,
        response: Optional[int] = None,
        position: Position = 0.0,
    ) -> HelloResult:
        """Receiver-side verification of a Hello, backed by the registry.

        Without an explicit challenge/response the registered sender's own
        share answers, which is what an honest sender would do.
        """
        recv_entry = self.registry.get(receiver)
        if recv_entry is None:
            raise ProtocolError(f"receiver {receiver} is not registered")

        def fail(reason: str) -> HelloResult:
            alert = ReplicaAlert(
                sender, AlertReason.KEY_MISMATCH, self._evidence(sender, current_tick, position), current_tick
            )
            return HelloResult(False, reason, alert)

        entry = self.registry.get(sender)
        if entry is None:
            return fail("unregistered")
        if entry.revoked:
            return fail("revoked")
        if claimed_generation != entry.generation_index:
            return fail("generation-mismatch")
        if claimed_join_tick != entry.join_tick:
            return fail("join-tick-mismatch")
        presented = entry.hash if sender_hash is None else sender_hash
        if presented != entry.hash:
            return fail("key-mismatch")
        if entry.generation_index != recv_entry.generation_index:
            # keys never span generations; only the registry check applies
            return HelloResult(True)
        c = int(self.rng.integers(0, self.modulus)) if challenge is None else challenge
        if response is None:
            response = hello_response(self.shares[sender], recv_entry.hash, c)
        expected = (pairwise_key(self.shares[receiver], presented) + c) % self.modulus
        if response != expected:
            return fail("key-mismatch")
        return HelloResult(True)

    # -- audit -------------------------------------------------------------

    def audit_generation(self, index: int) -> tuple[int, int]:
        """Check every admitted pair of a generation against the master polynomial."""
        gen = self.clock[index]
        if gen.master_poly is None:
            raise ValueError(f"generation {index} already erased; nothing to audit against")
        members = [e for e in self.registry.values() if e.generation_index == index]
        checked = violations = 0
        for a, b in itertools.combinations(members, 2):
            k_ab = pairwise_key(self.shares[a.node], b.hash)
            k_ba = pairwise_key(self.shares[b.node], a.hash)
            checked += 1
            if not (k_ab == k_ba == eval_bivariate(gen.master_poly, a.hash, b.hash)):
                violations += 1
        self.key_pairs_checked += checked
        self.key_violations += violations
        return checked, violations


def group_requests(requests: Iterable[AdmissionRequest], size: int) -> list[list[AdmissionRequest]]:
    """Chunk requests into groups of ``size`` consecutive members."""
    batch = list(requests)
    size = max(1, size)
    return [batch[i : i + size] for i in range(0, len(batch), size)]
