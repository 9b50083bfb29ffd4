"""Deployment generations: time windows, per-generation master material, erasure."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .field_poly import DEFAULT_MODULUS, SymmetricBivariatePoly, gen_master_poly
from .keying import HashFn, KeyShare, derive_share, node_hash


class GenerationError(RuntimeError):
    pass


class OverlapError(GenerationError):
    """A new window would start before the previous one closes."""


class ActiveGenerationError(GenerationError):
    """Master material cannot be erased while the window is open."""


class KeyUnavailableError(GenerationError):
    """The generation's master material has been erased."""


@dataclass(frozen=True)
class Generation:
    index: int
    deploy_time: int
    period: int
    master_poly: Optional[SymmetricBivariatePoly] = field(default=None, repr=False)
    master_key: Optional[int] = field(default=None, repr=False)
    erased: bool = False

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.erased and (self.master_poly is not None or self.master_key is not None):
            raise ValueError("an erased generation cannot carry master material")

    @property
    def window_end(self) -> int:
        return self.deploy_time + self.period

    def contains(self, tick: int) -> bool:
        return self.deploy_time <= tick < self.window_end

    def derive_share(self, node_id: int, key: int, hash_fn: HashFn = node_hash) -> KeyShare:
        if self.erased or self.master_poly is None:
            raise KeyUnavailableError(f"generation {self.index} master polynomial erased")
        return derive_share(self.master_poly, node_id, key, self.index, hash_fn)


@dataclass(frozen=True)
class Freshness:
    """Outcome of a deployment-freshness check; truthy when accepted."""

    accepted: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = Freshness(True)


def verify_deployment_freshness(gen: Generation, claimed_join_tick: int, current_tick: int) -> Freshness:
    if current_tick >= gen.window_end:
        return Freshness(False, "window-expired")
    if current_tick < gen.deploy_time:
        return Freshness(False, "not-yet-deployed")
    if not gen.contains(claimed_join_tick):
        return Freshness(False, "join-outside-window")
    if gen.erased:
        return Freshness(False, "erased")
    return ACCEPT


def erase_master_key(gen: Generation, current_tick: int) -> Generation:
    if current_tick < gen.window_end:
        raise ActiveGenerationError(
            f"generation {gen.index} window [{gen.deploy_time},{gen.window_end}) still open at {current_tick}"
        )
    return dataclasses.replace(gen, master_poly=None, master_key=None, erased=True)


class GenerationClock:
    """Ordered generations plus the driver's notion of the current tick.

    Single writer: only the simulation driver (or the station it owns)
    advances the tick and opens generations.
    """

    def __init__(self, current_tick: int = 0):
        self.generations: list[Generation] = []
        self.current_tick = current_tick

    def __len__(self) -> int:
        return len(self.generations)

    def __getitem__(self, index: int) -> Generation:
        return self.generations[index]

    def advance(self, tick: int) -> None:
        if tick < self.current_tick:
            raise GenerationError("clock cannot run backwards")
        self.current_tick = tick

    def open_generation(
        self,
        period: int,
        degree_t: int = 1,
        modulus: int = DEFAULT_MODULUS,
        seed: int = 0,
    ) -> Generation:
        tick = self.current_tick
        if self.generations:
            prev = self.generations[-1]
            if tick < prev.window_end:
                raise OverlapError(
                    f"generation {prev.index} window [{prev.deploy_time},{prev.window_end}) still open at {tick}"
                )
        rng = np.random.default_rng(seed)
        poly_seed, master_key = (int(v) for v in rng.integers(0, 2**63, size=2))
        gen = Generation(
            index=len(self.generations),
            deploy_time=tick,
            period=period,
            master_poly=gen_master_poly(degree_t, modulus, poly_seed),
            master_key=master_key,
        )
        self.generations.append(gen)
        return gen

    def erase(self, index: int) -> Generation:
        gen = erase_master_key(self.generations[index], self.current_tick)
        self.generations[index] = gen
        return gen

    def generation_of_tick(self, tick: int) -> Optional[int]:
        for gen in self.generations:
            if gen.contains(tick):
                return gen.index
        return None

    def open_index(self) -> Optional[int]:
        return self.generation_of_tick(self.current_tick)
