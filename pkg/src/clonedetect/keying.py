"""Identity hashing and pairwise key establishment on top of the master polynomial."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .field_poly import SymmetricBivariatePoly, UnivariatePoly, eval_univariate, restrict_to_x

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def node_hash(node_id: int, key: int, modulus: int) -> int:
    """H(id|key): absorb the id, XOR in the station-assigned key, mix again."""
    h = mix64(mix64((node_id + GOLDEN_GAMMA) & MASK64) ^ (key & MASK64))
    return h % modulus


def identity_hash(node_id: int, key: int, modulus: int) -> int:
    """Test-mode hash: ignores the key so worked examples stay hand-checkable."""
    return node_id % modulus


HashFn = Callable[[int, int, int], int]


@dataclass(frozen=True)
class KeyShare:
    owner: int
    poly: UnivariatePoly
    generation_index: int = 0


def derive_share(
    P: SymmetricBivariatePoly,
    node_id: int,
    key: int,
    generation_index: int = 0,
    hash_fn: HashFn = node_hash,
) -> KeyShare:
    point = hash_fn(node_id, key, P.modulus)
    return KeyShare(node_id, restrict_to_x(P, point), generation_index)


def pairwise_key(share: KeyShare, peer_hash: int) -> int:
    return eval_univariate(share.poly, peer_hash)


def verify_agreement(share_a: KeyShare, hash_a: int, share_b: KeyShare, hash_b: int) -> bool:
    return pairwise_key(share_a, hash_b) == pairwise_key(share_b, hash_a)
