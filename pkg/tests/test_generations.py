import pytest
from hypothesis import given
from hypothesis import strategies as st

from clonedetect.generations import (
    ActiveGenerationError,
    Generation,
    GenerationClock,
    KeyUnavailableError,
    OverlapError,
    erase_master_key,
    verify_deployment_freshness,
)
from clonedetect.keying import pairwise_key


@pytest.fixture
def clock():
    return GenerationClock()


def test_first_generation(clock):
    gen = clock.open_generation(50, degree_t=1, modulus=31, seed=1)
    assert (gen.index, gen.deploy_time, gen.window_end) == (0, 0, 50)
    assert gen.master_poly is not None and gen.master_key is not None
    assert not gen.erased


def test_successor_index(clock):
    clock.open_generation(50, modulus=31)
    clock.advance(100)
    gen = clock.open_generation(50, modulus=31, seed=2)
    assert (gen.index, gen.deploy_time) == (1, 100)


def test_overlap_rejected(clock):
    clock.open_generation(50, modulus=31)
    clock.advance(30)
    with pytest.raises(OverlapError):
        clock.open_generation(50, modulus=31)


def test_back_to_back_windows_allowed(clock):
    clock.open_generation(50, modulus=31)
    clock.advance(50)
    assert clock.open_generation(50, modulus=31).index == 1


@pytest.mark.parametrize(
    "claimed, current, accepted, reason",
    [
        (110, 120, True, None),
        (110, 160, False, "window-expired"),
        (100, 100, True, None),
        (110, 150, False, "window-expired"),
        (110, 90, False, "not-yet-deployed"),
        (95, 120, False, "join-outside-window"),
    ],
)
def test_freshness(claimed, current, accepted, reason):
    gen = Generation(0, deploy_time=100, period=50)
    verdict = verify_deployment_freshness(gen, claimed, current)
    assert bool(verdict) is accepted
    assert verdict.reason == reason


@given(deploy=st.integers(0, 1000), period=st.integers(1, 100), claimed=st.integers(0, 1200), t=st.integers(0, 1200))
def test_freshness_monotone_after_expiry(deploy, period, claimed, t):
    gen = Generation(0, deploy, period)
    if verify_deployment_freshness(gen, claimed, t).reason == "window-expired":
        for later in (t + 1, t + 7, t + 1000):
            assert not verify_deployment_freshness(gen, claimed, later)


def test_erasure_keeps_shares_valid(clock):
    gen = clock.open_generation(50, degree_t=2, modulus=31, seed=4)
    a = gen.derive_share(1, 11)
    b = gen.derive_share(2, 22)
    from clonedetect.keying import node_hash

    ha, hb = node_hash(1, 11, 31), node_hash(2, 22, 31)
    before = pairwise_key(a, hb)
    clock.advance(50)
    erased = clock.erase(0)
    assert erased.erased and erased.master_poly is None and erased.master_key is None
    assert pairwise_key(a, hb) == pairwise_key(b, ha) == before


def test_erase_active_window_rejected(clock):
    gen = clock.open_generation(50, modulus=31)
    with pytest.raises(ActiveGenerationError):
        erase_master_key(gen, 30)


def test_no_master_material_after_erasure(clock):
    clock.open_generation(50, modulus=31)
    clock.advance(50)
    gen = clock.erase(0)
    with pytest.raises(KeyUnavailableError):
        gen.derive_share(1, 1)
    # sweep the public surface for leftover master material
    for name in dir(gen):
        if name.startswith("__"):
            continue
        value = getattr(gen, name)
        assert not hasattr(value, "coeffs") or name == "derive_share"
    assert clock[0].master_poly is None
    with pytest.raises(ValueError):
        Generation(0, 0, 10, master_key=5, erased=True)


def test_generation_of_tick(clock):
    clock.open_generation(50, modulus=31)
    clock.advance(100)
    clock.open_generation(50, modulus=31)
    assert clock.generation_of_tick(120) == 1
    assert clock.generation_of_tick(75) is None
    assert clock.generation_of_tick(0) == 0
    assert clock.generation_of_tick(150) is None


def test_clock_cannot_rewind(clock):
    clock.advance(10)
    with pytest.raises(Exception):
        clock.advance(5)
