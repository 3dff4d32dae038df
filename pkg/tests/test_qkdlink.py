import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfhss.qkdlink import (
    EmptyExchangeError,
    EstimationError,
    QkdLinkConfig,
    ReconciliationFailed,
    SiftedKeyPair,
    UnverifiedKeyError,
    ZeroKeyError,
    binary_entropy,
    default_initial_block,
    output_length,
    privacy_amplify,
    reconcile,
    run_qkd,
    sift_and_estimate,
    simulate_exchange,
    toeplitz_hash,
)
from qfhss.qkdlink.amplify import toeplitz_seed_bits
from qfhss.qkdlink.cascade import ReconciledKey
from qfhss.qkdlink.digest import gf64_mul, key_digest

# mpmath, 30 digits
H2_0035 = 0.218877726539010947


@pytest.mark.parametrize(
    "q, expected",
    [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.035, H2_0035)],
)
def test_binary_entropy(q, expected):
    assert binary_entropy(q) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("q", [-0.1, 1.5, float("nan")])
def test_binary_entropy_domain(q):
    with pytest.raises(ValueError):
        binary_entropy(q)


def test_config_validation():
    with pytest.raises(ValueError):
        QkdLinkConfig(n_pulses=0)
    with pytest.raises(ValueError):
        QkdLinkConfig(flip_prob=1.2)
    with pytest.raises(ValueError):
        QkdLinkConfig(fiber_km=-1)
    assert QkdLinkConfig(fiber_km=25, loss_db_per_km=0.2).transmittance == pytest.approx(10 ** -0.5)


def test_ideal_channel_exchange():
    cfg = QkdLinkConfig(n_pulses=1000, fiber_km=0, loss_db_per_km=0, detector_efficiency=1,
                        flip_prob=0, decoy_fraction=0, seed=3)
    raw = simulate_exchange(cfg)
    assert raw.bob_detected.all()
    assert np.array_equal(raw.bob_bits, raw.alice_bits)


def test_detection_fraction_over_25km():
    eff = 0.5
    cfg = QkdLinkConfig(n_pulses=200_000, fiber_km=25, loss_db_per_km=0.2, detector_efficiency=eff,
                        decoy_fraction=0, seed=11)
    raw = simulate_exchange(cfg)
    p = 10 ** (-5 / 10) * eff
    sigma = math.sqrt(p * (1 - p) / cfg.n_pulses)
    assert abs(raw.bob_detected.mean() - p) <= 3 * sigma


def test_all_decoys_leave_nothing_to_sift():
    raw = simulate_exchange(QkdLinkConfig(n_pulses=500, decoy_fraction=1.0, seed=1))
    with pytest.raises(EmptyExchangeError):
        sift_and_estimate(raw, 0.1, seed=0)


def test_exchange_is_pure_function_of_config():
    cfg = QkdLinkConfig(n_pulses=5000, seed=42)
    a, b = simulate_exchange(cfg), simulate_exchange(cfg)
    for name in ("alice_bits", "alice_is_decoy", "bob_detected", "bob_bits"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_sift_ideal_channel_zero_qber():
    cfg = QkdLinkConfig(n_pulses=2000, fiber_km=0, flip_prob=0, decoy_fraction=0.2, seed=5)
    pair = sift_and_estimate(simulate_exchange(cfg), 0.2, seed=1)
    assert pair.qber_estimate == 0.0
    assert np.array_equal(pair.alice_key, pair.bob_key)
    assert len(pair.alice_key) + pair.disclosed_count == pair.kept_count


def test_sift_qber_estimate_consistent():
    cfg = QkdLinkConfig(n_pulses=400_000, flip_prob=0.035, seed=9)
    pair = sift_and_estimate(simulate_exchange(cfg), 0.1, seed=2)
    bound = 3 * math.sqrt(0.035 * 0.965 / pair.disclosed_count)
    assert abs(pair.qber_estimate - 0.035) <= bound


def test_sift_errors():
    cfg = QkdLinkConfig(n_pulses=100, seed=0)
    raw = simulate_exchange(cfg)
    raw.bob_detected[:] = False
    with pytest.raises(EmptyExchangeError):
        sift_and_estimate(raw, 0.1)
    tiny = simulate_exchange(QkdLinkConfig(n_pulses=3, fiber_km=0, decoy_fraction=0, seed=0))
    with pytest.raises(EstimationError):
        sift_and_estimate(tiny, 0.01)
    with pytest.raises(ValueError):
        sift_and_estimate(tiny, 1.0)


def _pair(alice, bob, qber=0.0):
    return SiftedKeyPair(np.asarray(alice, np.uint8), np.asarray(bob, np.uint8), qber, 0)


def test_reconcile_identical_keys_leaks_only_block_parities():
    key = np.random.default_rng(0).integers(0, 2, 1024, dtype=np.uint8)
    rec = reconcile(_pair(key, key), passes=4, initial_block=16, seed=1)
    assert rec.verified
    # blocks of 16, 32, 64, 128 over 1024 bits
    assert rec.leak_bits == 64 + 32 + 16 + 8
    assert rec.block_sizes == [16, 32, 64, 128]


def test_reconcile_single_error_binary_search_cost():
    alice = np.random.default_rng(1).integers(0, 2, 1024, dtype=np.uint8)
    bob = alice.copy()
    bob[300] ^= 1
    rec = reconcile(_pair(alice, bob), passes=4, initial_block=16, seed=2)
    assert rec.verified
    assert np.array_equal(rec.bob_key, alice)
    assert rec.parities_by_pass[0] == (64, 4)
    assert rec.leak_bits == 120 + 4


def test_reconcile_all_bits_differ_fails():
    alice = np.random.default_rng(2).integers(0, 2, 1024, dtype=np.uint8)
    rec = reconcile(_pair(alice, alice ^ 1), passes=4, initial_block=16, seed=3)
    assert not rec.verified


def test_reconcile_leak_budget_aborts():
    g = np.random.default_rng(3)
    alice = g.integers(0, 2, 4096, dtype=np.uint8)
    bob = alice ^ (g.random(4096) < 0.25).astype(np.uint8)
    rec = reconcile(_pair(alice, bob, 0.25), passes=4, seed=4)
    assert rec.aborted
    assert not rec.verified
    assert rec.leak_bits <= 4096


def test_reconcile_preconditions():
    key = np.zeros(32, np.uint8)
    with pytest.raises(ValueError):
        reconcile(_pair(key, key), passes=0)
    with pytest.raises(ValueError):
        reconcile(_pair(key, key), initial_block=1)
    with pytest.raises(ValueError):
        reconcile(_pair([], []))


def test_default_initial_block():
    assert default_initial_block(0.035, 100_000) == 21
    assert default_initial_block(0.5, 100_000) == 8
    assert default_initial_block(0.0, 1000) == 250
    assert default_initial_block(0.001, 100) == 25


def test_leak_monotone_in_injected_errors():
    g = np.random.default_rng(12)
    alice = g.integers(0, 2, 1024, dtype=np.uint8)
    positions = g.permutation(1024)[:20]
    leaks = []
    for k in range(21):
        bob = alice.copy()
        bob[positions[:k]] ^= 1
        rec = reconcile(_pair(alice, bob), passes=4, initial_block=16, seed=7)
        assert rec.verified
        leaks.append(rec.leak_bits)
    assert leaks == sorted(leaks)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 40))
def test_reconcile_verified_means_identical(seed, n_err):
    g = np.random.default_rng(seed)
    alice = g.integers(0, 2, 2048, dtype=np.uint8)
    bob = alice.copy()
    bob[g.choice(2048, n_err, replace=False)] ^= 1
    rec = reconcile(_pair(alice, bob, max(n_err, 1) / 2048), seed=seed)
    if rec.verified:
        assert np.array_equal(rec.bob_key, alice)
    assert rec.leak_bits >= 0


def test_gf64_mul_field_laws():
    g = np.random.default_rng(0)
    for _ in range(20):
        a, b, c = (int(x) for x in g.integers(0, 2**63, 3, dtype=np.int64))
        assert gf64_mul(a, b) == gf64_mul(b, a)
        assert gf64_mul(a, b ^ c) == gf64_mul(a, b) ^ gf64_mul(a, c)
        assert gf64_mul(a, 1) == a


def test_digest_detects_single_flip_and_length():
    bits = np.random.default_rng(4).integers(0, 2, 1000, dtype=np.uint8)
    flipped = bits.copy()
    flipped[999] ^= 1
    assert key_digest(bits, 1) == key_digest(bits.copy(), 1)
    assert key_digest(bits, 1) != key_digest(flipped, 1)
    assert key_digest(bits[:960], 1) != key_digest(np.concatenate([bits[:960], np.zeros(4, np.uint8)]), 1)


def _toeplitz_direct(bits, m, seed):
    n = len(bits)
    t = toeplitz_seed_bits(m, n, seed).astype(np.int64)
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    T = t[i - j + n - 1]
    return (T @ bits.astype(np.int64)) & 1


@pytest.mark.parametrize("n, m", [(1, 1), (17, 5), (256, 200), (1000, 333), (4096, 2048)])
def test_toeplitz_fft_matches_direct_product(n, m):
    bits = np.random.default_rng(n).integers(0, 2, n, dtype=np.uint8)
    assert np.array_equal(toeplitz_hash(bits, m, seed=n + m), _toeplitz_direct(bits, m, n + m))


def test_toeplitz_large_rows_spot_check():
    n, m = 300_000, 150_000
    bits = np.random.default_rng(1).integers(0, 2, n, dtype=np.uint8)
    out = toeplitz_hash(bits, m, seed=5)
    t = toeplitz_seed_bits(m, n, 5).astype(np.int64)
    for i in (0, 1, 77_777, m - 1):
        row = t[i - np.arange(n) + n - 1]
        assert out[i] == (row @ bits) & 1


def test_output_length_examples():
    assert output_length(1024, 0.0, 0, 64) == 896
    leak = math.ceil(1.16 * H2_0035 * 100_000)
    m = output_length(100_000, 0.035, leak, 64)
    assert m == 52594
    assert m / 100_000 == pytest.approx(1 - 2.16 * H2_0035, abs=0.01)
    assert output_length(100, 0.0, 100, 1) == 0


def _verified(n, leak=0, seed=0):
    key = np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)
    return ReconciledKey(key=key, leak_bits=leak, verified=True, bob_key=key.copy())


def test_privacy_amplify_length_and_agreement():
    rec = _verified(1024)
    a = privacy_amplify(rec, 0.0, 64, seed=9, party="alice")
    b = privacy_amplify(rec, 0.0, 64, seed=9, party="bob")
    assert a.n_bits == 896 and len(a.octets) == 112
    assert a.octets == b.octets
    assert np.array_equal(a.bits(), toeplitz_hash(rec.key, 896, 9))
    assert privacy_amplify(rec, 0.0, 64, seed=10).octets != a.octets


def test_privacy_amplify_refusals():
    rec = _verified(512)
    rec.verified = False
    with pytest.raises(UnverifiedKeyError):
        privacy_amplify(rec, 0.0, 64, 0)
    with pytest.raises(ZeroKeyError):
        privacy_amplify(_verified(512, leak=512), 0.0, 64, 0)
    with pytest.raises(ValueError):
        privacy_amplify(_verified(512), 0.5, 64, 0)


def test_run_qkd_end_to_end_agreement_and_determinism():
    cfg = QkdLinkConfig(n_pulses=100_000, flip_prob=0.06, seed=21)
    first, second = run_qkd(cfg), run_qkd(cfg)
    assert first.reconciled.verified
    assert first.alice.octets == first.bob.octets
    assert first.alice.octets == second.alice.octets
    rec = first.reconciled
    assert first.alice.n_bits == output_length(rec.n, first.sifted.qber_estimate, rec.leak_bits, 64)
    assert set(first.summary()) == {"n_pulses", "detected", "sifted_len", "qber", "leak_bits", "secret_len", "seconds"}


@pytest.mark.parametrize("seed", range(4))
def test_run_qkd_agreement_across_seeds(seed):
    run = run_qkd(QkdLinkConfig(n_pulses=100_000, flip_prob=0.05, seed=100 + seed))
    assert run.alice.octets == run.bob.octets


def test_run_qkd_high_qber_fails_at_reconciliation():
    with pytest.raises(ReconciliationFailed):
        run_qkd(QkdLinkConfig(n_pulses=100_000, flip_prob=0.25, seed=1))
