import random

import pytest

from hashclust.errors import DegenerateInput, MalformedDigest, TooShort
from hashclust.tlsh import (
    TlshDigest,
    parse_digest,
    serialize_digest,
    tlsh_distance,
    tlsh_hash,
)

from oracles import tlsh_oracle


def _random_bytes(seed, size):
    rnd = random.Random(seed)
    return bytes(rnd.randrange(256) for _ in range(size))


def test_golden_vectors(golden_vectors):
    for vec in golden_vectors:
        if vec["tlsh"] == "DEGENERATE":
            with pytest.raises(DegenerateInput):
                tlsh_hash(vec["data"])
        else:
            assert serialize_digest(tlsh_hash(vec["data"])) == vec["tlsh"], \
                vec["name"]


def test_too_short_rejected():
    with pytest.raises(TooShort):
        tlsh_hash(b"x" * 49)
    tlsh_hash(_random_bytes(0, 50))  # exactly 50 is fine


def test_constant_input_degenerate():
    with pytest.raises(DegenerateInput):
        tlsh_hash(b"\x00" * 1000)


def test_deterministic():
    data = _random_bytes(5, 3000)
    assert tlsh_hash(data) == tlsh_hash(data)


def test_body_codes_in_range(golden_vectors):
    for vec in golden_vectors:
        if vec["tlsh"] == "DEGENERATE":
            continue
        d = tlsh_hash(vec["data"])
        assert len(d.body) == 128
        assert all(c in (0, 1, 2, 3) for c in d.body)


def test_self_distance_zero():
    d = tlsh_hash(_random_bytes(1, 1000))
    assert tlsh_distance(d, d) == 0


def test_single_body_code_step_scores_one():
    d = tlsh_hash(_random_bytes(2, 1000))
    body = list(d.body)
    body[17] = body[17] + 1 if body[17] < 3 else body[17] - 1
    d2 = TlshDigest(d.checksum, d.l_value, d.q1_ratio, d.q2_ratio,
                    tuple(body))
    assert tlsh_distance(d, d2) == 1


def test_opposite_body_codes_score_six():
    d = tlsh_hash(_random_bytes(3, 1000))
    body = [0] * 128
    base = TlshDigest(d.checksum, d.l_value, d.q1_ratio, d.q2_ratio,
                      tuple(body))
    flipped = TlshDigest(d.checksum, d.l_value, d.q1_ratio, d.q2_ratio,
                         tuple([3] + body[1:]))
    assert tlsh_distance(base, flipped) == 6


def test_distance_symmetric_over_seeded_pairs():
    digests = [tlsh_hash(_random_bytes(s, 500 + 37 * s)) for s in range(15)]
    pairs = [(a, b) for i, a in enumerate(digests) for b in digests[i:]]
    assert len(pairs) >= 100
    for a, b in pairs:
        assert tlsh_distance(a, b) == tlsh_distance(b, a)
        assert tlsh_distance(a, b) >= 0


def test_distance_zero_iff_identical():
    a = tlsh_hash(_random_bytes(8, 2000))
    b = tlsh_hash(_random_bytes(9, 2000))
    assert tlsh_distance(a, b) > 0


def test_locality_small_edits_beat_random():
    base = _random_bytes(1234, 65536)
    d_base = tlsh_hash(base)
    wins = 0
    for trial in range(100):
        rnd = random.Random(5000 + trial)
        buf = bytearray(base)
        for pos in rnd.sample(range(len(buf)), len(buf) // 100):
            buf[pos] = rnd.randrange(256)
        d_near = tlsh_hash(bytes(buf))
        d_far = tlsh_hash(_random_bytes(7000 + trial, 65536))
        if tlsh_distance(d_base, d_near) < tlsh_distance(d_base, d_far):
            wins += 1
    assert wins >= 95


def test_matches_independent_oracle_on_fresh_inputs():
    for seed in range(30):
        size = random.Random(seed).randrange(50, 20000)
        data = _random_bytes(8000 + seed, size)
        assert serialize_digest(tlsh_hash(data)) == tlsh_oracle(data)


def test_serialize_parse_round_trip(golden_vectors):
    for vec in golden_vectors:
        if vec["tlsh"] == "DEGENERATE":
            continue
        d = tlsh_hash(vec["data"])
        s = serialize_digest(d)
        assert len(s) == 70
        assert parse_digest(s) == d


def test_parse_rejects_wrong_length():
    with pytest.raises(MalformedDigest):
        parse_digest("a" * 69)


def test_parse_reports_invalid_character_position():
    with pytest.raises(MalformedDigest) as exc:
        parse_digest("ab" * 30 + "zz" + "ab" * 4)
    assert exc.value.position == 60
