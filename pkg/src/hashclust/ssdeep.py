"""Context-triggered piecewise hashing (spamsum/ssdeep construction).

Digests are interoperable with the classic spamsum format: a block size
and two base64 signatures, the second computed at twice the block size.
Comparison maps a weighted edit distance between signatures onto a
0..100 similarity score.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInput, MalformedDigest

B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
_B64_SET = frozenset(B64)

SPAMSUM_LENGTH = 64
MIN_BLOCKSIZE = 3
ROLLING_WINDOW = 7

_HASH_PRIME = 0x01000193
_HASH_INIT = 0x28021967
_U32 = 0xFFFFFFFF


@dataclass(frozen=True)
class SsdeepDigest:
    block_size: int
    sig_coarse: str
    sig_fine: str

    def __str__(self):
        return serialize_digest(self)


def serialize_digest(d: SsdeepDigest) -> str:
    return f"{d.block_size}:{d.sig_coarse}:{d.sig_fine}"


def parse_digest(s: str) -> SsdeepDigest:
    parts = s.split(":")
    if len(parts) != 3:
        raise MalformedDigest(f"expected 3 colon-separated fields, got {len(parts)}")
    bs_text, coarse, fine = parts
    if not bs_text.isdigit():
        raise MalformedDigest("block size is not a number", position=0)
    bs = int(bs_text)
    if not _valid_block_size(bs):
        raise MalformedDigest(f"block size {bs} is not 3*2^n", position=0)
    offset = len(bs_text) + 1
    for sig, cap in ((coarse, SPAMSUM_LENGTH), (fine, SPAMSUM_LENGTH // 2)):
        if len(sig) > cap:
            raise MalformedDigest(f"signature longer than {cap} characters", position=offset)
        for i, ch in enumerate(sig):
            if ch not in _B64_SET:
                raise MalformedDigest(f"invalid character {ch!r}", position=offset + i)
        offset += len(sig) + 1
    return SsdeepDigest(bs, coarse, fine)


def _valid_block_size(bs: int) -> bool:
    if bs < MIN_BLOCKSIZE or bs % MIN_BLOCKSIZE != 0:
        return False
    q = bs // MIN_BLOCKSIZE
    return q & (q - 1) == 0


class _RollingHash:
    """7-byte rolling hash used to find segment boundaries."""

    __slots__ = ("h1", "h2", "h3", "window", "pos")

    def __init__(self):
        self.h1 = 0
        self.h2 = 0
        self.h3 = 0
        self.window = bytearray(ROLLING_WINDOW)
        self.pos = 0

    def update(self, c: int) -> int:
        self.h2 = (self.h2 - self.h1 + ROLLING_WINDOW * c) & _U32
        self.h1 = (self.h1 + c - self.window[self.pos]) & _U32
        self.window[self.pos] = c
        self.pos = (self.pos + 1) % ROLLING_WINDOW
        self.h3 = ((self.h3 << 5) ^ c) & _U32
        return (self.h1 + self.h2 + self.h3) & _U32


def _signatures_at(data: bytes, block_size: int) -> tuple[str, str]:
    """Piecewise signatures at block_size and 2*block_size in one pass."""
    roll = _RollingHash()
    h_coarse = _HASH_INIT
    h_fine = _HASH_INIT
    coarse: list[str] = []
    fine: list[str] = []
    double = block_size * 2
    rh = 0
    for c in data:
        rh = roll.update(c)
        h_coarse = ((h_coarse * _HASH_PRIME) ^ c) & _U32
        h_fine = ((h_fine * _HASH_PRIME) ^ c) & _U32
        if rh % block_size == block_size - 1 and len(coarse) < SPAMSUM_LENGTH - 1:
            coarse.append(B64[h_coarse % 64])
            h_coarse = _HASH_INIT
        if rh % double == double - 1 and len(fine) < SPAMSUM_LENGTH // 2 - 1:
            fine.append(B64[h_fine % 64])
            h_fine = _HASH_INIT
    # Fold whatever remains after the last trigger into a final character.
    # Also guarantees a nonempty signature when no boundary ever fired
    # (e.g. all-zero input, where the rolling hash stays at 0).
    if rh != 0 or not coarse:
        coarse.append(B64[h_coarse % 64])
    if rh != 0 or not fine:
        fine.append(B64[h_fine % 64])
    return "".join(coarse), "".join(fine)


def ssdeep_hash(data: bytes) -> SsdeepDigest:
    if len(data) == 0:
        raise EmptyInput("cannot hash empty input")
    block_size = MIN_BLOCKSIZE
    while block_size * SPAMSUM_LENGTH < len(data):
        block_size *= 2
    while True:
        coarse, fine = _signatures_at(data, block_size)
        # A sparse coarse signature means the block size guess was too
        # big for this content; retry at half size.
        if block_size > MIN_BLOCKSIZE and len(coarse) < SPAMSUM_LENGTH // 2:
            block_size //= 2
        else:
            return SsdeepDigest(block_size, coarse, fine)


def _eliminate_runs(sig: str) -> str:
    """Collapse runs of more than 3 identical characters down to 3."""
    out: list[str] = []
    for ch in sig:
        if len(out) >= 3 and ch == out[-1] == out[-2] == out[-3]:
            continue
        out.append(ch)
    return "".join(out)


def _has_common_substring(s1: str, s2: str) -> bool:
    if len(s1) < ROLLING_WINDOW or len(s2) < ROLLING_WINDOW:
        return False
    grams = {s1[i:i + ROLLING_WINDOW] for i in range(len(s1) - ROLLING_WINDOW + 1)}
    return any(s2[i:i + ROLLING_WINDOW] in grams
               for i in range(len(s2) - ROLLING_WINDOW + 1))


def _edit_distance(s1: str, s2: str) -> int:
    """Levenshtein distance with substitution cost 2 (insert/delete cost 1)."""
    prev = list(range(len(s2) + 1))
    for i in range(1, len(s1) + 1):
        cur = [i]
        for j in range(1, len(s2) + 1):
            sub = prev[j - 1] + (0 if s1[i - 1] == s2[j - 1] else 2)
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, sub))
        prev = cur
    return prev[-1]


def _score_strings(s1: str, s2: str, block_size: int) -> int:
    if len(s1) > SPAMSUM_LENGTH or len(s2) > SPAMSUM_LENGTH:
        return 0
    if not _has_common_substring(s1, s2):
        return 0
    e = _edit_distance(s1, s2)
    score = (e * SPAMSUM_LENGTH) // (len(s1) + len(s2))
    score = (100 * score) // SPAMSUM_LENGTH
    score = 100 - score
    # Small block sizes make spurious high scores cheap; cap by how much
    # signature material actually backs the match.
    if block_size >= (99 + ROLLING_WINDOW) // ROLLING_WINDOW * MIN_BLOCKSIZE:
        return score
    cap = block_size // MIN_BLOCKSIZE * min(len(s1), len(s2))
    return min(score, cap)


def ssdeep_compare(a: SsdeepDigest, b: SsdeepDigest) -> int:
    bs1, bs2 = a.block_size, b.block_size
    if bs1 != bs2 and bs1 != bs2 * 2 and bs2 != bs1 * 2:
        return 0
    a1, a2 = _eliminate_runs(a.sig_coarse), _eliminate_runs(a.sig_fine)
    b1, b2 = _eliminate_runs(b.sig_coarse), _eliminate_runs(b.sig_fine)
    if bs1 == bs2 and a1 == b1 and a2 == b2:
        return 100
    if bs1 == bs2:
        return max(_score_strings(a1, b1, bs1), _score_strings(a2, b2, bs1 * 2))
    if bs1 == bs2 * 2:
        return _score_strings(a1, b2, bs1)
    return _score_strings(a2, b1, bs2)
