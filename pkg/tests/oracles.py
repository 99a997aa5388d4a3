"""Independent reference routines used to derive and cross-check
expected values. Deliberately written as literal transliterations of the
published constructions, separate from the package implementations."""

import struct

_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"


def spamsum_oracle(data):
    """Literal spamsum: returns 'blocksize:sig1:sig2'."""
    assert len(data) > 0
    bs = 3
    while bs * 64 < len(data):
        bs = bs * 2
    while True:
        sig1 = ""
        sig2 = ""
        h1 = 0x28021967
        h2 = 0x28021967
        w = [0, 0, 0, 0, 0, 0, 0]
        r1 = r2 = r3 = 0
        n = 0
        rh = 0
        for c in data:
            r2 = (r2 - r1 + 7 * c) & 0xFFFFFFFF
            r1 = (r1 + c - w[n]) & 0xFFFFFFFF
            w[n] = c
            n = (n + 1) % 7
            r3 = ((r3 << 5) ^ c) & 0xFFFFFFFF
            rh = (r1 + r2 + r3) & 0xFFFFFFFF
            h1 = ((h1 * 0x01000193) ^ c) & 0xFFFFFFFF
            h2 = ((h2 * 0x01000193) ^ c) & 0xFFFFFFFF
            if rh % bs == bs - 1 and len(sig1) < 63:
                sig1 += _ALPHABET[h1 % 64]
                h1 = 0x28021967
            if rh % (bs * 2) == bs * 2 - 1 and len(sig2) < 31:
                sig2 += _ALPHABET[h2 % 64]
                h2 = 0x28021967
        if rh != 0 or len(sig1) == 0:
            sig1 += _ALPHABET[h1 % 64]
        if rh != 0 or len(sig2) == 0:
            sig2 += _ALPHABET[h2 % 64]
        if bs > 3 and len(sig1) < 32:
            bs = bs // 2
        else:
            return "%d:%s:%s" % (bs, sig1, sig2)


_PEARSON = [
    1, 87, 49, 12, 176, 178, 102, 166, 121, 193, 6, 84, 249, 230, 44, 163,
    14, 197, 213, 181, 161, 85, 218, 80, 64, 239, 24, 226, 236, 142, 38, 200,
    110, 177, 104, 103, 141, 253, 255, 50, 77, 101, 81, 18, 45, 96, 31, 222,
    25, 107, 190, 70, 86, 237, 240, 34, 72, 242, 20, 214, 244, 227, 149, 235,
    97, 234, 57, 22, 60, 250, 82, 175, 208, 5, 127, 199, 111, 62, 135, 248,
    174, 169, 211, 58, 66, 154, 106, 195, 245, 171, 17, 187, 182, 179, 0, 243,
    132, 56, 148, 75, 128, 133, 158, 100, 130, 126, 91, 13, 153, 246, 216, 219,
    119, 68, 223, 78, 83, 88, 201, 99, 122, 11, 92, 32, 136, 114, 52, 10,
    138, 30, 48, 183, 156, 35, 61, 26, 143, 74, 251, 94, 129, 162, 63, 152,
    170, 7, 115, 167, 241, 206, 3, 150, 55, 59, 151, 220, 90, 53, 23, 131,
    125, 173, 15, 238, 79, 95, 89, 16, 105, 137, 225, 224, 217, 160, 37, 123,
    118, 73, 2, 157, 46, 116, 9, 145, 134, 228, 207, 212, 202, 215, 69, 229,
    27, 188, 67, 124, 168, 252, 42, 4, 29, 108, 21, 247, 19, 205, 39, 203,
    233, 40, 186, 147, 198, 192, 155, 33, 164, 191, 98, 204, 165, 180, 117, 76,
    140, 36, 210, 172, 41, 54, 159, 8, 185, 232, 113, 196, 231, 47, 146, 120,
    51, 65, 28, 144, 254, 221, 93, 189, 194, 139, 112, 43, 71, 109, 184, 209,
]


def _pearson4(a, b, c, d):
    return _PEARSON[_PEARSON[_PEARSON[_PEARSON[a] ^ b] ^ c] ^ d]


def tlsh_oracle(data):
    """Literal sliding-window bucket construction: 70 lowercase hex chars,
    or None when the input is too short or has no quartile spread."""
    import math
    if len(data) < 50:
        return None
    buckets = [0] * 256
    checksum = 0
    for i in range(4, len(data)):
        checksum = _pearson4(0, data[i], data[i - 1], checksum)
        buckets[_pearson4(2, data[i], data[i - 1], data[i - 2])] += 1
        buckets[_pearson4(3, data[i], data[i - 1], data[i - 3])] += 1
        buckets[_pearson4(5, data[i], data[i - 2], data[i - 3])] += 1
        buckets[_pearson4(7, data[i], data[i - 1], data[i - 4])] += 1
        buckets[_pearson4(11, data[i], data[i - 2], data[i - 4])] += 1
        buckets[_pearson4(13, data[i], data[i - 3], data[i - 4])] += 1
    ordered = sorted(buckets[:128])
    q1, q2, q3 = ordered[31], ordered[63], ordered[95]
    if q3 == 0:
        return None
    n = len(data)
    if n <= 656:
        lvalue = int(math.floor(math.log(n) / 0.4054651))
    elif n <= 3199:
        lvalue = int(math.floor(math.log(n) / 0.26236426 - 8.72777))
    else:
        lvalue = int(math.floor(math.log(n) / 0.095310180 - 62.5472))
    lvalue = lvalue % 256
    q1r = int(q1 * 100 / q3) % 16
    q2r = int(q2 * 100 / q3) % 16

    def swap(x):
        return ((x & 0x0F) << 4) | ((x & 0xF0) >> 4)

    hexdigits = "%02x%02x%02x" % (swap(checksum), swap(lvalue),
                                  (q1r << 4) | q2r)
    code = []
    for i in range(32):
        b = 0
        for j in range(4):
            k = buckets[4 * i + j]
            if k > q3:
                b += 3 << (j * 2)
            elif k > q2:
                b += 2 << (j * 2)
            elif k > q1:
                b += 1 << (j * 2)
        code.append(b)
    for b in reversed(code):
        hexdigits += "%02x" % b
    return hexdigits


def pe_import_dump(data):
    """Independent PE import walk: list of raw (dll, symbol_or_ordinal)
    strings before any normalization."""
    assert data[:2] == b"MZ"
    (pe_off,) = struct.unpack_from("<I", data, 0x3C)
    assert data[pe_off:pe_off + 4] == b"PE\x00\x00"
    nsect, = struct.unpack_from("<H", data, pe_off + 6)
    opt_size, = struct.unpack_from("<H", data, pe_off + 20)
    opt = pe_off + 24
    magic, = struct.unpack_from("<H", data, opt)
    plus = magic == 0x20B
    ndirs_off = opt + (108 if plus else 92)
    imp_rva, imp_size = struct.unpack_from("<II", data, ndirs_off + 4 + 8)
    if imp_rva == 0:
        return []
    sects = []
    base = opt + opt_size
    for i in range(nsect):
        vs, va, rs, rp = struct.unpack_from("<IIII", data, base + 40 * i + 8)
        sects.append((va, max(vs, rs), rp))

    def off(rva):
        for va, size, rp in sects:
            if va <= rva < va + size:
                return rp + rva - va
        raise AssertionError("unmapped rva")

    def cstr(o):
        end = data.index(b"\x00", o)
        return data[o:end].decode()

    result = []
    d = off(imp_rva)
    while True:
        oft, _, _, name_rva, ft = struct.unpack_from("<IIIII", data, d)
        if oft == 0 and name_rva == 0 and ft == 0:
            break
        dll = cstr(off(name_rva))
        t = off(oft or ft)
        width, flag = (8, 1 << 63) if plus else (4, 1 << 31)
        while True:
            if plus:
                val, = struct.unpack_from("<Q", data, t)
            else:
                val, = struct.unpack_from("<I", data, t)
            if val == 0:
                break
            if val & flag:
                result.append((dll, "#%d" % (val & 0xFFFF)))
            else:
                result.append((dll, cstr(off(val) + 2)))
            t += width
        d += 20
    return result
