"""QR symbol encoder: byte mode, versions 1-40, error correction L/M/Q/H.

Produces the module grid directly (1 = dark). Version is chosen as the
smallest that fits the payload at the requested correction level; the mask
is chosen by the standard penalty score. Decoding is delegated to an
independent detector in validate_scan, so encoder and oracle never share
code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PayloadTooLarge

EC_LEVELS = ("L", "M", "Q", "H")
_EC_FORMAT_BITS = {"L": 1, "M": 0, "Q": 3, "H": 2}

# ECC codewords per block, indexed [level][version]; index 0 unused
_ECC_PER_BLOCK = {
    "L": (0, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18, 20, 24, 26, 30, 22, 24, 28, 30, 28,
          28, 28, 28, 30, 30, 26, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
          30, 30),
    "M": (0, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26, 30, 22, 22, 24, 24, 28, 28, 26, 26,
          26, 26, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28,
          28, 28),
    "Q": (0, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24, 28, 26, 24, 20, 30, 24, 28, 28, 26,
          30, 28, 30, 30, 30, 30, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
          30, 30),
    "H": (0, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28, 24, 28, 22, 24, 24, 30, 28, 28, 26,
          28, 30, 24, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
          30, 30),
}

_NUM_BLOCKS = {
    "L": (0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 4, 6, 6, 6, 6, 7, 8, 8, 9, 9, 10,
          12, 12, 12, 13, 14, 15, 16, 17, 18, 19, 19, 20, 21, 22, 24, 25),
    "M": (0, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5, 5, 8, 9, 9, 10, 10, 11, 13, 14, 16, 17, 17,
          18, 20, 21, 23, 25, 26, 28, 29, 31, 33, 35, 37, 38, 40, 43, 45, 47, 49),
    "Q": (0, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8, 8, 10, 12, 16, 12, 17, 16, 18, 21, 20, 23,
          23, 25, 27, 29, 34, 34, 35, 38, 40, 43, 45, 48, 51, 53, 56, 59, 62, 65, 68),
    "H": (0, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8, 11, 11, 16, 16, 18, 16, 19, 21, 25, 25, 25,
          34, 30, 32, 35, 37, 40, 42, 45, 48, 51, 54, 57, 60, 63, 66, 70, 74, 77, 81),
}


@dataclass
class QrMatrix:
    """Finished symbol: N×N module grid where 1 = dark."""

    modules: np.ndarray
    version: int
    ec_level: str
    payload: str

    def __post_init__(self):
        self.modules = np.asarray(self.modules, dtype=np.uint8)
        n = 17 + 4 * self.version
        if self.modules.shape != (n, n):
            raise ValueError(f"version {self.version} grid must be {n}x{n}, "
                             f"got {self.modules.shape}")
        if self.ec_level not in EC_LEVELS:
            raise ValueError(f"bad ec_level {self.ec_level!r}")

    @property
    def size(self) -> int:
        return self.modules.shape[0]


# --- capacity ---

def _raw_data_modules(version: int) -> int:
    result = (16 * version + 128) * version + 64
    if version >= 2:
        numalign = version // 7 + 2
        result -= (25 * numalign - 10) * numalign - 55
        if version >= 7:
            result -= 36
    return result


def _data_codewords(version: int, level: str) -> int:
    total = _raw_data_modules(version) // 8
    return total - _ECC_PER_BLOCK[level][version] * _NUM_BLOCKS[level][version]


def byte_capacity(version: int, level: str) -> int:
    """Maximum byte-mode payload length for a version/level pair."""
    cclen = 8 if version <= 9 else 16
    return (_data_codewords(version, level) * 8 - 4 - cclen) // 8


def smallest_version(payload_len: int, level: str) -> int:
    for version in range(1, 41):
        if byte_capacity(version, level) >= payload_len:
            return version
    raise PayloadTooLarge(
        f"payload of {payload_len} bytes exceeds version 40-{level} capacity "
        f"({byte_capacity(40, level)} bytes)")


# --- Reed-Solomon over GF(256), reduction polynomial 0x11D ---

_EXP = np.zeros(512, dtype=np.int64)
_LOG = np.zeros(256, dtype=np.int64)
_val = 1
for _i in range(255):
    _EXP[_i] = _val
    _LOG[_val] = _i
    _val <<= 1
    if _val & 0x100:
        _val ^= 0x11D
for _i in range(255, 512):
    _EXP[_i] = _EXP[_i - 255]


def _gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(_EXP[_LOG[a] + _LOG[b]])


def _rs_generator(degree: int) -> list[int]:
    # product of (x - alpha^i), built lowest power first then reversed so
    # index 0 is the leading (always-1) coefficient
    poly = [1]
    for i in range(degree):
        next_poly = [0] * (len(poly) + 1)
        for j, coeff in enumerate(poly):
            next_poly[j] ^= _gf_mul(coeff, int(_EXP[i]))
            next_poly[j + 1] ^= coeff
        poly = next_poly
    return poly[::-1]


def rs_ecc(data: list[int], degree: int) -> list[int]:
    """Reed-Solomon remainder codewords for one block."""
    gen = _rs_generator(degree)
    rem = [0] * degree
    for byte in data:
        factor = byte ^ rem[0]
        rem = rem[1:] + [0]
        for i in range(degree):
            rem[i] ^= _gf_mul(gen[i + 1], factor)
    return rem


# --- bit assembly ---

def _build_codewords(payload: bytes, version: int, level: str) -> list[int]:
    cclen = 8 if version <= 9 else 16
    bits: list[int] = []

    def put(value: int, length: int):
        for i in reversed(range(length)):
            bits.append((value >> i) & 1)

    put(0b0100, 4)                 # byte mode
    put(len(payload), cclen)
    for byte in payload:
        put(byte, 8)

    capacity_bits = _data_codewords(version, level) * 8
    put(0, min(4, capacity_bits - len(bits)))          # terminator
    put(0, (8 - len(bits) % 8) % 8)                    # byte alignment
    pad = (0xEC, 0x11)
    idx = 0
    while len(bits) < capacity_bits:
        put(pad[idx % 2], 8)
        idx += 1

    return [int("".join(map(str, bits[i:i + 8])), 2) for i in range(0, len(bits), 8)]


def _interleave(codewords: list[int], version: int, level: str) -> list[int]:
    num_blocks = _NUM_BLOCKS[level][version]
    ecc_len = _ECC_PER_BLOCK[level][version]
    raw_total = _raw_data_modules(version) // 8
    num_short = num_blocks - raw_total % num_blocks
    short_len = raw_total // num_blocks - ecc_len

    blocks: list[list[int]] = []
    eccs: list[list[int]] = []
    pos = 0
    for i in range(num_blocks):
        length = short_len + (0 if i < num_short else 1)
        block = codewords[pos:pos + length]
        pos += length
        blocks.append(block)
        eccs.append(rs_ecc(block, ecc_len))
    assert pos == len(codewords)

    out: list[int] = []
    for i in range(short_len + 1):
        for block in blocks:
            if i < len(block):
                out.append(block[i])
    for i in range(ecc_len):
        for ecc in eccs:
            out.append(ecc[i])
    return out


# --- matrix construction ---

def _alignment_positions(version: int) -> list[int]:
    if version == 1:
        return []
    numalign = version // 7 + 2
    size = 17 + 4 * version
    if version == 32:
        step = 26
    else:
        step = (version * 4 + numalign * 2 + 1) // (numalign * 2 - 2) * 2
    result = [6]
    pos = size - 7
    for _ in range(numalign - 1):
        result.insert(1, pos)
        pos -= step
    return sorted(result)


def _place_function_patterns(version: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (modules, is_function) with all function patterns drawn."""
    n = 17 + 4 * version
    modules = np.zeros((n, n), dtype=np.uint8)
    func = np.zeros((n, n), dtype=bool)

    def set_module(y: int, x: int, dark: int):
        modules[y, x] = dark
        func[y, x] = True

    # finder patterns (dark center block + dark ring) with light separators
    for cy, cx in ((3, 3), (3, n - 4), (n - 4, 3)):
        for dy in range(-4, 5):
            for dx in range(-4, 5):
                y, x = cy + dy, cx + dx
                if 0 <= y < n and 0 <= x < n:
                    dist = max(abs(dy), abs(dx))
                    set_module(y, x, 1 if dist <= 1 or dist == 3 else 0)

    # timing patterns
    for i in range(n):
        if not func[6, i]:
            set_module(6, i, 1 - i % 2)
        if not func[i, 6]:
            set_module(i, 6, 1 - i % 2)

    # alignment patterns (skip the three finder corners)
    positions = _alignment_positions(version)
    for cy in positions:
        for cx in positions:
            if (cy <= 8 and cx <= 8) or (cy <= 8 and cx >= n - 9) or (cy >= n - 9 and cx <= 8):
                continue
            for dy in range(-2, 3):
                for dx in range(-2, 3):
                    set_module(cy + dy, cx + dx, 1 if max(abs(dy), abs(dx)) != 1 else 0)

    # reserve format info areas
    for i in range(9):
        if i != 6:
            func[8, i] = True
            func[i, 8] = True
    func[8, 8] = True
    for i in range(8):
        func[8, n - 1 - i] = True
        func[n - 1 - i, 8] = True
    # dark module
    set_module(n - 8, 8, 1)

    # version info areas for v >= 7
    if version >= 7:
        for i in range(6):
            for j in range(3):
                func[n - 11 + j, i] = True
                func[i, n - 11 + j] = True

    return modules, func


def _draw_format_bits(modules: np.ndarray, level: str, mask: int):
    n = modules.shape[0]
    data = _EC_FORMAT_BITS[level] << 3 | mask
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * 0x537)
    bits = (data << 10 | rem) ^ 0x5412

    def bit(i: int) -> int:
        return (bits >> i) & 1

    # first copy around the top-left finder: down column 8, then left along row 8
    for i in range(6):
        modules[i, 8] = bit(i)
    modules[7, 8] = bit(6)
    modules[8, 8] = bit(7)
    modules[8, 7] = bit(8)
    for i in range(9, 15):
        modules[8, 14 - i] = bit(i)
    # second copy: right end of row 8, then bottom of column 8
    for i in range(8):
        modules[8, n - 1 - i] = bit(i)
    for i in range(8, 15):
        modules[n - 15 + i, 8] = bit(i)
    modules[n - 8, 8] = 1   # dark module stays dark


def _draw_version_bits(modules: np.ndarray, version: int):
    if version < 7:
        return
    n = modules.shape[0]
    rem = version
    for _ in range(12):
        rem = (rem << 1) ^ ((rem >> 11) * 0x1F25)
    bits = version << 12 | rem
    for i in range(18):
        b = (bits >> i) & 1
        a, c = n - 11 + i % 3, i // 3
        modules[a, c] = b
        modules[c, a] = b


def _place_data(modules: np.ndarray, func: np.ndarray, codewords: list[int]):
    n = modules.shape[0]
    bits = []
    for cw in codewords:
        for i in reversed(range(8)):
            bits.append((cw >> i) & 1)
    # remainder bits are zero-filled implicitly
    idx = 0
    right = n - 1
    while right >= 1:
        if right == 6:
            right = 5
        for vert in range(n):
            for dx in (0, -1):
                x = right + dx
                upward = ((right + 1) & 2) == 0
                y = (n - 1 - vert) if upward else vert
                if not func[y, x] and idx < len(bits):
                    modules[y, x] = bits[idx]
                    idx += 1
        right -= 2


def _mask_grid(mask: int, n: int) -> np.ndarray:
    ys, xs = np.mgrid[0:n, 0:n]
    if mask == 0:
        return (xs + ys) % 2 == 0
    if mask == 1:
        return ys % 2 == 0
    if mask == 2:
        return xs % 3 == 0
    if mask == 3:
        return (xs + ys) % 3 == 0
    if mask == 4:
        return (ys // 2 + xs // 3) % 2 == 0
    if mask == 5:
        return xs * ys % 2 + xs * ys % 3 == 0
    if mask == 6:
        return (xs * ys % 2 + xs * ys % 3) % 2 == 0
    return ((xs + ys) % 2 + xs * ys % 3) % 2 == 0


def _axis_run_penalty(modules: np.ndarray) -> int:
    """Same-color runs of length >= 5 along rows: 3 + (len - 5) each."""
    n = modules.shape[0]
    total = 0
    changes = modules[:, 1:] != modules[:, :-1]
    for row in range(n):
        idx = np.flatnonzero(changes[row])
        bounds = np.concatenate(([0], idx + 1, [n]))
        runs = np.diff(bounds)
        long = runs[runs >= 5]
        total += int((long - 2).sum())           # 3 + (len - 5) == len - 2
    return total


def _axis_finder_penalty(modules: np.ndarray) -> int:
    """Finder-like pattern 1011101 flanked by 0000, along rows: 40 each."""
    n = modules.shape[0]
    if n < 11:
        return 0
    pat_a = np.array([1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0], dtype=np.uint8)
    windows = np.lib.stride_tricks.sliding_window_view(modules, 11, axis=1)
    hits_a = (windows == pat_a).all(axis=2).sum()
    hits_b = (windows == pat_a[::-1]).all(axis=2).sum()
    return 40 * int(hits_a + hits_b)


def _penalty(modules: np.ndarray) -> int:
    n = modules.shape[0]
    score = 0
    for grid in (modules, modules.T):
        score += _axis_run_penalty(grid) + _axis_finder_penalty(grid)

    blocks = (modules[:-1, :-1] == modules[1:, :-1]) & \
             (modules[:-1, :-1] == modules[:-1, 1:]) & \
             (modules[:-1, :-1] == modules[1:, 1:])
    score += 3 * int(blocks.sum())

    dark = int(modules.sum())
    total = n * n
    k = 0
    while not (total * (50 - 5 * (k + 1)) <= dark * 100 <= total * (50 + 5 * (k + 1))):
        k += 1
    score += 10 * k
    return score


def encode_qr(payload: str, ec_level: str = "H") -> QrMatrix:
    """Encode text at the smallest version that fits; default correction H."""
    if ec_level not in EC_LEVELS:
        raise ValueError(f"ec_level must be one of {EC_LEVELS}")
    if not payload:
        raise ValueError("payload must be non-empty")
    data = payload.encode("utf-8")
    version = smallest_version(len(data), ec_level)

    codewords = _interleave(_build_codewords(data, version, ec_level), version, ec_level)
    base, func = _place_function_patterns(version)
    _place_data(base, func, codewords)
    _draw_version_bits(base, version)

    n = base.shape[0]
    best = None
    best_score = None
    for mask in range(8):
        candidate = base.copy()
        flip = _mask_grid(mask, n) & ~func
        candidate[flip] ^= 1
        _draw_format_bits(candidate, ec_level, mask)
        score = _penalty(candidate)
        if best_score is None or score < best_score:
            best, best_score = candidate, score

    return QrMatrix(modules=best, version=version, ec_level=ec_level, payload=payload)
