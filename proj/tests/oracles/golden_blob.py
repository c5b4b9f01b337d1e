#!/usr/bin/env python3
"""Independent reference for the golden container blob in docs/format.md.

Builds the byte stream from the documented field layout using only the
Python standard library plus numpy for float32 rounding. Prints the blob as
hex and the decoded tensor values.
"""
import math
import struct

import numpy as np

MASK = (1 << 64) - 1


def splitmix_signs(seed, dim):
    state = seed
    out = []
    for _ in range(dim):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        z ^= z >> 31
        out.append(1.0 if z & 1 else -1.0)
    return out


def hadamard(d):
    h = np.array([[1.0]])
    while h.shape[0] < d:
        h = np.block([[h, h], [h, -h]])
    return h / math.sqrt(d)


def fnv1a(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def encode_vector(x, signs, n):
    d = len(x)
    y = hadamard(d) @ (np.array(signs) * np.array(x, dtype=np.float64))
    y = y.astype(np.float32)
    pairs = []
    for i in range(d // 2):
        a, b = float(y[2 * i]), float(y[2 * i + 1])
        r = float(np.float32(math.sqrt(a * a + b * b)))
        theta = math.atan2(b, a)
        if theta < 0:
            theta += 2 * math.pi
        k = int(math.floor(n * theta / (2 * math.pi) + 0.5)) % n
        pairs.append((r, k))
    return y, pairs


def pack_record(pairs, n):
    bits = []  # LSB-first stream of (value, width)
    for r, _ in pairs:
        bits.append((struct.unpack("<I", struct.pack("<f", r))[0], 32))
    width = (n - 1).bit_length()
    for _, k in pairs:
        bits.append((k, width))
    acc, pos = 0, 0
    for v, w in bits:
        acc |= v << pos
        pos += w
    nbytes = (pos + 7) // 8
    return acc.to_bytes(nbytes, "little")


def decode_vector(pairs, signs, n):
    y = []
    for r, k in pairs:
        q = 4 * k
        if q % n == 0:
            c, s = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][q // n]
        else:
            c, s = math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n)
        y += [r * c, r * s]
    x = np.array(signs) * (hadamard(len(y)) @ np.array(y))
    return x.astype(np.float32)


def main():
    seed, d, n = 42, 4, 4
    x_k = [1.0, 2.0, 3.0, 4.0]
    x_v = [0.5, -1.0, 0.0, 2.0]
    signs = splitmix_signs(seed, d)

    config = struct.pack("<I", 1) + struct.pack("<II", n, n) + bytes([0, 0, 0, 0]) + struct.pack("<Q", seed)
    header = b"AKVC" + struct.pack("<HH", 1, 0) + struct.pack("<IIII", 1, d, 1, 1)
    header += struct.pack("<Q", seed) + bytes([0, 0, 0, 0]) + struct.pack("<Q", fnv1a(config))
    header += struct.pack("<II", n, n)

    payload = b""
    decoded = []
    for x in (x_k, x_v):
        y, pairs = encode_vector(x, signs, n)
        print("signs", signs, "rotated", list(y), "pairs", pairs)
        payload += pack_record(pairs, n)
        decoded.append(decode_vector(pairs, signs, n))

    blob = header + payload
    print("config hash 0x%016x" % fnv1a(config))
    print("header", len(header), "payload", len(payload))
    print("hex", blob.hex())
    for v in decoded:
        print("decoded", [repr(float(t)) for t in v])


if __name__ == "__main__":
    main()
