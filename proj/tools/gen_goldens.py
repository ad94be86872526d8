#!/usr/bin/env python3
"""Regenerate goldens/hash_vectors.tsv with the reference mmh3 package.

    pip install mmh3
    python3 tools/gen_goldens.py > goldens/hash_vectors.tsv
"""
import mmh3

MASK = 0x5F375A86

TOKENS = ["spam", "a", "hello", "Hello, world!", "__BIAS__", "u7\x1fviagra",
          "w12345", "0:0", "31:3", "x" * 37, "café", "日本語", "tab\there"]
CONFIGS = [(4, 0), (10, 1), (18, 0x9747B28C), (26, 42), (30, 0xFFFFFFFF), (1, 7)]


def slot(token, bits, bucket_seed, sign_seed):
    data = token.encode("utf-8")
    h = mmh3.hash(data, bucket_seed, signed=False)
    s = mmh3.hash(data, sign_seed, signed=False)
    return h & ((1 << bits) - 1), 1 if s & 1 else -1


print("# token(hex)\tbits\tbucket_seed\tsign_seed\tbucket\tsign")
for bits, seed in CONFIGS:
    sign_seed = seed ^ MASK
    for tok in TOKENS:
        b, s = slot(tok, bits, seed, sign_seed)
        print(f"{tok.encode('utf-8').hex()}\t{bits}\t{seed}\t{sign_seed}\t{b}\t{s}")
# Raw murmur3_32 values; bits 0 marks a raw-hash row (bucket holds the hash).
for tok, seed in [("", 0), ("", 1), ("", 0xFFFFFFFF), ("a", 0), ("abc", 0), ("abcd", 0),
                  ("Hello, world!", 0x9747B28C), ("The quick brown fox jumps over the lazy dog", 0)]:
    print(f"{tok.encode('utf-8').hex()}\t0\t{seed}\t0\t{mmh3.hash(tok.encode('utf-8'), seed, signed=False)}\t0")
