"""Minimal perfect hashing via cascading collision bit arrays.

A minimal perfect hash function maps a static set of n keys bijectively
onto [0, n) in a few bits per key, without storing the keys. Build one
from 64-bit integers or byte strings, query it, and serialize it to a
portable binary image.

    >>> import bbmph
    >>> m, report = bbmph.build([b"ox", b"owl", b"elk"])
    >>> sorted(m.query(k) for k in [b"ox", b"owl", b"elk"])
    [0, 1, 2]
"""

from ._bbmph import (
    BuildReport,
    ConfigError,
    DuplicateKeysError,
    EmptyInputError,
    FormatError,
    LevelReport,
    Mphf,
    NotInFallbackError,
    TruncatedError,
    VersionError,
    build_int_keys,
    build_string_keys,
    decode,
    generate_keys,
    generate_strings,
    load,
    predict_bits_per_key,
    predict_level_fraction,
    predict_mean_level,
    predict_peak_memory_ratio,
    predict_peak_spill_ratio,
)

__all__ = [
    "BuildReport",
    "ConfigError",
    "DuplicateKeysError",
    "EmptyInputError",
    "FormatError",
    "LevelReport",
    "Mphf",
    "NotInFallbackError",
    "TruncatedError",
    "VersionError",
    "build",
    "build_int_keys",
    "build_string_keys",
    "decode",
    "generate_keys",
    "generate_strings",
    "load",
    "predict_bits_per_key",
    "predict_level_fraction",
    "predict_mean_level",
    "predict_peak_memory_ratio",
    "predict_peak_spill_ratio",
]


def build(keys, **kwargs):
    """Build an Mphf over a sequence of keys.

    Dispatches on the key type: integers use the 64-bit fast path, while
    ``bytes``/``str`` keys hash as byte strings (``str`` is UTF-8 encoded).
    Returns a ``(Mphf, BuildReport)`` pair. Keyword arguments: gamma,
    threads, max_levels, rank_interval, seed, strategy
    ('in-memory' | 'disk-spill' | 'rescan-input'), temp_dir.
    """
    keys = list(keys)
    if not keys:
        return build_int_keys([], **kwargs)  # raises EmptyInputError
    first = keys[0]
    if isinstance(first, int):
        return build_int_keys(keys, **kwargs)
    if isinstance(first, str):
        return build_string_keys([k.encode("utf-8") for k in keys], **kwargs)
    return build_string_keys(keys, **kwargs)
