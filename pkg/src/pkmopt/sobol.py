"""Unscrambled Sobol low-discrepancy points (Gray-code ordering).

Direction numbers for dimensions 2-16 are the Joe-Kuo "new-joe-kuo-6.21201"
values; dimension 1 is the van der Corput sequence in base 2.
"""
import numpy as np

from .errors import UnsupportedDimensionError

_BITS = 32

# (degree s, coefficient a, initial m_1..m_s) for dimensions 2..16
_JOE_KUO = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
)

MAX_DIMENSION = len(_JOE_KUO) + 1


def direction_numbers(dimension):
    """Return a ``(dimension, 32)`` array of integer direction numbers.

    Row ``d`` column ``k`` holds ``v_{k+1} = m_{k+1} * 2**(32 - k - 1)``.
    """
    if not 1 <= dimension <= MAX_DIMENSION:
        raise UnsupportedDimensionError(
            f"Sobol dimension must be in [1, {MAX_DIMENSION}], got {dimension}")
    v = np.zeros((dimension, _BITS), dtype=np.uint64)
    v[0] = [1 << (_BITS - 1 - k) for k in range(_BITS)]
    for d in range(1, dimension):
        s, a, m_init = _JOE_KUO[d - 1]
        m = list(m_init)
        for k in range(s, _BITS):
            # m_k = 2a_1 m_{k-1} xor 4a_2 m_{k-2} ... xor 2^s m_{k-s} xor m_{k-s}
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
        v[d] = [m[k] << (_BITS - 1 - k) for k in range(_BITS)]
    return v


def sobol_points(dimension, count):
    """First ``count`` Sobol points in ``[0, 1)^dimension``.

    The all-zero initial point is skipped, so for dimension 1 the sequence
    starts 0.5, 0.75, 0.25, ...
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    v = direction_numbers(dimension)
    out = np.empty((count, dimension))
    x = np.zeros(dimension, dtype=np.uint64)
    scale = 1.0 / float(1 << _BITS)
    # Gray-code recursion: point i+1 = point i xor v[c], c = lowest zero bit of i
    for i in range(count):
        c = (~i & (i + 1)).bit_length() - 1
        x ^= v[:, c]
        out[i] = x.astype(np.float64) * scale
    return out


def scale_to_box(points, lower, upper):
    """Affinely map unit-cube points into the box ``[lower, upper]``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return lower + np.asarray(points, dtype=float) * (upper - lower)
