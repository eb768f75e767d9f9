"""Perfect-matching combinatorics shared by forms and moment machinery."""

from __future__ import annotations

from functools import lru_cache


def double_factorial(m: int) -> int:
    """(m)!! for odd m >= -1, i.e. 1*3*5*...*m."""
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@lru_cache(maxsize=None)
def perfect_matchings(k: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All perfect matchings of {0, ..., 2k-1}, lexicographically ordered.

    Each matching pairs the smallest free index first, so the list for k=2 is
    ((0,1),(2,3)), ((0,2),(1,3)), ((0,3),(1,2)).  There are (2k-1)!! of them.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        a = free[0]
        rest = free[1:]
        for i, b in enumerate(rest):
            for tail in rec(rest[:i] + rest[i + 1:]):
                yield ((a, b),) + tail

    return tuple(rec(tuple(range(2 * k))))
