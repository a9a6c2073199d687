import math
from typing import Iterator, List, Optional, Tuple


def next_permutation(items: List[int]) -> bool:
    """
    Advance ``items`` in place to its lexicographic successor.

    Returns False (leaving ``items`` untouched) when it is already the last
    permutation.
    """
    i = len(items) - 2
    while i >= 0 and items[i] >= items[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = len(items) - 1
    while items[j] <= items[i]:
        j -= 1
    items[i], items[j] = items[j], items[i]
    items[i + 1:] = reversed(items[i + 1:])
    return True


def unrank(n: int, rank: int) -> List[int]:
    """Permutation of 1..n at position ``rank`` of the lexicographic order."""
    total = math.factorial(n)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} outside [0, {total})")
    pool = list(range(1, n + 1))
    out = []
    for k in range(n, 0, -1):
        block = math.factorial(k - 1)
        index, rank = divmod(rank, block)
        out.append(pool.pop(index))
    return out


def iter_lexicographic(n: int, start: int = 0, stop: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """Stream the permutations of 1..n with ranks in [start, stop), in order."""
    total = math.factorial(n)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    current = unrank(n, start)
    for _ in range(stop - start):
        yield tuple(current)
        if not next_permutation(current):
            break


def split_ranges(total: int, parts: int) -> List[Tuple[int, int]]:
    """Split [0, total) into at most ``parts`` contiguous, near-equal ranges."""
    parts = max(1, min(parts, total))
    step, extra = divmod(total, parts)
    ranges = []
    start = 0
    for k in range(parts):
        stop = start + step + (1 if k < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges
