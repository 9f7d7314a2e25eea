"""Exhaustive optimum for tiny Unique Games and 2-to-2 games."""

from __future__ import annotations

import numpy as np

from .core import Labeling, UGInstance

MAX_LABELINGS = 10**7
_CHUNK = 1 << 15


class SizeGuardError(ValueError):
    pass


def _guard(n, k):
    total = k**n
    if total > MAX_LABELINGS:
        raise SizeGuardError(
            f"exhaustive search needs k^n = {k}^{n} = {total} labelings; the bound is k^n <= {MAX_LABELINGS}"
        )
    return total


def _labelings(n, k, start, stop):
    # vertex 0 is the most significant digit, so codes run in lexicographic order
    codes = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(codes), n), dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        out[:, pos] = codes % k
        codes //= k
    return out


def _search(n, k, m, count_fn):
    total = _guard(n, k)
    best, best_code = -1, 0
    for start in range(0, total, _CHUNK):
        xs = _labelings(n, k, start, min(start + _CHUNK, total))
        scores = count_fn(xs)
        j = int(np.argmax(scores))  # first maximum keeps the lexicographic tie-break
        if scores[j] > best:
            best, best_code = int(scores[j]), start + j
            if best == m:
                break
    return _labelings(n, k, best_code, best_code + 1)[0], best


def brute_force_opt(inst: UGInstance) -> tuple[Labeling, float]:
    """Best labeling over all k^n candidates; lexicographically smallest among ties."""
    perms, eu, ev = inst.perms, inst.eu, inst.ev
    rows = np.arange(inst.m)

    def count(xs):
        if inst.m == 0:
            return np.zeros(len(xs), dtype=np.int64)
        return (perms[rows[None, :], xs[:, eu]] == xs[:, ev]).sum(axis=1)

    x, best = _search(inst.n, inst.k, inst.m, count)
    val = 1.0 if inst.m == 0 else best / inst.m
    return Labeling(x, inst.k), val


def brute_force_2to2(game) -> float:
    """Exact optimum value (fraction of satisfied predicates) of a 2-to-2 game."""
    pred, eu, ev = game.predicates, game.eu, game.ev
    rows = np.arange(game.m)

    def count(xs):
        if game.m == 0:
            return np.zeros(len(xs), dtype=np.int64)
        return pred[rows[None, :], xs[:, eu], xs[:, ev]].sum(axis=1)

    _, best = _search(game.n, game.k, game.m, count)
    return 1.0 if game.m == 0 else best / game.m
