"""Independent brute-force oracles, written from the payoff definitions.

Nothing here imports the library's payoff machinery; states are 0-indexed
tuples, players 1-indexed.
"""

from __future__ import annotations

import itertools


def first_payoff(s, i):
    n = len(s)
    left = s[(i - 2) % n]
    if i == 1:
        return int(s[0] != left)
    return int(s[i - 1] == left)


def alt_first_payoff(s, i, k):
    if i == 1:
        return int(s[0] == (s[-1] + 1) % k)
    return int(s[i - 1] == s[i - 2])


def chain_payoff(s, i):
    # directed chain 1 -> 2 -> ... -> n: player i > 1 sees i - 1
    return 0 if i == 1 else int(s[i - 1] == s[i - 2])


def _middle(own, around, mod):
    up1, up2 = (own + 1) % mod in around, (own + 2) % mod in around
    if up1 and up2:
        return 0
    if up1:
        return 1
    return 2


def three_state_payoff(s, i):
    n = len(s)
    if i == 1:
        return 0 if (s[0] + 1) % 3 == s[1] else 1
    if i == n:
        return 0 if s[0] == s[n - 2] and s[n - 1] != (s[0] + 1) % 3 else 1
    return _middle(s[i - 1], {s[i - 2], s[i]}, 3)


def four_state_payoff(s, i):
    n = len(s)
    if i == 1:
        return 0 if (s[0] + 1) % 4 == s[1] else 1
    if i == n:
        return 0 if (s[n - 1] + 1) % 4 == s[n - 2] else 1
    return _middle(s[i - 1], {s[i - 2], s[i]}, 4)


def four_state_sets(n):
    return [(1, 3)] + [(0, 1, 2, 3)] * (n - 2) + [(0, 2)]


def deviators(payoff, s, sets):
    """Players with a strictly better strategy, by trying every alternative."""
    out = []
    for i in range(1, len(s) + 1):
        here = payoff(s, i)
        for c in sets[i - 1]:
            t = s[: i - 1] + (c,) + s[i:]
            if payoff(t, i) > here:
                out.append(i)
                break
    return out


def all_states(sets):
    return itertools.product(*sets)
