"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_kernels.pyx`` must agree with
them bit for bit.
"""
import itertools

import numpy as np

CHUNK = 1 << 18


def receiver_sweep(tables, tx_self, tx_int):
    """Max-plus products of every link table with its two incoming messages.

    Returns ``(rx_self, rx_int)`` with
    ``rx_self[i, a] = max_b tables[i, a, b] + tx_int[i, b]`` and
    ``rx_int[i, b] = max_a tables[i, a, b] + tx_self[i, a]``.
    """
    rx_self = (tables + tx_int[:, None, :]).max(axis=2)
    rx_int = (tables + tx_self[:, :, None]).max(axis=1)
    return rx_self, rx_int


def exhaustive_search(finite, dead, partner):
    """Exact maximiser of ``sum_i table_i[x_i, x_partner(i)]`` over the grid.

    Scores are compared lexicographically: fewest dead (sentinel) terms
    first, then largest finite sum. Terms are accumulated in link order.
    Points are visited in lexicographic order of ``x`` and only a strictly
    better score replaces the incumbent, so ties resolve to the
    lexicographically smallest index vector.

    Returns ``(x, dead_count, finite_sum, evaluated)``.
    """
    n, K, _ = finite.shape
    tail = 0
    while tail < n and K ** (tail + 1) <= CHUNK:
        tail += 1
    tail = max(tail, 1) if n else 0
    head = n - tail
    shape = (K,) * tail
    axes = [np.arange(K).reshape((1,) * t + (K,) + (1,) * (tail - t - 1)) for t in range(tail)]

    best = None
    best_key = None
    evaluated = 0
    for prefix in itertools.product(range(K), repeat=head):
        def idx(link):
            return prefix[link] if link < head else axes[link - head]

        fin = np.zeros(shape)
        cnt = np.zeros(shape, dtype=np.int64)
        for i in range(n):
            a, b = idx(i), idx(int(partner[i]))
            fin = fin + finite[i][a, b]
            cnt = cnt + dead[i][a, b]
        evaluated += fin.size
        low = cnt.min()
        masked = np.where(cnt == low, fin, -np.inf)
        flat = int(np.argmax(masked))
        key = (-int(low), float(masked.flat[flat]))
        if best_key is None or key > best_key:
            best_key = key
            best = prefix + np.unravel_index(flat, shape)
    x = np.array(best, dtype=np.int64)
    return x, -best_key[0], best_key[1], evaluated
