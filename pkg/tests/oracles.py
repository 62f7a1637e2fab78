"""Independent brute-force reference implementations used as test oracles.

Deliberately written with plain Python loops and no shared code with the
package, so a bug in the vectorized implementations cannot hide here.
"""


def iom_loop(values):
    """Smallest 1-based index of the maximum, by linear scan."""
    best_idx = 0
    best_val = values[0]
    for idx in range(1, len(values)):
        if values[idx] > best_val:
            best_val = values[idx]
            best_idx = idx
    return best_idx + 1


def grp_transform_loop(matrices, x):
    """Double-loop GRP transform: matrices is (m, n, k) nested-indexable."""
    template = []
    for w in matrices:
        n = len(w)
        k = len(w[0])
        projections = []
        for j in range(k):
            acc = 0.0
            for r in range(n):
                acc += w[r][j] * x[r]
            projections.append(acc)
        template.append(iom_loop(projections))
    return template


def urp_transform_loop(perms, x):
    """Loop URP transform: perms is (m, p, k) of 1-based indices."""
    template = []
    for window in perms:
        p = len(window)
        k = len(window[0])
        products = []
        for slot in range(k):
            acc = 1.0
            for depth in range(p):
                acc *= x[window[depth][slot] - 1]
            products.append(acc)
        template.append(iom_loop(products))
    return template


def hamming_loop(u, v):
    return sum(1 for a, b in zip(u, v) if a != b)
