"""Independent brute-force reference implementations.

Plain Python loops and full sorts, written straight from the formulas and
sharing no code with the package.
"""
import math

import numpy as np


def euclid(a, b):
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def dist_matrix(Y):
    m = len(Y)
    return [[euclid(Y[i], Y[j]) for j in range(m)] for i in range(m)]


def sorted_neighbors(D, i):
    """Other points by (distance, index)."""
    return sorted((j for j in range(len(D)) if j != i), key=lambda j: (D[i][j], j))


def rank_table(D):
    m = len(D)
    R = [[0] * m for _ in range(m)]
    for i in range(m):
        for r, j in enumerate(sorted_neighbors(D, i), start=1):
            R[i][j] = r
    return R


def intrusion(D_ref, D_emb, k):
    m = len(D_ref)
    R = rank_table(D_ref)
    total = 0
    for i in range(m):
        ref_nn = set(sorted_neighbors(D_ref, i)[:k])
        for j in sorted_neighbors(D_emb, i)[:k]:
            if j not in ref_nn:
                total += R[i][j] - k
    return 1.0 - 2.0 / (m * k * (2 * m - 3 * k - 1)) * total


def trustworthiness(D_high, Y, k):
    return intrusion(D_high, dist_matrix(Y), k)


def continuity(D_high, Y, k):
    return intrusion(dist_matrix(Y), D_high, k)


def neighborhood_hit(Y, labels, k):
    D = dist_matrix(Y)
    hits = []
    for i in range(len(Y)):
        nn = sorted_neighbors(D, i)[:k]
        hits.append(sum(labels[j] == labels[i] for j in nn) / k)
    return sum(hits) / len(hits)


def average_ranks(values):
    order = sorted(range(len(values)), key=lambda t: values[t])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def spearman(a, b):
    return pearson(average_ranks(a), average_ranks(b))


def shepard(D_high, Y):
    DL = dist_matrix(Y)
    m = len(Y)
    hi = [D_high[i][j] for i in range(m) for j in range(i + 1, m)]
    lo = [DL[i][j] for i in range(m) for j in range(i + 1, m)]
    return spearman(hi, lo)


def centroids(Y, labels):
    out = {}
    for c in sorted(set(labels)):
        pts = [Y[i] for i in range(len(Y)) if labels[i] == c]
        out[c] = [sum(p[d] for p in pts) / len(pts) for d in range(len(Y[0]))]
    return out


def dsc(Y, labels):
    C = centroids(Y, labels)
    classes = sorted(C)
    good = 0
    for i in range(len(Y)):
        best = min(classes, key=lambda c: (euclid(Y[i], C[c]), classes.index(c)))
        good += best == labels[i]
    return good / len(Y)


def silhouette(Y, labels):
    classes = sorted(set(labels))
    vals = []
    for i in range(len(Y)):
        own = [j for j in range(len(Y)) if labels[j] == labels[i] and j != i]
        if not own:
            vals.append(0.0)
            continue
        a = sum(euclid(Y[i], Y[j]) for j in own) / len(own)
        b = min(
            sum(euclid(Y[i], Y[j]) for j in range(len(Y)) if labels[j] == c)
            / sum(1 for j in range(len(Y)) if labels[j] == c)
            for c in classes
            if c != labels[i]
        )
        vals.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return sum(vals) / len(vals)


def calinski_harabasz(Y, labels):
    C = centroids(Y, labels)
    m, k = len(Y), len(C)
    center = [sum(p[d] for p in Y) / m for d in range(len(Y[0]))]
    between = sum(labels.count(c) * euclid(C[c], center) ** 2 for c in C)
    within = sum(euclid(Y[i], C[labels[i]]) ** 2 for i in range(m))
    if within == 0:
        return math.inf if between > 0 else 0.0
    return (between / (k - 1)) / (within / (m - k))


def davies_bouldin(Y, labels):
    C = centroids(Y, labels)
    classes = sorted(C)
    s = {c: sum(euclid(Y[i], C[c]) for i in range(len(Y)) if labels[i] == c) / labels.count(c) for c in classes}
    total = 0.0
    for a in classes:
        worst = -math.inf
        for b in classes:
            if a == b:
                continue
            d = euclid(C[a], C[b])
            if d == 0:
                return math.inf
            worst = max(worst, (s[a] + s[b]) / d)
        total += worst
    return total / len(classes)


def tfidf(counts):
    counts = np.asarray(counts, dtype=float)
    m, n = counts.shape
    out = np.zeros_like(counts)
    for j in range(n):
        col = sum(counts[i, j] for i in range(m))
        df = sum(1 for i in range(m) if counts[i, j] > 0)
        for i in range(m):
            out[i, j] = counts[i, j] / col * math.log(m / df)
    return out


def cosine_distance(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return 1.0 - dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


def js_distance(p, q):
    def kl(a, b):
        return sum(x * math.log2(x / y) for x, y in zip(a, b) if x > 0)

    mid = [(x + y) / 2 for x, y in zip(p, q)]
    return math.sqrt(max(0.0, 0.5 * kl(p, mid) + 0.5 * kl(q, mid)))


def raw_stress(X, delta):
    m = len(X)
    return sum((euclid(X[i], X[j]) - delta[i][j]) ** 2 for i in range(m) for j in range(i + 1, m))


def row_perplexity(p_row):
    h = -sum(p * math.log2(p) for p in p_row if p > 0)
    return 2.0**h


def binomial_tail(n, k):
    """P[X >= k] for X ~ Binomial(n, 1/2), exact rational arithmetic."""
    from fractions import Fraction

    return float(sum(Fraction(math.comb(n, j), 2**n) for j in range(k, n + 1)))
