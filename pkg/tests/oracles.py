"""Independent reference implementations used as test oracles.

Written directly from the textbook definitions, without sharing code or
data structures with the package.
"""

import math
from fractions import Fraction


def ktu_bruteforce(a, b, depth=1000):
    """Kendall's tau over the union, counting every pair explicitly."""
    a, b = list(a[:depth]), list(b[:depth])
    ext_a = a + [d for d in b if d not in a]
    ext_b = b + [d for d in a if d not in b]
    pa = {d: i for i, d in enumerate(ext_a)}
    pb = {d: i for i, d in enumerate(ext_b)}
    docs = list(pa)
    concordant = discordant = 0
    for i in range(len(docs)):
        for j in range(i + 1, len(docs)):
            x, y = docs[i], docs[j]
            s = (pa[x] - pa[y]) * (pb[x] - pb[y])
            if s > 0:
                concordant += 1
            elif s < 0:
                discordant += 1
    n = concordant + discordant
    return 1.0 if n == 0 else float(Fraction(concordant - discordant, n))


def rbo_reference(s_list, l_list, p):
    """Extrapolated RBO for uneven lists, with plain set overlaps."""
    if len(s_list) > len(l_list):
        s_list, l_list = l_list, s_list
    s, l = len(s_list), len(l_list)

    def overlap(d):
        return len(set(s_list[: min(d, s)]) & set(l_list[:d]))

    x = {d: overlap(d) for d in range(1, l + 1)}
    x_s, x_l = x[s], x[l]
    total = sum(x[d] / d * p**d for d in range(1, l + 1))
    total += sum(x_s * (d - s) / (s * d) * p**d for d in range(s + 1, l + 1))
    return (1 - p) / p * total + ((x_l - x_s) / l + x_s / s) * p**l


def paired_t_p_two_sided_df2(orig, rep):
    """Closed-form two-sided tail of Student's t with 2 degrees of freedom."""
    d = [o - r for o, r in zip(orig, rep)]
    n = len(d)
    assert n == 3
    mean = sum(d) / n
    sd = math.sqrt(sum((x - mean) ** 2 for x in d) / (n - 1))
    t = mean / (sd / math.sqrt(n))
    return t, 1 - abs(t) / math.sqrt(t * t + 2)
