"""Independent reference implementations used as test oracles.

Deliberately naive: explicit loops, dense dummies, exact fractions.  None
of this imports the code under test.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def day_flags(t_max, t_min):
    return (t_max >= 30.0, t_min > 20.0)


def week_tally(t_max_week, t_min_week):
    heat = 0
    tropical = 0
    for hi, lo in zip(t_max_week, t_min_week):
        if hi >= 30.0:
            heat += 1
        if lo > 20.0:
            tropical += 1
    return heat, 1 if heat >= 3 else 0, tropical


def weighted_mean_exact(values, weights) -> Fraction:
    num = sum((Fraction(v) * Fraction(w) for v, w in zip(values, weights)), Fraction(0))
    den = sum((Fraction(w) for w in weights), Fraction(0))
    return num / den


def rgs_count(classes, labels, municipality, green):
    inside = 0
    n_green = 0
    for r in range(len(classes)):
        for c in range(len(classes[r])):
            if labels[r][c] == municipality:
                inside += 1
                if classes[r][c] in green:
                    n_green += 1
    return Fraction(n_green, inside)


def two_pass_moments(values):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var ** 0.5


def dummies(labels):
    levels = sorted(set(labels))
    return np.array([[1.0 if lab == lev else 0.0 for lev in levels] for lab in labels])


def dummy_ols(X, y, fe_labels=(), intercept=False):
    """Slopes from OLS on ``X`` plus full dummy sets (first level of each extra set dropped)."""
    blocks = [X]
    for j, labels in enumerate(fe_labels):
        D = dummies(labels)
        blocks.append(D if (j == 0 and not intercept) else D[:, 1:])
    if intercept:
        blocks.insert(0, np.ones((len(y), 1)))
    Z = np.hstack(blocks)
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    start = 1 if intercept else 0
    return coef[start:start + X.shape[1]]


def hand_hc1(X, e):
    n, k = X.shape
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((k, k))
    for i in range(n):
        meat += e[i] ** 2 * np.outer(X[i], X[i])
    return n / (n - k) * bread @ meat @ bread


def hand_crve(X, e, clusters, k=None):
    n, p = X.shape
    k = p if k is None else k
    bread = np.linalg.inv(X.T @ X)
    groups = sorted(set(clusters))
    meat = np.zeros((p, p))
    for g in groups:
        s = np.zeros(p)
        for i in range(n):
            if clusters[i] == g:
                s += X[i] * e[i]
        meat += np.outer(s, s)
    G = len(groups)
    return G / (G - 1) * (n - 1) / (n - k) * bread @ meat @ bread


def brute_percentile(score, baseline):
    return 100.0 * sum(1 for b in baseline if b <= score) / len(baseline)


def all_weeks(n_days=7):
    """Every boolean heat pattern of a week (for exhaustive checks)."""
    return itertools.product((False, True), repeat=n_days)
