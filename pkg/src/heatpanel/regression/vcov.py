"""Sandwich variance estimators: IID, HC1, one- and two-way cluster-robust.

With ``B = (X'X)^-1``, residuals ``e``, ``n`` rows and ``k`` parameters
(absorbed fixed effects included):

* iid:      ``e'e / (n - k) * B``
* hc1:      ``n / (n - k) * B X' diag(e^2) X B``
* cluster:  ``G / (G - 1) * (n - 1) / (n - k) * B (sum_g s_g s_g') B`` with
  ``s_g`` the score sum ``X_g' e_g`` of cluster ``g``
* two-way:  ``V_a + V_b - V_ab`` where ``V_ab`` clusters on the intersection;
  each term carries its own ``G``.  Negative eigenvalues of the
  (diagonally standardised) sum are truncated to zero.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
import scipy.sparse as sp

from ..exceptions import NonAlignedDesign, TooFewClusters
from .design import DesignMatrix
from .ols import FitResult
from .spec import parse_vcov


def _sandwich(bread, meat):
    V = bread @ meat @ bread
    return (V + V.T) / 2.0


def iid_vcov(X, resid, bread, k) -> np.ndarray:
    n = X.shape[0]
    return float(resid @ resid) / (n - k) * bread


def hc1_vcov(X, resid, bread, k) -> np.ndarray:
    n = X.shape[0]
    scores = X * resid[:, None]
    return n / (n - k) * _sandwich(bread, scores.T @ scores)


def cluster_scores(X, resid, codes) -> np.ndarray:
    """Per-cluster score sums ``X_g' e_g`` as a ``(G, p)`` array."""
    codes = np.asarray(codes)
    G = int(codes.max()) + 1
    D = sp.csr_matrix((np.ones(len(codes)), (codes, np.arange(len(codes)))), shape=(G, len(codes)))
    return np.asarray(D @ (X * resid[:, None]))


def cluster_vcov(X, resid, bread, codes, k) -> np.ndarray:
    codes = _dense_codes(codes)
    G = int(codes.max()) + 1
    if G < 2:
        raise TooFewClusters(f"need at least 2 clusters, got {G}")
    n = X.shape[0]
    S = cluster_scores(X, resid, codes)
    factor = G / (G - 1) * (n - 1) / (n - k)
    return factor * _sandwich(bread, S.T @ S)


def _dense_codes(codes) -> np.ndarray:
    return np.unique(np.asarray(codes), return_inverse=True)[1].reshape(-1)


def intersect_codes(a, b) -> np.ndarray:
    a, b = _dense_codes(a), _dense_codes(b)
    return _dense_codes(a * (int(b.max()) + 1) + b)


def two_way_components(X, resid, bread, codes_a, codes_b, k):
    """``(V_a, V_b, V_ab)``: one-way estimators on each dimension and their intersection."""
    return (cluster_vcov(X, resid, bread, codes_a, k),
            cluster_vcov(X, resid, bread, codes_b, k),
            cluster_vcov(X, resid, bread, intersect_codes(codes_a, codes_b), k))


def psd_truncate(V) -> np.ndarray:
    """Symmetric matrix with negative eigenvalues set to zero.

    Eigenvalues are clipped on the diagonally standardised matrix
    ``S^-1 V S^-1`` (``S = sqrt|diag V|``) and mapped back, so that
    rescaling a regressor rescales its truncated variance accordingly.
    """
    V = (V + V.T) / 2.0
    scale = np.sqrt(np.abs(np.diag(V)))
    scale[scale == 0] = 1.0
    C = V / np.outer(scale, scale)
    vals, vecs = np.linalg.eigh(C)
    if vals.min() >= 0:
        return V
    vals = np.clip(vals, 0.0, None)
    out = ((vecs * vals) @ vecs.T) * np.outer(scale, scale)
    return (out + out.T) / 2.0


def two_way_vcov(X, resid, bread, codes_a, codes_b, k, truncate: bool = True) -> np.ndarray:
    Va, Vb, Vab = two_way_components(X, resid, bread, codes_a, codes_b, k)
    V = Va + Vb - Vab
    return psd_truncate(V) if truncate else (V + V.T) / 2.0


def _design_columns(fit: FitResult, design: DesignMatrix) -> np.ndarray:
    if len(fit.residuals) != design.n_obs:
        raise NonAlignedDesign(f"fit has {len(fit.residuals)} residuals, design has {design.n_obs} rows")
    idx = [design.columns.index(c) for c in fit.names]
    return design.X[:, idx]


def variance_estimator(fit: FitResult, design: DesignMatrix, kind="iid", truncate: bool = True) -> pd.DataFrame:
    """Coefficient covariance matrix of ``fit`` under the estimator ``kind``.

    ``kind`` is ``"iid"``, ``"hc1"``, ``"cluster=district"``, ``"cluster=year"``
    or ``"cluster=district,year"`` (see :func:`~heatpanel.regression.spec.parse_vcov`).

    Raises
    ------
    TooFewClusters, NonAlignedDesign
    """
    name, dims = parse_vcov(kind)
    X = _design_columns(fit, design)
    e = fit.residuals
    bread = fit.bread if fit.bread is not None else np.linalg.inv(X.T @ X)
    k = fit.df_model
    if design.n_obs <= k:
        raise NonAlignedDesign(f"{design.n_obs} observations for {k} parameters")
    if name == "iid":
        V = iid_vcov(X, e, bread, k)
    elif name == "hc1":
        V = hc1_vcov(X, e, bread, k)
    else:
        missing = [d for d in dims if d not in design.clusters]
        if missing:
            raise NonAlignedDesign(f"design carries no cluster ids for {missing}")
        if len(dims) == 1:
            V = cluster_vcov(X, e, bread, design.clusters[dims[0]], k)
        else:
            V = two_way_vcov(X, e, bread, design.clusters[dims[0]], design.clusters[dims[1]], k, truncate)
    return pd.DataFrame(V, index=fit.names, columns=fit.names)


def n_clusters(design: DesignMatrix, kind) -> dict:
    _, dims = parse_vcov(kind)
    return {d: int(len(np.unique(design.clusters[d]))) for d in dims if d in design.clusters}
