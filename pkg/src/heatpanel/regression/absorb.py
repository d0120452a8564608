"""Fixed-effect absorption by alternating projections.

Each sweep subtracts group means dimension by dimension.  With one
dimension a single sweep is the exact within transformation; with several,
sweeps repeat until the largest absolute change of any entry drops below
``tol``.  Designs with few fixed-effect levels can fall back to an explicit
dummy-variable projection.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from ..exceptions import NoConvergence
from .design import DesignMatrix

log = logging.getLogger(__name__)

DUMMY_FALLBACK_MAX_LEVELS = 200


def _indicator(codes, n_groups):
    n = len(codes)
    return sp.csr_matrix((np.ones(n), (np.arange(n), codes)), shape=(n, n_groups))


def demean(M, codes_list, tol=1e-10, max_iter=1000):
    """Alternating-projection demeaning of the columns of ``M``.

    Returns
    -------
    out : ndarray
        Residual of ``M`` after projecting out all group indicators.
    sweeps : int
        Number of full sweeps performed.
    converged : bool
    """
    out = np.array(M, dtype=float, copy=True)
    flat = out.ndim == 1
    if flat:
        out = out[:, None]
    projectors = []
    for codes in codes_list:
        G = int(codes.max()) + 1 if len(codes) else 0
        D = _indicator(codes, G)
        counts = np.asarray(D.sum(axis=0)).ravel()
        projectors.append((D, D.T.tocsr(), counts))

    def sweep(A):
        for D, Dt, counts in projectors:
            A = A - D @ ((Dt @ A) / counts[:, None])
        return A

    if len(projectors) <= 1:
        if projectors:
            out = sweep(out)
        return (out[:, 0] if flat else out), len(projectors), True

    converged = False
    sweeps = 0
    while sweeps < max_iter:
        new = sweep(out)
        sweeps += 1
        change = np.max(np.abs(new - out)) if new.size else 0.0
        out = new
        if change < tol:
            converged = True
            break
    return (out[:, 0] if flat else out), sweeps, converged


def dummy_matrix(codes_list) -> np.ndarray:
    """Dense indicator matrix; every dimension after the first drops its first level."""
    blocks = []
    for i, codes in enumerate(codes_list):
        G = int(codes.max()) + 1
        block = np.zeros((len(codes), G))
        block[np.arange(len(codes)), codes] = 1.0
        blocks.append(block if i == 0 else block[:, 1:])
    return np.hstack(blocks)


def dummy_projection(M, codes_list) -> np.ndarray:
    """Residual of ``M`` regressed on explicit fixed-effect dummies."""
    D = dummy_matrix(codes_list)
    coef, *_ = np.linalg.lstsq(D, M, rcond=None)
    return M - D @ coef


def fe_degrees_of_freedom(codes_list) -> int:
    """Number of parameters the fixed effects use up.

    Exact (rank of the dummy matrix) when the total level count is small,
    otherwise the connected-panel count ``sum(G) - (dims - 1)``.
    """
    if not codes_list:
        return 0
    levels = [int(c.max()) + 1 for c in codes_list]
    if len(codes_list) == 1:
        return levels[0]
    if sum(levels) <= DUMMY_FALLBACK_MAX_LEVELS:
        return int(np.linalg.matrix_rank(dummy_matrix(codes_list)))
    return sum(levels) - (len(levels) - 1)


def absorb_fixed_effects(design: DesignMatrix, fe_dims=None, tol: float = 1e-10, max_iter: int = 1000,
                         method: str = "auto") -> DesignMatrix:
    """Demean response and regressors over the fixed-effect dimensions.

    Parameters
    ----------
    fe_dims : sequence of str, optional
        Dimensions to absorb; defaults to every dimension in ``design.fe``.
    method : {"auto", "ap", "dummy"}
        ``"ap"`` is alternating projections, ``"dummy"`` the explicit dummy
        projection.  ``"auto"`` runs alternating projections and falls back
        to dummies when they fail to converge and there are at most 200
        levels in total.

    Raises
    ------
    NoConvergence
        Alternating projections did not converge within ``max_iter`` sweeps
        and no fallback applied.
    ValueError
        A dimension has fewer than two groups.
    """
    dims = tuple(design.fe) if fe_dims is None else tuple(fe_dims)
    if not dims:
        return design
    codes_list = [design.fe[d] for d in dims]
    for d, codes in zip(dims, codes_list):
        if len(np.unique(codes)) < 2:
            raise ValueError(f"fixed-effect dimension {d!r} has fewer than two groups")

    M = np.column_stack([design.y, design.X])
    n_levels = sum(int(c.max()) + 1 for c in codes_list)
    if method == "dummy":
        out, sweeps = dummy_projection(M, codes_list), 0
    elif method in ("auto", "ap"):
        out, sweeps, ok = demean(M, codes_list, tol, max_iter)
        if not ok:
            if method == "auto" and n_levels <= DUMMY_FALLBACK_MAX_LEVELS:
                log.warning("alternating projections did not converge in %d sweeps; using dummy projection", max_iter)
                out = dummy_projection(M, codes_list)
            else:
                raise NoConvergence(f"alternating projections did not converge in {max_iter} sweeps")
    else:
        raise ValueError(f"unknown absorption method {method!r}")

    return design.with_arrays(
        y=out[:, 0], X=out[:, 1:], absorbed=dims, df_fe=fe_degrees_of_freedom(codes_list), n_sweeps=sweeps,
    )
