"""Explicit two-stage eigendecomposition of the two-electron tensor.

Stage one eigendecomposes the N^2 x N^2 matrix form of g and keeps the n_df
leaves of largest eigenvalue magnitude, L^t = sqrt(λ_t) * mat(v_t). Stage two
eigendecomposes each symmetric L^t = U^t diag(W^t) U^t^T, giving rank-1 cores
V^t = W^t ⊗ W^t.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import NonPSDTensor, ValidationError
from .factorization import DoubleFactorization, Thresholds
from .tensors import TwoElectronTensor

logger = logging.getLogger(__name__)

EIG_CLAMP_TOL = 1e-10


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Make the first component of largest magnitude positive."""
    pivot = int(np.argmax(np.abs(v)))
    return -v if v[pivot] < 0 else v


def _order_by_magnitude(vals: np.ndarray, vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort descending by |eigenvalue|; exact ties broken lexicographically."""
    order = np.argsort(-np.abs(vals), kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = np.column_stack([_fix_sign(vecs[:, i]) for i in range(vecs.shape[1])])
    mags = np.abs(vals)
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and mags[j] == mags[i]:
            j += 1
        if j - i > 1:
            sub = sorted(range(i, j), key=lambda c: tuple(vecs[:, c]))
            vals[i:j] = vals[sub]
            vecs[:, i:j] = vecs[:, sub]
        i = j
    return vals, vecs


def _eigendecompose_matrix_form(g: TwoElectronTensor, n_df: int) -> tuple[np.ndarray, np.ndarray]:
    n = g.n_orbitals
    if not 1 <= n_df <= n * n:
        raise ValidationError(f"n_df must be in [1, N^2={n * n}], got {n_df}")
    vals, vecs = np.linalg.eigh(g.as_matrix())
    vals, vecs = _order_by_magnitude(vals, vecs)
    return vals[:n_df], vecs[:, :n_df]


def _leaf_from_eigenpair(lam: float, vec: np.ndarray, n: int) -> np.ndarray:
    L = np.sqrt(abs(lam)) * vec.reshape(n, n)
    return 0.5 * (L + L.T)  # eigenvectors of a symmetric-image matrix; kill roundoff skew


def first_factorization(g: TwoElectronTensor, n_df: int) -> list[np.ndarray]:
    """Leading n_df symmetric factor matrices of g, requiring g to be PSD.

    Eigenvalues below -1e-10 raise NonPSDTensor; small negatives are clamped
    to zero with a warning.
    """
    n = g.n_orbitals
    vals, vecs = _eigendecompose_matrix_form(g, n_df)
    if np.any(vals < -EIG_CLAMP_TOL):
        worst = float(vals.min())
        raise NonPSDTensor(f"two-electron matrix form has eigenvalue {worst:.3e} < -1e-10")
    if np.any(vals < 0):
        logger.warning("clamping %d tiny negative eigenvalues to zero", int(np.sum(vals < 0)))
        vals = np.clip(vals, 0.0, None)
    return [_leaf_from_eigenpair(vals[t], vecs[:, t], n) for t in range(len(vals))]


def signed_first_factorization(g: TwoElectronTensor, n_df: int) -> tuple[list[np.ndarray], list[int]]:
    """First factorization of a possibly indefinite (shifted) tensor.

    Negative eigenvalues are carried as per-leaf signs: g ≈ sum_t s_t L^t ⊗ L^t.
    """
    n = g.n_orbitals
    vals, vecs = _eigendecompose_matrix_form(g, n_df)
    signs = [1 if v >= -EIG_CLAMP_TOL else -1 for v in vals]
    vals = np.where(np.abs(vals) < EIG_CLAMP_TOL, 0.0, vals)
    leaves = [_leaf_from_eigenpair(vals[t], vecs[:, t], n) for t in range(len(vals))]
    return leaves, signs


def truncate_factors(w: np.ndarray, delta_df: float, mode: str = "component") -> np.ndarray:
    """Zero out small factor components.

    ``component`` drops |W_k| < delta_df. ``combined`` drops components with
    (sum_k |W_k|) * |W_j| < delta_df, coupling the cut to the leaf's total
    weight.
    """
    w = np.asarray(w, dtype=float)
    if delta_df <= 0:
        return w.copy()
    if mode == "component":
        keep = np.abs(w) >= delta_df
    elif mode == "combined":
        keep = np.sum(np.abs(w)) * np.abs(w) >= delta_df
    else:
        raise ValidationError(f"unknown truncation mode {mode!r}")
    out = w.copy()
    out[~keep] = 0.0
    return out


def second_factorization(
    leaves: list[np.ndarray],
    delta_df: float = 0.0,
    mode: str = "component",
    signs: list[int] | None = None,
) -> DoubleFactorization:
    """Eigendecompose each leaf matrix into (U^t, W^t) and truncate.

    Leaves whose retained rank drops to zero are removed. Eigenvector signs
    and ordering are made deterministic, so identical input yields bit-identical
    output.
    """
    if not leaves:
        raise ValidationError("second_factorization needs at least one leaf")
    n = leaves[0].shape[0]
    if signs is None:
        signs = [1] * len(leaves)
    rotations, factors, kept_signs, ranks = [], [], [], []
    for L, s in zip(leaves, signs):
        L = np.asarray(L, dtype=float)
        if L.shape != (n, n) or np.max(np.abs(L - L.T)) > 1e-8:
            raise ValidationError("leaf matrices must be symmetric and N x N")
        vals, vecs = np.linalg.eigh(0.5 * (L + L.T))
        vals, vecs = _order_by_magnitude(vals, vecs)
        w = truncate_factors(vals, delta_df, mode)
        xi = int(np.count_nonzero(w))
        if xi == 0:
            continue
        rotations.append(vecs)
        factors.append(w)
        kept_signs.append(int(s))
        ranks.append(xi)
    if not rotations:
        raise ValidationError("all leaves were truncated away; lower delta_df")
    return DoubleFactorization(
        n_orbitals=n,
        method_tag="XDF",
        rotations=tuple(rotations),
        factors=tuple(factors),
        shifts=tuple(0.0 for _ in rotations),
        signs=tuple(kept_signs),
        leaf_ranks=tuple(ranks),
        thresholds=Thresholds(delta_df=delta_df),
    )


def explicit_factorization(
    g: TwoElectronTensor,
    n_df: int,
    delta_df: float = 0.0,
    mode: str = "component",
) -> DoubleFactorization:
    """Convenience pipeline: first + second factorization of a PSD tensor."""
    return second_factorization(first_factorization(g, n_df), delta_df, mode)
