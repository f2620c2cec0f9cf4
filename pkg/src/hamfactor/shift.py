"""Particle-number symmetry shifts.

Subtracting S = a1 * N̂_e + a2 * N̂_e² from the Hamiltonian leaves every
fixed-particle-number eigenstate intact up to the known energy offset
a1 * N_e + a2 * N_e², while it can substantially reduce the block-encoding
1-norm. The one-body shift replaces the f° eigenvalues by f° − a1′ with
a1′ = median(f°); the two-body shift removes a2′ δ_pq δ_rs from the tensor
(globally, before factorizing) or α^t 1⊗1 from each rank-1 core (per leaf,
after factorizing), with a2 = (a2′ + Σ_t α^t) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidShiftSplit, ValidationError
from .factorization import DoubleFactorization
from .tensors import TwoElectronTensor, _freeze

SPLIT_TOL = 1e-12


@dataclass(frozen=True)
class ShiftCorrection:
    """Coefficients of the subtracted symmetry operator a1 * N̂_e + a2 * N̂_e²."""

    a1: float
    a2: float

    @classmethod
    def from_factorization(cls, fact: DoubleFactorization) -> "ShiftCorrection":
        return cls(a1=fact.a1_prime, a2=0.5 * fact.total_shift)


def correction_energy(correction: ShiftCorrection, n_electrons: int) -> float:
    """Energy to add back to a shifted eigenvalue in the N_e sector."""
    return correction.a1 * n_electrons + correction.a2 * n_electrons**2


@dataclass(frozen=True)
class ShiftedFactorPair:
    """Rank-2 split W ⊗ W − α 1 ⊗ 1 = P ⊗ P − Q ⊗ Q of a shifted leaf core."""

    p: np.ndarray
    q: np.ndarray
    xi: int
    theta: int

    def __post_init__(self):
        object.__setattr__(self, "p", _freeze(self.p))
        object.__setattr__(self, "q", _freeze(self.q))


def one_body_shift(f_eigs: np.ndarray) -> tuple[float, float]:
    """Optimal one-body shift a1′ = median(f°) and the shifted 1-norm Σ|f° − a1′|.

    The median minimizes the L1 norm, so the returned norm never exceeds Σ|f°|.
    """
    f_eigs = np.asarray(f_eigs, dtype=float)
    if f_eigs.ndim != 1 or f_eigs.size == 0:
        raise ValidationError("f_eigs must be a nonempty vector")
    a1p = float(np.median(f_eigs))
    return a1p, float(np.sum(np.abs(f_eigs - a1p)))


def _two_eigenpairs(w: np.ndarray, alpha: float) -> list[tuple[float, np.ndarray]]:
    """Nonzero eigenpairs of W ⊗ W − α 1 ⊗ 1 (rank ≤ 2, spanned by {W, 1})."""
    n = w.size
    ones = np.ones(n)
    m = np.outer(w, w) - alpha * np.outer(ones, ones)
    scale = max(np.max(np.abs(m)), 1.0)
    vals, vecs = np.linalg.eigh(m)
    pairs = []
    for i in range(n):
        if abs(vals[i]) > SPLIT_TOL * scale:
            pairs.append((float(vals[i]), vecs[:, i]))
    return pairs


def signed_split(w: np.ndarray, alpha: float, sign: int = 1) -> list[tuple[np.ndarray, int]]:
    """General signed rank decomposition of sign * W ⊗ W − α 1 ⊗ 1.

    Returns [(v_j, σ_j), ...] with the core equal to Σ_j σ_j v_j ⊗ v_j.
    Handles all sign/α combinations (at most two terms).
    """
    w = np.asarray(w, dtype=float)
    if sign == 1 and alpha == 0.0:
        return [(w.copy(), 1)] if np.any(w) else []
    if sign == -1 and alpha == 0.0:
        return [(w.copy(), -1)] if np.any(w) else []
    pairs = _two_eigenpairs(w, alpha * sign)
    out = []
    for lam, vec in pairs:
        v = np.sqrt(abs(lam)) * vec
        out.append((v, sign if lam > 0 else -sign))
    return out


def split_shifted_factor(w: np.ndarray, alpha: float, delta_df: float = 0.0) -> ShiftedFactorPair:
    """Split W ⊗ W − α 1 ⊗ 1 into P ⊗ P − Q ⊗ Q.

    For α = 0 this is P = W, Q = 0. Raises InvalidShiftSplit if the two
    nonzero eigenvalues share a sign (cannot happen for α > 0 with real W,
    guarded anyway). ``delta_df`` truncates small components of P and Q;
    the retained counts are recorded as (xi, theta).
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError("factor W must be a nonempty vector")
    if alpha < 0.0:
        raise ValidationError(
            "a P/Q split needs alpha >= 0; signed_split handles signed cores"
        )
    n = w.size
    if alpha == 0.0:
        p, q = w.copy(), np.zeros(n)
    else:
        pairs = _two_eigenpairs(w, alpha)
        pos = [np.sqrt(lam) * vec for lam, vec in pairs if lam > 0]
        neg = [np.sqrt(-lam) * vec for lam, vec in pairs if lam < 0]
        if len(pos) > 1 or len(neg) > 1:
            raise InvalidShiftSplit(
                f"core has {len(pos)} positive / {len(neg)} negative directions; "
                "expected at most one of each"
            )
        p = pos[0] if pos else np.zeros(n)
        q = neg[0] if neg else np.zeros(n)
    if delta_df > 0:
        p = np.where(np.abs(p) >= delta_df, p, 0.0)
        q = np.where(np.abs(q) >= delta_df, q, 0.0)
    return ShiftedFactorPair(p=p, q=q, xi=int(np.count_nonzero(p)), theta=int(np.count_nonzero(q)))


def apply_alpha_threshold(fact: DoubleFactorization, delta_alpha: float) -> DoubleFactorization:
    """Zero out per-leaf shifts with |α^t| < delta_alpha."""
    if delta_alpha < 0:
        raise ValidationError("delta_alpha must be >= 0")
    shifts = tuple(a if abs(a) >= delta_alpha else 0.0 for a in fact.shifts)
    thresholds = replace(fact.thresholds, delta_alpha=delta_alpha)
    return replace(fact, shifts=shifts, thresholds=thresholds)


def shifted_tensor(g: TwoElectronTensor, a2_prime: float) -> TwoElectronTensor:
    """g − a2′ δ_pq δ_rs."""
    n = g.n_orbitals
    eye = np.eye(n)
    return TwoElectronTensor(g.g - a2_prime * np.einsum("pq,rs->pqrs", eye, eye))


def _shifted_xdf(g: TwoElectronTensor, a2_prime: float, n_df: int, delta_df: float, mode: str):
    from .xdf import second_factorization, signed_first_factorization

    leaves, signs = signed_first_factorization(shifted_tensor(g, a2_prime), n_df)
    fact = second_factorization(leaves, delta_df, mode, signs=signs)
    return replace(fact, a2_prime=float(a2_prime))


def global_two_body_shift(
    g: TwoElectronTensor,
    n_df: int,
    delta_df: float = 0.0,
    mode: str = "component",
    n_scan: int = 17,
    tol: float = 1e-6,
) -> tuple[float, DoubleFactorization]:
    """Find a2′ minimizing the von-Burg 1-norm of the shifted eigendecomposition.

    A coarse scan over the range of the tensor's (pp|rr) diagonal (plus the
    unshifted point, the diagonal's median and mean) brackets the optimum;
    golden-section search then polishes it to ``tol``. The returned norm never
    exceeds the a2′ = 0 value because 0 is always a scan candidate.
    """
    from .norms import two_body_burg_norm

    def objective(a2p: float) -> float:
        return two_body_burg_norm(_shifted_xdf(g, a2p, n_df, delta_df, mode))

    diag = np.einsum("pprr->pr", g.g).ravel()
    lo, hi = float(diag.min()), float(diag.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5 * max(abs(lo), 1.0), hi + 0.5 * max(abs(hi), 1.0)
    candidates = sorted(
        set(np.linspace(lo, hi, n_scan).tolist() + [0.0, float(np.median(diag)), float(diag.mean())])
    )
    values = [objective(c) for c in candidates]
    best = int(np.argmin(values))
    left = candidates[max(best - 1, 0)]
    right = candidates[min(best + 1, len(candidates) - 1)]
    if right > left:
        res = minimize_scalar(
            objective, bracket=None, bounds=(left, right), method="bounded",
            options={"xatol": tol},
        )
        polished, polished_val = float(res.x), float(res.fun)
    else:
        polished, polished_val = candidates[best], values[best]
    if polished_val > values[best]:
        polished, polished_val = candidates[best], values[best]
    return polished, _shifted_xdf(g, polished, n_df, delta_df, mode)
