"""Core tensor types: two-electron integrals, derived one-body data, synthetic instances.

Conventions used throughout the package:

* ``g[p, q, r, s]`` is the chemists'-notation two-electron integral (pq|rs)
  with the full 8-fold permutation symmetry
  (pq|rs) = (qp|rs) = (pq|sr) = (rs|pq).
* One-body data is reduced to the effective matrix
  ``f = k + sum_r g[p, q, r, r]`` with ``k = h - 0.5 * sum_r g[p, r, r, q]``,
  whose eigendecomposition ``f = U° diag(f°) U°^T`` feeds the block-encoding
  one-body term and the 1-norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SYMMETRY_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


def check_two_electron_symmetry(g: np.ndarray, tol: float = SYMMETRY_TOL) -> float:
    """Return the maximum deviation of g from its 8-fold symmetry images.

    Raises ValidationError if the deviation exceeds ``tol``.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 4 or len(set(g.shape)) != 1:
        raise ValidationError(f"two-electron tensor must be N^4, got shape {g.shape}")
    dev = 0.0
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
        dev = max(dev, float(np.max(np.abs(g - g.transpose(perm)))))
    if dev > tol:
        raise ValidationError(
            f"two-electron tensor violates 8-fold symmetry by {dev:.3e} (tol {tol:.1e})"
        )
    return dev


@dataclass(frozen=True)
class TwoElectronTensor:
    """Chemists'-notation two-electron tensor with validated 8-fold symmetry."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        check_two_electron_symmetry(g)
        object.__setattr__(self, "g", _freeze(g))

    @property
    def n_orbitals(self) -> int:
        return self.g.shape[0]

    def as_matrix(self) -> np.ndarray:
        """The tensor reshaped to the symmetric N^2 x N^2 matrix g[(pq),(rs)]."""
        n = self.n_orbitals
        return self.g.reshape(n * n, n * n)


@dataclass(frozen=True)
class OneBodyTensors:
    """One-body data derived from (h, g, e_nuc).

    Attributes:
        k: chemists'-form one-body matrix h - 0.5 * sum_r g[p,r,r,q].
        f: effective one-body matrix k + sum_r g[p,q,r,r].
        f_eigs: eigenvalues f° of f, ascending.
        f_vecs: orthogonal eigenvectors U° of f (columns).
        e_nuc: nuclear repulsion energy.
        constant_term: factorization-independent constant accumulated by the
            rearrangement into the diagonal form: sum_k f°_k - 0.5 * sum_pr g[p,p,r,r].
    """

    k: np.ndarray
    f: np.ndarray
    f_eigs: np.ndarray
    f_vecs: np.ndarray
    e_nuc: float
    constant_term: float

    def __post_init__(self):
        for name in ("k", "f", "f_eigs", "f_vecs"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def n_orbitals(self) -> int:
        return self.f.shape[0]


def derive_one_body(h: np.ndarray, g: TwoElectronTensor, e_nuc: float = 0.0) -> OneBodyTensors:
    """Reduce (h, g, e_nuc) to the effective one-body data used downstream.

    Raises ValidationError if h is not symmetric within 1e-10 or shapes disagree.
    """
    h = np.asarray(h, dtype=float)
    n = g.n_orbitals
    if h.shape != (n, n):
        raise ValidationError(f"one-body matrix shape {h.shape} does not match N={n}")
    if np.max(np.abs(h - h.T)) > SYMMETRY_TOL:
        raise ValidationError("one-body matrix is not symmetric within 1e-10")
    k = h - 0.5 * np.einsum("prrq->pq", g.g)
    f = k + np.einsum("pqrr->pq", g.g)
    f = 0.5 * (f + f.T)  # exact symmetrization against roundoff
    eigs, vecs = np.linalg.eigh(f)
    constant = float(np.sum(eigs) - 0.5 * np.einsum("pprr->", g.g))
    return OneBodyTensors(k=k, f=f, f_eigs=eigs, f_vecs=vecs, e_nuc=float(e_nuc), constant_term=constant)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a random exactly-factorizable PSD two-electron tensor."""

    n_orbitals: int
    n_components: int
    rng_seed: int
    coulomb_weight: float = 0.0

    def __post_init__(self):
        if self.n_orbitals < 1 or self.n_components < 0:
            raise ValidationError("n_orbitals must be >= 1 and n_components >= 0")


def tensor_from_components(components: list[np.ndarray]) -> TwoElectronTensor:
    """Assemble g = sum_c L^c ⊗ L^c from symmetric component matrices."""
    if not components:
        raise ValidationError("at least one component matrix is required")
    n = components[0].shape[0]
    g = np.zeros((n, n, n, n))
    for L in components:
        L = np.asarray(L, dtype=float)
        if L.shape != (n, n) or np.max(np.abs(L - L.T)) > SYMMETRY_TOL:
            raise ValidationError("components must be symmetric N x N matrices")
        g += np.einsum("pq,rs->pqrs", L, L)
    return TwoElectronTensor(g)


def synthesize_instance(spec: SyntheticSpec) -> tuple[TwoElectronTensor, list[np.ndarray]]:
    """Build a PSD tensor from seeded random symmetric components.

    Returns the tensor together with the exact component list for oracle use.
    With ``coulomb_weight > 0`` the first component is biased toward the
    identity, giving the tensor a Coulomb-like (pp|rr) backbone so that
    particle-number shifts have realistic leverage.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.n_orbitals
    components = []
    for c in range(spec.n_components):
        a = rng.standard_normal((n, n)) / np.sqrt(n)
        L = 0.5 * (a + a.T)
        if c == 0 and spec.coulomb_weight > 0:
            L = spec.coulomb_weight * np.eye(n) + L
        components.append(L)
    return tensor_from_components(components), components


def frobenius_error(a: TwoElectronTensor | np.ndarray, b: TwoElectronTensor | np.ndarray) -> float:
    ga = a.g if isinstance(a, TwoElectronTensor) else np.asarray(a)
    gb = b.g if isinstance(b, TwoElectronTensor) else np.asarray(b)
    return float(np.linalg.norm(ga - gb))
