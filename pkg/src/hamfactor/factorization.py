"""Factorization records and their JSON serialization.

A double factorization stores per-leaf orthogonal rotations U^t and factor
vectors W^t such that

    sum_t sign_t * U^t (W^t ⊗ W^t) U^t^T  ≈  g - a2_prime * δ_pq δ_rs.

``a2_prime`` is a global particle-number-squared shift applied to the tensor
before factorizing (zero except for shifted eigendecompositions); per-leaf
``shifts`` α^t are post-factorization encoding shifts: the block-encoded core
of leaf t is sign_t * W^t ⊗ W^t − α^t * 1 ⊗ 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .tensors import TwoElectronTensor, _freeze

METHOD_TAGS = ("XDF", "CDF", "RCDF", "SCDF")


@dataclass(frozen=True)
class Thresholds:
    delta_df: float = 0.0
    delta_alpha: float = 0.0
    rho: float = 0.0

    def to_dict(self) -> dict:
        return {"delta_df": self.delta_df, "delta_alpha": self.delta_alpha, "rho": self.rho}


@dataclass(frozen=True)
class DoubleFactorization:
    """Immutable double-factorization record (rank-1 cores per leaf)."""

    n_orbitals: int
    method_tag: str
    rotations: tuple[np.ndarray, ...]
    factors: tuple[np.ndarray, ...]
    shifts: tuple[float, ...]
    signs: tuple[int, ...]
    leaf_ranks: tuple[int, ...]
    a1_prime: float = 0.0
    a2_prime: float = 0.0
    thresholds: Thresholds = Thresholds()

    def __post_init__(self):
        if self.method_tag not in METHOD_TAGS:
            raise ValidationError(f"method_tag must be one of {METHOD_TAGS}, got {self.method_tag!r}")
        n = self.n_orbitals
        rot = tuple(_freeze(u) for u in self.rotations)
        fac = tuple(_freeze(w) for w in self.factors)
        if not (len(rot) == len(fac) == len(self.shifts) == len(self.signs) == len(self.leaf_ranks)):
            raise ValidationError("per-leaf field lengths disagree")
        for u, w in zip(rot, fac):
            if u.shape != (n, n) or w.shape != (n,):
                raise ValidationError("each leaf needs an N x N rotation and length-N factors")
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "factors", fac)
        object.__setattr__(self, "shifts", tuple(float(a) for a in self.shifts))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        object.__setattr__(self, "leaf_ranks", tuple(int(x) for x in self.leaf_ranks))

    @property
    def n_leaves(self) -> int:
        return len(self.rotations)

    @property
    def n_alpha(self) -> int:
        """Number of leaves carrying a nonzero encoding shift."""
        return sum(1 for a in self.shifts if a != 0.0)

    @property
    def total_shift(self) -> float:
        """Total coefficient of δ_pq δ_rs removed from the encoded tensor."""
        return self.a2_prime + sum(self.shifts)

    def leaf_matrices(self) -> np.ndarray:
        """Stacked N x N leaf matrices M^t = U^t diag(W^t) U^t^T (unsigned)."""
        u = np.stack(self.rotations)
        w = np.stack(self.factors)
        return (u * w[:, None, :]) @ u.transpose(0, 2, 1)

    def with_one_body_shift(self, a1_prime: float) -> "DoubleFactorization":
        return replace(self, a1_prime=float(a1_prime))


def reconstruct_tensor(fact: DoubleFactorization) -> TwoElectronTensor:
    """Reassemble the approximation to the original two-electron tensor.

    Inverts the factorization conventions: the leaf sum approximates the
    pre-shifted tensor, so the global a2_prime * δ_pq δ_rs is added back;
    per-leaf encoding shifts never enter the reconstruction.
    """
    n = fact.n_orbitals
    g = np.zeros((n, n, n, n))
    if fact.n_leaves:
        m = fact.leaf_matrices()
        signs = np.asarray(fact.signs, dtype=float)
        vec = m.reshape(fact.n_leaves, n * n)
        g = ((vec * signs[:, None]).T @ vec).reshape(n, n, n, n)
    if fact.a2_prime != 0.0:
        eye = np.eye(n)
        g = g + fact.a2_prime * np.einsum("pq,rs->pqrs", eye, eye)
    return TwoElectronTensor(g)


@dataclass(frozen=True)
class FullRankFactorization:
    """CDF/RCDF record with full symmetric cores V^t, for norm comparison only."""

    n_orbitals: int
    method_tag: str
    rotations: tuple[np.ndarray, ...]
    cores: tuple[np.ndarray, ...]
    thresholds: Thresholds = Thresholds()
    a1_prime: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(_freeze(u) for u in self.rotations))
        object.__setattr__(self, "cores", tuple(_freeze(v) for v in self.cores))

    @property
    def n_leaves(self) -> int:
        return len(self.rotations)

    def reconstruct(self) -> TwoElectronTensor:
        n = self.n_orbitals
        g = np.zeros((n, n, n, n))
        for u, v in zip(self.rotations, self.cores):
            c = np.einsum("pk,qk->pqk", u, u).reshape(n * n, n)
            g += (c @ v @ c.T).reshape(n, n, n, n)
        return TwoElectronTensor(g)


def factorization_to_dict(
    fact: DoubleFactorization | FullRankFactorization,
    config: dict | None = None,
    extras: dict | None = None,
) -> dict:
    if isinstance(fact, FullRankFactorization):
        kind = "full_rank"
        leaves = [{"U": u.tolist(), "V": v.tolist()} for u, v in zip(fact.rotations, fact.cores)]
        shift_fields = {"a1_prime": fact.a1_prime}
    else:
        kind = "rank1"
        leaves = [
            {"U": u.tolist(), "W": w.tolist(), "alpha": alpha, "sign": sign, "xi": xi}
            for u, w, alpha, sign, xi in zip(
                fact.rotations, fact.factors, fact.shifts, fact.signs, fact.leaf_ranks
            )
        ]
        shift_fields = {"a1_prime": fact.a1_prime, "a2_prime": fact.a2_prime}
    out = {
        "kind": kind,
        "n_orbitals": fact.n_orbitals,
        "method": fact.method_tag,
        "leaves": leaves,
        **shift_fields,
        "thresholds": fact.thresholds.to_dict(),
    }
    if config is not None:
        out["config"] = config
    if extras:
        out.update(extras)
    return out


def factorization_from_dict(data: dict) -> DoubleFactorization | FullRankFactorization:
    try:
        leaves = data["leaves"]
        thr = data.get("thresholds", {})
        thresholds = Thresholds(
            delta_df=float(thr.get("delta_df", 0.0)),
            delta_alpha=float(thr.get("delta_alpha", 0.0)),
            rho=float(thr.get("rho", 0.0)),
        )
        kind = data.get("kind", "full_rank" if leaves and "V" in leaves[0] else "rank1")
        if kind == "full_rank":
            return FullRankFactorization(
                n_orbitals=int(data["n_orbitals"]),
                method_tag=str(data["method"]),
                rotations=tuple(np.asarray(leaf["U"], dtype=float) for leaf in leaves),
                cores=tuple(np.asarray(leaf["V"], dtype=float) for leaf in leaves),
                thresholds=thresholds,
                a1_prime=float(data.get("a1_prime", 0.0)),
            )
        return DoubleFactorization(
            n_orbitals=int(data["n_orbitals"]),
            method_tag=str(data["method"]),
            rotations=tuple(np.asarray(leaf["U"], dtype=float) for leaf in leaves),
            factors=tuple(np.asarray(leaf["W"], dtype=float) for leaf in leaves),
            shifts=tuple(float(leaf.get("alpha", 0.0)) for leaf in leaves),
            signs=tuple(int(leaf.get("sign", 1)) for leaf in leaves),
            leaf_ranks=tuple(int(leaf["xi"]) for leaf in leaves),
            a1_prime=float(data.get("a1_prime", 0.0)),
            a2_prime=float(data.get("a2_prime", 0.0)),
            thresholds=thresholds,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed factorization record: {exc}") from exc


def save_factorization(
    path: str,
    fact: DoubleFactorization | FullRankFactorization,
    config: dict | None = None,
    extras: dict | None = None,
) -> None:
    with open(path, "w") as fh:
        json.dump(factorization_to_dict(fact, config, extras), fh, indent=1)
        fh.write("\n")


def load_factorization(path: str) -> DoubleFactorization | FullRankFactorization:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read factorization file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    return factorization_from_dict(data)
