"""Norm structures: L2 (ridge), L1 (sparse), group L1/L2 and nuclear norm.

Every structure works on flat vectors of length ``p``. Matrix parameters of
shape ``(d, p_cols)`` are stored flattened row-major, so the trace inner
product ``trace(X^T Theta)`` is the flat dot product.

The ridge structure uses the plain Euclidean norm for all geometry (dual
norm, unit ball, widths) while its estimation penalty is the *squared* norm;
see :func:`penalty` and :func:`prox`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, InputError

__all__ = [
    "NormKind",
    "StructureModel",
    "eval_norm",
    "eval_dual_norm",
    "penalty",
    "prox",
    "compat_constant",
]


class NormKind(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"
    GROUP = "group"
    NUCLEAR = "nuclear"


@dataclass(frozen=True)
class StructureModel:
    """A norm ``R`` together with the constants the bandit schedules need.

    Parameters
    ----------
    kind : NormKind or str
        One of ``"l2"``, ``"l1"``, ``"group"``, ``"nuclear"``.
    p : int
        Ambient dimension.
    s : int, optional
        Structure size: sparsity for L1, number of active groups for the
        group norm, rank for the nuclear norm. Unused for L2.
    groups : sequence of sequences of int, optional
        Disjoint partition of ``range(p)`` (0-based). Group norm only.
    shape : (int, int), optional
        Matrix shape ``(d, p_cols)`` with ``d * p_cols == p``. Nuclear only.
    psi : float, optional
        Override for the compatibility constant returned by
        :func:`compat_constant`.
    """

    kind: NormKind
    p: int
    s: int | None = None
    groups: tuple[tuple[int, ...], ...] | None = None
    shape: tuple[int, int] | None = None
    psi: float | None = None
    _group_matrix: np.ndarray | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if int(self.p) != self.p or self.p < 1:
            raise ConfigurationError(f"p must be a positive integer, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if self.s is not None:
            if int(self.s) != self.s or self.s < 1:
                raise ConfigurationError(f"s must be a positive integer, got {self.s!r}")
            object.__setattr__(self, "s", int(self.s))
        if self.psi is not None and not self.psi > 0:
            raise ConfigurationError(f"psi override must be positive, got {self.psi!r}")

        if self.kind is NormKind.GROUP:
            if not self.groups:
                raise ConfigurationError("group norm requires a group partition")
            groups = tuple(tuple(int(i) for i in g) for g in self.groups)
            flat = [i for g in groups for i in g]
            if any(len(g) == 0 for g in groups):
                raise ConfigurationError("groups must partition range(p): empty group")
            if len(set(flat)) != len(flat):
                raise ConfigurationError("groups must partition range(p): groups overlap")
            if sorted(flat) != list(range(self.p)):
                raise ConfigurationError(
                    "groups must partition range(p): union of groups is not "
                    f"exactly {{0..{self.p - 1}}}"
                )
            object.__setattr__(self, "groups", groups)
            mat = np.zeros((len(groups), self.p))
            for k, g in enumerate(groups):
                mat[k, list(g)] = 1.0
            mat.setflags(write=False)
            object.__setattr__(self, "_group_matrix", mat)
            if self.s is not None and self.s > len(groups):
                raise ConfigurationError("s exceeds the number of groups")
        elif self.groups is not None:
            raise ConfigurationError(f"groups given for kind {self.kind.value!r}")

        if self.kind is NormKind.NUCLEAR:
            if self.shape is None:
                raise ConfigurationError("nuclear norm requires shape (d, p_cols)")
            d, pc = (int(v) for v in self.shape)
            if d < 1 or pc < 1 or d * pc != self.p:
                raise ConfigurationError(
                    f"shape {tuple(self.shape)} does not flatten to p={self.p}"
                )
            object.__setattr__(self, "shape", (d, pc))
            if self.s is not None and self.s > min(d, pc):
                raise ConfigurationError("rank s exceeds min(d, p_cols)")
        elif self.shape is not None:
            raise ConfigurationError(f"shape given for kind {self.kind.value!r}")

        if self.kind is NormKind.L1 and self.s is not None and self.s > self.p:
            raise ConfigurationError("sparsity s exceeds p")

    @property
    def n_groups(self) -> int:
        return len(self.groups) if self.groups else 0

    @property
    def max_group_size(self) -> int:
        return max(len(g) for g in self.groups) if self.groups else 0

    @property
    def psi_max(self) -> float:
        return compat_constant(self)

    @property
    def omega_diameter(self) -> float:
        # every unit ball here has a unit-length extreme point and none longer
        return 1.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "p": self.p}
        if self.s is not None:
            out["s"] = self.s
        if self.groups is not None:
            out["groups"] = [list(g) for g in self.groups]
        if self.shape is not None:
            out["shape"] = list(self.shape)
        if self.psi is not None:
            out["psi"] = self.psi
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StructureModel":
        allowed = {"kind", "p", "s", "groups", "shape", "psi"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown structure key(s): {sorted(unknown)}")
        shape = data.get("shape")
        return cls(
            kind=data["kind"],
            p=data["p"],
            s=data.get("s"),
            groups=data.get("groups"),
            shape=tuple(shape) if shape is not None else None,
            psi=data.get("psi"),
        )


def _as_rows(model: StructureModel, u) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    rows = arr[None, :] if single else arr
    if rows.ndim != 2 or rows.shape[1] != model.p:
        raise InputError(
            f"expected vectors of length p={model.p}, got array of shape {arr.shape}"
        )
    return rows, single


def _finish(vals: np.ndarray, single: bool):
    return float(vals[0]) if single else vals


def eval_norm(model: StructureModel, u):
    """Evaluate ``R(u)``; accepts one vector or a stack of row vectors."""
    rows, single = _as_rows(model, u)
    kind = model.kind
    if kind is NormKind.L1:
        vals = np.abs(rows).sum(axis=1)
    elif kind is NormKind.L2:
        vals = np.linalg.norm(rows, axis=1)
    elif kind is NormKind.GROUP:
        vals = np.sqrt((rows**2) @ model._group_matrix.T).sum(axis=1)
    else:
        mats = rows.reshape(-1, *model.shape)
        vals = np.linalg.svd(mats, compute_uv=False).sum(axis=1)
    return _finish(vals, single)


def eval_dual_norm(model: StructureModel, v):
    """Evaluate the dual norm ``R*(v) = sup_{R(u) <= 1} <v, u>``."""
    rows, single = _as_rows(model, v)
    kind = model.kind
    if kind is NormKind.L1:
        vals = np.abs(rows).max(axis=1)
    elif kind is NormKind.L2:
        vals = np.linalg.norm(rows, axis=1)
    elif kind is NormKind.GROUP:
        vals = np.sqrt((rows**2) @ model._group_matrix.T).max(axis=1)
    else:
        mats = rows.reshape(-1, *model.shape)
        vals = np.linalg.svd(mats, compute_uv=False).max(axis=1)
    return _finish(vals, single)


def penalty(model: StructureModel, u) -> float:
    """Estimation penalty: ``R(u)``, or ``||u||_2^2`` for the ridge structure."""
    val = eval_norm(model, u)
    return val * val if model.kind is NormKind.L2 else val


def soft_threshold(v, tau):
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def prox(model: StructureModel, v, tau: float) -> np.ndarray:
    """Proximal map ``argmin_u 0.5 ||u - v||^2 + tau * penalty(u)``.

    Soft-thresholding (L1), block soft-thresholding (group), singular value
    thresholding (nuclear) and shrinkage ``v / (1 + 2 tau)`` for the squared
    ridge penalty.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (model.p,):
        raise InputError(f"expected a vector of length {model.p}, got shape {v.shape}")
    if tau < 0:
        raise InputError(f"threshold must be non-negative, got {tau}")
    kind = model.kind
    if kind is NormKind.L1:
        return soft_threshold(v, tau)
    if kind is NormKind.L2:
        return v / (1.0 + 2.0 * tau)
    if kind is NormKind.GROUP:
        norms = np.sqrt(model._group_matrix @ (v * v))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
        return v * (scale @ model._group_matrix)
    mat = v.reshape(model.shape)
    U, sv, Vt = np.linalg.svd(mat, full_matrices=False)
    sv = np.maximum(sv - tau, 0.0)
    return ((U * sv) @ Vt).ravel()


def compat_constant(model: StructureModel) -> float:
    """Default compatibility constant: sqrt of the structure size, 1 for L2.

    Uses unit constants inside the usual ``O(sqrt(s))`` rates; set
    ``StructureModel.psi`` to override.
    """
    if model.psi is not None:
        return float(model.psi)
    if model.kind is NormKind.L2:
        return 1.0
    if model.s is None:
        raise ConfigurationError(
            f"structure size s is required for kind {model.kind.value!r}"
        )
    return math.sqrt(model.s)
