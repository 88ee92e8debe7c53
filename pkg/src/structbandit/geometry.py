"""Monte-Carlo geometry: Gaussian widths, restricted error sets, cap sampling
and an empirical restricted-eigenvalue diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigurationError, DegenerateConeError, InputError
from .structure import NormKind, StructureModel, eval_dual_norm, eval_norm

__all__ = [
    "WidthEstimate",
    "ErrorSetSpec",
    "CapSampler",
    "REDiagnostic",
    "estimate_width",
    "omega_width",
    "default_cap_width",
    "error_set_membership",
    "sample_cap",
    "sample_caps",
    "uniform_cap_fraction",
    "cap_support_fn",
    "estimate_restricted_eigenvalue",
]

CAP_SCALE = 1e-3
_BATCH = 1024
_CHUNK = 8192


@dataclass(frozen=True)
class WidthEstimate:
    mean: float
    std_error: float
    samples: int
    target: str = "OmegaR"  # or "CapA"

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_width(support_fn, p: int, m: int = 100_000, seed: int = 0, *,
                   target: str = "OmegaR", batched: bool = False) -> WidthEstimate:
    """Monte-Carlo Gaussian width ``E sup_{u in A} <g, u>``.

    Parameters
    ----------
    support_fn : callable
        Support function of ``A``. Receives one Gaussian vector of length
        ``p``, or a ``(k, p)`` stack when ``batched`` is true.
    p : int
        Ambient dimension.
    m : int
        Number of Gaussian samples, at least 2.
    seed : int
        Seed of the Gaussian stream; results are deterministic per seed.
    """
    if m < 2:
        raise InputError("need at least m = 2 samples")
    if target not in ("OmegaR", "CapA"):
        raise InputError(f"unknown width target {target!r}")
    rng = np.random.default_rng(seed)
    vals = np.empty(m)
    # fixed chunking keeps the Gaussian stream identical for any m
    for start in range(0, m, _CHUNK):
        stop = min(start + _CHUNK, m)
        G = rng.standard_normal((stop - start, p))
        if batched:
            vals[start:stop] = support_fn(G)
        else:
            vals[start:stop] = [support_fn(g) for g in G]
    mean = float(np.sum(vals) / m)
    std_error = float(np.std(vals, ddof=1) / math.sqrt(m))
    return WidthEstimate(mean, std_error, m, target)


def omega_width(model: StructureModel, m: int = 100_000, seed: int = 0) -> WidthEstimate:
    """Width of the unit ball of ``R``; its support function is ``R*``."""
    return estimate_width(lambda G: eval_dual_norm(model, G), model.p, m, seed, batched=True)


def default_cap_width(model: StructureModel) -> float:
    """Analytic upper bound used in place of ``w(A_max)``."""
    p, s = model.p, model.s
    kind = model.kind
    if kind is NormKind.L2:
        return math.sqrt(p)
    if s is None:
        raise ConfigurationError(f"structure size s is required for kind {kind.value!r}")
    if kind is NormKind.L1:
        return math.sqrt(2.0 * s * math.log(p / s)) + math.sqrt(s)
    if kind is NormKind.GROUP:
        return math.sqrt(s * (model.max_group_size + math.log(model.n_groups)))
    d, pc = model.shape
    return math.sqrt(3.0 * s * (d + pc))


@dataclass(frozen=True)
class ErrorSetSpec:
    model: StructureModel
    theta_star: np.ndarray
    rho: float = 2.0

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        if theta.shape != (self.model.p,):
            raise InputError(f"theta_star must have length {self.model.p}")
        if abs(np.linalg.norm(theta) - 1.0) > 1e-8:
            raise InputError("theta_star must have unit Euclidean norm")
        if self.rho != 2.0:
            raise InputError("the restricted error set is defined with rho = 2")
        theta = theta.copy()
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)


def error_set_membership(spec: ErrorSetSpec, theta_hat) -> bool:
    """``R(theta_hat) <= R(theta*) + R(theta_hat - theta*) / 2``."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.shape != spec.theta_star.shape:
        raise InputError("dimension mismatch between theta_hat and theta_star")
    return bool(_members(spec, theta_hat[None, :])[0])


def _members(spec: ErrorSetSpec, rows: np.ndarray) -> np.ndarray:
    model, theta = spec.model, spec.theta_star
    lhs = eval_norm(model, rows)
    rhs = eval_norm(model, theta) + eval_norm(model, rows - theta) / spec.rho
    return lhs <= rhs


def _unit_rows(G: np.ndarray) -> np.ndarray:
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def _proposals(rng, theta: np.ndarray, k: int) -> np.ndarray:
    """Directions ``g - a theta*`` with ``a`` log-uniform over ``[1e-2, 10 sqrt(p)]``.

    Small ``a`` is close to a uniform sphere draw, large ``a`` approaches
    ``-theta*`` which lies inside every cap.
    """
    p = theta.shape[0]
    G = rng.standard_normal((k, p))
    a = np.exp(rng.uniform(math.log(1e-2), math.log(10.0 * math.sqrt(p)), size=k))
    return _unit_rows(G - a[:, None] * theta[None, :])


def _accept(spec: ErrorSetSpec, U: np.ndarray, scale: float) -> np.ndarray:
    return _members(spec, spec.theta_star[None, :] + scale * U)


@dataclass(frozen=True)
class CapSampler:
    """Rejection sampler for unit directions in ``cone(E_r)``, probed at ``theta*``.

    Build with :meth:`from_spec`, which measures the acceptance rate of the
    proposal and raises :class:`DegenerateConeError` if it is below ``1e-4``.
    """

    spec: ErrorSetSpec
    acceptance_rate: float
    scale: float = CAP_SCALE

    @classmethod
    def from_spec(cls, spec: ErrorSetSpec, seed: int = 0, pilot: int = 20_000,
                  scale: float = CAP_SCALE) -> "CapSampler":
        rng = np.random.default_rng(seed)
        accepted = drawn = 0
        while True:
            k = min(pilot, 1_000_000 - drawn)
            accepted += int(_accept(spec, _proposals(rng, spec.theta_star, k), scale).sum())
            drawn += k
            if accepted >= 20 or drawn >= 1_000_000:
                break
        rate = accepted / drawn
        if rate < 1e-4:
            raise DegenerateConeError(
                f"cap acceptance rate {rate:.2e} below 1e-4 after {drawn} draws"
            )
        return cls(spec, rate, scale)


def sample_caps(sampler: CapSampler, m: int, seed: int) -> np.ndarray:
    """``m`` accepted cap directions, as rows.

    The stream of accepted directions for a given seed does not depend on
    ``m``: a smaller request is a prefix of a larger one.
    """
    if m < 1:
        raise InputError("m must be positive")
    rng = np.random.default_rng(seed)
    theta = sampler.spec.theta_star
    out = []
    got = drawn = 0
    while got < m:
        U = _proposals(rng, theta, _BATCH)
        keep = U[_accept(sampler.spec, U, sampler.scale)]
        drawn += _BATCH
        out.append(keep)
        got += keep.shape[0]
        if drawn >= 1_000_000 and got / drawn < 1e-4:
            raise DegenerateConeError(
                f"cap acceptance rate {got / drawn:.2e} below 1e-4 after {drawn} draws"
            )
    return np.concatenate(out)[:m]


def sample_cap(sampler: CapSampler, seed: int) -> np.ndarray:
    return sample_caps(sampler, 1, seed)[0]


def uniform_cap_fraction(spec: ErrorSetSpec, draws: int, seed: int,
                         scale: float = CAP_SCALE) -> float:
    """Fraction of uniform sphere directions that fall in the cap."""
    rng = np.random.default_rng(seed)
    U = _unit_rows(rng.standard_normal((draws, spec.model.p)))
    return float(_accept(spec, U, scale).mean())


def cap_support_fn(sampler: CapSampler, pool: int = 2000, seed: int = 0):
    """Support function of a finite pool of cap directions.

    The pool maximum is a lower bound on the cap's true support function;
    widths built from it are diagnostics, not the schedule's ``w(A_max)``.
    """
    U = sample_caps(sampler, pool, seed)

    def support(G):
        return (np.atleast_2d(G) @ U.T).max(axis=1)

    return support


@dataclass(frozen=True)
class REDiagnostic:
    kappa_hat: float
    t: int
    directions: int

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_restricted_eigenvalue(X, sampler: CapSampler, m: int, seed: int) -> REDiagnostic:
    """Smallest ``(1/t) ||X u||^2`` over ``m`` sampled cap directions.

    This upper-bounds the true restricted minimum; its sign is the output.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = X.shape[0]
    if t < 1 or m < 1:
        raise InputError("need t >= 1 rows and m >= 1 directions")
    U = sample_caps(sampler, m, seed)
    XU = X @ U.T
    kappa = float((XU * XU).sum(axis=0).min() / t)
    return REDiagnostic(kappa, t, m)
