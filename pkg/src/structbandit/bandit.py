"""Structured stochastic linear bandit: decision sets, environment, schedules,
confidence ellipsoids, optimistic arm selection with ball perturbation, and
the episode loop.

Rounds ``1..n`` play uniform random arms. From round ``n`` on, every round
re-estimates ``theta`` by regularized least squares, builds the ellipsoid
``C_t = {theta : ||theta - theta_hat||_{D_t} <= beta}``, picks an optimistic
pair ``(x', theta')`` and plays a uniform draw from the decision set
intersected with the ball of radius ``||x'||/2`` around ``x'``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .estimation import SolverConfig, lipschitz_constant, solve_prox_grad_gram
from .exceptions import ConfigurationError, DegenerateArmError, HorizonTooShortError, InputError
from .geometry import (
    CapSampler,
    ErrorSetSpec,
    default_cap_width,
    estimate_restricted_eigenvalue,
    omega_width,
)
from .structure import NormKind, StructureModel, compat_constant

__all__ = [
    "DecisionSet",
    "Environment",
    "ScheduleParams",
    "Schedule",
    "ConfidenceEllipsoid",
    "OptimisticChoice",
    "RegretTrace",
    "CALIBRATED",
    "compute_schedule",
    "linear_min_oracle",
    "select_arm_optimistic",
    "perturb_and_play",
    "certificate_theta",
    "gap_of",
    "optimal_value",
    "make_theta_star",
    "run_episode",
    "run_baseline",
]

# Constants committed by the acceptance calibration (containment >= 95%).
CALIBRATED = {"c_prime": 1.0, "c_0": 0.03, "C_beta": 0.15}

ALTERNATIONS = 20
ALTERNATION_TOL = 1e-10
MAX_REJECTIONS = 10_000
_PROPOSALS = 256


def uniform_ball(rng, k: int, p: int) -> np.ndarray:
    """``k`` uniform draws from the unit Euclidean ball in ``R^p``."""
    G = rng.standard_normal((k, p))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G * rng.random(k)[:, None] ** (1.0 / p)


@dataclass(frozen=True)
class DecisionSet:
    """Convex decision set inside the unit ball.

    ``kind`` is ``"ball"`` (unit Euclidean ball), ``"cube"`` (hypercube
    ``[-1/sqrt(p), 1/sqrt(p)]^p``) or ``"polytope"`` (convex hull of
    ``vertices``, each of norm at most one, full-dimensional).
    """

    kind: str
    p: int
    vertices: np.ndarray | None = None
    _facets: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("ball", "cube", "polytope"):
            raise ConfigurationError(f"unknown decision set kind {self.kind!r}")
        if self.p < 1:
            raise ConfigurationError("p must be positive")
        if self.kind != "polytope":
            if self.vertices is not None:
                raise ConfigurationError("vertices only apply to polytopes")
            return
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[1] != self.p:
            raise ConfigurationError(f"vertices must have {self.p} coordinates")
        if np.any(np.linalg.norm(V, axis=1) > 1.0 + 1e-12):
            raise ConfigurationError("every polytope vertex must lie in the unit ball")
        if self.p == 1:
            facets = np.array([[1.0, -V.max()], [-1.0, V.min()]])
            if V.max() - V.min() <= 0:
                raise ConfigurationError("polytope hull is not full-dimensional")
        else:
            try:
                hull = ConvexHull(V)
            except QhullError as exc:
                raise ConfigurationError(f"polytope hull is not full-dimensional: {exc}") from None
            facets = hull.equations
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "_facets", facets)

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.kind == "ball":
            return np.linalg.norm(X, axis=1) <= 1.0 + tol
        if self.kind == "cube":
            return np.abs(X).max(axis=1) <= 1.0 / math.sqrt(self.p) + tol
        A, c = self._facets[:, :-1], self._facets[:, -1]
        return (X @ A.T + c).max(axis=1) <= tol

    def sample(self, rng, k: int = 1) -> np.ndarray:
        """``k`` uniform draws from the set, as rows."""
        if self.kind == "ball":
            return uniform_ball(rng, k, self.p)
        if self.kind == "cube":
            h = 1.0 / math.sqrt(self.p)
            return rng.uniform(-h, h, size=(k, self.p))
        out = []
        got = 0
        while got < k:
            cand = uniform_ball(rng, _PROPOSALS, self.p)
            keep = cand[self.contains(cand)]
            out.append(keep)
            got += len(keep)
        return np.concatenate(out)[:k]

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "p": self.p}
        if self.vertices is not None:
            out["vertices"] = self.vertices.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionSet":
        return cls(data["kind"], int(data["p"]), data.get("vertices"))


def linear_min_oracle(dset: DecisionSet, theta) -> tuple[np.ndarray, bool]:
    """``argmin_{x in X} <x, theta>`` and a degenerate-direction flag.

    A zero direction returns the origin with the flag set. Cube ties break to
    ``-1/sqrt(p)``; polytope ties break to the lexicographically smallest
    vertex.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.any(theta):
        return np.zeros(dset.p), True
    if dset.kind == "ball":
        return -theta / np.linalg.norm(theta), False
    if dset.kind == "cube":
        return np.where(theta > 0, -1.0, np.where(theta < 0, 1.0, -1.0)) / math.sqrt(dset.p), False
    V = dset.vertices
    vals = V @ theta
    best = vals.min()
    ties = np.flatnonzero(vals <= best + 1e-12 * max(1.0, abs(best)))
    if len(ties) > 1:
        order = np.lexsort(V[ties].T[::-1])
        return V[ties[order[0]]].copy(), False
    return V[ties[0]].copy(), False


def optimal_value(dset: DecisionSet, theta_star) -> float:
    x, _ = linear_min_oracle(dset, theta_star)
    return float(x @ theta_star)


def gap_of(dset: DecisionSet, theta_star) -> float | None:
    """Second-best minus best vertex value; ``None`` for non-polytopes."""
    if dset.kind != "polytope":
        return None
    vals = np.sort(dset.vertices @ np.asarray(theta_star, dtype=float))
    if len(vals) < 2:
        return 0.0
    return float(vals[1] - vals[0])


@dataclass(frozen=True)
class Environment:
    """Hidden unit-norm parameter plus bounded zero-mean noise.

    ``noise_kind`` is ``"uniform"`` (on ``[-B, B]``), ``"rademacher"``
    (``+-B``) or ``"zero"``.
    """

    theta_star: np.ndarray
    noise_bound: float = 0.0
    noise_kind: str = "uniform"
    rng_seed: int | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float).copy()
        if abs(np.linalg.norm(theta) - 1.0) > 1e-8:
            raise ConfigurationError("theta_star must have unit Euclidean norm")
        if self.noise_bound < 0:
            raise ConfigurationError("noise bound must be non-negative")
        if self.noise_kind not in ("uniform", "rademacher", "zero"):
            raise ConfigurationError(f"unknown noise kind {self.noise_kind!r}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)

    @property
    def p(self) -> int:
        return self.theta_star.shape[0]

    def noise(self, rng, k: int | None = None):
        B = self.noise_bound
        if self.noise_kind == "zero" or B == 0:
            return 0.0 if k is None else np.zeros(k)
        if self.noise_kind == "uniform":
            return rng.uniform(-B, B, size=k)
        signs = rng.integers(0, 2, size=k) * 2 - 1
        return B * signs if k is not None else float(B * signs)


def make_theta_star(model: StructureModel, seed) -> np.ndarray:
    """Random unit-norm parameter with the structure described by ``model``.

    L1: ``s`` random non-zeros; group: ``s`` random active groups; nuclear:
    rank ``s`` matrix; L2: dense Gaussian direction.
    """
    rng = np.random.default_rng(seed)
    p = model.p
    theta = np.zeros(p)
    if model.kind is NormKind.L2 or model.s is None:
        theta = rng.standard_normal(p)
    elif model.kind is NormKind.L1:
        idx = rng.choice(p, size=model.s, replace=False)
        theta[idx] = rng.standard_normal(model.s)
    elif model.kind is NormKind.GROUP:
        for k in rng.choice(model.n_groups, size=model.s, replace=False):
            g = list(model.groups[k])
            theta[g] = rng.standard_normal(len(g))
    else:
        d, pc = model.shape
        theta = (rng.standard_normal((d, model.s)) @ rng.standard_normal((model.s, pc))).ravel()
    return theta / np.linalg.norm(theta)


@lru_cache(maxsize=64)
def _cached_omega_width(model: StructureModel) -> float:
    return omega_width(model, m=100_000, seed=0).mean


@dataclass(frozen=True)
class ScheduleParams:
    """Inputs of the burn-in length, regularization and radius schedules."""

    T: int
    width_cap: float
    width_omega: float
    psi_max: float
    phi_omega: float = 1.0
    epsilon: float = 1.0
    gamma: float = 1.0
    c_prime: float = CALIBRATED["c_prime"]
    c_0: float = CALIBRATED["c_0"]
    C_beta: float = CALIBRATED["C_beta"]
    L: float = 1.0
    K: float = 1.0

    def __post_init__(self):
        for name in ("width_cap", "width_omega", "psi_max", "phi_omega", "epsilon",
                     "gamma", "c_prime", "L", "K"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"schedule parameter {name} must be positive")
        for name in ("c_0", "C_beta"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"schedule parameter {name} must be non-negative")
        if int(self.T) != self.T or self.T < 2:
            raise ConfigurationError("horizon T must be an integer >= 2")

    @classmethod
    def for_model(cls, model: StructureModel, T: int, **overrides) -> "ScheduleParams":
        """Defaults derived from the structure: analytic cap width, Monte-Carlo
        width of the unit ball, unit-constant compatibility and diameter."""
        base = {
            "T": T,
            "width_cap": default_cap_width(model),
            "width_omega": overrides.pop("width_omega", None) or _cached_omega_width(model),
            "psi_max": compat_constant(model),
            "phi_omega": model.omega_diameter,
        }
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Schedule:
    n: int
    beta: float
    lambda_scale: float

    def lambda_fn(self, t: int) -> float:
        return self.lambda_scale / math.sqrt(t)

    def __iter__(self):
        return iter((self.n, self.beta, self.lambda_fn))


def _burn_in(params: ScheduleParams, T: int) -> int:
    return math.ceil(params.c_prime * params.width_cap**2 * (params.epsilon**2 + math.log(T)))


def compute_schedule(params: ScheduleParams) -> Schedule:
    """``n = ceil(c' w_cap^2 (eps^2 + ln T))``, ``lambda_t = c_0 r / sqrt(t)``
    and ``beta = C psi r`` with ``r = w_omega + sqrt(gamma^2 + ln T) phi / 2``.
    """
    T = int(params.T)
    n = _burn_in(params, T)
    if n >= T:
        min_T = T + 1
        while _burn_in(params, min_T) >= min_T:
            min_T = max(min_T + 1, _burn_in(params, min_T) + 1)
        raise HorizonTooShortError(n, T, min_T)
    r = params.width_omega + math.sqrt(params.gamma**2 + math.log(T)) * params.phi_omega / 2.0
    return Schedule(n=n, beta=params.C_beta * params.psi_max * r, lambda_scale=params.c_0 * r)


def _jitter(D: np.ndarray) -> float:
    p = D.shape[0]
    return 1e-9 * (1.0 + np.trace(D) / p)


class ConfidenceEllipsoid:
    """``{theta : sqrt((theta - center)^T D (theta - center)) <= beta}``.

    ``D`` is regularized by ``delta I`` with
    ``delta = 1e-9 (1 + trace(D) / p)`` since ``X^T X`` is singular early on.
    """

    def __init__(self, center, D, beta: float):
        self.center = np.asarray(center, dtype=float)
        self.D = np.asarray(D, dtype=float)
        self.beta = float(beta)
        p = self.center.shape[0]
        self.shape = self.D + _jitter(self.D) * np.eye(p)
        chol = np.linalg.cholesky(self.shape)
        inv_chol = np.linalg.inv(chol)
        self.inverse = inv_chol.T @ inv_chol

    def distance(self, theta) -> float:
        d = np.asarray(theta, dtype=float) - self.center
        return math.sqrt(max(float(d @ self.shape @ d), 0.0))

    def contains(self, theta) -> bool:
        return self.distance(theta) <= self.beta

    def minimizer(self, x) -> np.ndarray:
        """Exact ``argmin_{theta in C} <x, theta>``."""
        Mx = self.inverse @ x
        scale = math.sqrt(max(float(x @ Mx), 0.0))
        if scale == 0.0:
            return self.center.copy()
        return self.center - self.beta * Mx / scale


@dataclass(frozen=True)
class OptimisticChoice:
    x: np.ndarray
    theta: np.ndarray
    value: float
    sphere_rejected: bool
    values: tuple = ()


def select_arm_optimistic(ell: ConfidenceEllipsoid, dset: DecisionSet,
                          iters: int = ALTERNATIONS) -> OptimisticChoice:
    """Alternating minimization of ``<x, theta>`` over ``X x (C_t on the sphere)``.

    Given ``theta``, ``x`` comes from the linear minimization oracle; given
    ``x``, ``theta`` is the exact ellipsoid minimizer, normalized to the unit
    sphere when the normalized point stays inside ``C_t`` and kept as is
    otherwise. The best pair seen is returned; ``values`` holds the running
    best value after each alternation.
    """
    if iters < 1:
        raise InputError("need at least one alternation")
    if np.linalg.norm(ell.center) > 1e-12:
        x, degenerate = linear_min_oracle(dset, ell.center)
    else:
        # centred at the origin: start along the longest axis of the ellipsoid
        w, V = np.linalg.eigh(ell.shape)
        x, degenerate = linear_min_oracle(dset, -V[:, 0])
    if degenerate or not np.any(x):
        raise DegenerateArmError("optimistic arm is the origin")

    best = None
    history = []
    prev = None
    for _ in range(iters):
        theta = ell.minimizer(x)
        rejected = True
        nrm = np.linalg.norm(theta)
        if nrm > 0:
            unit = theta / nrm
            if ell.contains(unit):
                theta, rejected = unit, False
        val = float(x @ theta)
        if best is None or val < best[2]:
            best = (x, theta, val, rejected)
        history.append(best[2])
        if prev is not None and abs(prev - val) < ALTERNATION_TOL:
            break
        prev = val
        x_next, degenerate = linear_min_oracle(dset, theta)
        if degenerate or not np.any(x_next):
            break
        x = x_next
    x, theta, val, rejected = best
    if not np.any(x):
        raise DegenerateArmError("optimistic arm is the origin")
    return OptimisticChoice(x, theta, val, rejected, tuple(history))


def perturb_and_play(x_opt, dset: DecisionSet, rng) -> tuple[np.ndarray, bool]:
    """Uniform draw from ``X`` intersected with the ball ``B(x', ||x'||/2)``.

    Rejection sampling from the ball. After ``10^4`` consecutive rejections
    falls back to ``x' + (||x'||/2) v`` with ``v`` a uniform ball draw shrunk
    by halves until it lands in ``X``; the second return value flags this.
    """
    rng = np.random.default_rng(rng)
    x_opt = np.asarray(x_opt, dtype=float)
    radius = float(np.linalg.norm(x_opt)) / 2.0
    if radius == 0.0:
        raise DegenerateArmError("cannot perturb the origin")
    p = x_opt.shape[0]
    tried = 0
    while tried < MAX_REJECTIONS:
        k = min(_PROPOSALS, MAX_REJECTIONS - tried)
        cand = x_opt + radius * uniform_ball(rng, k, p)
        ok = np.flatnonzero(dset.contains(cand))
        if ok.size:
            return cand[ok[0]], False
        tried += k
    v = uniform_ball(rng, 1, p)[0]
    step = radius
    while True:
        x = x_opt + step * v
        if dset.contains(x)[0]:
            return x, True
        step /= 2.0
        if step < 1e-300:
            return x_opt.copy(), True


def certificate_theta(x_opt, theta_opt) -> np.ndarray:
    """``theta' - x'/||x'||``; certifies ``<x, theta~> <= <x', theta'>`` for
    every ``x`` in ``B(x', ||x'||/2)`` whenever ``||theta'|| <= 1``."""
    x_opt = np.asarray(x_opt, dtype=float)
    nrm = np.linalg.norm(x_opt)
    if nrm == 0.0:
        raise DegenerateArmError("certificate undefined for the zero arm")
    return np.asarray(theta_opt, dtype=float) - x_opt / nrm


@dataclass
class RegretTrace:
    """Per-round record of one episode.

    Rounds are 1-based in the CSV; arrays are 0-based (index ``t - 1``).
    ``lambdas`` and ``distance`` are NaN and ``contained`` is -1 before the
    burn-in ends.
    """

    arms: np.ndarray
    regret: np.ndarray
    lambdas: np.ndarray
    contained: np.ndarray
    distance: np.ndarray
    flags: list
    optimism_ok: np.ndarray
    optimal_value: float
    n: int
    beta: float
    gap: float | None = None
    unhealthy: bool = False
    solver_failures: int = 0
    kappa_hat: float | None = None

    @property
    def T(self) -> int:
        return self.regret.shape[0]

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def R_T(self) -> float:
        return float(self.cum_regret[-1])

    @property
    def containment_rate(self) -> float:
        post = self.contained[self.n - 1:]
        return float(np.mean(post == 1)) if post.size else float("nan")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "regret", "cum_regret", "lambda", "contained", "deviation_flags"])
        cum = self.cum_regret
        for i in range(self.T):
            lam = "" if np.isnan(self.lambdas[i]) else repr(float(self.lambdas[i]))
            c = "" if self.contained[i] < 0 else str(int(self.contained[i]))
            w.writerow([i + 1, repr(float(self.regret[i])), repr(float(cum[i])), lam, c,
                        ";".join(self.flags[i])])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path, n: int | None = None, beta: float = float("nan"),
                 optimal_value: float = float("nan")) -> "RegretTrace":
        """Rebuild the per-round columns of a persisted trace (arms are not stored)."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        regret = np.array([float(r["regret"]) for r in rows])
        lambdas = np.array([float(r["lambda"]) if r["lambda"] else np.nan for r in rows])
        contained = np.array([int(r["contained"]) if r["contained"] else -1 for r in rows], dtype=np.int8)
        flags = [r["deviation_flags"].split(";") if r["deviation_flags"] else [] for r in rows]
        if n is None:
            first = np.flatnonzero(contained >= 0)
            n = int(first[0]) + 1 if first.size else len(rows) + 1
        return cls(
            arms=np.empty((len(rows), 0)),
            regret=regret,
            lambdas=lambdas,
            contained=contained,
            distance=np.full(len(rows), np.nan),
            flags=flags,
            optimism_ok=np.ones(len(rows), dtype=bool),
            optimal_value=optimal_value,
            n=n,
            beta=beta,
        )


def _instant_regret(x, theta_star, opt) -> float:
    r = float(x @ theta_star) - opt
    # rounding can push an arm on the boundary a hair below the optimum
    return 0.0 if -1e-12 < r < 0.0 else r


def run_episode(env: Environment, dset: DecisionSet, model: StructureModel,
                params: ScheduleParams, solver: SolverConfig = SolverConfig(),
                seed: int = 0, *, schedule: Schedule | None = None,
                kappa_directions: int = 0, debug: bool = False) -> RegretTrace:
    """Run the structured bandit algorithm for ``params.T`` rounds.

    Parameters
    ----------
    schedule : Schedule, optional
        Overrides the schedule computed from ``params`` (e.g. to force a
        radius).
    kappa_directions : int
        If positive, record the restricted-eigenvalue diagnostic at ``t = n``
        using this many cap directions.
    debug : bool
        Raise ``AssertionError`` on the first violated per-round invariant
        (arm validity, Gram drift, optimism certificate).

    Notes
    -----
    Deterministic for fixed ``seed`` and ``env.rng_seed``.
    """
    if not (env.p == dset.p == model.p):
        raise InputError("environment, decision set and structure disagree on p")
    sched = schedule if schedule is not None else compute_schedule(params)
    n, beta = sched.n, sched.beta
    T, p = int(params.T), model.p
    theta_star = env.theta_star

    arm_ss, perturb_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)
    arm_rng = np.random.default_rng(arm_ss)
    perturb_rng = np.random.default_rng(perturb_ss)
    noise_rng = np.random.default_rng(env.rng_seed if env.rng_seed is not None else noise_ss)

    opt = optimal_value(dset, theta_star)
    X = np.zeros((T, p))
    D = np.zeros((p, p))
    b = np.zeros(p)
    yy = 0.0
    theta_hat = np.zeros(p)
    power_v = None

    regret = np.zeros(T)
    lambdas = np.full(T, np.nan)
    contained = np.full(T, -1, dtype=np.int8)
    distance = np.full(T, np.nan)
    optimism_ok = np.ones(T, dtype=bool)
    flags = [[] for _ in range(T)]
    failures = solves = 0
    kappa_hat = None
    ell = None
    burn_in = dset.sample(arm_rng, n)
    ridge = model.kind is NormKind.L2
    eye = np.eye(p)

    for t in range(1, T + 1):
        i = t - 1
        if t <= n:
            x = burn_in[i]
        else:
            try:
                choice = select_arm_optimistic(ell, dset)
            except DegenerateArmError:
                flags[i].append("degenerate_arm")
                x = dset.sample(arm_rng, 1)[0]
            else:
                if choice.sphere_rejected:
                    flags[i].append("sphere_rejected")
                x, fallback = perturb_and_play(choice.x, dset, perturb_rng)
                if fallback:
                    flags[i].append("perturb_fallback")
                if contained[i - 1] == 1 and np.linalg.norm(choice.theta) <= 1.0:
                    cert = certificate_theta(choice.x, choice.theta)
                    optimism_ok[i] = bool(x @ cert <= opt)
                    if debug:
                        assert optimism_ok[i], f"optimism certificate violated at round {t}"
            if debug:
                assert dset.contains(x)[0], f"played arm outside the decision set at round {t}"

        loss = float(x @ theta_star) + env.noise(noise_rng)
        X[i] = x
        D += np.outer(x, x)
        b += loss * x
        yy += loss * loss
        regret[i] = _instant_regret(x, theta_star, opt)

        if t % 100 == 0:
            Xt = X[:t]
            drift = np.linalg.norm(D - Xt.T @ Xt)
            if drift > 1e-8 * max(1.0, np.linalg.norm(D)):
                if debug:
                    raise AssertionError(f"Gram drift {drift:.3e} at round {t}")
                D = Xt.T @ Xt
                flags[i].append("gram_resync")

        if t < n:
            continue
        lam = sched.lambda_fn(t)
        lambdas[i] = lam
        if ridge:
            theta_hat = np.linalg.solve(D + t * lam * eye, b)
        else:
            lip, power_v = lipschitz_constant(D, t, power_v)
            est = solve_prox_grad_gram(model, D, b, yy, t, lam, solver, x0=theta_hat, lipschitz=lip)
            theta_hat = est.theta_hat
            solves += 1
            if not est.converged:
                failures += 1
                flags[i].append("solver_nonconverged")
        ell = ConfidenceEllipsoid(theta_hat, D, beta)
        distance[i] = ell.distance(theta_star)
        contained[i] = 1 if distance[i] <= beta else 0
        if t == n and kappa_directions > 0:
            sampler = CapSampler.from_spec(ErrorSetSpec(model, theta_star), seed=seed)
            kappa_hat = estimate_restricted_eigenvalue(X[:n], sampler, kappa_directions, seed).kappa_hat

    return RegretTrace(
        arms=X,
        regret=regret,
        lambdas=lambdas,
        contained=contained,
        distance=distance,
        flags=flags,
        optimism_ok=optimism_ok,
        optimal_value=opt,
        n=n,
        beta=beta,
        gap=gap_of(dset, theta_star),
        unhealthy=solves > 0 and failures > 0.01 * solves,
        solver_failures=failures,
        kappa_hat=kappa_hat,
    )


def run_baseline(env: Environment, dset: DecisionSet, T: int, policy: str = "uniform",
                 seed: int = 0) -> RegretTrace:
    """Reference policies: ``"oracle"`` always plays ``x*``; ``"uniform"``
    plays uniform random arms."""
    if policy not in ("oracle", "uniform"):
        raise InputError(f"unknown baseline policy {policy!r}")
    rng = np.random.default_rng(seed)
    x_star, _ = linear_min_oracle(dset, env.theta_star)
    opt = float(x_star @ env.theta_star)
    arms = np.tile(x_star, (T, 1)) if policy == "oracle" else dset.sample(rng, T)
    regret = np.array([_instant_regret(x, env.theta_star, opt) for x in arms])
    return RegretTrace(
        arms=arms,
        regret=regret,
        lambdas=np.full(T, np.nan),
        contained=np.full(T, -1, dtype=np.int8),
        distance=np.full(T, np.nan),
        flags=[[] for _ in range(T)],
        optimism_ok=np.ones(T, dtype=bool),
        optimal_value=opt,
        n=T + 1,
        beta=float("nan"),
        gap=gap_of(dset, env.theta_star),
    )
