"""Reward laws on [-1, 1] and feature laws on the closed unit ball.

Scalar reward laws all have finite support, so each one exposes a canonical
``support()`` (sorted values, merged probabilities) that the simulator turns
into an inverse-CDF table.  Scalar laws sample from caller-supplied uniforms,
feature laws from hashed keys (see ``rng``); nothing here owns a generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy import integrate, stats

from .errors import BadProbability, DimensionMismatch
from .rng import absorb_lane, to_unit

PROB_TOL = 1e-12
_NORM_TOL = 1e-12


def _check_probs(probs: np.ndarray, what: str) -> None:
    if probs.ndim != 1 or len(probs) == 0:
        raise BadProbability(f"{what}: probabilities must be a non-empty vector")
    if np.any(probs < 0):
        raise BadProbability(f"{what}: negative probability")
    if abs(probs.sum() - 1.0) > PROB_TOL:
        raise BadProbability(f"{what}: probabilities sum to {probs.sum()!r}, not 1")


def _check_reward(values: np.ndarray, what: str) -> None:
    if np.any(np.abs(values) > 1.0):
        raise ValueError(f"{what}: support must lie in [-1, 1]")


def canonical(values, probs) -> tuple[np.ndarray, np.ndarray]:
    """Sort support ascending and merge repeated values (zero-mass points dropped)."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    keep = probs > 0
    uniq, inv = np.unique(values[keep], return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inv, probs[keep])
    return uniq, merged


def inverse_cdf(values: np.ndarray, probs: np.ndarray, u) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, np.asarray(u, dtype=float), side="right")
    return values[np.minimum(idx, len(values) - 1)]


# --------------------------------------------------------------------------
# scalar reward distributions


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise BadProbability(f"Bernoulli p={self.p} outside [0, 1]")

    def mean(self) -> float:
        return float(self.p)

    def support(self):
        return canonical([0.0, 1.0], [1.0 - self.p, self.p])

    def sample(self, u) -> np.ndarray:
        return inverse_cdf(*self.support(), u)


@dataclass(frozen=True)
class DiscretePoints:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.values) != len(self.probs):
            raise ValueError("values and probs differ in length")
        _check_probs(np.asarray(self.probs), "DiscretePoints")
        _check_reward(np.asarray(self.values), "DiscretePoints")

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def support(self):
        return canonical(self.values, self.probs)

    def sample(self, u) -> np.ndarray:
        return inverse_cdf(*self.support(), u)


@dataclass(frozen=True)
class PointMass:
    v: float

    def __post_init__(self):
        _check_reward(np.asarray([self.v]), "PointMass")

    def mean(self) -> float:
        return float(self.v)

    def support(self):
        return np.array([float(self.v)]), np.array([1.0])

    def sample(self, u) -> np.ndarray:
        return np.full(np.shape(u), float(self.v))


@dataclass(frozen=True)
class ShiftedMixture:
    """Keep a draw from ``base`` with probability ``keep_prob``, otherwise return 1."""

    base: "RewardDistribution"
    keep_prob: float

    def __post_init__(self):
        if not 0.0 < self.keep_prob <= 1.0:
            raise BadProbability(f"keep_prob={self.keep_prob} outside (0, 1]")

    def mean(self) -> float:
        return self.keep_prob * self.base.mean() + (1.0 - self.keep_prob)

    def support(self):
        v, p = self.base.support()
        return canonical(np.append(v, 1.0), np.append(self.keep_prob * p, 1.0 - self.keep_prob))

    def sample_with_source(self, u) -> tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        from_base = u < self.keep_prob
        inner = self.base.sample(np.where(from_base, u / self.keep_prob, 0.0))
        return np.where(from_base, inner, 1.0), from_base

    def sample(self, u) -> np.ndarray:
        return self.sample_with_source(u)[0]


RewardDistribution = Union[Bernoulli, DiscretePoints, PointMass, ShiftedMixture]


def dist_mean(d: RewardDistribution) -> float:
    return d.mean()


def shift_toward_one(d: RewardDistribution, keep_prob: float) -> ShiftedMixture:
    return ShiftedMixture(d, keep_prob)


# --------------------------------------------------------------------------
# feature distributions


def _as_vector(v) -> tuple[float, ...]:
    return tuple(float(x) for x in np.asarray(v, dtype=float).ravel())


@dataclass(frozen=True)
class DiscreteFeature:
    points: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(_as_vector(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(pts) != len(self.probs) or len({len(p) for p in pts}) != 1:
            raise DimensionMismatch("DiscreteFeature: ragged points or probs")
        _check_probs(np.asarray(self.probs), "DiscreteFeature")
        if np.any(np.linalg.norm(np.asarray(pts), axis=1) > 1.0 + _NORM_TOL):
            raise ValueError("DiscreteFeature: support point outside the unit ball")

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.probs) @ np.asarray(self.points)

    def finite_support(self):
        return np.asarray(self.points), np.asarray(self.probs)

    def sample(self, keys: np.ndarray) -> np.ndarray:
        u = to_unit(keys)
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(self.probs) - 1)
        return np.asarray(self.points)[idx]


@dataclass(frozen=True)
class PointMassFeature:
    v: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "v", _as_vector(self.v))
        if np.linalg.norm(self.v) > 1.0 + _NORM_TOL:
            raise ValueError("PointMassFeature outside the unit ball")

    @property
    def dim(self) -> int:
        return len(self.v)

    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.v)

    def finite_support(self):
        return np.asarray([self.v]), np.array([1.0])

    def sample(self, keys: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.v), np.shape(keys) + (self.dim,)).copy()


@dataclass(frozen=True)
class SphericalGaussian:
    """N(mean, variance * I) conditioned on the closed unit ball.

    A mean vector longer than 1 is rescaled onto the sphere at construction.
    Out-of-ball draws are rejected and redrawn from fresh lanes.
    """

    mean: tuple[float, ...]
    variance: float
    max_attempts: int = field(default=10_000, compare=False)

    def __post_init__(self):
        m = np.asarray(_as_vector(self.mean))
        norm = np.linalg.norm(m)
        if norm > 1.0:
            m = m / norm
        object.__setattr__(self, "mean", _as_vector(m))
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.mean)

    def finite_support(self):
        if self.variance == 0:
            return np.asarray([self.mean]), np.array([1.0])
        return None

    @cached_property
    def _radial_mean(self) -> float:
        # E<theta, m/|m|> for the ball-truncated law; the orthogonal part
        # averages to zero by symmetry.
        m = np.asarray(self.mean)
        r = float(np.linalg.norm(m))
        if r == 0.0 or self.variance == 0.0:
            return r
        s = np.sqrt(self.variance)
        rest = self.dim - 1

        def weight(a):
            dens = stats.norm.pdf(a, loc=r, scale=s)
            if rest == 0:
                return dens
            return dens * stats.chi2.cdf(max(1.0 - a * a, 0.0) / self.variance, rest)

        z, _ = integrate.quad(weight, -1.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        num, _ = integrate.quad(lambda a: a * weight(a), -1.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        return num / z

    def mean_vector(self) -> np.ndarray:
        m = np.asarray(self.mean)
        r = np.linalg.norm(m)
        if r == 0.0:
            return m
        return m / r * self._radial_mean

    def sample(self, keys: np.ndarray) -> np.ndarray:
        mean = np.broadcast_to(np.asarray(self.mean), np.shape(keys) + (self.dim,))
        return ball_gaussian(keys, mean, np.sqrt(self.variance), self.max_attempts)


def ball_gaussian(keys: np.ndarray, mean: np.ndarray, sd, max_attempts: int = 10_000) -> np.ndarray:
    """Gaussian draws around ``mean`` (shape keys.shape + (d,)) rejected into the unit ball.

    Attempt ``a`` reads lanes ``1 + 2*d*a ...`` of each key, two uniforms per
    coordinate (Box-Muller), so the result is a pure function of the keys.
    Uses the compiled kernel when numba is importable.
    """
    keys = np.asarray(keys)
    if _ball_kernel is not None and keys.size:
        d = np.shape(mean)[-1]
        flat_mean = np.ascontiguousarray(np.broadcast_to(mean, keys.shape + (d,)), dtype=float).reshape(-1, d)
        flat_sd = np.ascontiguousarray(np.broadcast_to(np.asarray(sd, dtype=float), keys.shape)).reshape(-1)
        out, ok = _ball_kernel(np.ascontiguousarray(keys, dtype=np.uint64).reshape(-1), flat_mean, flat_sd, max_attempts)
        if not ok:
            raise RuntimeError("ball_gaussian: rejection sampling did not terminate")
        return out.reshape(keys.shape + (d,))
    return ball_gaussian_reference(keys, mean, sd, max_attempts)


def ball_gaussian_reference(keys: np.ndarray, mean: np.ndarray, sd, max_attempts: int = 10_000) -> np.ndarray:
    """Pure-numpy version of :func:`ball_gaussian`, processed attempt by attempt."""
    keys = np.asarray(keys)
    d = mean.shape[-1]
    flat_keys = keys.reshape(-1)
    flat_mean = np.asarray(mean, dtype=float).reshape(-1, d)
    flat_sd = np.broadcast_to(np.asarray(sd, dtype=float), keys.shape).reshape(-1)
    out = np.empty_like(flat_mean)
    todo = np.arange(flat_keys.size)
    lanes = np.arange(2 * d)
    for attempt in range(max_attempts):
        u = to_unit(absorb_lane(flat_keys[todo, None], 1 + 2 * d * attempt + lanes))
        z = np.sqrt(-2.0 * np.log1p(-u[:, 0::2])) * np.cos(2.0 * np.pi * u[:, 1::2])
        theta = flat_mean[todo] + flat_sd[todo, None] * z
        ok = np.einsum("ij,ij->i", theta, theta) <= 1.0
        out[todo[ok]] = theta[ok]
        todo = todo[~ok]
        if todo.size == 0:
            return out.reshape(keys.shape + (d,))
    raise RuntimeError("ball_gaussian: rejection sampling did not terminate")


def _compile_ball_kernel():
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None
    from .rng import _FIELD, _GOLDEN, _M1, _M2

    golden, lane_off, m1, m2 = _GOLDEN, _FIELD["lane"], _M1, _M2
    s30, s27, s31, s11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
    scale = 1.0 / 9007199254740992.0
    two_pi = 2.0 * np.pi

    @numba.njit(cache=True)
    def unit(key, lane):
        z = key ^ (np.uint64(lane) * golden + lane_off)
        z = (z ^ (z >> s30)) * m1
        z = (z ^ (z >> s27)) * m2
        z = z ^ (z >> s31)
        return np.float64(z >> s11) * scale

    @numba.njit(cache=True)
    def kernel(keys, mean, sd, max_attempts):
        n, d = mean.shape
        out = np.empty((n, d))
        theta = np.empty(d)
        for r in range(n):
            done = False
            for a in range(max_attempts):
                base = 1 + 2 * d * a
                sq = 0.0
                for c in range(d):
                    u1 = unit(keys[r], base + 2 * c)
                    u2 = unit(keys[r], base + 2 * c + 1)
                    z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(two_pi * u2)
                    theta[c] = mean[r, c] + sd[r] * z
                    sq += theta[c] * theta[c]
                if sq <= 1.0:
                    out[r, :] = theta
                    done = True
                    break
            if not done:
                return out, False
        return out, True

    return kernel


_ball_kernel = _compile_ball_kernel()


FeatureDistribution = Union[DiscreteFeature, PointMassFeature, SphericalGaussian]


def contextual_mean(f: FeatureDistribution, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (f.dim,):
        raise DimensionMismatch(f"context has shape {x.shape}, feature dimension is {f.dim}")
    return float(f.mean_vector() @ x)
