"""Deterministic, replay-keyed direction sampling for zeroth-order perturbations.

Every perturbation direction is a pure function of
(base_seed, step, sample_index, block_index), so directions are regenerated
on demand and never stored. The generator is counter-based (Philox), which
makes replay of any single draw O(1) instead of requiring a sequential
fast-forward.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

GAUSSIAN = "gaussian"
UNIFORM = "uniform"
RADEMACHER = "rademacher"
TERNARY = "ternary"

DISTRIBUTIONS = (GAUSSIAN, UNIFORM, RADEMACHER, TERNARY)

_MAX_KEY = 2**32  # SeedSequence spawn_key entries are 32-bit


@dataclass(frozen=True)
class PerturbationSpec:
    """Distribution tag, finite-difference scale, and the seed replay keys derive from."""

    distribution: str
    epsilon: float
    base_seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidArgumentError(
                f"unknown distribution {self.distribution!r}, expected one of {DISTRIBUTIONS}"
            )
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise InvalidArgumentError(f"epsilon must be a positive finite real, got {self.epsilon}")
        if not (0 <= int(self.base_seed) < 2**64):
            raise InvalidArgumentError(f"base_seed must fit in 64 unsigned bits, got {self.base_seed}")


@dataclass(frozen=True)
class ReplayCoordinate:
    """Identifies one direction draw: optimizer step, sample index, block index."""

    step: int
    sample_index: int = 0
    block_index: int = 0

    def __post_init__(self):
        for name in ("step", "sample_index", "block_index"):
            value = getattr(self, name)
            if not (0 <= int(value) < _MAX_KEY):
                raise InvalidArgumentError(f"{name} must be a non-negative 32-bit integer, got {value}")


def keyed_generator(base_seed, *key):
    """Counter-based generator for the stream identified by (base_seed, *key)."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _draw(distribution, rng, shape):
    if distribution == GAUSSIAN:
        return rng.standard_normal(shape)
    if distribution == UNIFORM:
        z = rng.standard_normal(shape)
        norm = np.linalg.norm(z, axis=-1, keepdims=True)
        return z / norm
    if distribution == RADEMACHER:
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    if distribution == TERNARY:
        return rng.integers(0, 3, size=shape).astype(np.float64) - 1.0
    raise InvalidArgumentError(f"unknown distribution {distribution!r}")


def sample_direction(spec, coord, d):
    """Return the direction vector for one replay coordinate.

    Identical inputs return bit-identical vectors; distinct coordinates give
    statistically independent draws.
    """
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    rng = keyed_generator(spec.base_seed, coord.step, coord.sample_index, coord.block_index)
    return _draw(spec.distribution, rng, int(d))


def replay_directions(spec, step, q, d):
    """Yield the q directions of one step, regenerated from their replay keys."""
    for i in range(q):
        yield sample_direction(spec, ReplayCoordinate(step, i, 0), d)


def batch_directions(distribution, shape, d, rng):
    """Draw an array of directions of shape ``shape + (d,)`` from a sequential generator.

    Bulk sampling for Monte Carlo verification; optimizer loops use
    sample_direction so each draw stays individually replayable.
    """
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    full = tuple(shape) + (int(d),)
    return _draw(distribution, rng, full)


def second_moment_scale(distribution, d=None):
    """Scale sigma with E[u u^T] = sigma * I for the named distribution."""
    if distribution == GAUSSIAN or distribution == RADEMACHER:
        return 1.0
    if distribution == UNIFORM:
        if d is None or d < 1:
            raise InvalidArgumentError("uniform sphere second moment needs the dimension d")
        return 1.0 / float(d)
    if distribution == TERNARY:
        return 2.0 / 3.0
    raise InvalidArgumentError(f"unknown distribution {distribution!r}")
