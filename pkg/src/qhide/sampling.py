"""Seeded sampling of complex Gaussians, Haar-random unitaries and states,
plus Monte Carlo checks of the concentration bounds they obey.

All samplers accept either a :class:`SeededRng` (a reproducible stream
descriptor; passing the same one twice reproduces the same output) or a
live ``numpy.random.Generator`` (stateful, for sequential draws).  The
tail-check drivers split their work into one stream per trial so that
serial and parallel execution agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError

# Concentration constant for the squared-Gaussian mean bound 2^(-C N eps^2).
CONCENTRATION_C = 1.0 / (6.0 * math.log(2.0))


@dataclass(frozen=True)
class SeededRng:
    """Descriptor of a reproducible random stream.

    The same (seed, stream_id) always yields the identical sample
    sequence.  ``trial(t)`` derives the stream for trial ``t`` so that
    trials can run in any order, or in parallel, with identical results.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        )

    def child(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *key))
        )

    def trial(self, t: int) -> np.random.Generator:
        return self.child(t)

    def stream(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.seed, stream_id)


RngLike = Union[SeededRng, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    return rng


def sample_complex_gaussian(count: int, rng: RngLike) -> np.ndarray:
    """``count`` i.i.d. standard complex Gaussians.

    Each entry is g = g_x + i g_y with independent real parts of mean 0
    and variance 1/2, so E|g|^2 = 1.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal(2 * count)
    return (z[:count] + 1j * z[count:]) / math.sqrt(2.0)


def _phase_fix(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    # Multiply each column of Q by the phase of the matching R diagonal;
    # this removes the diagonal-phase ambiguity of QR and makes the
    # result Haar distributed.
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def sample_haar_unitary(dim: int, rng: RngLike) -> np.ndarray:
    """Haar-random unitary on C^dim via QR of a Ginibre matrix."""
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    gen = as_generator(rng)
    g = sample_complex_gaussian(dim * dim, gen).reshape(dim, dim)
    q, r = np.linalg.qr(g)
    return _phase_fix(q, r)


def sample_haar_isometry(dim: int, cols: int, rng: RngLike) -> np.ndarray:
    """First ``cols`` columns of a Haar-random unitary on C^dim."""
    if not 1 <= cols <= dim:
        raise ParameterError("need 1 <= cols <= dim")
    gen = as_generator(rng)
    g = sample_complex_gaussian(dim * cols, gen).reshape(dim, cols)
    q, r = np.linalg.qr(g, mode="reduced")
    return _phase_fix(q, r)


def sample_haar_state(dim: int, rng: RngLike) -> np.ndarray:
    """Haar-random pure state: a complex Gaussian vector divided by its norm."""
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    g = sample_complex_gaussian(dim, rng)
    return g / np.linalg.norm(g)


def tail_bound(exponent: float, base_two: bool = True) -> float:
    """exp(-exponent), with exp taken base 2 by default."""
    return float(2.0 ** (-exponent)) if base_two else float(math.exp(-exponent))


@dataclass(frozen=True)
class TailCheckReport:
    """Empirical large-deviation rates next to their analytic bound."""

    trials: int
    epsilon: float
    n_samples: int
    empirical_upper_rate: float
    empirical_lower_rate: float
    analytic_bound: float

    def three_sigma_slack(self) -> float:
        """3x the binomial standard error of the bound at this trial count."""
        b = min(self.analytic_bound, 1.0)
        return 3.0 * math.sqrt(b * (1.0 - b) / self.trials)

    def within_envelope(self) -> bool:
        """True when both rates satisfy the bound + 3 sigma envelope
        (for sub-resolution bounds the rates must be exactly zero)."""
        if self.analytic_bound * self.trials >= 10.0:
            limit = self.analytic_bound + self.three_sigma_slack()
            return (
                self.empirical_upper_rate <= limit
                and self.empirical_lower_rate <= limit
            )
        return self.empirical_upper_rate == 0.0 and self.empirical_lower_rate == 0.0

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "epsilon": self.epsilon,
            "n_samples": self.n_samples,
            "empirical_upper_rate": self.empirical_upper_rate,
            "empirical_lower_rate": self.empirical_lower_rate,
            "analytic_bound": self.analytic_bound,
            "within_envelope": self.within_envelope(),
        }


def check_gaussian_tail(
    n_samples: int,
    epsilon: float,
    trials: int,
    rng: SeededRng,
    c_const: float = CONCENTRATION_C,
    base_two: bool = True,
) -> TailCheckReport:
    """Empirical tail rates of the mean of squared Gaussian moduli.

    Per trial, draws N = ``n_samples`` complex Gaussians and tests
    whether (1/N) sum |g_i|^2 lands at or above 1 + eps (upper) or at or
    below 1 - eps (lower).  Both rates are reported beside the analytic
    bound 2^(-C N eps^2).
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if not 0.0 < epsilon <= 1.0:
        raise ParameterError("epsilon must lie in (0, 1]")
    upper = lower = 0
    for t in range(trials):
        g = sample_complex_gaussian(n_samples, rng.trial(t))
        mean = float(np.mean(np.abs(g) ** 2))
        if mean >= 1.0 + epsilon:
            upper += 1
        if mean <= 1.0 - epsilon:
            lower += 1
    return TailCheckReport(
        trials=trials,
        epsilon=epsilon,
        n_samples=n_samples,
        empirical_upper_rate=upper / trials,
        empirical_lower_rate=lower / trials,
        analytic_bound=tail_bound(c_const * n_samples * epsilon**2, base_two),
    )


def check_haar_trace_tail(
    dim: int,
    proj_rank: int,
    n_unitaries: int,
    epsilon: float,
    trials: int,
    rng: SeededRng,
    c_const: float = CONCENTRATION_C,
    base_two: bool = True,
) -> TailCheckReport:
    """Empirical tail rates for the average overlap of Haar rotations of a
    fixed pure state with a fixed rank-p projector.

    Per trial, draws N = ``n_unitaries`` Haar unitaries and tests whether
    (1/N) sum_i Tr(U_i phi U_i^dag P) deviates from its mean p/d by at
    least eps*p/d upward (upper) or downward (lower), against the bound
    2^(-C N p eps^2).  The state phi is sampled once per report; P
    projects onto the first ``proj_rank`` computational basis vectors.
    """
    if not 1 <= proj_rank <= dim:
        raise ParameterError("need 1 <= proj_rank <= dim")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    phi = sample_haar_state(dim, rng.child(-1, 0))
    mean_value = proj_rank / dim
    gap = epsilon * mean_value
    upper = lower = 0
    for t in range(trials):
        gen = rng.trial(t)
        total = 0.0
        for _ in range(n_unitaries):
            u = sample_haar_unitary(dim, gen)
            rotated = u @ phi
            total += float(np.sum(np.abs(rotated[:proj_rank]) ** 2))
        avg = total / n_unitaries
        if avg - mean_value >= gap:
            upper += 1
        if avg - mean_value <= -gap:
            lower += 1
    return TailCheckReport(
        trials=trials,
        epsilon=epsilon,
        n_samples=n_unitaries,
        empirical_upper_rate=upper / trials,
        empirical_lower_rate=lower / trials,
        analytic_bound=tail_bound(
            c_const * n_unitaries * proj_rank * epsilon**2, base_two
        ),
    )
