"""Restricted-measurement attacks on hiding schemes.

An unauthorized coalition structure is a partition of the parties into
groups below the threshold.  Every measurement such a coalition can
perform refines to rank-one product projectors across the groups, so the
harness samples random product bases, improves them by see-saw ascent
(one group's basis at a time), and compares the resulting
distinguishability of two encoded states against the unrestricted
(trace-norm) baseline.  The optimized value is a lower bound on the true
restricted supremum; its purpose is comparative.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BudgetError, DegenerateSchemeError, DimensionError, ParameterError
from .linalg import DensityOperator, PureState, fidelity_with_pure, hermitianize, max_abs, trace_norm
from .sampling import (
    SeededRng,
    as_generator,
    sample_haar_isometry,
    sample_haar_state,
    sample_haar_unitary,
    tail_bound,
)
from .scheme import (
    HidingScheme,
    PartySplit,
    _split_indices,
    authorized_splits,
    build_decoder,
    encode_pure,
)

DEFAULT_OUTCOME_CAP = 65536
ASCENT_TOL = 1e-8
BASELINE_SLACK = 1e-8

_LETTERS = string.ascii_lowercase + string.ascii_uppercase


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups of party indices covering {0..n-1}."""

    n_parties: int
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        canon = tuple(sorted(tuple(sorted(g)) for g in self.groups))
        flat = [q for g in canon for q in g]
        if not canon or any(len(g) == 0 for g in canon):
            raise ParameterError("groups must be nonempty")
        if sorted(flat) != list(range(self.n_parties)):
            raise ParameterError("groups must partition the party set exactly")
        object.__setattr__(self, "groups", canon)

    @property
    def max_group_size(self) -> int:
        return max(len(g) for g in self.groups)

    def is_sub_threshold(self, k: int) -> bool:
        return self.max_group_size < k

    @property
    def label(self) -> str:
        return "|".join("".join(str(q) for q in g) for g in self.groups)


def enumerate_partitions(n: int, k: int) -> list[GroupPartition]:
    """All partitions of n parties into groups of size < k.

    For k = 1 every joint operation is authorized and there is nothing
    to attack: the list is empty.
    """
    if n < 1 or not 1 <= k <= n:
        raise ParameterError("need n >= 1 and 1 <= k <= n")
    if k == 1:
        return []

    partitions: list[GroupPartition] = []

    def extend(q: int, blocks: list[list[int]]):
        if q == n:
            partitions.append(GroupPartition(n, tuple(tuple(b) for b in blocks)))
            return
        for b in blocks:
            if len(b) + 1 < k:
                b.append(q)
                extend(q + 1, blocks)
                b.pop()
        blocks.append([q])
        extend(q + 1, blocks)
        blocks.pop()

    extend(0, [])
    return partitions


@dataclass(frozen=True)
class ProductMeasurement:
    """Rank-one product measurement respecting a party grouping.

    One orthonormal basis per group; the outcomes are all products of
    one basis projector per group (outcome index runs over groups in
    canonical order, first group most significant).
    """

    partition: GroupPartition
    local_dim: int
    bases: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = self.local_dim
        for g, basis in zip(self.partition.groups, self.bases, strict=True):
            m = d ** len(g)
            if basis.shape != (m, m):
                raise DimensionError(
                    f"group {g} basis has shape {basis.shape}, expected ({m}, {m})"
                )

    @property
    def n_outcomes(self) -> int:
        return self.local_dim**self.partition.n_parties

    @cached_property
    def outcome_vectors(self) -> np.ndarray:
        """All outcome vectors as rows of an (n_outcomes, d^n) array."""
        d = self.local_dim
        n = self.partition.n_parties
        n_groups = len(self.partition.groups)
        if n_groups + n > len(_LETTERS):
            raise BudgetError("too many tensor factors for outcome assembly")
        out_labels = _LETTERS[:n_groups]
        party_labels = _LETTERS[n_groups : n_groups + n]
        operands = []
        subs = []
        for q, (parties, basis) in enumerate(zip(self.partition.groups, self.bases)):
            tensor = basis.T.reshape((d ** len(parties),) + (d,) * len(parties))
            operands.append(tensor)
            subs.append(out_labels[q] + "".join(party_labels[p] for p in parties))
        spec = ",".join(subs) + "->" + out_labels + party_labels
        return np.einsum(spec, *operands).reshape(self.n_outcomes, d**n)

    def completeness_residual(self) -> float:
        w = self.outcome_vectors
        return max_abs(w.T @ w.conj() - np.eye(w.shape[1]))


def sample_product_measurement(
    partition: GroupPartition,
    d: int,
    rng,
    outcome_cap: int = DEFAULT_OUTCOME_CAP,
) -> ProductMeasurement:
    """Haar-random orthonormal basis per group; outcomes are all products."""
    if d**partition.n_parties > outcome_cap:
        raise BudgetError(
            f"outcome count {d**partition.n_parties} exceeds cap {outcome_cap}"
        )
    gen = as_generator(rng)
    bases = tuple(
        sample_haar_unitary(d ** len(g), gen) for g in partition.groups
    )
    return ProductMeasurement(partition=partition, local_dim=d, bases=bases)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def outcome_distribution(measurement: ProductMeasurement, rho) -> np.ndarray:
    """Born probabilities of every outcome."""
    mat = _matrix(rho)
    w = measurement.outcome_vectors
    if mat.shape[0] != w.shape[1]:
        raise DimensionError(f"state dim {mat.shape[0]} != measurement dim {w.shape[1]}")
    return np.real(np.einsum("oi,oi->o", w.conj() @ mat, w))


def _product_value(measurement: ProductMeasurement, diff: np.ndarray) -> float:
    w = measurement.outcome_vectors
    if diff.shape[0] != w.shape[1]:
        raise DimensionError(
            f"state dim {diff.shape[0]} != measurement dim {w.shape[1]}"
        )
    brackets = np.real(np.einsum("oi,oi->o", w.conj() @ diff, w))
    return float(np.abs(brackets).sum())


def attack_value(measurement: ProductMeasurement, rho0, rho1) -> float:
    """l1 distance between the outcome distributions of two states."""
    m0, m1 = _matrix(rho0), _matrix(rho1)
    if m0.shape != m1.shape:
        raise DimensionError(f"state shapes differ: {m0.shape} vs {m1.shape}")
    return _product_value(measurement, m0 - m1)


def _group_conditionals(
    diff_tensor: np.ndarray,
    partition: GroupPartition,
    d: int,
    bases: Sequence[np.ndarray],
    q: int,
) -> np.ndarray:
    """Difference operator on group q conditioned on the other groups'
    outcomes: shape (other_outcome_count, d^n_q, d^n_q)."""
    n = partition.n_parties
    n_groups = len(partition.groups)
    bra = _LETTERS[:n]
    ket = _LETTERS[n : 2 * n]
    out_labels = _LETTERS[2 * n : 2 * n + n_groups]
    operands = [diff_tensor]
    subs = [bra + ket]
    for p, (parties, basis) in enumerate(zip(partition.groups, bases)):
        if p == q:
            continue
        tensor = basis.T.reshape((d ** len(parties),) + (d,) * len(parties))
        operands.append(tensor.conj())
        subs.append(out_labels[p] + "".join(bra[a] for a in parties))
        operands.append(tensor)
        subs.append(out_labels[p] + "".join(ket[a] for a in parties))
    own = partition.groups[q]
    output = (
        "".join(out_labels[p] for p in range(n_groups) if p != q)
        + "".join(bra[a] for a in own)
        + "".join(ket[a] for a in own)
    )
    spec = ",".join(subs) + "->" + output
    m = d ** len(own)
    cond = np.einsum(spec, *operands).reshape(-1, m, m)
    return (cond + cond.conj().transpose(0, 2, 1)) / 2


def _brackets(conditionals: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """<b|G_o|b> for every other-outcome o and basis column b."""
    return np.real(np.einsum("ib,oij,jb->ob", basis.conj(), conditionals, basis))


def _update_group(conditionals: np.ndarray, basis: np.ndarray):
    """Best improving basis for one group, holding the others fixed.

    Candidates are the eigenbases (descending eigenvalue order) of the
    effective operators sum_o s_o G_o for every sign pattern s realized
    by the current basis; the update is accepted only if it strictly
    improves the objective, so the ascent is monotone by construction.
    """
    x = _brackets(conditionals, basis)
    current = float(np.abs(x).sum())
    signs = np.where(x >= 0.0, 1.0, -1.0)
    seen: dict[tuple, None] = {}
    for b in range(signs.shape[1]):
        seen.setdefault(tuple(signs[:, b]), None)
    best_value, best_basis = current, basis
    for pattern in seen:
        effective = hermitianize(np.tensordot(np.array(pattern), conditionals, axes=1))
        w, v = np.linalg.eigh(effective)
        candidate = v[:, ::-1]
        value = float(np.abs(_brackets(conditionals, candidate)).sum())
        if value > best_value:
            best_value, best_basis = value, candidate
    return best_value, best_basis


def _seesaw_once(
    diff: np.ndarray,
    partition: GroupPartition,
    d: int,
    init_bases: Sequence[np.ndarray],
    max_iters: int,
    tol: float = ASCENT_TOL,
):
    n = partition.n_parties
    diff_tensor = diff.reshape((d,) * (2 * n))
    bases = list(init_bases)
    value = _product_value(ProductMeasurement(partition, d, tuple(bases)), diff)
    iterations = 0
    converged = False
    for _ in range(max_iters):
        start = value
        for q in range(len(bases)):
            conditionals = _group_conditionals(diff_tensor, partition, d, bases, q)
            value, bases[q] = _update_group(conditionals, bases[q])
        iterations += 1
        if value <= start + tol:
            converged = True
            break
    return value, tuple(bases), iterations, converged


@dataclass(frozen=True)
class AttackResult:
    """Outcome of a restricted-attack optimization on one state pair."""

    value: float
    best_measurement: ProductMeasurement
    iterations: int
    helstrom_baseline: float
    converged: bool


def seesaw_optimize(
    scheme: HidingScheme,
    partition: GroupPartition,
    phi0: PureState,
    phi1: PureState,
    restarts: int,
    max_iters: int,
    rng: SeededRng,
) -> AttackResult:
    """Alternating maximization of the product-measurement
    distinguishability of two encoded code states.

    The best value over ``restarts`` random starting bases is returned
    together with the unrestricted baseline ||E(phi0) - E(phi1)||_1.
    """
    p = scheme.params
    if partition.n_parties != p.n:
        raise ParameterError("partition refers to a different party count")
    rho0 = encode_pure(scheme, phi0).matrix
    rho1 = encode_pure(scheme, phi1).matrix
    baseline = trace_norm(rho0 - rho1)
    children = [rng.child(restart) for restart in range(max(1, restarts))]
    value, bases, iterations, converged = _optimize_product_attack(
        rho0 - rho1, partition, p.d, children, max_iters
    )
    if value > baseline + BASELINE_SLACK:
        raise DegenerateSchemeError(
            f"restricted value {value} exceeds the unrestricted baseline {baseline}"
        )
    return AttackResult(
        value=value,
        best_measurement=ProductMeasurement(partition, p.d, bases),
        iterations=iterations,
        helstrom_baseline=baseline,
        converged=converged,
    )


def _optimize_product_attack(
    diff: np.ndarray,
    partition: GroupPartition,
    d: int,
    restart_rngs: Sequence[np.random.Generator],
    max_iters: int,
):
    best = None
    for gen in restart_rngs:
        init = tuple(sample_haar_unitary(d ** len(g), gen) for g in partition.groups)
        value, bases, iterations, converged = _seesaw_once(
            diff, partition, d, init, max_iters
        )
        if best is None or value > best[0]:
            best = (value, bases, iterations, converged)
    return best


@dataclass(frozen=True)
class AttackRow:
    pair_index: int
    partition_label: str
    method: str  # "sampled" or "seesaw"
    value: float
    baseline: float
    iterations: int

    def as_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "partition": self.partition_label,
            "method": self.method,
            "value": self.value,
            "baseline": self.baseline,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class PairSummary:
    pair_index: int
    helstrom_baseline: float
    decode_fidelities: tuple[float, float]
    decoded_distinguishability: float
    fidelity_implied_distinguishability: float

    def as_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "helstrom_baseline": self.helstrom_baseline,
            "decode_fidelities": list(self.decode_fidelities),
            "decoded_distinguishability": self.decoded_distinguishability,
            "fidelity_implied_distinguishability": self.fidelity_implied_distinguishability,
        }


@dataclass(frozen=True)
class SecurityReport:
    """Restricted-attack values next to the unrestricted baseline.

    ``epsilon_hat`` is the largest restricted value observed over all
    pairs, partitions, sampled measurements, and see-saw runs; it only
    lower-bounds the true separable supremum.
    """

    n_state_pairs: int
    partition_labels: tuple[str, ...]
    rows: tuple[AttackRow, ...]
    pairs: tuple[PairSummary, ...]
    epsilon_hat: float | None
    note: str | None = None

    def as_dict(self) -> dict:
        return {
            "n_state_pairs": self.n_state_pairs,
            "partitions": list(self.partition_labels),
            "rows": [row.as_dict() for row in self.rows],
            "pairs": [pair.as_dict() for pair in self.pairs],
            "epsilon_hat": self.epsilon_hat,
            "note": self.note,
        }


def _orthogonal_pair(dim: int, gen: np.random.Generator) -> tuple[PureState, PureState]:
    first = sample_haar_state(dim, gen)
    raw = sample_haar_state(dim, gen)
    raw = raw - (first.conj() @ raw) * first
    norm = np.linalg.norm(raw)
    while norm <= 1e-7:  # probability-zero retry path
        raw = sample_haar_state(dim, gen)
        raw = raw - (first.conj() @ raw) * first
        norm = np.linalg.norm(raw)
    return PureState(first), PureState(raw / norm)


def security_report(
    scheme: HidingScheme,
    n_state_pairs: int,
    partitions: Sequence[GroupPartition],
    samples_per_partition: int,
    seesaw_restarts: int,
    seesaw_iters: int,
    rng: SeededRng,
) -> SecurityReport:
    """Attack orthogonal encoded state pairs with every given partition.

    Per pair and partition, the best sampled product measurement and the
    see-saw-optimized one are reported beside the Helstrom baseline and
    the decoder-side distinguishability of the first authorized set.
    """
    p = scheme.params
    if p.s < 2:
        raise ParameterError("state pairs need a code dimension of at least 2")
    if n_state_pairs < 1:
        raise ParameterError("n_state_pairs must be >= 1")
    split = authorized_splits(p.n, p.k)[0]
    decoder = build_decoder(scheme, split)

    rows: list[AttackRow] = []
    pair_summaries: list[PairSummary] = []
    restricted_values: list[float] = []
    for t in range(n_state_pairs):
        phi0, phi1 = _orthogonal_pair(p.s, rng.child(0, t))
        rho0 = encode_pure(scheme, phi0)
        rho1 = encode_pure(scheme, phi1)
        diff = rho0.matrix - rho1.matrix
        baseline = trace_norm(diff)

        decoded0, _ = decoder.decode_with_leakage(rho0)
        decoded1, _ = decoder.decode_with_leakage(rho1)
        f0 = fidelity_with_pure(phi0, decoded0)
        f1 = fidelity_with_pure(phi1, decoded1)
        implied = max(
            0.0, 2.0 - 2.0 * math.sqrt(1.0 - f0) - 2.0 * math.sqrt(1.0 - f1)
        )
        pair_summaries.append(
            PairSummary(
                pair_index=t,
                helstrom_baseline=baseline,
                decode_fidelities=(f0, f1),
                decoded_distinguishability=trace_norm(
                    decoded0.matrix - decoded1.matrix
                ),
                fidelity_implied_distinguishability=implied,
            )
        )

        for pi, partition in enumerate(partitions):
            best_sampled = 0.0
            for m in range(samples_per_partition):
                meas = sample_product_measurement(
                    partition, p.d, rng.child(1, t, pi, m)
                )
                best_sampled = max(best_sampled, attack_value(meas, rho0, rho1))
            children = [
                rng.child(2, t, pi, restart) for restart in range(max(1, seesaw_restarts))
            ]
            opt_value, _, iterations, _ = _optimize_product_attack(
                diff, partition, p.d, children, seesaw_iters
            )
            for method, value, iters in (
                ("sampled", best_sampled, samples_per_partition),
                ("seesaw", opt_value, iterations),
            ):
                if value > baseline + BASELINE_SLACK:
                    raise DegenerateSchemeError(
                        f"restricted value {value} exceeds baseline {baseline}"
                    )
                restricted_values.append(value)
                rows.append(
                    AttackRow(
                        pair_index=t,
                        partition_label=partition.label,
                        method=method,
                        value=value,
                        baseline=baseline,
                        iterations=iters,
                    )
                )

    note = None
    if not partitions:
        note = "no unauthorized measurements: every grouping meets the threshold"
    return SecurityReport(
        n_state_pairs=n_state_pairs,
        partition_labels=tuple(part.label for part in partitions),
        rows=tuple(rows),
        pairs=tuple(pair_summaries),
        epsilon_hat=max(restricted_values) if restricted_values else None,
        note=note,
    )


@dataclass(frozen=True)
class ErrorTailReport:
    """Monte Carlo rates for the decoder-error concentration events.

    ``same_unitary_*`` concerns the sibling-state error term exceeding
    beta (bound 4s * 2^(-beta d^k / (128 ln 2))); ``denominator_*``
    concerns the outcome probability dropping below 1/(2 d^(n-k))
    (bound 2^(-d^k / (24 ln 2))).  Bounds at or above 1 are vacuous and
    flagged as such.
    """

    n: int
    k: int
    d: int
    s: int
    beta: float
    trials: int
    same_unitary_rate: float
    same_unitary_bound: float
    denominator_rate: float
    denominator_bound: float
    trivial: bool = False

    def bound_vacuous(self, bound: float) -> bool:
        return bound >= 1.0

    def within_envelope(self) -> bool:
        ok = True
        for rate, bound in (
            (self.same_unitary_rate, self.same_unitary_bound),
            (self.denominator_rate, self.denominator_bound),
        ):
            if bound >= 1.0:
                continue
            if bound * self.trials >= 10.0:
                slack = 3.0 * math.sqrt(bound * (1.0 - bound) / self.trials)
                ok = ok and rate <= bound + slack
            else:
                ok = ok and rate == 0.0
        return ok

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "d": self.d,
            "s": self.s,
            "beta": self.beta,
            "trials": self.trials,
            "same_unitary_rate": self.same_unitary_rate,
            "same_unitary_bound": self.same_unitary_bound,
            "same_unitary_bound_vacuous": self.bound_vacuous(self.same_unitary_bound),
            "denominator_rate": self.denominator_rate,
            "denominator_bound": self.denominator_bound,
            "denominator_bound_vacuous": self.bound_vacuous(self.denominator_bound),
            "trivial": self.trivial,
            "within_envelope": self.within_envelope(),
        }


def check_decoder_error_tails(
    n: int,
    k: int,
    d: int,
    s: int,
    beta: float,
    trials: int,
    rng: SeededRng,
) -> ErrorTailReport:
    """Sample fresh encoding isometries and measure how often the
    sibling-state error term exceeds beta, and how often the first
    outcome's probability is anomalously small.

    Fixes the first unitary, code state and outcome; the Haar ensemble
    is invariant under the choice of indices.  For k = n the sibling
    error term is identically zero and the report is trivial.
    """
    if not 1 <= k <= n:
        raise ParameterError(f"threshold k={k} must lie in [1, n={n}]")
    if s < 2:
        raise ParameterError("need s >= 2 for a sibling error term")
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta must lie in (0, 1]")
    if trials < 1:
        raise ParameterError("trials must be >= 1")

    same_bound = 4.0 * s * tail_bound(beta * d**k / (128.0 * math.log(2.0)))
    denom_bound = tail_bound(d**k / (24.0 * math.log(2.0)))
    if k == n:
        return ErrorTailReport(
            n=n, k=k, d=d, s=s, beta=beta, trials=trials,
            same_unitary_rate=0.0, same_unitary_bound=same_bound,
            denominator_rate=0.0, denominator_bound=denom_bound,
            trivial=True,
        )

    split = PartySplit(n, tuple(range(k)))
    w_of, _ = _split_indices(n, k, d, split)
    block = np.flatnonzero(w_of == 0)
    dn = d**n
    threshold = 1.0 / (2.0 * d ** (n - k))
    same_hits = 0
    denom_hits = 0
    for t in range(trials):
        frame = sample_haar_isometry(dn, s, rng.trial(t))
        target = frame[block, 0]
        den = float(np.vdot(target, target).real)
        overlaps = frame[block, 1:].conj().T @ target
        same_term = float(np.sum(np.abs(overlaps) ** 2)) / den**2
        if same_term > beta:
            same_hits += 1
        if den <= threshold:
            denom_hits += 1
    return ErrorTailReport(
        n=n, k=k, d=d, s=s, beta=beta, trials=trials,
        same_unitary_rate=same_hits / trials,
        same_unitary_bound=same_bound,
        denominator_rate=denom_hits / trials,
        denominator_bound=denom_bound,
    )
