"""Threshold hiding schemes on n parties of local dimension d.

A scheme encodes states of an s-dimensional code space into C^(d^n) by
conjugation with one of r Haar-random unitaries chosen uniformly at
random.  Any k parties (the authorized set X) can decode: the remaining
parties measure their shares in the computational basis and announce the
outcome, after which X applies the transpose channel of the measured
encoding adapted to the maximally mixed code state.

The code space is embedded as the span of the first s computational
basis vectors of C^(d^n).  Party q owns the q-th tensor factor, with
party 0 the most significant index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import (
    DegenerateSchemeError,
    DimensionError,
    DomainError,
    ParameterError,
)
from .linalg import (
    DEFAULT_DIM_CAP,
    SUPPORT_RELTOL,
    DensityOperator,
    KrausChannel,
    PureState,
    fidelity_with_pure,
    hermitianize,
    max_abs,
    pinv_sqrt,
    trace_norm,
)
from .sampling import CONCENTRATION_C, RngLike, SeededRng, as_generator, sample_haar_state, sample_haar_unitary

UNITARITY_ATOL = 1e-10
PROBABILITY_ATOL = 1e-10
COMPLETENESS_ATOL = 1e-8
MISID_BOUND_SLACK = 1e-9
MIN_OUTCOME_PROBABILITY = 1e-14
DERIVATION_PRECISION = 60


def _decimal_fraction(x) -> Fraction:
    # Tolerance parameters are interpreted by their decimal (printed)
    # value, so e.g. 0.1 means exactly 1/10 in the integer formulas.
    if isinstance(x, Fraction):
        return x
    return Fraction(str(x))


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of a hiding scheme.

    n parties, threshold k, local dimension d, r encoding unitaries,
    code dimension s, security target epsilon and accuracy target delta.
    ``c_const`` is the concentration constant used in all tail bounds.
    """

    n: int
    k: int
    d: int
    r: int
    s: int
    epsilon: float = 1.0
    delta: float = 1.0
    c_const: float = CONCENTRATION_C

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("need at least one party")
        if not 1 <= self.k <= self.n:
            raise ParameterError(f"threshold k={self.k} must lie in [1, n={self.n}]")
        if self.d < 2:
            raise ParameterError("local dimension d must be >= 2")
        if self.r < 1:
            raise ParameterError("need at least one encoding unitary")
        if not 1 <= self.s <= self.d**self.n:
            raise ParameterError(f"code dimension s={self.s} must lie in [1, d^n]")
        if not 0.0 < self.epsilon <= 1.0:
            raise ParameterError("epsilon must lie in (0, 1]")
        if not 0.0 < self.delta <= 1.0:
            raise ParameterError("delta must lie in (0, 1]")
        if self.c_const <= 0.0:
            raise ParameterError("c_const must be positive")

    @property
    def alpha(self) -> float:
        """Infidelity budget delta^2 / 4."""
        return self.delta**2 / 4.0

    @property
    def total_dim(self) -> int:
        return self.d**self.n

    @property
    def outcome_count(self) -> int:
        """Number of complement-measurement outcomes d^(n-k)."""
        return self.d ** (self.n - self.k)


@dataclass(frozen=True)
class FeasibilityReport:
    """Derived (r, s) together with the preconditions they rely on."""

    n: int
    k: int
    d: int
    epsilon: float
    delta: float
    r: int
    s: int
    code_dim_ok: bool  # s >= 1
    local_dim_ok: bool  # d^k > 48 / delta^2
    global_dim_ok: bool  # d^n > 10 (n+2) / epsilon
    single_party_ok: bool | None  # only for k=1: d / log2(d) > 2840 (2n+3) / delta^2

    @property
    def feasible(self) -> bool:
        return (
            self.code_dim_ok
            and self.local_dim_ok
            and self.global_dim_ok
            and (self.single_party_ok is None or self.single_party_ok)
        )

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "d": self.d,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "r": self.r,
            "s": self.s,
            "code_dim_ok": self.code_dim_ok,
            "local_dim_ok": self.local_dim_ok,
            "global_dim_ok": self.global_dim_ok,
            "single_party_ok": self.single_party_ok,
            "feasible": self.feasible,
        }


def derive_parameters(
    n: int,
    k: int,
    d: int,
    epsilon: float,
    delta: float,
    c_const=None,
    precision: int = DERIVATION_PRECISION,
) -> FeasibilityReport:
    """Unitary count and code dimension guaranteeing a hiding scheme.

    r = ceil( 32 (n+2)^4 / (C eps^2) * d^(k-1) * log2 d )
    s = floor( C eps^2 delta^2 / (1536 (n+2)^4) * d / log2 d )

    evaluated with ``precision`` decimal digits and exact ceiling/floor.
    When ``c_const`` is None the constant is 1/(6 ln 2) at full working
    precision.  The feasibility flags check the strict preconditions
    d^k > 48/delta^2, d^n > 10(n+2)/epsilon, and for k=1 additionally
    d/log2 d > 2840(2n+3)/delta^2; s < 1 is flagged infeasible.

    These values are astronomically large for any desk-scale d; they are
    reported, never instantiated.
    """
    if not 1 <= k <= n:
        raise ParameterError(f"threshold k={k} must lie in [1, n={n}]")
    if d < 2:
        raise ParameterError("local dimension d must be >= 2")
    eps_f = _decimal_fraction(epsilon)
    delta_f = _decimal_fraction(delta)
    if not 0 < eps_f <= 1 or not 0 < delta_f <= 1:
        raise ParameterError("epsilon and delta must lie in (0, 1]")

    with localcontext() as ctx:
        ctx.prec = precision
        ln2 = Decimal(2).ln()
        log2_d = Decimal(d).ln() / ln2
        if c_const is None:
            c_dec = 1 / (6 * ln2)
        else:
            c_f = _decimal_fraction(c_const)
            if c_f <= 0:
                raise ParameterError("c_const must be positive")
            c_dec = Decimal(c_f.numerator) / Decimal(c_f.denominator)
        eps_dec = Decimal(eps_f.numerator) / Decimal(eps_f.denominator)
        delta_dec = Decimal(delta_f.numerator) / Decimal(delta_f.denominator)

        r_exact = (
            Decimal(32 * (n + 2) ** 4)
            / (c_dec * eps_dec**2)
            * Decimal(d ** (k - 1))
            * log2_d
        )
        s_exact = (
            c_dec
            * eps_dec**2
            * delta_dec**2
            / Decimal(1536 * (n + 2) ** 4)
            * Decimal(d)
            / log2_d
        )
        r = int(r_exact.to_integral_value(rounding=ROUND_CEILING))
        s = int(s_exact.to_integral_value(rounding=ROUND_FLOOR))

        single_party_ok = None
        if k == 1:
            rhs_f = Fraction(2840 * (2 * n + 3)) / delta_f**2
            rhs = Decimal(rhs_f.numerator) / Decimal(rhs_f.denominator)
            single_party_ok = bool(Decimal(d) / log2_d > rhs)

    return FeasibilityReport(
        n=n,
        k=k,
        d=d,
        epsilon=float(epsilon),
        delta=float(delta),
        r=r,
        s=s,
        code_dim_ok=s >= 1,
        local_dim_ok=Fraction(d**k) > Fraction(48) / delta_f**2,
        global_dim_ok=Fraction(d**n) > Fraction(10 * (n + 2)) / eps_f,
        single_party_ok=single_party_ok,
    )


def net_cardinality_bound(dim: int, epsilon: float) -> int:
    """Exact cardinality bound ceil((5/epsilon)^(2 dim)) for an
    epsilon-net of pure states on C^dim."""
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    eps_f = _decimal_fraction(epsilon)
    if not 0 < eps_f < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    return math.ceil((Fraction(5) / eps_f) ** (2 * dim))


@dataclass(frozen=True)
class PartySplit:
    """An authorized set X of parties and its complement W."""

    n_parties: int
    authorized: tuple[int, ...]

    def __post_init__(self):
        x = tuple(sorted(self.authorized))
        if not x:
            raise ParameterError("authorized set must be nonempty")
        if len(set(x)) != len(x):
            raise ParameterError("authorized set has repeated parties")
        if x[0] < 0 or x[-1] >= self.n_parties:
            raise ParameterError(f"party indices must lie in [0, {self.n_parties})")
        object.__setattr__(self, "authorized", x)

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n_parties) if q not in self.authorized)

    @property
    def label(self) -> str:
        return "X" + "-".join(str(q) for q in self.authorized)


def authorized_splits(n: int, k: int) -> list[PartySplit]:
    """All k-subsets of the n parties, each as a split."""
    if not 1 <= k <= n:
        raise ParameterError(f"threshold k={k} must lie in [1, n={n}]")
    return [PartySplit(n, x) for x in combinations(range(n), k)]


def _split_indices(n: int, k: int, d: int, split: PartySplit):
    """Index bookkeeping for a split.

    Returns (w_of, g_of) where w_of[g] is the complement-measurement
    outcome of global basis index g, and g_of[l, x] is the global index
    with outcome l and authorized-part index x (both multi-indices run
    over parties in increasing order, first party most significant).
    """
    dn = d**n
    digits = np.stack([(np.arange(dn) // d ** (n - 1 - q)) % d for q in range(n)])
    w_parties = split.complement
    x_parties = split.authorized
    w_of = np.zeros(dn, dtype=np.int64)
    for m, q in enumerate(w_parties):
        w_of = w_of * d + digits[q]
    x_of = np.zeros(dn, dtype=np.int64)
    for m, q in enumerate(x_parties):
        x_of = x_of * d + digits[q]
    n_outcomes = d ** len(w_parties)
    dk = d ** len(x_parties)
    g_of = np.empty((n_outcomes, dk), dtype=np.int64)
    g_of[w_of, x_of] = np.arange(dn)
    return w_of, g_of


@dataclass(frozen=True)
class HidingScheme:
    """Sampled encoding unitaries together with the embedded code space."""

    params: SchemeParams
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self):
        dn = self.params.total_dim
        if len(self.unitaries) != self.params.r:
            raise ParameterError("scheme needs exactly r unitaries")
        ident = np.eye(dn)
        for u in self.unitaries:
            if u.shape != (dn, dn):
                raise DimensionError(f"unitary shape {u.shape} != ({dn}, {dn})")
            if max_abs(u.conj().T @ u - ident) > UNITARITY_ATOL:
                raise DomainError("scheme unitary fails the unitarity check")

    @cached_property
    def code_frames(self) -> np.ndarray:
        """Stack of U_i restricted to the code space: shape (r, d^n, s)."""
        s = self.params.s
        return np.stack([u[:, :s] for u in self.unitaries])

    def code_projector(self) -> np.ndarray:
        dn = self.params.total_dim
        p = np.zeros((dn, dn), dtype=complex)
        p[: self.params.s, : self.params.s] = np.eye(self.params.s)
        return p

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Pad a code-space vector with zeros up to C^(d^n)."""
        out = np.zeros(self.params.total_dim, dtype=complex)
        out[: self.params.s] = vec
        return out


def build_scheme(
    params: SchemeParams, rng: RngLike, dim_cap: int = DEFAULT_DIM_CAP
) -> HidingScheme:
    """Sample r independent Haar unitaries on C^(d^n)."""
    if params.total_dim > dim_cap:
        raise DimensionError(
            f"total dimension {params.total_dim} exceeds cap {dim_cap}"
        )
    gen = as_generator(rng)
    unitaries = tuple(
        sample_haar_unitary(params.total_dim, gen) for _ in range(params.r)
    )
    return HidingScheme(params=params, unitaries=unitaries)


def _check_split(scheme: HidingScheme, split: PartySplit) -> None:
    p = scheme.params
    if split.n_parties != p.n:
        raise ParameterError("split refers to a different party count")
    if len(split.authorized) != p.k:
        raise ParameterError(
            f"authorized set size {len(split.authorized)} != threshold {p.k}"
        )


def encode(scheme: HidingScheme, rho_s: DensityOperator) -> DensityOperator:
    """Mix the conjugates of the embedded state under all r unitaries."""
    p = scheme.params
    if rho_s.dim != p.s:
        raise DimensionError(f"input dim {rho_s.dim} != code dim {p.s}")
    out = np.zeros((p.total_dim, p.total_dim), dtype=complex)
    for frame in scheme.code_frames:
        out += frame @ rho_s.matrix @ frame.conj().T
    return DensityOperator(hermitianize(out / p.r))


def encode_pure(scheme: HidingScheme, phi: PureState) -> DensityOperator:
    if phi.dim != scheme.params.s:
        raise DimensionError(f"input dim {phi.dim} != code dim {scheme.params.s}")
    return encode(scheme, DensityOperator.from_pure(phi))


def encoder_channel(scheme: HidingScheme) -> KrausChannel:
    """The encoding as an explicit Kraus channel C^s -> C^(d^n)."""
    p = scheme.params
    ops = tuple(frame / math.sqrt(p.r) for frame in scheme.code_frames)
    return KrausChannel(in_dim=p.s, out_dim=p.total_dim, operators=ops)


def encode_sampled(
    scheme: HidingScheme, phi: PureState, rng: RngLike
) -> tuple[int, PureState]:
    """One run of the encoder: a uniformly random unitary index and the
    rotated embedded state."""
    if phi.dim != scheme.params.s:
        raise DimensionError(f"input dim {phi.dim} != code dim {scheme.params.s}")
    gen = as_generator(rng)
    i = int(gen.integers(scheme.params.r))
    return i, PureState(scheme.code_frames[i] @ phi.amplitudes)


def local_measurement(
    scheme: HidingScheme, split: PartySplit, rho: DensityOperator
) -> list[tuple[int, float, DensityOperator | None]]:
    """Computational-basis measurement of the complement parties.

    Returns (outcome, probability, post-measurement state on the
    authorized factor C^(d^k)) for every outcome; the post state is None
    on outcomes of (numerically) zero probability.  For k = n there is a
    single trivial outcome carrying the input state.
    """
    _check_split(scheme, split)
    p = scheme.params
    if rho.dim != p.total_dim:
        raise DimensionError(f"state dim {rho.dim} != total dim {p.total_dim}")
    _, g_of = _split_indices(p.n, p.k, p.d, split)
    results: list[tuple[int, float, DensityOperator | None]] = []
    total = 0.0
    for l in range(g_of.shape[0]):
        idx = g_of[l]
        block = rho.matrix[np.ix_(idx, idx)]
        prob = float(np.trace(block).real)
        total += prob
        if prob > MIN_OUTCOME_PROBABILITY:
            results.append((l, prob, DensityOperator(hermitianize(block / prob))))
        else:
            results.append((l, max(prob, 0.0), None))
    if abs(total - 1.0) > PROBABILITY_ATOL:
        raise DomainError(f"outcome probabilities sum to {total}, not 1")
    return results


def build_normalization(scheme: HidingScheme, split: PartySplit) -> np.ndarray:
    """The normalization operator of the transpose channel.

    N = sum_{i=1..r} sum_l P_l (U_i/sqrt r) (P_S/s) (U_i^dag/sqrt r) P_l,
    i.e. the block-diagonal part (with respect to the complement
    measurement) of the average embedded-code projector.  Hermitian PSD
    with unit trace.
    """
    _check_split(scheme, split)
    p = scheme.params
    w_of, _ = _split_indices(p.n, p.k, p.d, split)
    avg = np.zeros((p.total_dim, p.total_dim), dtype=complex)
    for frame in scheme.code_frames:
        avg += frame @ frame.conj().T
    mask = w_of[:, None] == w_of[None, :]
    n_op = hermitianize(np.where(mask, avg, 0.0) / (p.r * p.s))
    tr = float(np.trace(n_op).real)
    if abs(tr - 1.0) > PROBABILITY_ATOL:
        raise DegenerateSchemeError(f"normalization operator trace {tr} != 1")
    return n_op


@dataclass(frozen=True)
class TransposeDecoder:
    """Transpose-channel decoder for one authorized set.

    ``kraus`` holds the decoding Kraus family expressed on the code
    factor: entry (i, l) is the s x d^n operator mapping the measured
    encoding back to C^s (the canonical operators T_il follow by
    embedding; see :meth:`t_operator`).  The family resolves the support
    of the normalization operator; the remaining weight is routed to the
    maximally mixed code state by one completion branch, making the
    whole map CPTP.
    """

    split: PartySplit
    n_operator: np.ndarray
    kraus: np.ndarray  # shape (r, n_outcomes, s, d^n)
    code_dim: int
    total_dim: int

    @cached_property
    def kraus_sum(self) -> np.ndarray:
        """sum_il T_il^dag T_il (equals the support projector of N up to
        truncation)."""
        flat = self.kraus.reshape(-1, self.code_dim, self.total_dim)
        total = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for op in flat:
            total += op.conj().T @ op
        return hermitianize(total)

    @cached_property
    def completion_projector(self) -> np.ndarray:
        """PSD completion operator I - sum T^dag T, clamped to [0, 1]."""
        w, v = np.linalg.eigh(
            hermitianize(np.eye(self.total_dim) - self.kraus_sum)
        )
        w = np.clip(w, 0.0, 1.0)
        return hermitianize((v * w) @ v.conj().T)

    def completeness_residual(self) -> float:
        return max_abs(
            self.kraus_sum + self.completion_projector - np.eye(self.total_dim)
        )

    def max_kraus_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.kraus_sum)[-1])

    def t_operator(self, i: int, l: int) -> np.ndarray:
        """The full d^n x d^n decoding operator for branch (i, l)."""
        full = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        full[: self.code_dim, :] = self.kraus[i, l]
        return full

    def decode_with_leakage(
        self, rho: DensityOperator
    ) -> tuple[DensityOperator, float]:
        """Decode, reporting the weight routed through the completion
        branch (the part of the input outside the decodable image)."""
        if rho.dim != self.total_dim:
            raise DimensionError(f"state dim {rho.dim} != total dim {self.total_dim}")
        out = np.zeros((self.code_dim, self.code_dim), dtype=complex)
        flat = self.kraus.reshape(-1, self.code_dim, self.total_dim)
        for op in flat:
            out += op @ rho.matrix @ op.conj().T
        leakage = max(0.0, 1.0 - float(np.trace(out).real))
        out += leakage * np.eye(self.code_dim) / self.code_dim
        return DensityOperator(hermitianize(out)), leakage

    def decode(self, rho: DensityOperator) -> DensityOperator:
        return self.decode_with_leakage(rho)[0]

    def as_channel(self) -> KrausChannel:
        """Explicit CPTP Kraus form, completion branch included."""
        flat = list(self.kraus.reshape(-1, self.code_dim, self.total_dim))
        w, v = np.linalg.eigh(self.completion_projector)
        scale = 1.0 / math.sqrt(self.code_dim)
        for weight, vec in zip(w, v.T):
            if weight <= 1e-12:
                continue
            bra = math.sqrt(weight) * scale * vec.conj()
            for m in range(self.code_dim):
                op = np.zeros((self.code_dim, self.total_dim), dtype=complex)
                op[m] = bra
                flat.append(op)
        return KrausChannel(
            in_dim=self.total_dim, out_dim=self.code_dim, operators=tuple(flat)
        )


def build_decoder(
    scheme: HidingScheme, split: PartySplit, rel_tol: float = SUPPORT_RELTOL
) -> TransposeDecoder:
    """Assemble the transpose-channel Kraus family
    T_il = (P_S/sqrt s)(U_i^dag/sqrt r) P_l N^(-1/2)."""
    _check_split(scheme, split)
    p = scheme.params
    n_op = build_normalization(scheme, split)
    if float(np.linalg.eigvalsh(n_op)[-1]) <= MIN_OUTCOME_PROBABILITY:
        raise DegenerateSchemeError("normalization operator is numerically zero")
    inv_sqrt_n = pinv_sqrt(n_op, rel_tol)
    _, g_of = _split_indices(p.n, p.k, p.d, split)
    n_outcomes = g_of.shape[0]
    scale = 1.0 / math.sqrt(p.r * p.s)
    kraus = np.empty((p.r, n_outcomes, p.s, p.total_dim), dtype=complex)
    for i, frame in enumerate(scheme.code_frames):
        adj = frame.conj().T  # s x d^n
        for l in range(n_outcomes):
            idx = g_of[l]
            kraus[i, l] = scale * (adj[:, idx] @ inv_sqrt_n[idx, :])
    return TransposeDecoder(
        split=split,
        n_operator=n_op,
        kraus=kraus,
        code_dim=p.s,
        total_dim=p.total_dim,
    )


def decode(
    scheme: HidingScheme,
    split: PartySplit,
    rho: DensityOperator,
    decoder: TransposeDecoder | None = None,
) -> DensityOperator:
    """Measure the complement locally, then apply the transpose channel.

    The composition collapses to applying the Kraus family {T_il} (each
    T_il already contains the outcome projector P_l) plus the completion
    branch.
    """
    if decoder is None:
        decoder = build_decoder(scheme, split)
    return decoder.decode(rho)


@dataclass(frozen=True)
class FidelitySweep:
    """Recovery statistics over Haar-sampled code states."""

    fidelities: np.ndarray
    trace_distances: np.ndarray
    fidelity_bounds: np.ndarray  # 2 sqrt(1 - F) per state
    leakages: np.ndarray

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min())

    @property
    def mean_fidelity(self) -> float:
        return float(self.fidelities.mean())

    @property
    def max_fidelity(self) -> float:
        return float(self.fidelities.max())

    def as_dict(self) -> dict:
        return {
            "min_fidelity": self.min_fidelity,
            "mean_fidelity": self.mean_fidelity,
            "max_fidelity": self.max_fidelity,
            "fidelities": self.fidelities.tolist(),
            "trace_distances": self.trace_distances.tolist(),
            "fidelity_bounds": self.fidelity_bounds.tolist(),
            "leakages": self.leakages.tolist(),
        }


def decode_fidelity_sweep(
    scheme: HidingScheme,
    split: PartySplit,
    n_states: int,
    rng: SeededRng,
    decoder: TransposeDecoder | None = None,
) -> FidelitySweep:
    """Round-trip Haar-random code states through encode and decode.

    For every state the measured trace distance must respect the
    fidelity-implied bound 2 sqrt(1 - F) (up to 1e-8).
    """
    if n_states < 1:
        raise ParameterError("n_states must be >= 1")
    if decoder is None:
        decoder = build_decoder(scheme, split)
    p = scheme.params
    fids = np.empty(n_states)
    dists = np.empty(n_states)
    bounds = np.empty(n_states)
    leaks = np.empty(n_states)
    for t in range(n_states):
        phi = PureState(sample_haar_state(p.s, rng.trial(t)))
        decoded, leak = decoder.decode_with_leakage(encode_pure(scheme, phi))
        fid = fidelity_with_pure(phi, decoded)
        dist = trace_norm(decoded.matrix - phi.projector())
        bound = 2.0 * math.sqrt(max(0.0, 1.0 - fid))
        if dist > bound + COMPLETENESS_ATOL:
            raise DegenerateSchemeError(
                f"trace distance {dist} exceeds fidelity bound {bound}"
            )
        fids[t], dists[t], bounds[t], leaks[t] = fid, dist, bound, leak
    return FidelitySweep(
        fidelities=fids, trace_distances=dists, fidelity_bounds=bounds, leakages=leaks
    )


@dataclass(frozen=True)
class RecoveryDiagnostics:
    """Misidentification diagnostics for one decoding branch (i, j, l).

    ``error_bound`` is the relative-overlap bound on failing to identify
    the image of code basis state j under unitary i at outcome l; it
    splits exactly into the contribution of the other unitaries
    (``cross_unitary_error``) and of the sibling basis states under the
    same unitary (``same_unitary_error``).  ``recovery_fidelity`` is the
    decoder's conditional success on that branch and always satisfies
    1 - recovery_fidelity <= error_bound.
    """

    i: int
    j: int
    l: int
    error_bound: float
    cross_unitary_error: float
    same_unitary_error: float
    outcome_probability: float
    recovery_fidelity: float


def recovery_diagnostics(
    scheme: HidingScheme,
    split: PartySplit,
    i: int,
    j: int,
    l: int,
    decoder: TransposeDecoder | None = None,
) -> RecoveryDiagnostics:
    """Evaluate the misidentification bound for one branch."""
    _check_split(scheme, split)
    p = scheme.params
    if not (0 <= i < p.r and 0 <= j < p.s):
        raise ParameterError("unitary or basis index out of range")
    _, g_of = _split_indices(p.n, p.k, p.d, split)
    if not 0 <= l < g_of.shape[0]:
        raise ParameterError("outcome index out of range")
    if decoder is None:
        decoder = build_decoder(scheme, split)

    idx = g_of[l]
    target = scheme.code_frames[i][idx, j]  # P_l U_i |j>, block entries
    denom = float(np.vdot(target, target).real)
    if denom <= MIN_OUTCOME_PROBABILITY:
        raise DegenerateSchemeError(
            f"outcome {l} has vanishing probability on branch ({i}, {j})"
        )

    cross = 0.0
    same = 0.0
    total = 0.0
    for ip in range(p.r):
        overlaps = scheme.code_frames[ip][idx, :].conj().T @ target  # s-vector
        sq = np.abs(overlaps) ** 2
        if ip == i:
            same = float(sq.sum() - sq[j])
            total += float(sq.sum() - sq[j])
        else:
            cross += float(sq.sum())
            total += float(sq.sum())
    error_bound = total / denom**2
    cross_err = cross / denom**2
    same_err = same / denom**2

    amp = complex(decoder.kraus[i, l][j, idx] @ target)
    fidelity = abs(amp) ** 2 / denom
    if 1.0 - fidelity > error_bound + MISID_BOUND_SLACK:
        raise DegenerateSchemeError(
            f"branch fidelity {fidelity} violates its error bound {error_bound}"
        )
    return RecoveryDiagnostics(
        i=i,
        j=j,
        l=l,
        error_bound=error_bound,
        cross_unitary_error=cross_err,
        same_unitary_error=same_err,
        outcome_probability=denom,
        recovery_fidelity=fidelity,
    )


def all_recovery_diagnostics(
    scheme: HidingScheme, split: PartySplit, decoder: TransposeDecoder | None = None
) -> list[RecoveryDiagnostics]:
    """Diagnostics for every branch of a scheme under one split."""
    if decoder is None:
        decoder = build_decoder(scheme, split)
    p = scheme.params
    return [
        recovery_diagnostics(scheme, split, i, j, l, decoder)
        for i in range(p.r)
        for j in range(p.s)
        for l in range(p.outcome_count)
    ]


def code_state_ensemble(scheme: HidingScheme, split: PartySplit):
    """The sub-normalized ensemble {P_l U_i |j> / sqrt(r s)} underlying
    the decoder, flattened in (i, j, l) order with the index map."""
    from .pgm import SubnormalizedEnsemble

    _check_split(scheme, split)
    p = scheme.params
    w_of, _ = _split_indices(p.n, p.k, p.d, split)
    scale = 1.0 / math.sqrt(p.r * p.s)
    vectors = []
    index = {}
    for i, frame in enumerate(scheme.code_frames):
        for j in range(p.s):
            col = frame[:, j]
            for l in range(p.outcome_count):
                vec = np.where(w_of == l, col, 0.0) * scale
                index[(i, j, l)] = len(vectors)
                vectors.append(vec)
    return SubnormalizedEnsemble(dim=p.total_dim, vectors=tuple(vectors)), index
