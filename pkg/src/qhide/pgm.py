"""Square-root ("pretty good") measurement over sub-normalized ensembles.

An ensemble is stored as raw vectors whose squared norms are the prior
probabilities.  The measurement elements are
M_i = N^(-1/2) |xi_i><xi_i| N^(-1/2) with N = sum_i |xi_i><xi_i|, and the
Gram matrix T_ij = <xi_i|xi_j> carries an equivalent description: the
success probability of outcome i can be read off either from M_i or from
the diagonal of the principal square root of T.  Both routes are
computed and cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSchemeError, DomainError, ParameterError
from .linalg import (
    SUPPORT_RELTOL,
    hermitianize,
    max_abs,
    pinv_sqrt,
    psd_sqrt,
    support_projector,
)

ENSEMBLE_WEIGHT_ATOL = 1e-9
MIN_VECTOR_NORM = 1e-14
POVM_COMPLETENESS_ATOL = 1e-8
GRAM_SQRT_ATOL = 1e-8
SUCCESS_AGREEMENT_ATOL = 1e-9
ERROR_BOUND_SLACK = 1e-10


@dataclass(frozen=True)
class SubnormalizedEnsemble:
    """Vectors |xi_i> with squared norms acting as prior probabilities.

    The total weight sum_i ||xi_i||^2 may not exceed 1 (up to 1e-9);
    equality means the ensemble is a complete decomposition.
    """

    dim: int
    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=complex).reshape(-1) for v in self.vectors)
        if not vecs:
            raise ParameterError("ensemble must contain at least one vector")
        for v in vecs:
            if v.shape[0] != self.dim:
                raise ParameterError(f"vector length {v.shape[0]} != dim {self.dim}")
            if np.linalg.norm(v) <= MIN_VECTOR_NORM:
                raise DomainError("ensemble contains a (near-)zero vector")
        total = sum(float(np.vdot(v, v).real) for v in vecs)
        if total > 1.0 + ENSEMBLE_WEIGHT_ATOL:
            raise DomainError(f"ensemble weight {total} exceeds 1 beyond 1e-9")
        object.__setattr__(self, "vectors", vecs)

    @property
    def size(self) -> int:
        return len(self.vectors)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(np.vdot(v, v).real) for v in self.vectors])

    @classmethod
    def from_weighted_states(cls, states, probabilities) -> "SubnormalizedEnsemble":
        """Scale unit vectors by sqrt of their probabilities."""
        vecs = []
        for v, p in zip(states, probabilities, strict=True):
            if p < 0:
                raise ParameterError("probabilities must be nonnegative")
            vecs.append(np.sqrt(p) * np.asarray(v, dtype=complex).reshape(-1))
        return cls(dim=vecs[0].shape[0], vectors=tuple(vecs))


@dataclass(frozen=True)
class PrettyGoodMeasurement:
    """The square-root measurement of an ensemble, in both pictures."""

    ensemble: SubnormalizedEnsemble
    n_operator: np.ndarray
    inv_sqrt_n: np.ndarray
    povm_elements: tuple[np.ndarray, ...]
    gram: np.ndarray
    gram_sqrt: np.ndarray

    @property
    def size(self) -> int:
        return self.ensemble.size


def build_pgm(
    ensemble: SubnormalizedEnsemble, rel_tol: float = SUPPORT_RELTOL
) -> PrettyGoodMeasurement:
    """Construct the square-root measurement for an ensemble.

    The POVM elements are built from N^(-1/2) in state space; the Gram
    square root is computed independently via the spectral decomposition
    of the (Hermitian PSD) Gram matrix.  Construction verifies that the
    elements resolve the support of N and that the Gram square root
    actually squares back to the Gram matrix.
    """
    vecs = ensemble.vectors
    n_op = np.zeros((ensemble.dim, ensemble.dim), dtype=complex)
    for v in vecs:
        n_op += np.outer(v, v.conj())
    n_op = hermitianize(n_op)
    if float(np.trace(n_op).real) <= MIN_VECTOR_NORM:
        raise DegenerateSchemeError("ensemble operator N is numerically zero")

    inv_sqrt_n = pinv_sqrt(n_op, rel_tol)
    povm = tuple(
        hermitianize(np.outer(inv_sqrt_n @ v, (inv_sqrt_n @ v).conj())) for v in vecs
    )

    stacked = np.stack(vecs)  # rows are <xi_i|^* components
    gram = stacked.conj() @ stacked.T
    gram = hermitianize(gram)
    gram_sqrt = psd_sqrt(gram, rel_tol)

    completeness = max_abs(sum(povm) - support_projector(n_op, rel_tol))
    if completeness > POVM_COMPLETENESS_ATOL:
        raise DegenerateSchemeError(
            f"POVM completeness residual {completeness:.3e} exceeds 1e-8"
        )
    sq_residual = max_abs(gram_sqrt @ gram_sqrt - gram)
    if sq_residual > GRAM_SQRT_ATOL:
        raise DegenerateSchemeError(
            f"Gram square-root residual {sq_residual:.3e} exceeds 1e-8"
        )
    return PrettyGoodMeasurement(
        ensemble=ensemble,
        n_operator=n_op,
        inv_sqrt_n=inv_sqrt_n,
        povm_elements=povm,
        gram=gram,
        gram_sqrt=gram_sqrt,
    )


def success_probability(pgm: PrettyGoodMeasurement, i: int) -> float:
    """Probability that the measurement correctly identifies member i.

    Computed two independent ways -- <xi_i|M_i|xi_i>/<xi_i|xi_i> from the
    POVM element, and (sqrtT)_ii^2/<xi_i|xi_i> from the Gram square
    root -- which must agree to 1e-9.  Returns the POVM-side value.
    """
    v = pgm.ensemble.vectors[i]
    weight = float(np.vdot(v, v).real)
    via_povm = float(np.real(v.conj() @ pgm.povm_elements[i] @ v)) / weight
    via_gram = float(pgm.gram_sqrt[i, i].real) ** 2 / weight
    if abs(via_povm - via_gram) > SUCCESS_AGREEMENT_ATOL:
        raise DegenerateSchemeError(
            f"success probability routes disagree: {via_povm} vs {via_gram}"
        )
    return min(1.0, max(0.0, via_povm))


def error_upper_bound(pgm: PrettyGoodMeasurement, i: int) -> float:
    """Pairwise-overlap bound on the misidentification probability of
    member i: sum_{j != i} |<xi_i|xi_j>|^2 / |<xi_i|xi_i>|^2.

    Also checks that the actual error 1 - p(i|i) respects the bound.
    """
    t_ii = float(pgm.gram[i, i].real)
    row = np.abs(pgm.gram[i]) ** 2
    bound = float((row.sum() - row[i]) / t_ii**2)
    actual = 1.0 - success_probability(pgm, i)
    if actual > bound + ERROR_BOUND_SLACK:
        raise DegenerateSchemeError(
            f"misidentification {actual} violates its overlap bound {bound}"
        )
    return bound


@dataclass(frozen=True)
class SqrtInequalityReport:
    """Both sides of the diagonal square-root inequality for one member."""

    index: int
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def matrix_sqrt_inequality_check(
    pgm: PrettyGoodMeasurement, i: int
) -> SqrtInequalityReport:
    """Evaluate (sqrtT)_ii / sqrt(T_ii) >= 1 - (1/2) sum_{j != i} |T_ij|^2 / T_ii^2.

    This is the diagonal entry of the operator inequality
    sqrt(x) >= (3/2)x - (1/2)x^2 applied to the scaled Gram matrix and
    must hold up to 1e-10 slack.
    """
    t_ii = float(pgm.gram[i, i].real)
    lhs = float(pgm.gram_sqrt[i, i].real) / np.sqrt(t_ii)
    row = np.abs(pgm.gram[i]) ** 2
    rhs = 1.0 - 0.5 * float((row.sum() - row[i]) / t_ii**2)
    report = SqrtInequalityReport(index=i, lhs=lhs, rhs=rhs)
    if report.margin < -ERROR_BOUND_SLACK:
        raise DegenerateSchemeError(
            f"square-root inequality violated by {report.margin:.3e}"
        )
    return report
