"""Dense complex linear algebra for finite-dimensional quantum operators.

Operators are plain ``numpy`` arrays of ``complex128``; the dataclasses
below are thin validated wrappers for states and channels.  Everything is
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

# Default cap on the total Hilbert-space dimension of any constructed
# operator.  Dense storage is O(dim^2) complex scalars.
DEFAULT_DIM_CAP = 4096

# Tolerances used throughout: Hermiticity / trace checks, eigenvalue
# floor for positivity, Kraus completeness, and the relative threshold
# below which eigenvalues count as zero for support detection.
HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
EIGVAL_FLOOR = -1e-10
KRAUS_ATOL = 1e-8
SUPPORT_RELTOL = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def hermitianize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A^dag)/2; removes accumulated roundoff before
    spectral calls."""
    return (a + a.conj().T) / 2


def max_abs(a: np.ndarray) -> float:
    """Largest entrywise modulus."""
    return float(np.max(np.abs(a))) if a.size else 0.0


def _as_square(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be a square matrix, got shape {a.shape}")
    return a


def require_finite(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(a.view(float) if np.iscomplexobj(a) else a)):
        raise DomainError(f"{what} contains non-finite entries")
    return a


def tensor_product(a: np.ndarray, b: np.ndarray, max_dim: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Kronecker product with lexicographic (i_a, i_b) index convention.

    Raises
    ------
    DimensionError
        If the product of row (or column) counts exceeds ``max_dim``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rows = a.shape[0] * b.shape[0]
    cols = (a.shape[1] if a.ndim == 2 else 1) * (b.shape[1] if b.ndim == 2 else 1)
    if max(rows, cols) > max_dim:
        raise DimensionError(
            f"tensor product dimension {max(rows, cols)} exceeds cap {max_dim}"
        )
    return np.kron(a, b)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    a = _as_square(a, "trace_norm input")
    return float(np.linalg.svd(a, compute_uv=False).sum())


def _psd_eigh(m: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian PSD matrix, with validation.

    Eigenvalues below the floor raise; small negatives are clamped to 0.
    """
    m = _as_square(m, what)
    if max_abs(m - m.conj().T) > HERMITIAN_ATOL:
        raise DomainError(f"{what} is not Hermitian within {HERMITIAN_ATOL}")
    w, v = np.linalg.eigh(hermitianize(m))
    scale = max(1.0, float(w[-1])) if w.size else 1.0
    if w.size and w[0] < EIGVAL_FLOOR * scale:
        raise DomainError(f"{what} has eigenvalue {w[0]:.3e} below the PSD floor")
    return np.clip(w, 0.0, None), v


def pinv_sqrt(m: np.ndarray, rel_tol: float = SUPPORT_RELTOL) -> np.ndarray:
    """Pseudo-inverse square root of a Hermitian PSD matrix.

    Eigenvalues at or below ``rel_tol`` times the largest eigenvalue map
    to 0 (the result vanishes outside the support), the rest to
    lambda^(-1/2).  The result is Hermitian PSD.
    """
    w, v = _psd_eigh(m, "pinv_sqrt input")
    cut = rel_tol * (w[-1] if w.size else 0.0)
    inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
    return hermitianize((v * inv) @ v.conj().T)


def psd_sqrt(m: np.ndarray, rel_tol: float = SUPPORT_RELTOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (same thresholding
    as :func:`pinv_sqrt`)."""
    w, v = _psd_eigh(m, "psd_sqrt input")
    cut = rel_tol * (w[-1] if w.size else 0.0)
    root = np.where(w > cut, np.sqrt(w), 0.0)
    return hermitianize((v * root) @ v.conj().T)


def support_projector(m: np.ndarray, rel_tol: float = SUPPORT_RELTOL) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue above
    ``rel_tol`` times the largest."""
    w, v = _psd_eigh(m, "support_projector input")
    cut = rel_tol * (w[-1] if w.size else 0.0)
    keep = v[:, w > cut]
    return hermitianize(keep @ keep.conj().T)


@dataclass(frozen=True)
class PureState:
    """Unit vector on C^dim."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        require_finite(amp, "pure state")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"pure state norm {norm} deviates from 1 beyond 1e-12")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "PureState":
        """Normalize an arbitrary nonzero vector."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm <= 1e-14:
            raise DomainError("cannot normalize a (near-)zero vector")
        return cls(vec / norm)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, PSD matrix on C^dim."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "density operator")
        require_finite(m, "density operator")
        if max_abs(m - m.conj().T) > HERMITIAN_ATOL:
            raise DomainError("density operator is not Hermitian within 1e-10")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise DomainError(f"density operator trace {tr} deviates from 1 beyond 1e-10")
        w = np.linalg.eigvalsh(hermitianize(m))
        if w[0] < EIGVAL_FLOOR:
            raise DomainError(f"density operator has eigenvalue {w[0]:.3e} < -1e-10")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, phi: PureState) -> "DensityOperator":
        return cls(phi.projector())

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive map given by Kraus operators.

    ``domain_projector``, when present, is the projector onto the
    subspace where trace preservation is required; otherwise the channel
    must be trace preserving on the full input space.
    """

    in_dim: int
    out_dim: int
    operators: tuple[np.ndarray, ...]
    domain_projector: np.ndarray | None = field(default=None)

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise DomainError("channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.out_dim, self.in_dim):
                raise DimensionError(
                    f"Kraus operator shape {k.shape} != ({self.out_dim}, {self.in_dim})"
                )
            require_finite(k, "Kraus operator")
        target = (
            np.eye(self.in_dim, dtype=complex)
            if self.domain_projector is None
            else np.asarray(self.domain_projector, dtype=complex)
        )
        total = sum(k.conj().T @ k for k in ops)
        residual = max_abs(total - target)
        if residual > KRAUS_ATOL:
            raise DomainError(
                f"Kraus completeness residual {residual:.3e} exceeds {KRAUS_ATOL}"
            )
        object.__setattr__(self, "operators", ops)

    def completeness_residual(self) -> float:
        target = (
            np.eye(self.in_dim, dtype=complex)
            if self.domain_projector is None
            else self.domain_projector
        )
        total = sum(k.conj().T @ k for k in self.operators)
        return max_abs(total - target)


def apply_channel(ch: KrausChannel, rho: DensityOperator) -> DensityOperator:
    """Apply sum_m K_m rho K_m^dag.

    The input must live on the channel's domain: if a domain projector P
    is present, the weight of rho outside P must not exceed 1e-8.
    """
    if rho.dim != ch.in_dim:
        raise DimensionError(f"state dim {rho.dim} != channel input dim {ch.in_dim}")
    if ch.domain_projector is not None:
        outside = 1.0 - float(np.real(np.trace(ch.domain_projector @ rho.matrix)))
        if outside > KRAUS_ATOL:
            raise DomainError(
                f"state has weight {outside:.3e} outside the channel domain"
            )
    out = np.zeros((ch.out_dim, ch.out_dim), dtype=complex)
    for k in ch.operators:
        out += k @ rho.matrix @ k.conj().T
    return DensityOperator(hermitianize(out))


def fidelity_with_pure(phi: PureState, rho: DensityOperator) -> float:
    """<phi|rho|phi>, real, clamped to [0, 1]."""
    if phi.dim != rho.dim:
        raise DimensionError(f"state dims differ: {phi.dim} vs {rho.dim}")
    val = float(np.real(phi.amplitudes.conj() @ rho.matrix @ phi.amplitudes))
    if val < -1e-9 or val > 1.0 + 1e-9:
        raise DomainError(f"fidelity {val} outside [0,1] beyond tolerance")
    return min(1.0, max(0.0, val))


def trace_distance(rho0: DensityOperator, rho1: DensityOperator) -> float:
    """Trace norm of the difference of two density operators (in [0, 2])."""
    if rho0.dim != rho1.dim:
        raise DimensionError(f"state dims differ: {rho0.dim} vs {rho1.dim}")
    return trace_norm(rho0.matrix - rho1.matrix)
