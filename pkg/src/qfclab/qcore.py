"""Dense complex-matrix kernel for 3-level (and general small) quantum states.

Everything downstream builds on the handful of operations here: density
operator validation, Uhlmann fidelity, spectral decompositions and matrix
exponentials.  Matrices are plain ``numpy`` arrays of ``complex128``; a
density operator is any square array passing :func:`validate_density`.

All operations are pure functions on immutable values and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10


class DimensionError(ValueError):
    """Input matrix has the wrong shape for the requested operation."""


class StateValidityError(ValueError):
    """A matrix violates the density-operator invariants beyond tolerance."""


def _as_complex_matrix(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise StateValidityError(f"{name} contains non-finite entries")
    return m


def basis_state(k: int, dim: int = 3) -> np.ndarray:
    """Pure basis-state projector |k><k| as a dim x dim density matrix."""
    if not 0 <= k < dim:
        raise DimensionError(f"basis index {k} out of range for dim {dim}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[k, k] = 1.0
    return rho


def maximally_mixed(dim: int = 3) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of density-operator validation.

    ``violations`` maps each failed invariant name to its measured deviation.
    """

    ok: bool
    violations: dict[str, float] = field(default_factory=dict)


def validate_density(m: np.ndarray, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check Hermiticity, unit trace and positivity of a candidate state.

    Returns a report listing every violated invariant together with the
    measured deviation; raises only for non-square input.
    """
    m = _as_complex_matrix(m, "state")
    violations: dict[str, float] = {}

    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > tol:
        violations["hermitian"] = herm_dev

    trace_dev = float(abs(np.trace(m) - 1.0))
    if trace_dev > tol:
        violations["unit_trace"] = trace_dev

    # Eigenvalues of the Hermitian part; for nearly-Hermitian input this is
    # the meaningful positivity test even when the Hermiticity check failed.
    herm_part = 0.5 * (m + m.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm_part)[0])
    if min_eig < -tol:
        violations["positive_semidefinite"] = -min_eig

    return ValidationReport(ok=not violations, violations=violations)


def require_density(m: np.ndarray, tol: float = DEFAULT_TOL, name: str = "state") -> np.ndarray:
    """Validate and return ``m``; raise :class:`StateValidityError` on failure."""
    report = validate_density(m, tol=tol)
    if not report.ok:
        detail = ", ".join(f"{k} (dev {v:.3e})" for k, v in report.violations.items())
        raise StateValidityError(f"{name} is not a valid density operator: {detail}")
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decomposition(m: np.ndarray, tol: float = DEFAULT_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, m = sum_i lambda_i v_i v_i^dag."""
    m = _as_complex_matrix(m)
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > max(tol, 1e-9):
        raise StateValidityError(f"matrix is not Hermitian (deviation {herm_dev:.3e})")
    w, v = np.linalg.eigh(m)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def _psd_sqrt(m: np.ndarray, tol: float) -> np.ndarray:
    """Square root of a PSD Hermitian matrix, clamping roundoff negatives to zero."""
    dec = spectral_decomposition(m)
    w = dec.eigenvalues.copy()
    if w[0] < -tol:
        raise StateValidityError(f"matrix has negative eigenvalue {w[0]:.3e} beyond tolerance")
    w[w < 0.0] = 0.0
    v = dec.eigenvectors
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Uhlmann fidelity F(rho, sigma) = tr[sqrt(sqrt(rho) sigma sqrt(rho))]^2.

    Symmetric in its arguments and clamped to [0, 1] after roundoff.
    """
    rho = require_density(rho, tol=max(tol, 1e-9), name="rho")
    sigma = require_density(sigma, tol=max(tol, 1e-9), name="sigma")
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    # tr sqrt(sqrt(rho) sigma sqrt(rho)) equals the trace norm of
    # sqrt(sigma) sqrt(rho); summing singular values directly avoids taking
    # square roots of eigenvalue roundoff junk.
    sqrt_rho = _psd_sqrt(rho, tol)
    sqrt_sigma = _psd_sqrt(sigma, tol)
    singulars = np.linalg.svd(sqrt_sigma @ sqrt_rho, compute_uv=False)
    value = float(np.sum(singulars) ** 2)
    return min(max(value, 0.0), 1.0)


def fidelity_pure_target(rho: np.ndarray, basis_index: int) -> float:
    """Fidelity against the pure basis state |k><k|: the diagonal entry rho[k, k]."""
    rho = _as_complex_matrix(rho, "rho")
    if not 0 <= basis_index < rho.shape[0]:
        raise DimensionError(
            f"basis index {basis_index} out of range for dim {rho.shape[0]}"
        )
    value = float(rho[basis_index, basis_index].real)
    return min(max(value, 0.0), 1.0)


def matrix_exponential(h: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """exp(h) for small dense matrices.

    Hermitian and skew-Hermitian generators go through the exact
    eigendecomposition path (so exp(-iH) of Hermitian H is unitary to
    machine precision); anything else falls back to scaling-and-squaring
    with a Taylor series.
    """
    h = _as_complex_matrix(h, "generator")
    if float(np.max(np.abs(h - h.conj().T))) <= tol:
        w, v = np.linalg.eigh(h)
        return (v * np.exp(w)) @ v.conj().T
    if float(np.max(np.abs(h + h.conj().T))) <= tol:
        # h = -iH with H = i h Hermitian; exp(h) = V exp(-i lambda) V^dag
        w, v = np.linalg.eigh(1j * h)
        return (v * np.exp(-1j * w)) @ v.conj().T
    return _expm_taylor_squared(h)


def _expm_taylor_squared(h: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(h, ord=np.inf))
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300) / 0.5))))
    scaled = h / (2.0**squarings)
    result = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, 40):
        term = term @ scaled / k
        result = result + term
        if float(np.max(np.abs(term))) < 1e-18:
            break
    for _ in range(squarings):
        result = result @ result
    return result
