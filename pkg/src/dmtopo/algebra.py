"""Dense complex 2x2 kernel.

Every matrix here is expanded over the identity and the Pauli matrices,

    M = alpha * s0 + n_x * sx + n_y * sy + n_z * sz,

with complex ``alpha`` and complex 3-vector ``n``.  Eigenvalues are then
``alpha +/- mu`` with ``mu = sqrt(n . n)`` (bilinear, not Hermitian, dot
product) and the exponential has the closed form

    exp(M t) = exp(alpha t) [cosh(mu t) s0 + sinh(mu t)/mu  n . s].

Functions that make sense elementwise accept stacked arrays of shape
``(..., 2, 2)`` so that a whole Brillouin zone is processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSpectrum, NotHermitian

__all__ = [
    "SIGMA",
    "PauliForm",
    "EigenSystem2",
    "pauli_decompose",
    "pauli_compose",
    "eigensystem",
    "default_ep_tol",
    "is_exceptional",
    "propagator",
    "hermitian_log",
    "bloch_vector",
]

S0 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_x, sigma_y, sigma_z stacked along axis 0
SIGMA = np.stack([SX, SY, SZ])

_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class PauliForm:
    """Coefficients of ``alpha * s0 + n . sigma``.

    ``alpha`` has shape ``batch`` and ``n`` has shape ``batch + (3,)``; for a
    single matrix these are a scalar and a 3-vector.
    """

    alpha: complex | np.ndarray
    n: np.ndarray

    def is_real(self, tol: float = 1e-14) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.alpha))), float(np.max(np.abs(self.n))))
        return bool(
            np.all(np.abs(np.imag(self.alpha)) <= tol * scale)
            and np.all(np.abs(np.imag(self.n)) <= tol * scale)
        )


@dataclass(frozen=True)
class EigenSystem2:
    """Biorthogonal eigensystem of a 2x2 matrix.

    Left vectors are stored as kets, so the dual row is ``L.conj()`` and
    ``<L_a|R_b> = np.vdot(L_a, R_b)``.  When ``defective`` is set the matrix is
    a nontrivial Jordan block; ``R_plus``/``R_minus`` then both hold the single
    eigenvector and the left vectors the single left eigenvector (unit norm,
    self-orthogonal to the right one), and no spectral resolution exists.
    """

    eps_plus: complex
    eps_minus: complex
    R_plus: np.ndarray
    R_minus: np.ndarray
    L_plus: np.ndarray
    L_minus: np.ndarray
    defective: bool

    def resolution(self) -> np.ndarray:
        """Return ``sum_xi |R_xi><L_xi|`` (the identity when non-defective)."""
        return np.outer(self.R_plus, self.L_plus.conj()) + np.outer(
            self.R_minus, self.L_minus.conj()
        )

    def reconstruct(self) -> np.ndarray:
        return self.eps_plus * np.outer(self.R_plus, self.L_plus.conj()) + self.eps_minus * np.outer(
            self.R_minus, self.L_minus.conj()
        )


def pauli_decompose(M) -> PauliForm:
    """Split ``M`` (shape ``(..., 2, 2)``) into ``alpha = Tr M / 2`` and ``n_j = Tr(s_j M) / 2``."""
    M = np.asarray(M, dtype=complex)
    alpha = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    nx = 0.5 * (M[..., 0, 1] + M[..., 1, 0])
    ny = 0.5j * (M[..., 0, 1] - M[..., 1, 0])
    nz = 0.5 * (M[..., 0, 0] - M[..., 1, 1])
    n = np.stack([nx, ny, nz], axis=-1)
    if n.ndim == 1:
        alpha = complex(alpha)
    return PauliForm(alpha, n)


def pauli_compose(p: PauliForm) -> np.ndarray:
    alpha = np.asarray(p.alpha, dtype=complex)
    n = np.asarray(p.n, dtype=complex)
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = alpha + n[..., 2]
    out[..., 1, 1] = alpha - n[..., 2]
    out[..., 0, 1] = n[..., 0] - 1j * n[..., 1]
    out[..., 1, 0] = n[..., 0] + 1j * n[..., 1]
    return out


def _mu(n: np.ndarray) -> np.ndarray:
    # principal branch: Re(mu) >= 0
    return np.sqrt(np.sum(n * n, axis=-1))


def default_ep_tol(M) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(np.asarray(M), 2)))


def is_exceptional(n, ep_tol: float) -> np.ndarray:
    """Coalescing eigenvalues with a nonzero traceless part.

    The test is on the discriminant ``n . n`` relative to ``max(1, |n|)``:
    rounding of size ``delta`` in the entries moves ``n . n`` by ``O(delta)``
    but ``mu`` by ``O(sqrt(delta))``, so thresholding ``mu`` itself would miss
    EPs that are exact up to rounding.
    """
    n = np.asarray(n)
    norm = np.sqrt(np.sum(np.abs(n) ** 2, axis=-1))
    disc = np.abs(np.sum(n * n, axis=-1))
    return (disc < ep_tol * np.maximum(1.0, norm)) & (norm >= ep_tol)


def eigensystem(M, ep_tol: float | None = None) -> EigenSystem2:
    """Closed-form eigensystem of a single 2x2 matrix.

    ``eps_plus`` is the root with the larger real part.  ``defective`` is set
    when the two eigenvalues coalesce while the traceless part is nonzero
    (see :func:`is_exceptional`).
    """
    M = np.asarray(M, dtype=complex)
    if ep_tol is None:
        ep_tol = default_ep_tol(M)
    if ep_tol <= 0:
        raise ValueError("ep_tol must be positive")
    p = pauli_decompose(M)
    n = p.n
    mu = complex(_mu(n))
    eps_p, eps_m = p.alpha + mu, p.alpha - mu
    e0, e1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)

    if np.linalg.norm(n) < ep_tol:
        # scalar matrix: any basis diagonalises it
        return EigenSystem2(eps_p, eps_m, e0, e1, e0.copy(), e1.copy(), False)

    if is_exceptional(n, ep_tol):
        N = pauli_compose(PauliForm(0.0, n))
        # for a nilpotent N, range(N) = ker(N); same for the adjoint
        j = int(np.argmax(np.linalg.norm(N, axis=0)))
        R = N[:, j] / np.linalg.norm(N[:, j])
        i = int(np.argmax(np.linalg.norm(N, axis=1)))
        L = N[i, :].conj() / np.linalg.norm(N[i, :])
        return EigenSystem2(p.alpha, p.alpha, R, R.copy(), L, L.copy(), True)

    ns = pauli_compose(PauliForm(0.0, n / mu))
    vecs = []
    for sign in (1.0, -1.0):
        P = 0.5 * (S0 + sign * ns)  # rank-one spectral projector |R><L|
        j = int(np.argmax(np.linalg.norm(P, axis=0)))
        R = P[:, j] / np.linalg.norm(P[:, j])
        i = int(np.argmax(np.abs(R)))
        L = (P[i, :] / R[i]).conj()
        vecs.append((R, L))
    (Rp, Lp), (Rm, Lm) = vecs
    if np.real(eps_m) > np.real(eps_p):
        eps_p, eps_m, Rp, Rm, Lp, Lm = eps_m, eps_p, Rm, Rp, Lm, Lp
    return EigenSystem2(eps_p, eps_m, Rp, Rm, Lp, Lm, False)


def propagator(M, t: float) -> np.ndarray:
    """``exp(M t)`` for ``M`` of shape ``(..., 2, 2)``; exact at exceptional points."""
    if t < 0:
        raise ValueError("t must be non-negative")
    p = pauli_decompose(M)
    alpha = np.asarray(p.alpha)
    n = p.n
    mu = _mu(n)
    x = mu * t
    small = np.abs(x) < _SERIES_CUTOFF
    safe_mu = np.where(small, 1.0, mu)
    # sinh(mu t)/mu, with the even series t (1 + (mu t)^2 / 6) near mu t = 0
    shc = np.where(small, t * (1.0 + x * x / 6.0), np.sinh(x) / safe_mu)
    ch = np.cosh(x)
    scale = np.exp(alpha * t)
    return pauli_compose(PauliForm(scale * ch, (scale * shc)[..., None] * n))


def hermitian_log(M, tol: float = 1e-10) -> np.ndarray:
    """Principal logarithm of a positive definite Hermitian matrix (batched).

    The Hermiticity check is relative to ``max(1, |M|)``.
    """
    M = np.asarray(M, dtype=complex)
    Mh = np.conj(np.swapaxes(M, -1, -2))
    scale = np.maximum(1.0, np.max(np.abs(M), axis=(-2, -1)))
    if np.any(np.max(np.abs(M - Mh), axis=(-2, -1)) > tol * scale):
        raise NotHermitian("matrix is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (M + Mh))
    if np.any(w <= 0):
        raise NonPositiveSpectrum(f"non-positive eigenvalue {w.min():.3e}")
    return (V * np.log(w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def bloch_vector(M) -> np.ndarray:
    """Real part of ``n`` for Hermitian ``M``; shape ``(..., 3)``."""
    return np.real(pauli_decompose(M).n)
