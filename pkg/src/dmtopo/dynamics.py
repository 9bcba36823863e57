"""Time evolution of transposed correlation matrices ``C_k^T``.

Per momentum sector the equation of motion is
``dC/dt = X C + C X^dagger`` with the time-independent damping block ``X``
(``X_tilde_k`` of :mod:`dmtopo.model`), so ``C(t) = e^{Xt} C(0) e^{X^dagger t}``.
Three k-space engines compute this independently:

* :func:`evolve_propagator` -- closed-form 2x2 exponential (default, exact at
  exceptional points);
* :func:`evolve_spectral` -- biorthogonal eigen-expansion (fails at EPs);
* :func:`evolve_bloch_ode` -- RK4 on the (alpha_C, n_C) Bloch equations.

:func:`evolve_realspace_oracle` works with the full ``2L x 2L`` matrix and a
general-purpose exponential, and is the brute-force reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import PauliForm, bloch_vector, eigensystem, pauli_compose, pauli_decompose, propagator
from .errors import DefectiveBlock, DimensionMismatch, InvalidParameter
from .model import DEFAULT_EP_TOL, BlochBlock, LatticeModel, pt_decompose, real_space_damping, stack_blocks

__all__ = [
    "CorrelationField",
    "InitialStateSpec",
    "Trajectory",
    "initial_state",
    "evolve_propagator",
    "evolve_spectral",
    "evolve_bloch_ode",
    "evolve_realspace_oracle",
    "steady_direction",
    "expm",
    "bloch_momenta",
    "to_bloch",
    "from_bloch",
]


def _dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


@dataclass(frozen=True)
class CorrelationField:
    """Blocks ``C_k^T`` (shape ``(n_k, 2, 2)``) on ``kgrid`` at ``time``."""

    kgrid: np.ndarray
    blocks: np.ndarray
    time: float = 0.0

    def pauli(self) -> tuple[np.ndarray, np.ndarray]:
        """Real ``(alpha_C, n_C)`` with shapes ``(n_k,)`` and ``(n_k, 3)``."""
        p = pauli_decompose(self.blocks)
        return np.real(p.alpha), np.real(p.n)

    def spectra(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.blocks + _dagger(self.blocks)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.blocks - _dagger(self.blocks))))

    def is_physical(self, tol: float = 1e-9) -> bool:
        s = self.spectra()
        return self.hermiticity_error() < 1e-10 and s.min() >= -tol and s.max() <= 1 + tol

    def total_occupation(self) -> float:
        """Mean trace ``sum_k Tr C_k / n_k``."""
        return float(np.mean(np.real(np.trace(self.blocks, axis1=-2, axis2=-1))))


@dataclass(frozen=True)
class InitialStateSpec:
    a: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidParameter("initial-state parameters a, b must be positive")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    fields: tuple

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def initial_state(spec: InitialStateSpec, kgrid) -> CorrelationField:
    """Gaussian state ``C_k^T = [1 - tanh|n_k| / |n_k| n_k.sigma] / 2`` with
    ``n_k = (0, b sin k, a + b cos k)``."""
    ks = np.asarray(kgrid, dtype=float)
    n = np.stack([np.zeros_like(ks), spec.b * np.sin(ks), spec.a + spec.b * np.cos(ks)], axis=-1)
    r = np.linalg.norm(n, axis=-1)
    # tanh(r)/r -> 1 as r -> 0
    f = np.where(r > 1e-12, np.tanh(r) / np.where(r > 1e-12, r, 1.0), 1.0)
    blocks = pauli_compose(PauliForm(np.full(ks.shape, 0.5), -0.5 * f[:, None] * n))
    return CorrelationField(ks, blocks, 0.0)


def _check_grid(blocks: list[BlochBlock], C0: CorrelationField) -> np.ndarray:
    ks, X = stack_blocks(blocks)
    if len(ks) != len(C0.kgrid) or not np.allclose(ks, C0.kgrid):
        raise DimensionMismatch("damping blocks and correlation field use different k-grids")
    return X


def _conjugate(U: np.ndarray, C: np.ndarray) -> np.ndarray:
    return U @ C @ _dagger(U)


def evolve_propagator(blocks: list[BlochBlock], C0: CorrelationField, t: float) -> CorrelationField:
    X = _check_grid(blocks, C0)
    return CorrelationField(C0.kgrid, _conjugate(propagator(X, t), C0.blocks), float(t))


class _Propagation:
    """Reusable closure for repeated exact evaluations on one set of blocks."""

    def __init__(self, blocks: list[BlochBlock], C0: CorrelationField):
        self.X = _check_grid(blocks, C0)
        self.C0 = C0

    def __call__(self, t: float) -> CorrelationField:
        return CorrelationField(self.C0.kgrid, _conjugate(propagator(self.X, t), self.C0.blocks), float(t))


def evolve_spectral(blocks: list[BlochBlock], C0: CorrelationField, t: float, ep_tol: float | None = None) -> CorrelationField:
    """Biorthogonal sum
    ``sum_{a,b} exp((eps_a + conj eps_b) t) |R_a><R_b| <L_a|C0|L_b>``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    X = _check_grid(blocks, C0)
    out = np.empty_like(C0.blocks)
    for j, (Xk, Ck) in enumerate(zip(X, C0.blocks)):
        es = eigensystem(Xk, ep_tol)
        if es.defective:
            raise DefectiveBlock(f"exceptional point at k={blocks[j].k:.6f}")
        eps = (es.eps_plus, es.eps_minus)
        R = (es.R_plus, es.R_minus)
        L = (es.L_plus, es.L_minus)
        acc = np.zeros((2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                weight = np.exp((eps[a] + np.conj(eps[b])) * t) * (L[a].conj() @ Ck @ L[b])
                acc += weight * np.outer(R[a], R[b].conj())
        out[j] = acc
    return CorrelationField(C0.kgrid, out, float(t))


def _bloch_rhs(alpha_X, n_X, alpha_C, n_C):
    """Right-hand side of the Bloch equations for real ``alpha_X``:

    d alpha_C / dt = 2 [alpha_X alpha_C + Re(n_C . n_X)]
    d n_C / dt     = 2 [alpha_X n_C + alpha_C Re n_X + Im(n_C x n_X)]
    """
    da = 2.0 * (alpha_X * alpha_C + np.sum(n_C * n_X.real, axis=-1))
    dn = 2.0 * (alpha_X[:, None] * n_C + alpha_C[:, None] * n_X.real + np.cross(n_C, n_X.imag))
    return da, dn


def evolve_bloch_ode(blocks: list[BlochBlock], C0: CorrelationField, times, dt_max: float = 0.005) -> Trajectory:
    """Fixed-step RK4 integration of the Bloch-vector equations.

    The step never exceeds ``min(dt_max, 0.05 / max_k ||X_k||_2)`` and is
    shrunk so that every requested time is hit exactly.
    """
    if dt_max <= 0:
        raise ValueError("dt_max must be positive")
    X = _check_grid(blocks, C0)
    for b in blocks:
        pt_decompose(b)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")

    p = pauli_decompose(X)
    aX, nX = np.real(p.alpha), p.n
    norm = float(np.max(np.linalg.norm(X, ord=2, axis=(-2, -1))))
    h_max = dt_max if norm == 0 else min(dt_max, 0.05 / norm)

    aC, nC = C0.pauli()
    t = 0.0
    fields = []
    for target in times:
        span = target - t
        steps = max(1, math.ceil(span / h_max - 1e-12)) if span > 0 else 0
        h = span / steps if steps else 0.0
        for _ in range(steps):
            k1 = _bloch_rhs(aX, nX, aC, nC)
            k2 = _bloch_rhs(aX, nX, aC + 0.5 * h * k1[0], nC + 0.5 * h * k1[1])
            k3 = _bloch_rhs(aX, nX, aC + 0.5 * h * k2[0], nC + 0.5 * h * k2[1])
            k4 = _bloch_rhs(aX, nX, aC + h * k3[0], nC + h * k3[1])
            aC = aC + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            nC = nC + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t = float(target)
        fields.append(CorrelationField(C0.kgrid, pauli_compose(PauliForm(aC, nC)), t))
    return Trajectory(times, tuple(fields))


# Pade-13 coefficients of exp (Higham 2005)
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring on a degree-13 Pade core."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    s = max(0, int(math.ceil(math.log2(norm / _THETA13)))) if norm > _THETA13 else 0
    A = A / 2.0**s
    b = _PADE13
    ident = np.eye(n, dtype=complex)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


def evolve_realspace_oracle(model: LatticeModel, C0_real, t: float) -> np.ndarray:
    """``C(t) = e^{Xt} C(0) e^{X^dagger t}`` on the full lattice, ``X = iH^T - M^T``."""
    C0_real = np.asarray(C0_real, dtype=complex)
    if C0_real.shape != (model.n_sites, model.n_sites):
        raise DimensionMismatch(f"expected {(model.n_sites,) * 2}, got {C0_real.shape}")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return C0_real.copy()
    X, _ = real_space_damping(model)
    E = expm(X * t)
    return E @ C0_real @ E.conj().T


def bloch_momenta(L: int) -> np.ndarray:
    """The ``L`` momenta ``2 pi j / L`` allowed by periodic boundaries, folded
    into ``[-pi, pi)`` and sorted (equal to ``kgrid(L)`` for even ``L``)."""
    k = 2.0 * np.pi * np.arange(L) / L
    return np.sort(np.where(k >= np.pi - 1e-12, k - 2.0 * np.pi, k))


def _fourier(L: int, n_orb: int, ks: np.ndarray) -> np.ndarray:
    """Unitary ``F[(x, s), (k, s')] = exp(ikx) delta_ss' / sqrt(L)``."""
    x = np.arange(L)
    phase = np.exp(1j * np.outer(x, ks)) / np.sqrt(L)
    return np.kron(phase, np.eye(n_orb))


def to_bloch(O, L: int, n_orb: int = 2) -> tuple[np.ndarray, np.ndarray, float]:
    """Bloch blocks ``O_k`` of a real-space matrix plus the largest
    off-block-diagonal magnitude (zero for translation-invariant ``O``)."""
    ks = bloch_momenta(L)
    F = _fourier(L, n_orb, ks)
    Ok = F.conj().T @ np.asarray(O) @ F
    blocks = np.stack([Ok[n_orb * j:n_orb * (j + 1), n_orb * j:n_orb * (j + 1)] for j in range(L)])
    mask = np.kron(np.eye(L), np.ones((n_orb, n_orb))) == 0
    off = float(np.max(np.abs(Ok[mask]))) if mask.any() else 0.0
    return ks, blocks, off


def from_bloch(blocks, L: int) -> np.ndarray:
    """Assemble ``sum_k O_k (x) |k><k| / L`` from blocks on :func:`bloch_momenta`."""
    blocks = np.asarray(blocks)
    n_orb = blocks.shape[-1]
    ks = bloch_momenta(L)
    F = _fourier(L, n_orb, ks)
    D = np.zeros((L * n_orb, L * n_orb), dtype=complex)
    for j in range(L):
        D[n_orb * j:n_orb * (j + 1), n_orb * j:n_orb * (j + 1)] = blocks[j]
    return F @ D @ F.conj().T


def steady_direction(block: BlochBlock, ep_tol: float = DEFAULT_EP_TOL) -> np.ndarray | None:
    """Unit Bloch vector of ``|R_+><R_+|`` for a PT-unbroken, non-defective
    block; ``None`` when the sector oscillates or sits at an EP."""
    es = eigensystem(block.X_tilde_k, ep_tol)
    if es.defective:
        return None
    if max(abs(np.imag(es.eps_plus)), abs(np.imag(es.eps_minus))) >= ep_tol:
        return None
    R = es.R_plus
    v = bloch_vector(np.outer(R, R.conj()))
    return v / np.linalg.norm(v)
